import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


def load_json(*parts):
    return json.loads(FIXTURES.joinpath(*parts).read_text(encoding="utf-8"))


def tree_bytes(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


INSTANCES = FIXTURES / "instances"
CORPUS_DIR = FIXTURES / "corpus"


def instance_cases():
    """(instance dir, variant, track, expected metrics) for every fixture run."""
    expected = load_json("instances", "expected.json")
    for name, variants in sorted(expected.items()):
        if name.startswith("_"):
            continue
        for variant, tracks in sorted(variants.items()):
            for track, want in sorted(tracks.items()):
                yield name, variant, track, want


def score_argv(name, variant, track, out):
    root = INSTANCES / name
    argv = [
        "--snapshot", str(INSTANCES / "advisories.jsonl"), "--format", "json", "--out", str(out),
        "score", str(root / "instance.json"), "--patch", str(root / f"{variant}.diff"), "--track", track,
    ]
    evidence = root / f"evidence_{variant}.json"
    if evidence.exists():
        argv += ["--evidence", str(evidence)]
    return argv


def metric_vector(report: dict) -> dict:
    """The subset of a score report that expected.json pins down."""
    labels = [item["label"] for item in report["labels"]]
    return {
        "functional_pass": report["functional_pass"],
        "reuse": report["reuse"],
        "unnecessary_adds": report["unnecessary_adds"],
        "compliant": report["compliance"]["compliant"],
        "vuln_compliant": report["vuln_compliant"],
        "worst_remediation": report["worst_remediation"],
        "capability_ok": report["capability_ok"],
        "introduced": [a["id"] for lab in labels for a in lab["introduced"]],
        "fixed": [a["id"] for lab in labels for a in lab["fixed"]],
        "minimal_safe": next((lab["minimal_safe"] for lab in labels if lab["minimal_safe"]), None),
    }


def expected_subset(got: dict, want: dict) -> dict:
    return {k: got[k] for k in want if k != "exit"}


ACCEPTANCE_LINES: list = []


@pytest.fixture
def acceptance():
    """Record one ``PASS``/``FAIL`` line per acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
