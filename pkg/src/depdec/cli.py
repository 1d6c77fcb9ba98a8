"""Command-line entry point: ``depdec diff|audit|score|corpus``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from depdec.advisories import AdvisoryStore, advisories_at, read_snapshot, severity_of
from depdec.changes import classify_changes
from depdec.corpus import Diagnostics, read_corpus, run_corpus
from depdec.errors import DepDecError
from depdec.harness import CandidateIndex, load_instance, run_instance
from depdec.manifests import ManifestFormat, detect_format, parse_lockfile, parse_manifest
from depdec.policy import Track
from depdec.report import ReportFormat, RenderedReport, render_audit, render_changes, render_corpus, render_score
from depdec.timeutil import parse_utc

EXIT_OK, EXIT_FINDINGS, EXIT_ERROR = 0, 1, 2


class CliError(Exception):
    """Fatal usage or input problem; reported on stderr with exit 2."""


def _read_text(path: str) -> str:
    try:
        return Path(path).read_bytes().decode("utf-8", "replace")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_store(path: Optional[str], required: bool = False) -> AdvisoryStore:
    if path is None:
        if required:
            raise CliError("--snapshot is required")
        return AdvisoryStore()
    try:
        return read_snapshot(path)
    except OSError as exc:
        raise CliError(f"cannot read snapshot {path}: {exc.strerror or exc}") from None


def _format_for(path: str, override: Optional[str]) -> ManifestFormat:
    if override:
        try:
            return ManifestFormat(override)
        except ValueError:
            raise CliError(f"unknown manifest format {override!r}") from None
    fmt = detect_format(path)
    if fmt is None:
        raise CliError(f"cannot detect manifest format of {path}; pass --manifest-format")
    return fmt


def _emit(report: RenderedReport, out: Optional[str]) -> None:
    if out:
        try:
            Path(out).write_text(report.body, encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write {out}: {exc.strerror or exc}") from None
    else:
        sys.stdout.write(report.body)


def cmd_diff(args) -> int:
    base_text, head_text = _read_text(args.base), _read_text(args.head)
    base_fmt = _format_for(args.base, args.manifest_format)
    head_fmt = _format_for(args.head, args.manifest_format)
    base = parse_manifest(base_fmt, base_text, args.base)
    head = parse_manifest(head_fmt, head_text, args.head)
    changes = classify_changes(base, head)
    _emit(render_changes(changes, args.format), args.out)
    return EXIT_OK


def cmd_audit(args) -> int:
    try:
        ref = parse_utc(args.ref_date)
    except ValueError as exc:
        raise CliError(f"--ref-date: {exc}") from None
    store = _load_store(args.snapshot, required=True)
    text = _read_text(args.manifest)
    fmt = _format_for(args.manifest, args.manifest_format)
    if fmt.is_lockfile:
        pins = [(name, version) for name, version in parse_lockfile(fmt, text)]
    else:
        pins = [(d.name, d.pinned) for d in parse_manifest(fmt, text, args.manifest).decls if d.pinned is not None]
    rows = []
    for name, version in pins:
        for adv in advisories_at(store, fmt.ecosystem, name, version, ref):
            rows.append((name, version.raw or str(version), adv.id, severity_of(adv).value))
    _emit(render_audit(rows, args.format), args.out)
    return EXIT_FINDINGS if rows else EXIT_OK


def cmd_score(args) -> int:
    if (args.patch is None) == (args.head_dir is None):
        raise CliError("pass exactly one of --patch or --head-dir")
    instance = load_instance(args.instance)
    store = _load_store(args.snapshot)
    track = Track(args.track) if args.track else None
    evidence = Path(args.evidence) if args.evidence else None
    if args.patch is not None:
        try:
            diff = Path(args.patch).read_bytes()
        except OSError as exc:
            raise CliError(f"cannot read {args.patch}: {exc.strerror or exc}") from None
        report = run_instance(instance, store, diff_text=diff, track=track, evidence_path=evidence)
    else:
        report = run_instance(instance, store, head_dir=args.head_dir, track=track, evidence_path=evidence)
    _emit(render_score(report, args.format), args.out)
    return EXIT_OK if report.passed else EXIT_FINDINGS


def cmd_corpus(args) -> int:
    store = _load_store(args.snapshot)
    if not Path(args.corpus).is_file():
        raise CliError(f"cannot read {args.corpus}: no such file")
    candidates = CandidateIndex.read(Path(args.candidates)) if args.candidates else None
    diagnostics = Diagnostics()
    try:
        result = run_corpus(read_corpus(args.corpus, diagnostics), store, candidates or None, diagnostics)
    except OSError as exc:
        raise CliError(f"cannot read {args.corpus}: {exc.strerror or exc}") from None
    _emit(render_corpus(result.aggregates, result.diagnostics.to_dict(), args.format), args.out)
    return EXIT_OK


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--snapshot", default=argparse.SUPPRESS, help="advisory snapshot (JSON Lines)")
    common.add_argument(
        "--format", default=argparse.SUPPRESS, choices=[f.value for f in ReportFormat], help="output format"
    )
    common.add_argument("--out", default=argparse.SUPPRESS, help="write the report here instead of stdout")
    return common


_FORMAT_HELP = "override format detection (" + ", ".join(f.value for f in ManifestFormat) + ")"


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="depdec", parents=[common], description="Audit and score dependency decisions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diff", parents=[common], help="classify dependency changes between two manifests")
    p.add_argument("base")
    p.add_argument("head")
    p.add_argument("--manifest-format", help=_FORMAT_HELP)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("audit", parents=[common], help="list pinned dependencies vulnerable at a reference date")
    p.add_argument("manifest")
    p.add_argument("--ref-date", required=True, help="UTC timestamp or date")
    p.add_argument("--manifest-format", help=_FORMAT_HELP)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("score", parents=[common], help="score a patch against a benchmark instance")
    p.add_argument("instance", help="instance config (JSON)")
    p.add_argument("--patch", help="unified diff to apply to the snapshot")
    p.add_argument("--head-dir", help="pre-materialized head tree")
    p.add_argument("--track", choices=[t.value for t in Track], help="force an evaluation track")
    p.add_argument("--evidence", help="execution evidence file overriding the instance's")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("corpus", parents=[common], help="aggregate a PR corpus into study tables")
    p.add_argument("corpus", help="PR records (JSON Lines)")
    p.add_argument("--candidates", help="release lists for safe-version search (JSON)")
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.snapshot = getattr(args, "snapshot", None)
    args.out = getattr(args, "out", None)
    args.format = ReportFormat(getattr(args, "format", ReportFormat.TABLE.value))
    try:
        return args.func(args)
    except (CliError, DepDecError) as exc:
        print(f"depdec: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
