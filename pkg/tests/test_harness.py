import hashlib
import json
import shutil

import pytest

from conftest import INSTANCES, expected_subset, instance_cases, metric_vector, tree_bytes
from depdec import ecosystems as eco
from depdec.advisories import read_snapshot
from depdec.errors import ConfigError, PatchRejected
from depdec.harness import (
    CandidateIndex,
    TaskFamily,
    build_availability,
    effective_policy,
    instance_from_dict,
    load_instance,
    manifest_pairs,
    run_instance,
    walk_files,
)
from depdec.patching import apply_patch
from depdec.policy import AvailabilityDefinition, Track
from depdec.scoring import report_to_dict

STORE = read_snapshot(INSTANCES / "advisories.jsonl")
CASES = list(instance_cases())


def run(name, variant, track, **kw):
    root = INSTANCES / name
    evidence = root / f"evidence_{variant}.json"
    return run_instance(
        load_instance(root / "instance.json"), STORE,
        diff_text=(root / f"{variant}.diff").read_bytes(),
        track=Track(track), evidence_path=evidence if evidence.exists() else None, **kw,
    )


def tree_hash(root):
    h = hashlib.sha256()
    for rel, data in sorted(tree_bytes(root).items()):
        h.update(rel.encode() + b"\0" + data)
    return h.hexdigest()


def test_four_families_covered():
    families = {load_instance(INSTANCES / name / "instance.json").family for name, *_ in CASES}
    assert families == set(TaskFamily)


@pytest.mark.parametrize("name,variant,track,want", CASES, ids=[f"{c[0]}-{c[1]}-{c[2]}" for c in CASES])
def test_expected_vectors(name, variant, track, want):
    snapshot = INSTANCES / name / "snapshot"
    before = tree_hash(snapshot)
    report = run(name, variant, track)
    got = metric_vector(report_to_dict(report))
    assert expected_subset(got, want) == {k: v for k, v in want.items() if k != "exit"}
    assert report.passed == (want["exit"] == 0)
    assert report.track == track
    assert tree_hash(snapshot) == before


def test_determinism():
    a = report_to_dict(run("policy_safe_lodash", "fail", "PolicySpecified"))
    b = report_to_dict(run("policy_safe_lodash", "fail", "PolicySpecified"))
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_track_separation():
    inst = load_instance(INSTANCES / "reuse_dateutil" / "instance.json")
    assert effective_policy(inst, Track.POLICY_UNSPECIFIED).track is Track.POLICY_UNSPECIFIED
    assert effective_policy(inst, Track.POLICY_UNSPECIFIED).max_new_dependencies is None
    assert effective_policy(inst, Track.POLICY_SPECIFIED).max_new_dependencies == 0
    assert effective_policy(inst).track is Track.POLICY_SPECIFIED


def test_head_dir_mode_matches_patch_mode(tmp_path):
    root = INSTANCES / "policy_safe_lodash"
    inst = load_instance(root / "instance.json")
    head = apply_patch(inst.snapshot_dir, (root / "fail.diff").read_bytes(), tmp_path / "head").head_dir
    by_dir = run_instance(inst, STORE, head_dir=head)
    by_diff = run_instance(inst, STORE, diff_text=(root / "fail.diff").read_bytes())
    assert report_to_dict(by_dir) == report_to_dict(by_diff)
    assert tree_bytes(head)  # caller-owned head left in place


def test_rejected_patch_propagates(tmp_path):
    inst = load_instance(INSTANCES / "reuse_dateutil" / "instance.json")
    diff = "--- a/requirements.txt\n+++ b/requirements.txt\n@@ -1 +1 @@\n-not-there==1\n+x==1\n"
    with pytest.raises(PatchRejected):
        run_instance(inst, STORE, diff_text=diff)


def test_exactly_one_head_source():
    inst = load_instance(INSTANCES / "reuse_dateutil" / "instance.json")
    with pytest.raises(ValueError):
        run_instance(inst, STORE)


def test_missing_head_dir(tmp_path):
    inst = load_instance(INSTANCES / "reuse_dateutil" / "instance.json")
    with pytest.raises(ConfigError):
        run_instance(inst, STORE, head_dir=tmp_path / "absent")


BASE_CONFIG = {"id": "x", "family": "ReuseAvailable", "snapshot_dir": "s", "reference_date": "2024-01-01"}


@pytest.mark.parametrize(
    "patch",
    [{"id": None}, {"family": "Whatever"}, {"reference_date": "2024-01-01T00:00:00+02:00"},
     {"availability_definition": "InCloud"}, {"required_capabilities": ["dateutil"]},
     {"justified_names": "ecdsa"}, {"test_command": 5}, {"test_timeout": "slow"},
     {"policy": {"max_new_dependencies": -2}}, {"snapshot_dir": "missing"},
     {"availability_definition": "InTree"}],
)
def test_config_errors(patch, tmp_path):
    (tmp_path / "s").mkdir()
    data = {**BASE_CONFIG, **patch}
    data = {k: v for k, v in data.items() if v is not None}
    with pytest.raises(ConfigError):
        instance_from_dict(data, tmp_path)


def test_config_defaults(tmp_path):
    (tmp_path / "s").mkdir()
    inst = instance_from_dict({**BASE_CONFIG, "test_command": "python3 -m pytest -q"}, tmp_path)
    assert inst.snapshot_dir == (tmp_path / "s").resolve()
    assert inst.availability_definition is AvailabilityDefinition.IN_MANIFEST
    assert inst.test_command == ("python3", "-m", "pytest", "-q")
    assert inst.policy is None and effective_policy(inst).track is Track.POLICY_UNSPECIFIED


def test_unreadable_config(tmp_path):
    (tmp_path / "bad.json").write_text("{nope")
    with pytest.raises(ConfigError):
        load_instance(tmp_path / "bad.json")
    with pytest.raises(ConfigError):
        load_instance(tmp_path / "missing.json")


def test_availability_definitions():
    lodash = load_instance(INSTANCES / "policy_safe_lodash" / "instance.json")
    members = build_availability(lodash)
    assert members.definition is AvailabilityDefinition.IN_LOCKFILE
    assert members.has("lodash")
    pad = load_instance(INSTANCES / "avoid_unnecessary_pad" / "instance.json")
    assert build_availability(pad).definition is AvailabilityDefinition.IN_TREE
    reuse = load_instance(INSTANCES / "reuse_dateutil" / "instance.json")
    assert build_availability(reuse).has("python-dateutil")


def test_walk_skips_vendor_dirs(tmp_path):
    (tmp_path / "node_modules" / "x").mkdir(parents=True)
    (tmp_path / "node_modules" / "x" / "package.json").write_text("{}")
    (tmp_path / "src").mkdir()
    (tmp_path / "src" / "a.py").write_text("")
    (tmp_path / "package.json").write_text("{}")
    assert list(walk_files(tmp_path)) == ["package.json", "src/a.py"]


def test_manifest_pairs(tmp_path):
    base, head = tmp_path / "base", tmp_path / "head"
    base.mkdir()
    (base / "requirements.txt").write_text("a==1\n")
    (base / "README.md").write_text("x")
    shutil.copytree(base, head)
    (head / "requirements.txt").write_text("a==2\n")
    (head / "README.md").write_text("y")
    (head / "package.json").write_text("{}")
    assert manifest_pairs(base, head) == [
        ("package.json", None, "{}"),
        ("requirements.txt", "a==1\n", "a==2\n"),
    ]


def test_candidate_index():
    idx = CandidateIndex({"Lodash": ["4.17.21", "4.17.20", "junk!"]})
    got = idx(eco.NPM, "lodash")
    assert [str(v) for v in got] == ["4.17.21", "4.17.20"]
    assert idx(eco.NPM, "other") is None
