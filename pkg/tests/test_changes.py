import random

import pytest

from depdec import ecosystems as eco
from depdec.changes import (
    ChangeKind,
    DependencyChange,
    classify_changes,
    classify_from_pr,
    count_by_kind,
)
from depdec.errors import FormatMismatch, MalformedManifest
from depdec.manifests import DependencyDecl, ManifestFormat, ManifestSnapshot, Scope, parse_manifest
from depdec.version_core import parse_version

REQ = ManifestFormat.PY_REQUIREMENTS


def req(text):
    return parse_manifest(REQ, text, "requirements.txt")


def summary(changes):
    return [(c.kind.value, c.name, c.base_spec, c.head_spec) for c in changes]


def test_addition_from_empty_base():
    base = ManifestSnapshot.empty(ManifestFormat.NPM_MANIFEST)
    head = parse_manifest(ManifestFormat.NPM_MANIFEST, '{"dependencies": {"left-pad": "1.3.0"}}')
    (c,) = classify_changes(base, head)
    assert c.kind is ChangeKind.ADDITION
    assert c.head_version == parse_version(eco.NPM, "1.3.0")


def test_single_update():
    (c,) = classify_changes(req("lodash==4.17.20\n"), req("lodash==4.17.21\n"))
    assert (c.kind, str(c.base_version), str(c.head_version)) == (ChangeKind.UPDATE, "4.17.20", "4.17.21")


def test_mixed_example():
    changes = classify_changes(req("a==1.0.0\nb==2.0.0\n"), req("b==2.1.0\nc==0.1.0\n"))
    assert {(c.kind, c.name) for c in changes} == {
        (ChangeKind.ADDITION, "c"),
        (ChangeKind.REMOVAL, "a"),
        (ChangeKind.UPDATE, "b"),
    }
    assert [c.name for c in changes] == ["a", "b", "c"]


def test_scope_is_part_of_key():
    base = parse_manifest(ManifestFormat.NPM_MANIFEST, '{"dependencies": {"x": "1.0.0"}}')
    head = parse_manifest(ManifestFormat.NPM_MANIFEST, '{"devDependencies": {"x": "1.0.0"}}')
    assert {(c.kind, c.scope) for c in classify_changes(base, head)} == {
        (ChangeKind.REMOVAL, Scope.RUNTIME),
        (ChangeKind.ADDITION, Scope.DEV),
    }


def test_format_mismatch():
    with pytest.raises(FormatMismatch):
        classify_changes(req("a==1\n"), ManifestSnapshot.empty(ManifestFormat.GEMFILE))


def test_invariants_enforced():
    with pytest.raises(ValueError):
        DependencyChange(ChangeKind.ADDITION, eco.NPM, "x", None, "1.0.0", None, "1.0.0", Scope.RUNTIME, "p")
    with pytest.raises(ValueError):
        DependencyChange(ChangeKind.UPDATE, eco.NPM, "x", None, "1.0.0", None, "1.0.0", Scope.RUNTIME, "p")


def test_version_neutral_update():
    (c,) = classify_changes(req("a==1.0.0\n"), req("a===1.0.0\n"))
    assert c.kind is ChangeKind.UPDATE and c.is_version_neutral


def test_classify_from_pr():
    assert classify_from_pr([("src/main.py", "a", "b")]) == []
    created = classify_from_pr([("package.json", None, '{"dependencies": {"a": "1.0.0", "b": "^2.0.0"}}')])
    assert [c.kind for c in created] == [ChangeKind.ADDITION] * 2
    both = classify_from_pr(
        [
            ("package.json", '{"dependencies": {"a": "1.0.0"}}', '{"dependencies": {"a": "1.0.1"}}'),
            ("requirements.txt", "six==1.16.0\n", None),
            ("package-lock.json", "{}", '{"packages": {}}'),
        ]
    )
    assert summary(both) == [("Update", "a", "1.0.0", "1.0.1"), ("Removal", "six", "==1.16.0", None)]


def test_classify_from_pr_tags_path():
    with pytest.raises(MalformedManifest) as err:
        classify_from_pr([("web/package.json", "{}", "{ nope")])
    assert err.value.path == "web/package.json"


# -- properties against a brute-force key-set oracle ---------------------------

NAMES = [f"pkg{i}" for i in range(12)]
SPECS = ["1.0.0", "1.0.1", "2.0.0", "^1.0.0", "~2.1.0"]


def random_snapshot(rng):
    decls = []
    for name in rng.sample(NAMES, rng.randint(0, len(NAMES))):
        for scope in rng.sample(list(Scope), rng.randint(1, 2)):
            spec = rng.choice(SPECS)
            pinned = parse_version(eco.NPM, spec) if spec[0].isdigit() else None
            decls.append(DependencyDecl(eco.NPM, name, spec, pinned, scope, "package.json", 1))
    return ManifestSnapshot(tuple(decls), ManifestFormat.NPM_MANIFEST, "d", "package.json")


def oracle(base, head):
    b = {(d.ecosystem, d.name, d.scope): d.spec for d in base.decls}
    h = {(d.ecosystem, d.name, d.scope): d.spec for d in head.decls}
    return {
        ChangeKind.ADDITION: set(h) - set(b),
        ChangeKind.REMOVAL: set(b) - set(h),
        ChangeKind.UPDATE: {k for k in set(b) & set(h) if b[k] != h[k]},
    }


def run_pairs(n=500, seed=1234):
    rng = random.Random(seed)
    for _ in range(n):
        yield random_snapshot(rng), random_snapshot(rng)


def check_change_properties(base, head):
    """Identity, inverse symmetry and oracle partition equality for one pair."""
    if classify_changes(base, base) or classify_changes(head, head):
        return False
    fwd, back = classify_changes(base, head), classify_changes(head, base)
    want = oracle(base, head)
    got = {kind: {c.key for c in fwd if c.kind is kind} for kind in ChangeKind}
    if got != want or len(fwd) != sum(len(v) for v in want.values()):
        return False
    swap = {ChangeKind.ADDITION: ChangeKind.REMOVAL, ChangeKind.REMOVAL: ChangeKind.ADDITION, ChangeKind.UPDATE: ChangeKind.UPDATE}
    inverse = {(swap[c.kind], c.key, c.head_spec, c.base_spec) for c in fwd}
    if inverse != {(c.kind, c.key, c.base_spec, c.head_spec) for c in back}:
        return False
    counts = count_by_kind(fwd)
    return all(counts[k] == len(want[k]) for k in ChangeKind) and fwd == sorted(fwd, key=lambda c: (c.name, c.scope.rank))


def test_properties_on_random_pairs():
    assert all(check_change_properties(b, h) for b, h in run_pairs(200, seed=99))
