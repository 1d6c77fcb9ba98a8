import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import load_json
from depdec import ecosystems as eco
from depdec.errors import EcosystemMismatch, UnparseableVersion
from depdec.version_core import (
    Ordering,
    RemediationBucket,
    Version,
    VersionRange,
    compare,
    parse_version,
    range_contains,
    remediation_bucket,
)

NORMALIZATION = load_json("version_normalization.json")


def npm(text):
    return parse_version(eco.NPM, text)


@pytest.mark.parametrize(
    "ecosystem,text,expected",
    [(e, raw, want) for e, rows in NORMALIZATION.items() for raw, want in rows],
)
def test_normalization_fixture(ecosystem, text, expected):
    v = parse_version(ecosystem, text)
    assert v.normalized == expected
    assert v.raw == text
    # idempotence
    assert parse_version(ecosystem, v.normalized) == v


def test_fixture_has_fifty_per_ecosystem():
    assert set(NORMALIZATION) == set(eco.ECOSYSTEMS)
    assert all(len(rows) == 50 for rows in NORMALIZATION.values())


def test_parse_examples():
    assert npm("1.2.3") == Version(eco.NPM, 1, 2, 3)
    assert npm("v2.0.0-rc.1") == Version(eco.NPM, 2, 0, 0, ("rc", "1"))
    assert parse_version(eco.PYPI, "1.2") == Version(eco.PYPI, 1, 2, 0)
    assert npm("1.0.0+build.7") == npm("1.0.0")


@pytest.mark.parametrize("text", ["", "   ", "latest", "v", "x.y.z", "-1.0"])
def test_unparseable(text):
    with pytest.raises(UnparseableVersion):
        parse_version(eco.NPM, text)


def test_compare_examples():
    assert compare(npm("1.2.3"), npm("1.2.3")) is Ordering.EQUAL
    assert compare(npm("1.2.3"), npm("1.10.0")) is Ordering.LESS
    assert compare(npm("2.0.0-rc.1"), npm("2.0.0")) is Ordering.LESS


def test_compare_across_ecosystems_raises():
    with pytest.raises(EcosystemMismatch):
        compare(npm("1.0.0"), parse_version(eco.PYPI, "1.0.0"))
    assert npm("1.0.0") != parse_version(eco.PYPI, "1.0.0")


# Hand-ordered: each entry is strictly greater than the previous one.
HAND_ORDERED = [
    "0.0.1", "0.1.0-alpha", "0.1.0", "1.0.0-0", "1.0.0-2", "1.0.0-10", "1.0.0-alpha",
    "1.0.0-alpha.1", "1.0.0-alpha.beta", "1.0.0-beta", "1.0.0-beta.2", "1.0.0-beta.11",
    "1.0.0-rc.1", "1.0.0", "1.0.1", "1.2.0", "1.9.0", "1.10.0", "1.10.2", "2.0.0-rc.1",
    "2.0.0", "10.0.0",
]


def test_sort_matches_hand_ordered_sequence():
    import random

    versions = [npm(t) for t in HAND_ORDERED]
    shuffled = versions[:]
    random.Random(7).shuffle(shuffled)
    assert [v.raw for v in sorted(shuffled)] == HAND_ORDERED
    for a, b in zip(versions, versions[1:]):
        assert compare(a, b) is Ordering.LESS
        assert compare(b, a) is Ordering.GREATER


def test_pypi_pre_releases_order_below_release():
    seq = ["1.0a1", "1.0b2", "1.0rc1", "1.0", "1.0.1"]
    parsed = [parse_version(eco.PYPI, t) for t in seq]
    assert sorted(parsed) == parsed


tags = st.lists(st.one_of(st.integers(0, 20).map(str), st.sampled_from(["alpha", "beta", "rc", "x", "a1"])), max_size=3)
versions = st.builds(
    lambda a, b, c, pre: Version(eco.NPM, a, b, c, tuple(pre)),
    st.integers(0, 5), st.integers(0, 5), st.integers(0, 5), tags,
)


@settings(max_examples=300, deadline=None)
@given(versions, versions, versions)
def test_total_order(a, b, c):
    ab, ba = compare(a, b), compare(b, a)
    assert ab == -ba
    assert (ab is Ordering.EQUAL) == (a == b)
    if compare(a, b) <= 0 and compare(b, c) <= 0:
        assert compare(a, c) <= 0


@settings(max_examples=200, deadline=None)
@given(versions)
def test_prerelease_below_release(v):
    release = Version(v.ecosystem, v.major, v.minor, v.patch)
    if v.prerelease:
        assert v < release
    assert parse_version(eco.NPM, v.normalized) == v


def test_range_examples():
    r = VersionRange.of(eco.NPM, [("1.0.0", "2.0.0")])
    assert range_contains(r, npm("1.5.0"))
    assert not range_contains(r, npm("2.0.0"))
    assert range_contains(r, npm("1.0.0"))
    assert range_contains(VersionRange.of(eco.NPM, [("0.0.0", None)]), npm("9.9.9"))
    with pytest.raises(EcosystemMismatch):
        range_contains(r, parse_version(eco.PYPI, "1.5"))


def test_range_merges_overlaps():
    r = VersionRange.of(eco.NPM, [("3.0.0", "4.0.0"), ("1.0.0", "2.0.0"), ("1.5.0", "3.0.0")])
    assert [(str(i.introduced), str(i.fixed)) for i in r.intervals] == [("1.0.0", "4.0.0")]


def test_empty_interval_rejected():
    with pytest.raises(ValueError):
        VersionRange.of(eco.NPM, [("2.0.0", "1.0.0")])


GRID = [(a, b, c) for a in range(4) for b in range(4) for c in range(4)]


def _grid_oracle(intervals, triple):
    # literal definition over integer triples, no Version comparisons involved
    return any(lo <= triple and (hi is None or triple < hi) for lo, hi in intervals)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(GRID), st.one_of(st.none(), st.sampled_from(GRID))), min_size=1, max_size=4))
def test_range_contains_matches_grid_oracle(raw):
    intervals = [(lo, hi) for lo, hi in raw if hi is None or hi > lo]
    if not intervals:
        return
    fmt = lambda t: "%d.%d.%d" % t
    r = VersionRange.of(eco.NPM, [(fmt(lo), None if hi is None else fmt(hi)) for lo, hi in intervals])
    for triple in GRID:
        assert range_contains(r, npm(fmt(triple))) == _grid_oracle(intervals, triple), triple


@pytest.mark.parametrize(
    "vuln,patched,bucket",
    [
        ("1.2.3", "1.2.9", RemediationBucket.BUG_FIX),
        ("1.2.3", "1.5.0", RemediationBucket.MINOR),
        ("1.2.3", "2.0.0", RemediationBucket.MAJOR),
        ("1.2.3", None, RemediationBucket.OTHER),
        ("1.2.3", "1.2.3", RemediationBucket.OTHER),
        ("1.2.3", "1.2.0", RemediationBucket.OTHER),
        ("1.2.3", "2.0.0-rc.1", RemediationBucket.OTHER),
        ("1.2.3-beta", "1.2.3", RemediationBucket.OTHER),
    ],
)
def test_bucket_examples(vuln, patched, bucket):
    assert remediation_bucket(npm(vuln), None if patched is None else npm(patched)) is bucket


def test_bucket_lossy_is_other():
    a = parse_version(eco.PYPI, "1.2.3.4")
    assert a.lossy
    assert remediation_bucket(parse_version(eco.PYPI, "1.2.0"), a) is RemediationBucket.OTHER


def test_bucket_partition_properties():
    triples = list(itertools.product(range(3), range(3), range(3)))
    for v, p in itertools.product(triples, repeat=2):
        b = remediation_bucket(npm("%d.%d.%d" % v), npm("%d.%d.%d" % p))
        if b is RemediationBucket.MAJOR:
            assert p[0] != v[0]
        if b is RemediationBucket.BUG_FIX:
            assert p[:2] == v[:2]


def test_bucket_rank_order():
    ranks = [b.rank for b in (RemediationBucket.BUG_FIX, RemediationBucket.MINOR, RemediationBucket.MAJOR, RemediationBucket.OTHER)]
    assert ranks == sorted(ranks)
