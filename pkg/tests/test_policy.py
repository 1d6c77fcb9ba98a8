import json
import random
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depdec import ecosystems as eco
from depdec.advisories import AdvisoryStore, advisories_at, load_snapshot
from depdec.changes import ChangeKind, DependencyChange
from depdec.errors import ConfigError
from depdec.manifests import Scope
from depdec.policy import (
    UNAUDITABLE,
    AvailabilityDefinition,
    AvailabilitySet,
    DenyRule,
    ExecutionEvidence,
    PolicyEnvelope,
    Track,
    capability_satisfied,
    check_compliance,
    default_policy,
    glob_match,
    policy_from_dict,
    read_policy,
    reuse_score,
    unnecessary_add_penalty,
)
from depdec.version_core import parse_version

REF = datetime(2024, 6, 1, tzinfo=timezone.utc)
EMPTY = AdvisoryStore()


def add(name, spec="1.0.0", ecosystem=eco.NPM):
    pinned = parse_version(ecosystem, spec) if spec[0].isdigit() else None
    return DependencyChange(ChangeKind.ADDITION, ecosystem, name, None, None, pinned, spec, Scope.RUNTIME, "package.json")


def update(name, base, head, ecosystem=eco.NPM):
    return DependencyChange(
        ChangeKind.UPDATE, ecosystem, name,
        parse_version(ecosystem, base), base, parse_version(ecosystem, head), head,
        Scope.RUNTIME, "package.json",
    )


def remove(name, spec="1.0.0", ecosystem=eco.NPM):
    return DependencyChange(
        ChangeKind.REMOVAL, ecosystem, name, parse_version(ecosystem, spec), spec, None, None, Scope.RUNTIME, "package.json"
    )


def avail(*names):
    return AvailabilitySet(AvailabilityDefinition.IN_MANIFEST, frozenset((eco.PYPI, n, None) for n in names))


def envelope(**kw):
    return PolicyEnvelope(track=Track.POLICY_SPECIFIED, **kw)


def flags(v):
    return (v.allowlist_ok, v.denylist_ok, v.vuln_ok, v.budget_ok)


STORE = load_snapshot([
    {
        "id": "ADV-LP", "ecosystem": "npm", "package": "left-pad", "published": "2024-01-01T00:00:00Z",
        "ranges": [{"introduced": "1.0.0", "fixed": "1.3.1"}], "cvss_score": 5.3,
    },
    {
        "id": "ADV-LATE", "ecosystem": "npm", "package": "left-pad", "published": "2025-01-01T00:00:00Z",
        "ranges": [{"introduced": "0"}], "cvss_score": 9.1,
    },
])


def test_no_changes_vacuous():
    v = check_compliance([], envelope(allowlist=frozenset(), max_new_dependencies=0), EMPTY, REF)
    assert flags(v) == (True,) * 4 and v.compliant and v.violations == ()


def test_full_package_deny():
    v = check_compliance([add("left-pad", "1.3.0")], envelope(denylist=(DenyRule("left-pad"),)), EMPTY, REF)
    assert not v.denylist_ok and not v.compliant
    assert [x.rule for x in v.violations] == ["denylist"]


def test_ranged_deny():
    rule = (DenyRule("left-*", "1.0.0", "1.3.0"),)
    assert not check_compliance([add("left-pad", "1.2.9")], envelope(denylist=rule), EMPTY, REF).denylist_ok
    assert check_compliance([add("left-pad", "1.3.0")], envelope(denylist=rule), EMPTY, REF).denylist_ok
    # a ranged rule cannot be decided for an unpinned spec
    v = check_compliance([add("left-pad", "^1.0.0")], envelope(denylist=rule, forbid_vulnerable=False), EMPTY, REF)
    assert v.denylist_ok and [x.rule for x in v.violations] == [UNAUDITABLE]


def test_vulnerable_addition_matches_oracle():
    change = add("left-pad", "1.3.0")
    v = check_compliance([change], envelope(), STORE, REF)
    oracle = advisories_at(STORE, eco.NPM, "left-pad", change.head_version, REF)
    assert [a.id for a in oracle] == ["ADV-LP"]
    assert v.vuln_ok is False and "ADV-LP" in v.violations[0].message
    assert check_compliance([change], envelope(forbid_vulnerable=False), STORE, REF).vuln_ok
    assert check_compliance([add("left-pad", "1.3.1")], envelope(), STORE, REF).vuln_ok


def test_unauditable_is_warning_only():
    v = check_compliance([add("left-pad", "^1.0.0")], envelope(), STORE, REF)
    assert v.compliant and [x.rule for x in v.warnings] == [UNAUDITABLE]


def test_allowlist_and_budget():
    env = envelope(allowlist=frozenset({"req*", "cryptography"}), max_new_dependencies=1)
    v = check_compliance([add("requests"), add("cryptography")], env, EMPTY, REF)
    assert v.allowlist_ok and not v.budget_ok
    v = check_compliance([add("ecdsa")], env, EMPTY, REF)
    assert not v.allowlist_ok and v.budget_ok


def test_removals_never_violate():
    env = envelope(allowlist=frozenset(), denylist=(DenyRule("*"),), max_new_dependencies=0)
    assert check_compliance([remove("left-pad", "1.2.0")], env, STORE, REF).compliant


def test_default_policy():
    p = default_policy()
    assert p.forbid_vulnerable is True
    assert p.allowlist is None
    assert p.track is Track.POLICY_UNSPECIFIED
    assert p.denylist == () and p.max_new_dependencies is None


@pytest.mark.parametrize(
    "pattern,name,expected",
    [("left-pad", "left-pad", True), ("left-*", "left-pad", True), ("lef?-pad", "left-pad", True),
     ("left", "left-pad", False), ("*", "anything", True), ("a.b", "axb", False), ("[ab]", "a", False)],
)
def test_glob(pattern, name, expected):
    assert glob_match(pattern, name) is expected


def test_reuse_examples():
    caps = [{"python-dateutil", "dateutil"}]
    present = avail("python-dateutil")
    observed = ExecutionEvidence.of(["python-dateutil"])
    assert reuse_score(caps, present, observed, []) == 1.0
    assert reuse_score(caps, present, observed, [add("iso8601", ecosystem=eco.PYPI)]) == 1.0
    competing = [{"python-dateutil", "iso8601"}]
    assert reuse_score(competing, present, observed, [add("iso8601", ecosystem=eco.PYPI)]) == 0.0
    assert reuse_score([], present, observed, []) == 1.0
    assert reuse_score(caps, present, ExecutionEvidence(), []) == 0.0
    assert reuse_score(caps, avail(), observed, []) == 0.0


def test_unnecessary_add_examples():
    assert unnecessary_add_penalty([], avail(), set()) == 0
    assert unnecessary_add_penalty([add("ecdsa")], avail(), {"ecdsa"}) == 0
    assert unnecessary_add_penalty([add("ecdsa"), add("left-pad")], avail(), {"ecdsa"}) == 1
    assert unnecessary_add_penalty([add("six")], avail("six"), set()) == 0


def test_capability_satisfied():
    env = envelope(allowlist=frozenset({"cryptography"}))
    ev = ExecutionEvidence()
    assert capability_satisfied({"cryptography", "ecdsa"}, env, ev, [add("cryptography")])
    assert not capability_satisfied({"cryptography", "ecdsa"}, env, ev, [add("ecdsa")])
    assert not capability_satisfied({"cryptography"}, env, ev, [])
    assert capability_satisfied({"cryptography"}, env, ExecutionEvidence.of(["cryptography"]), [])


def test_policy_file_round_trip(tmp_path):
    data = {
        "track": "PolicySpecified", "allowlist": ["Requests"],
        "denylist": [{"package": "ecdsa"}, {"package": "lodash", "introduced": "4.0.0", "fixed": "4.17.21"}],
        "max_new_dependencies": 1, "forbid_vulnerable": True,
    }
    path = tmp_path / "policy.json"
    path.write_text(json.dumps(data))
    p = read_policy(path)
    assert p.allowlist == frozenset({"requests"})
    assert policy_from_dict(p.to_dict()) == p


@pytest.mark.parametrize(
    "data",
    [[], {"track": "Sometimes"}, {"allowlist": "x"}, {"denylist": [{"pkg": "x"}]},
     {"max_new_dependencies": -1}, {"max_new_dependencies": True}, {"forbid_vulnerable": "yes"},
     {"denylist": [{"package": "x", "fixed": 2}]}],
)
def test_policy_config_errors(data):
    with pytest.raises(ConfigError):
        policy_from_dict(data)


# -- properties -----------------------------------------------------------------

names = st.sampled_from(["a", "b", "left-pad", "lodash", "six", "ecdsa"])
change_lists = st.lists(
    st.one_of(
        st.builds(add, names, st.sampled_from(["1.0.0", "1.2.0", "1.3.0", "^1.0.0"])),
        st.builds(update, names, st.just("1.0.0"), st.sampled_from(["1.2.0", "2.0.0"])),
        st.builds(remove, names),
    ),
    max_size=8,
)
rules = st.builds(
    DenyRule,
    st.sampled_from(["a", "left-*", "*", "l?dash"]),
    st.sampled_from([None, "1.0.0"]),
    st.sampled_from([None, "1.3.0"]),
)


@settings(max_examples=200, deadline=None)
@given(change_lists, st.lists(rules, max_size=3), rules)
def test_deny_monotonic(changes, base_rules, extra):
    before = check_compliance(changes, envelope(denylist=tuple(base_rules)), STORE, REF).denylist_ok
    after = check_compliance(changes, envelope(denylist=tuple(base_rules) + (extra,)), STORE, REF).denylist_ok
    assert before or not after


@settings(max_examples=200, deadline=None)
@given(change_lists)
def test_default_policy_never_fails_allow_or_budget(changes):
    v = check_compliance(changes, default_policy(), STORE, REF)
    assert v.allowlist_ok and v.budget_ok


@settings(max_examples=200, deadline=None)
@given(
    change_lists,
    st.lists(st.sets(names, min_size=1, max_size=3), max_size=4),
    st.sets(names),
    st.sets(names),
    st.sets(names),
)
def test_reuse_bounds_and_gating(changes, caps, available, observed, justified):
    present = avail(*available)
    score = reuse_score(caps, present, ExecutionEvidence.of(observed), changes)
    assert 0.0 <= score <= 1.0
    if caps:
        assert reuse_score(caps, present, ExecutionEvidence(), changes) == 0.0
    penalty = unnecessary_add_penalty(changes, present, justified)
    adds = [c for c in changes if c.kind is ChangeKind.ADDITION]
    assert 0 <= penalty <= len(adds)
    # brute-force set filter
    assert penalty == len([c for c in adds if c.name not in justified and c.name not in available])


def test_unnecessary_add_against_filter_oracle():
    rng = random.Random(3)
    pool = ["a", "b", "c", "d", "e", "f"]
    for _ in range(300):
        adds = [add(n) for n in rng.sample(pool, rng.randint(0, 6))]
        justified = set(rng.sample(pool, rng.randint(0, 3)))
        available = set(rng.sample(pool, rng.randint(0, 3)))
        expected = sum(1 for c in adds if c.name not in justified | available)
        assert unnecessary_add_penalty(adds, avail(*available), justified) == expected
