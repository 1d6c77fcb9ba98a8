"""Policy envelopes, compliance checks and reuse-discipline scoring."""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from datetime import datetime
from functools import lru_cache
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

from depdec import ecosystems as eco
from depdec.advisories import AdvisoryStore, advisories_at
from depdec.changes import ChangeKind, DependencyChange
from depdec.errors import ConfigError, UnparseableVersion
from depdec.version_core import Version, VersionRange, range_contains


class Track(str, enum.Enum):
    POLICY_SPECIFIED = "PolicySpecified"
    POLICY_UNSPECIFIED = "PolicyUnspecified"


@lru_cache(maxsize=256)
def _glob_regex(pattern: str) -> re.Pattern:
    body = "".join(".*" if ch == "*" else "." if ch == "?" else re.escape(ch) for ch in pattern)
    return re.compile(f"^{body}$")


def glob_match(pattern: str, name: str) -> bool:
    """Match ``name`` against a glob using only ``*`` and ``?``."""
    return bool(_glob_regex(pattern.strip().lower()).match(name.lower()))


@dataclass(frozen=True)
class DenyRule:
    """A denied package pattern, optionally limited to ``[introduced, fixed)``.

    Bounds stay as text because the rule is ecosystem-agnostic; they are
    parsed against each change's ecosystem when checked.
    """

    pattern: str
    introduced: Optional[str] = None
    fixed: Optional[str] = None

    @property
    def denies_all_versions(self) -> bool:
        return self.introduced is None and self.fixed is None

    def range_for(self, ecosystem: str) -> Optional[VersionRange]:
        if self.denies_all_versions:
            return None
        return VersionRange.of(ecosystem, [(self.introduced or "0", self.fixed)])


@dataclass(frozen=True)
class PolicyEnvelope:
    track: Track
    allowlist: Optional[frozenset[str]] = None
    denylist: tuple[DenyRule, ...] = ()
    max_new_dependencies: Optional[int] = None
    forbid_vulnerable: bool = True

    def __post_init__(self) -> None:
        if self.max_new_dependencies is not None and self.max_new_dependencies < 0:
            raise ValueError("max_new_dependencies must be non-negative")

    def allows(self, name: str) -> bool:
        if self.allowlist is None:
            return True
        return any(glob_match(p, name) for p in self.allowlist)

    def to_dict(self) -> dict[str, Any]:
        return {
            "track": self.track.value,
            "allowlist": None if self.allowlist is None else sorted(self.allowlist),
            "denylist": [
                {k: v for k, v in (("package", r.pattern), ("introduced", r.introduced), ("fixed", r.fixed)) if v is not None}
                for r in self.denylist
            ],
            "max_new_dependencies": self.max_new_dependencies,
            "forbid_vulnerable": self.forbid_vulnerable,
        }


def default_policy() -> PolicyEnvelope:
    """Benchmark-defined rules used when no policy is shown to the system."""
    return PolicyEnvelope(track=Track.POLICY_UNSPECIFIED)


def policy_from_dict(data: Mapping[str, Any]) -> PolicyEnvelope:
    """Build an envelope from the policy file schema.

    Raises:
        ConfigError: on a missing or ill-typed field.
    """
    if not isinstance(data, Mapping):
        raise ConfigError("policy must be a JSON object")
    try:
        track = Track(data.get("track", Track.POLICY_SPECIFIED.value))
    except ValueError:
        raise ConfigError(f"unknown track {data.get('track')!r}") from None
    allow = data.get("allowlist")
    if allow is not None and (not isinstance(allow, list) or not all(isinstance(p, str) for p in allow)):
        raise ConfigError("allowlist must be an array of strings or null")
    deny = []
    for i, entry in enumerate(data.get("denylist") or []):
        if not isinstance(entry, Mapping) or not isinstance(entry.get("package"), str):
            raise ConfigError(f"denylist[{i}] needs a string 'package'")
        for bound in ("introduced", "fixed"):
            if entry.get(bound) is not None and not isinstance(entry[bound], str):
                raise ConfigError(f"denylist[{i}].{bound} must be a version string")
        deny.append(DenyRule(entry["package"].lower(), entry.get("introduced"), entry.get("fixed")))
    budget = data.get("max_new_dependencies")
    if budget is not None and (isinstance(budget, bool) or not isinstance(budget, int) or budget < 0):
        raise ConfigError("max_new_dependencies must be a non-negative integer or null")
    forbid = data.get("forbid_vulnerable", True)
    if not isinstance(forbid, bool):
        raise ConfigError("forbid_vulnerable must be a boolean")
    return PolicyEnvelope(
        track=track,
        allowlist=None if allow is None else frozenset(p.lower() for p in allow),
        denylist=tuple(deny),
        max_new_dependencies=budget,
        forbid_vulnerable=forbid,
    )


def read_policy(path: Union[str, Path]) -> PolicyEnvelope:
    try:
        with open(path, encoding="utf-8-sig") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read policy {path}: {exc}") from None
    return policy_from_dict(data)


# ---------------------------------------------------------------------------
# compliance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    change: DependencyChange
    rule: str
    message: str


UNAUDITABLE = "unauditable-range"


@dataclass(frozen=True)
class ComplianceVerdict:
    allowlist_ok: bool = True
    denylist_ok: bool = True
    vuln_ok: bool = True
    budget_ok: bool = True
    violations: tuple[Violation, ...] = ()

    @property
    def compliant(self) -> bool:
        return self.allowlist_ok and self.denylist_ok and self.vuln_ok and self.budget_ok

    @property
    def warnings(self) -> tuple[Violation, ...]:
        return tuple(v for v in self.violations if v.rule == UNAUDITABLE)


def _deny_hit(rule: DenyRule, change: DependencyChange) -> Optional[bool]:
    """True/False for a decided hit, None when the head version is unknown."""
    if not glob_match(rule.pattern, change.name):
        return False
    if rule.denies_all_versions:
        return True
    if change.head_version is None:
        return None
    try:
        vrange = rule.range_for(change.ecosystem)
    except (UnparseableVersion, ValueError):
        return False
    return range_contains(vrange, change.head_version)


def check_compliance(
    changes: Sequence[DependencyChange],
    envelope: PolicyEnvelope,
    store: AdvisoryStore,
    ref_date: datetime,
) -> ComplianceVerdict:
    """Check additions and updates against ``envelope`` at ``ref_date``.

    Removals never violate. A ranged specifier with no pin cannot be audited
    for vulnerabilities or ranged deny rules; it is recorded as an
    ``unauditable-range`` warning without failing any check.
    """
    allow_ok = deny_ok = vuln_ok = True
    violations: list[Violation] = []
    additions = 0
    for change in changes:
        if change.kind is ChangeKind.REMOVAL:
            continue
        if change.kind is ChangeKind.ADDITION:
            additions += 1
            if envelope.max_new_dependencies is not None and additions > envelope.max_new_dependencies:
                violations.append(
                    Violation(change, "budget", f"addition #{additions} exceeds budget of {envelope.max_new_dependencies}")
                )
        if not envelope.allows(change.name):
            allow_ok = False
            violations.append(Violation(change, "allowlist", f"{change.name} is not allowlisted"))
        unaudited = False
        for rule in envelope.denylist:
            hit = _deny_hit(rule, change)
            if hit:
                deny_ok = False
                violations.append(Violation(change, "denylist", f"{change.name} {change.head_spec} matches deny rule {rule.pattern}"))
            elif hit is None:
                unaudited = True
        if change.head_version is None:
            unaudited = unaudited or envelope.forbid_vulnerable
        elif envelope.forbid_vulnerable and not change.is_version_neutral:
            hits = advisories_at(store, change.ecosystem, change.name, change.head_version, ref_date)
            if hits:
                vuln_ok = False
                ids = ", ".join(a.id for a in hits)
                violations.append(Violation(change, "vulnerable", f"{change.name}@{change.head_version} affected by {ids}"))
        if unaudited:
            violations.append(Violation(change, UNAUDITABLE, f"{change.name} {change.head_spec!r} has no pinned version to audit"))
    budget_ok = envelope.max_new_dependencies is None or additions <= envelope.max_new_dependencies
    return ComplianceVerdict(allow_ok, deny_ok, vuln_ok, budget_ok, tuple(violations))


# ---------------------------------------------------------------------------
# availability, evidence, reuse
# ---------------------------------------------------------------------------


class AvailabilityDefinition(str, enum.Enum):
    IN_MANIFEST = "InManifest"
    IN_LOCKFILE = "InLockfile"
    IN_TREE = "InTree"


@dataclass(frozen=True)
class AvailabilitySet:
    definition: AvailabilityDefinition
    members: frozenset[tuple[str, str, Optional[Version]]] = frozenset()

    @property
    def name_keys(self) -> frozenset[str]:
        return frozenset(eco.loose_key(name) for _, name, _ in self.members)

    def has(self, name: str) -> bool:
        return eco.loose_key(name) in self.name_keys


class EvidenceSource(str, enum.Enum):
    IMPORT_TRACE = "ImportTrace"
    MODULE_LOAD_LOG = "ModuleLoadLog"
    DECLARED = "Declared"


@dataclass(frozen=True)
class ExecutionEvidence:
    observed: frozenset[str] = frozenset()
    source: EvidenceSource = EvidenceSource.IMPORT_TRACE

    @classmethod
    def of(cls, names: Iterable[str], source: EvidenceSource = EvidenceSource.IMPORT_TRACE) -> "ExecutionEvidence":
        return cls(frozenset(n.strip().lower() for n in names if n.strip()), source)

    @property
    def name_keys(self) -> frozenset[str]:
        return frozenset(eco.loose_key(n) for n in self.observed)


def _added_keys(changes: Iterable[DependencyChange]) -> set[str]:
    return {eco.loose_key(c.name) for c in changes if c.kind is ChangeKind.ADDITION}


def capability_reused(
    acceptable: Iterable[str],
    availability: AvailabilitySet,
    evidence: ExecutionEvidence,
    changes: Sequence[DependencyChange],
) -> bool:
    keys = {eco.loose_key(n) for n in acceptable}
    reused = keys & availability.name_keys & evidence.name_keys
    if not reused:
        return False
    competing = (_added_keys(changes) & keys) - reused
    return not competing


def reuse_score(
    required_capabilities: Sequence[Iterable[str]],
    availability: AvailabilitySet,
    evidence: ExecutionEvidence,
    changes: Sequence[DependencyChange],
) -> float:
    """Fraction of required capabilities served by an already-available package.

    A capability counts only when one of its acceptable packages is both
    available and observed in the execution evidence, and the patch does not
    add a competing acceptable package. An empty capability list scores 1.
    """
    if not required_capabilities:
        return 1.0
    hits = sum(capability_reused(cap, availability, evidence, changes) for cap in required_capabilities)
    return hits / len(required_capabilities)


def unnecessary_add_penalty(
    changes: Sequence[DependencyChange],
    availability: AvailabilitySet,
    justified_names: Iterable[str],
) -> int:
    """Additions that are neither justified by the task nor already available."""
    justified = {eco.loose_key(n) for n in justified_names}
    available = availability.name_keys
    return sum(
        1
        for c in changes
        if c.kind is ChangeKind.ADDITION and eco.loose_key(c.name) not in justified and eco.loose_key(c.name) not in available
    )


def capability_satisfied(
    acceptable: Iterable[str],
    envelope: PolicyEnvelope,
    evidence: ExecutionEvidence,
    changes: Sequence[DependencyChange],
) -> bool:
    """Justified-add check: some allowlisted acceptable package was added or
    observed. Neither means the capability was hand-rolled."""
    keys = {eco.loose_key(n) for n in acceptable}
    names = {eco.loose_key(c.name): c.name for c in changes if c.kind is ChangeKind.ADDITION}
    for key, name in names.items():
        if key in keys and envelope.allows(name):
            return True
    return any(k in keys and envelope.allows(n) for n in evidence.observed for k in [eco.loose_key(n)])
