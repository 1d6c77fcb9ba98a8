"""PR-time security labels, per-instance score reports and corpus aggregates.

All corpus arithmetic is done on integer counters and ``Fraction`` ratios;
rounding happens only when a value is rendered.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime
from decimal import ROUND_HALF_UP, Decimal, localcontext
from fractions import Fraction
from typing import Any, Iterable, Mapping, Optional, Sequence

from depdec.advisories import (
    Advisory,
    AdvisoryStore,
    Severity,
    advisories_at,
    advisory_from_record,
    advisory_to_record,
    minimal_safe_version,
    severity_of,
)
from depdec.changes import ChangeKind, DependencyChange
from depdec.manifests import Scope
from depdec.policy import (
    AvailabilitySet,
    ComplianceVerdict,
    ExecutionEvidence,
    PolicyEnvelope,
    Violation,
    capability_satisfied,
    check_compliance,
    reuse_score,
    unnecessary_add_penalty,
)
from depdec.version_core import RemediationBucket, Version, parse_version, remediation_bucket


class AuthorKind(str, enum.Enum):
    AGENT = "Agent"
    HUMAN = "Human"

    @classmethod
    def parse(cls, text: str) -> "AuthorKind":
        for member in cls:
            if member.value.lower() == str(text).strip().lower():
                return member
        raise ValueError(f"unknown author kind {text!r}")


@dataclass(frozen=True)
class ChangeSecurityLabel:
    introduced: tuple[Advisory, ...] = ()
    fixed: tuple[Advisory, ...] = ()
    mitigatable: Optional[bool] = None
    remediation: Optional[RemediationBucket] = None
    minimal_safe: Optional[Version] = None
    unaudited: bool = False

    @property
    def is_vulnerable(self) -> bool:
        return bool(self.introduced)

    @property
    def is_fix(self) -> bool:
        return bool(self.fixed)


CLEAN_LABEL = ChangeSecurityLabel()


def label_change(
    change: DependencyChange,
    store: AdvisoryStore,
    ref_date: datetime,
    candidates: Optional[Sequence[Version]] = None,
) -> ChangeSecurityLabel:
    """Label one change with the advisories it introduces and fixes at ``ref_date``.

    Introduced advisories are those affecting the head pin of an addition or
    update. Fixed advisories are those affecting the base pin of a removal,
    or of an update whose head pin they no longer affect. For vulnerable
    changes the nearest safe release is searched in ``candidates``; without a
    release list the advisories' own first-patched versions stand in.
    """
    kind = change.kind
    if kind is ChangeKind.UPDATE and change.is_version_neutral:
        return CLEAN_LABEL

    introduced: list[Advisory] = []
    unaudited = False
    if kind in (ChangeKind.ADDITION, ChangeKind.UPDATE):
        if change.head_version is None:
            unaudited = True
        else:
            introduced = advisories_at(store, change.ecosystem, change.name, change.head_version, ref_date)

    fixed: list[Advisory] = []
    if kind in (ChangeKind.REMOVAL, ChangeKind.UPDATE) and change.base_version is not None:
        on_base = advisories_at(store, change.ecosystem, change.name, change.base_version, ref_date)
        if kind is ChangeKind.REMOVAL:
            fixed = on_base
        elif change.head_version is not None:
            still = {a.id for a in introduced}
            fixed = [a for a in on_base if a.id not in still]

    if not introduced:
        return ChangeSecurityLabel((), tuple(fixed), unaudited=unaudited)

    if candidates is None:
        candidates = [a.first_patched for a in introduced if a.first_patched is not None]
    safe = minimal_safe_version(store, change.ecosystem, change.name, change.head_version, ref_date, candidates)
    return ChangeSecurityLabel(
        introduced=tuple(introduced),
        fixed=tuple(fixed),
        mitigatable=safe is not None,
        remediation=remediation_bucket(change.head_version, safe),
        minimal_safe=safe,
        unaudited=unaudited,
    )


# ---------------------------------------------------------------------------
# per-instance score
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreReport:
    instance_id: str
    functional_pass: Optional[bool]
    reuse: float
    unnecessary_adds: int
    compliance: ComplianceVerdict
    vuln_compliant: bool
    worst_remediation: Optional[RemediationBucket]
    labels: tuple[tuple[DependencyChange, ChangeSecurityLabel], ...] = ()
    capability_ok: Optional[bool] = None
    track: Optional[str] = None

    @property
    def unaudited(self) -> int:
        return sum(1 for _, label in self.labels if label.unaudited)

    @property
    def passed(self) -> bool:
        return (
            self.vuln_compliant
            and self.compliance.compliant
            and self.functional_pass is not False
            and self.capability_ok is not False
        )


def worst_bucket(buckets: Iterable[Optional[RemediationBucket]]) -> Optional[RemediationBucket]:
    present = [b for b in buckets if b is not None]
    return max(present, key=lambda b: b.rank) if present else None


CandidateLookup = Any  # callable (ecosystem, name) -> Optional[Sequence[Version]]


def score_instance(
    instance_id: str,
    changes: Sequence[DependencyChange],
    envelope: PolicyEnvelope,
    availability: AvailabilitySet,
    evidence: ExecutionEvidence,
    required_capabilities: Sequence[Iterable[str]],
    justified_names: Iterable[str],
    functional_pass: Optional[bool],
    store: AdvisoryStore,
    ref_date: datetime,
    candidates: Optional[CandidateLookup] = None,
    require_capability: bool = False,
) -> ScoreReport:
    """Compose labels, compliance, reuse and unnecessary-add metrics.

    ``require_capability`` enables the justified-add check: every required
    capability must be met by an allowlisted package that was added or
    observed, otherwise ``capability_ok`` is False.
    """
    labels = []
    for change in changes:
        cands = candidates(change.ecosystem, change.name) if candidates else None
        labels.append((change, label_change(change, store, ref_date, cands)))
    justified = list(justified_names)
    capability_ok = None
    if require_capability:
        capability_ok = all(capability_satisfied(cap, envelope, evidence, changes) for cap in required_capabilities)
    return ScoreReport(
        instance_id=instance_id,
        functional_pass=functional_pass,
        reuse=reuse_score(required_capabilities, availability, evidence, changes),
        unnecessary_adds=unnecessary_add_penalty(changes, availability, justified),
        compliance=check_compliance(changes, envelope, store, ref_date),
        vuln_compliant=not any(label.introduced for _, label in labels),
        worst_remediation=worst_bucket(label.remediation for _, label in labels),
        labels=tuple(labels),
        capability_ok=capability_ok,
        track=envelope.track.value,
    )


# ---------------------------------------------------------------------------
# corpus aggregates
# ---------------------------------------------------------------------------


def _zero_severities() -> dict[Severity, int]:
    return {s: 0 for s in Severity}


def _zero_buckets() -> dict[RemediationBucket, int]:
    return {b: 0 for b in RemediationBucket}


def _ratio(num: int, den: int) -> Fraction:
    return Fraction(num, den) if den else Fraction(0)


@dataclass
class CorpusAggregate:
    """Counters for one author kind. Merging is associative and commutative."""

    additions: int = 0
    removals: int = 0
    updates: int = 0
    vulnerable_dep_count: int = 0
    fixed_dep_count: int = 0
    mitigatable_count: int = 0
    unaudited_count: int = 0
    introduced_severity: dict[Severity, int] = field(default_factory=_zero_severities)
    fixed_severity: dict[Severity, int] = field(default_factory=_zero_severities)
    remediation: dict[RemediationBucket, int] = field(default_factory=_zero_buckets)

    # -- counting ---------------------------------------------------------

    def add(self, change: DependencyChange, label: ChangeSecurityLabel) -> None:
        if change.kind is ChangeKind.ADDITION:
            self.additions += 1
        elif change.kind is ChangeKind.REMOVAL:
            self.removals += 1
        else:
            self.updates += 1
        if label.unaudited:
            self.unaudited_count += 1
        if label.introduced:
            self.vulnerable_dep_count += 1
            if label.mitigatable:
                self.mitigatable_count += 1
            self.remediation[label.remediation or RemediationBucket.OTHER] += 1
            for adv in label.introduced:
                self.introduced_severity[severity_of(adv)] += 1
        if label.fixed:
            self.fixed_dep_count += 1
            for adv in label.fixed:
                self.fixed_severity[severity_of(adv)] += 1

    def merge(self, other: "CorpusAggregate") -> "CorpusAggregate":
        out = CorpusAggregate()
        for name in ("additions", "removals", "updates", "vulnerable_dep_count", "fixed_dep_count",
                     "mitigatable_count", "unaudited_count"):
            setattr(out, name, getattr(self, name) + getattr(other, name))
        for name in ("introduced_severity", "fixed_severity", "remediation"):
            mine, theirs = getattr(self, name), getattr(other, name)
            setattr(out, name, {k: mine[k] + theirs[k] for k in mine})
        return out

    # -- derived ----------------------------------------------------------

    @property
    def total_changes(self) -> int:
        return self.additions + self.removals + self.updates

    @property
    def change_counts(self) -> dict[ChangeKind, int]:
        return {ChangeKind.ADDITION: self.additions, ChangeKind.REMOVAL: self.removals, ChangeKind.UPDATE: self.updates}

    @property
    def introduced_dep_count(self) -> int:
        """Changes that select a version: additions plus updates."""
        return self.additions + self.updates

    @property
    def vulnerable_rate(self) -> Fraction:
        return _ratio(self.vulnerable_dep_count, self.introduced_dep_count)

    @property
    def mitigatable_fraction(self) -> Fraction:
        return _ratio(self.mitigatable_count, self.vulnerable_dep_count)

    @property
    def introduced_pct_all_changes(self) -> Fraction:
        return _ratio(self.vulnerable_dep_count, self.total_changes)

    @property
    def fixed_pct_all_changes(self) -> Fraction:
        return _ratio(self.fixed_dep_count, self.total_changes)

    @property
    def fix_rate(self) -> Fraction:
        return _ratio(self.fixed_dep_count, self.removals + self.updates)

    @property
    def net_impact(self) -> int:
        return self.fixed_dep_count - self.vulnerable_dep_count

    def kind_share(self, kind: ChangeKind) -> Fraction:
        return _ratio(self.change_counts[kind], self.total_changes)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "change_counts": {k.value: v for k, v in self.change_counts.items()},
            "total_changes": self.total_changes,
            "introduced_dep_count": self.introduced_dep_count,
            "vulnerable_dep_count": self.vulnerable_dep_count,
            "fixed_dep_count": self.fixed_dep_count,
            "mitigatable_count": self.mitigatable_count,
            "unaudited_count": self.unaudited_count,
            "introduced_severity": {k.value: v for k, v in self.introduced_severity.items()},
            "fixed_severity": {k.value: v for k, v in self.fixed_severity.items()},
            "remediation_histogram": {k.value: v for k, v in self.remediation.items()},
            "vulnerable_pct": percent(self.vulnerable_rate, 2),
            "mitigatable_pct": percent(self.mitigatable_fraction, 2),
            "introduced_pct_all_changes": percent(self.introduced_pct_all_changes, 2),
            "fixed_pct_all_changes": percent(self.fixed_pct_all_changes, 2),
            "fix_rate_pct": percent(self.fix_rate, 2),
            "kind_share_pct": {k.value: percent(self.kind_share(k), 2) for k in ChangeKind},
            "net_impact": self.net_impact,
            "exact": {
                "vulnerable_rate": _frac_str(self.vulnerable_rate),
                "mitigatable_fraction": _frac_str(self.mitigatable_fraction),
                "introduced_pct_all_changes": _frac_str(self.introduced_pct_all_changes),
                "fixed_pct_all_changes": _frac_str(self.fixed_pct_all_changes),
                "fix_rate": _frac_str(self.fix_rate),
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CorpusAggregate":
        counts = data["change_counts"]
        return cls(
            additions=counts[ChangeKind.ADDITION.value],
            removals=counts[ChangeKind.REMOVAL.value],
            updates=counts[ChangeKind.UPDATE.value],
            vulnerable_dep_count=data["vulnerable_dep_count"],
            fixed_dep_count=data["fixed_dep_count"],
            mitigatable_count=data["mitigatable_count"],
            unaudited_count=data["unaudited_count"],
            introduced_severity={Severity(k): v for k, v in data["introduced_severity"].items()},
            fixed_severity={Severity(k): v for k, v in data["fixed_severity"].items()},
            remediation={RemediationBucket(k): v for k, v in data["remediation_histogram"].items()},
        )


def _frac_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def percent(value: Fraction, places: int) -> float:
    """``value`` as a percentage rounded half-up to ``places`` decimals."""
    return float(percent_decimal(value, places))


def percent_decimal(value: Fraction, places: int) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 50
        exact = Decimal(value.numerator) * 100 / Decimal(value.denominator)
        return exact.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def format_percent(value: Fraction, places: int) -> str:
    return f"{percent_decimal(value, places)}%"


LabeledRecord = tuple[AuthorKind, Sequence[DependencyChange], Sequence[ChangeSecurityLabel]]


def aggregate(records: Iterable[LabeledRecord]) -> dict[AuthorKind, CorpusAggregate]:
    """Fold (author kind, changes, labels) records into per-author counters.

    ``labels`` parallels ``changes``; a shorter label list treats the
    remaining changes as clean. Both author kinds are always present.
    """
    out = {kind: CorpusAggregate() for kind in AuthorKind}
    for author, changes, labels in records:
        agg = out[AuthorKind(author)]
        labels = list(labels)
        for i, change in enumerate(changes):
            agg.add(change, labels[i] if i < len(labels) else CLEAN_LABEL)
    return out


# ---------------------------------------------------------------------------
# ScoreReport serialization
# ---------------------------------------------------------------------------


def _version_to_json(v: Optional[Version]) -> Optional[str]:
    return None if v is None else (v.raw or str(v))


def _version_from_json(ecosystem: str, text: Optional[str]) -> Optional[Version]:
    return None if text is None else parse_version(ecosystem, text)


def change_to_dict(c: DependencyChange) -> dict[str, Any]:
    return {
        "kind": c.kind.value,
        "ecosystem": c.ecosystem,
        "name": c.name,
        "base_spec": c.base_spec,
        "base_version": _version_to_json(c.base_version),
        "head_spec": c.head_spec,
        "head_version": _version_to_json(c.head_version),
        "scope": c.scope.value,
        "source_path": c.source_path,
    }


def change_from_dict(d: Mapping[str, Any]) -> DependencyChange:
    return DependencyChange(
        kind=ChangeKind(d["kind"]),
        ecosystem=d["ecosystem"],
        name=d["name"],
        base_version=_version_from_json(d["ecosystem"], d["base_version"]),
        base_spec=d["base_spec"],
        head_version=_version_from_json(d["ecosystem"], d["head_version"]),
        head_spec=d["head_spec"],
        scope=Scope(d["scope"]),
        source_path=d["source_path"],
    )


def label_to_dict(label: ChangeSecurityLabel) -> dict[str, Any]:
    return {
        "introduced": [advisory_to_record(a) for a in label.introduced],
        "fixed": [advisory_to_record(a) for a in label.fixed],
        "mitigatable": label.mitigatable,
        "remediation": None if label.remediation is None else label.remediation.value,
        "minimal_safe": _version_to_json(label.minimal_safe),
        "unaudited": label.unaudited,
    }


def label_from_dict(d: Mapping[str, Any], ecosystem: str) -> ChangeSecurityLabel:
    return ChangeSecurityLabel(
        introduced=tuple(advisory_from_record(r) for r in d["introduced"]),
        fixed=tuple(advisory_from_record(r) for r in d["fixed"]),
        mitigatable=d["mitigatable"],
        remediation=None if d["remediation"] is None else RemediationBucket(d["remediation"]),
        minimal_safe=_version_from_json(ecosystem, d["minimal_safe"]),
        unaudited=d["unaudited"],
    )


def verdict_to_dict(v: ComplianceVerdict) -> dict[str, Any]:
    return {
        "allowlist_ok": v.allowlist_ok,
        "denylist_ok": v.denylist_ok,
        "vuln_ok": v.vuln_ok,
        "budget_ok": v.budget_ok,
        "compliant": v.compliant,
        "violations": [
            {"change": change_to_dict(x.change), "rule": x.rule, "message": x.message} for x in v.violations
        ],
    }


def verdict_from_dict(d: Mapping[str, Any]) -> ComplianceVerdict:
    return ComplianceVerdict(
        allowlist_ok=d["allowlist_ok"],
        denylist_ok=d["denylist_ok"],
        vuln_ok=d["vuln_ok"],
        budget_ok=d["budget_ok"],
        violations=tuple(Violation(change_from_dict(x["change"]), x["rule"], x["message"]) for x in d["violations"]),
    )


def report_to_dict(r: ScoreReport) -> dict[str, Any]:
    return {
        "instance_id": r.instance_id,
        "track": r.track,
        "functional_pass": r.functional_pass,
        "reuse": r.reuse,
        "unnecessary_adds": r.unnecessary_adds,
        "compliance": verdict_to_dict(r.compliance),
        "vuln_compliant": r.vuln_compliant,
        "worst_remediation": None if r.worst_remediation is None else r.worst_remediation.value,
        "capability_ok": r.capability_ok,
        "unaudited": r.unaudited,
        "passed": r.passed,
        "labels": [{"change": change_to_dict(c), "label": label_to_dict(lab)} for c, lab in r.labels],
    }


def report_from_dict(d: Mapping[str, Any]) -> ScoreReport:
    labels = []
    for item in d["labels"]:
        change = change_from_dict(item["change"])
        labels.append((change, label_from_dict(item["label"], change.ecosystem)))
    return ScoreReport(
        instance_id=d["instance_id"],
        functional_pass=d["functional_pass"],
        reuse=d["reuse"],
        unnecessary_adds=d["unnecessary_adds"],
        compliance=verdict_from_dict(d["compliance"]),
        vuln_compliant=d["vuln_compliant"],
        worst_remediation=None if d["worst_remediation"] is None else RemediationBucket(d["worst_remediation"]),
        labels=tuple(labels),
        capability_ok=d["capability_ok"],
        track=d["track"],
    )
