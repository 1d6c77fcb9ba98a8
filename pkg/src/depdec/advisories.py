"""Offline advisory snapshot with reference-date ("PR-time") queries."""

from __future__ import annotations

import bisect
import enum
import json
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Optional, Sequence, Union

from depdec import ecosystems as eco
from depdec.errors import SchemaViolation, UnparseableVersion
from depdec.timeutil import format_utc, parse_utc
from depdec.version_core import Version, VersionRange, parse_version, range_contains


class Severity(str, enum.Enum):
    CRITICAL = "Critical"
    HIGH = "High"
    MODERATE = "Moderate"
    LOW = "Low"

    @classmethod
    def parse(cls, text: str) -> "Severity":
        key = text.strip().lower()
        if key == "medium":
            key = "moderate"
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValueError(f"unknown severity label {text!r}")


@dataclass(frozen=True)
class Advisory:
    id: str
    ecosystem: str
    package: str
    published: datetime
    affected: VersionRange
    cvss_score: Optional[float] = None
    severity_label: Optional[Severity] = None
    first_patched: Optional[Version] = None

    def __post_init__(self) -> None:
        if self.cvss_score is None and self.severity_label is None:
            raise ValueError(f"{self.id}: needs a CVSS score or a severity label")
        if self.cvss_score is not None and not 0.0 <= self.cvss_score <= 10.0:
            raise ValueError(f"{self.id}: CVSS score {self.cvss_score} outside [0, 10]")
        if self.first_patched is not None and range_contains(self.affected, self.first_patched):
            raise ValueError(f"{self.id}: first patched version {self.first_patched} is inside the affected range")

    def affects(self, version: Version) -> bool:
        return version.ecosystem == self.ecosystem and range_contains(self.affected, version)


def severity_of(advisory: Advisory) -> Severity:
    """Explicit label first, then the CVSS v3 rubric (9.0 / 7.0 / 4.0 cut points)."""
    if advisory.severity_label is not None:
        return advisory.severity_label
    score = advisory.cvss_score
    if score >= 9.0:
        return Severity.CRITICAL
    if score >= 7.0:
        return Severity.HIGH
    if score >= 4.0:
        return Severity.MODERATE
    return Severity.LOW


@dataclass(frozen=True)
class LoadStats:
    loaded: int = 0
    skipped: int = 0
    replaced: int = 0


class AdvisoryStore:
    """Immutable index of advisories keyed by (ecosystem, package).

    Each bucket is sorted by (published, id), so a reference-date query only
    scans the prefix published on or before the cutoff.
    """

    def __init__(self, advisories: Iterable[Advisory] = (), stats: LoadStats = LoadStats()):
        by_id: dict[str, Advisory] = {}
        for adv in advisories:
            by_id.pop(adv.id, None)
            by_id[adv.id] = adv
        index: dict[tuple[str, str], list[Advisory]] = {}
        for adv in by_id.values():
            index.setdefault((adv.ecosystem, adv.package), []).append(adv)
        self._index = {k: tuple(sorted(v, key=lambda a: (a.published, a.id))) for k, v in index.items()}
        self._dates = {k: [a.published for a in v] for k, v in self._index.items()}
        self._by_id = by_id
        self.stats = stats

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self) -> Iterator[Advisory]:
        return iter(self._by_id.values())

    def get(self, advisory_id: str) -> Optional[Advisory]:
        return self._by_id.get(advisory_id)

    def for_package(self, ecosystem: str, package: str) -> tuple[Advisory, ...]:
        return self._index.get((ecosystem, eco.normalize_name(ecosystem, package)), ())

    def published_before(self, ecosystem: str, package: str, ref_date: datetime) -> tuple[Advisory, ...]:
        key = (ecosystem, eco.normalize_name(ecosystem, package))
        bucket = self._index.get(key, ())
        if not bucket:
            return ()
        cut = bisect.bisect_right(self._dates[key], ref_date)
        return bucket[:cut]


# ---------------------------------------------------------------------------
# snapshot file I/O
# ---------------------------------------------------------------------------

Record = Mapping[str, Any]


def _require(rec: Record, ordinal: int, name: str, kind: type) -> Any:
    if name not in rec or rec[name] is None:
        raise SchemaViolation(ordinal, name, "required field is missing")
    value = rec[name]
    if not isinstance(value, kind):
        raise SchemaViolation(ordinal, name, f"expected {kind.__name__}")
    return value


def advisory_from_record(rec: Record, ordinal: int = 1) -> Advisory:
    """Validate one snapshot record and build its ``Advisory``."""
    if not isinstance(rec, Mapping):
        raise SchemaViolation(ordinal, "<record>", "expected a JSON object")
    adv_id = _require(rec, ordinal, "id", str)
    raw_ecosystem = _require(rec, ordinal, "ecosystem", str)
    try:
        ecosystem = eco.canonical_ecosystem(raw_ecosystem)
    except ValueError as exc:
        raise SchemaViolation(ordinal, "ecosystem", str(exc)) from None
    package = eco.normalize_name(ecosystem, _require(rec, ordinal, "package", str))
    raw_published = _require(rec, ordinal, "published", str)
    try:
        published = parse_utc(raw_published)
    except ValueError as exc:
        raise SchemaViolation(ordinal, "published", str(exc)) from None

    score = rec.get("cvss_score")
    if score is not None:
        if isinstance(score, bool) or not isinstance(score, (int, float)) or not math.isfinite(score):
            raise SchemaViolation(ordinal, "cvss_score", "expected a number")
        score = float(score)
    label = rec.get("severity")
    if label is not None:
        if not isinstance(label, str):
            raise SchemaViolation(ordinal, "severity", "expected a string")
        try:
            label = Severity.parse(label)
        except ValueError as exc:
            raise SchemaViolation(ordinal, "severity", str(exc)) from None

    ranges = _require(rec, ordinal, "ranges", list)
    events = []
    for i, r in enumerate(ranges):
        if not isinstance(r, Mapping) or not isinstance(r.get("introduced"), str):
            raise SchemaViolation(ordinal, f"ranges[{i}].introduced", "expected a version string")
        fixed = r.get("fixed")
        if fixed is not None and not isinstance(fixed, str):
            raise SchemaViolation(ordinal, f"ranges[{i}].fixed", "expected a version string or null")
        events.append((r["introduced"], fixed))
    try:
        affected = VersionRange.of(ecosystem, events)
    except (UnparseableVersion, ValueError) as exc:
        raise SchemaViolation(ordinal, "ranges", str(exc)) from None

    first_patched = rec.get("first_patched")
    if first_patched is not None:
        if not isinstance(first_patched, str):
            raise SchemaViolation(ordinal, "first_patched", "expected a version string")
        try:
            first_patched = parse_version(ecosystem, first_patched)
        except UnparseableVersion as exc:
            raise SchemaViolation(ordinal, "first_patched", str(exc)) from None

    if score is None and label is None:
        raise SchemaViolation(ordinal, "cvss_score", "either cvss_score or severity is required")
    if score is not None and not 0.0 <= score <= 10.0:
        raise SchemaViolation(ordinal, "cvss_score", f"{score} outside [0, 10]")
    if first_patched is not None and range_contains(affected, first_patched):
        raise SchemaViolation(ordinal, "first_patched", "version lies inside the affected ranges")
    return Advisory(
        id=adv_id,
        ecosystem=ecosystem,
        package=package,
        published=published,
        affected=affected,
        cvss_score=score,
        severity_label=label,
        first_patched=first_patched,
    )


def advisory_to_record(adv: Advisory) -> dict[str, Any]:
    rec: dict[str, Any] = {
        "id": adv.id,
        "ecosystem": adv.ecosystem,
        "package": adv.package,
        "published": format_utc(adv.published),
        "ranges": [
            {"introduced": iv.introduced.raw or str(iv.introduced), "fixed": None if iv.fixed is None else (iv.fixed.raw or str(iv.fixed))}
            for iv in adv.affected.intervals
        ],
    }
    if adv.cvss_score is not None:
        rec["cvss_score"] = adv.cvss_score
    if adv.severity_label is not None:
        rec["severity"] = adv.severity_label.value
    if adv.first_patched is not None:
        rec["first_patched"] = adv.first_patched.raw or str(adv.first_patched)
    return rec


def load_snapshot(records: Iterable[Union[Record, str]]) -> AdvisoryStore:
    """Build a store from advisory records (mappings or JSON Lines strings).

    Blank and ``#`` comment lines are counted as skipped. Duplicate ids keep
    the last occurrence and are counted as replaced.

    Raises:
        SchemaViolation: naming the 1-based record ordinal and the field.
    """
    advisories: dict[str, Advisory] = {}
    skipped = replaced = 0
    for ordinal, rec in enumerate(records, 1):
        if isinstance(rec, str):
            line = rec.strip()
            if not line or line.startswith("#"):
                skipped += 1
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(ordinal, "<record>", f"invalid JSON: {exc.msg}") from None
        adv = advisory_from_record(rec, ordinal)
        if adv.id in advisories:
            replaced += 1
            del advisories[adv.id]
        advisories[adv.id] = adv
    return AdvisoryStore(advisories.values(), LoadStats(len(advisories), skipped, replaced))


def read_snapshot(path: Union[str, Path]) -> AdvisoryStore:
    with open(path, encoding="utf-8-sig") as fh:
        return load_snapshot(fh)


def dump_snapshot(store: AdvisoryStore) -> str:
    return "".join(json.dumps(advisory_to_record(a), sort_keys=True) + "\n" for a in store)


# ---------------------------------------------------------------------------
# queries
# ---------------------------------------------------------------------------


def advisories_at(
    store: AdvisoryStore, ecosystem: str, package: str, version: Version, ref_date: datetime
) -> list[Advisory]:
    """Advisories for ``package`` published on or before ``ref_date`` whose
    affected range contains ``version``, sorted by (published, id)."""
    if version.ecosystem != ecosystem:
        return []
    return [a for a in store.published_before(ecosystem, package, ref_date) if range_contains(a.affected, version)]


def minimal_safe_version(
    store: AdvisoryStore,
    ecosystem: str,
    package: str,
    from_version: Version,
    ref_date: datetime,
    candidates: Sequence[Version],
) -> Optional[Version]:
    """Smallest release at or above ``from_version`` with no PR-time advisory.

    Falls back to the smallest safe release overall (a downgrade) when no safe
    upgrade exists, and returns ``None`` when every candidate is affected.
    """
    known = store.published_before(ecosystem, package, ref_date)
    safe = [
        c
        for c in candidates
        if c.ecosystem == ecosystem and not any(range_contains(a.affected, c) for a in known)
    ]
    if not safe:
        return None
    upgrades = [c for c in safe if c >= from_version]
    return min(upgrades) if upgrades else min(safe)
