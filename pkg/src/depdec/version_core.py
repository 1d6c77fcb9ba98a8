"""Version values, ordering, affected-range membership and remediation buckets.

Every ecosystem is folded into one (major, minor, patch, prerelease) model so
that matching and scoring stay uniform. Per-ecosystem adapters handle the
common decorations (PEP 440 epochs and pre-release spellings, Maven
qualifiers, Go pseudo-versions); anything beyond that parses best-effort from
its leading digits and is flagged ``lossy``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple, Union

from depdec import ecosystems as eco
from depdec.errors import EcosystemMismatch, UnparseableVersion

_NUMERIC = re.compile(r"(\d+)(?:\.(\d+))?(?:\.(\d+))?((?:\.\d+)*)")
_SEPARATORS = re.compile(r"[.\-_]+")
_ALNUM_RUN = re.compile(r"[a-z]+|\d+")
_CLEAN_REST = re.compile(r"^[0-9A-Za-z.\-_]*$")
_PEP440_EPOCH = re.compile(r"^\d+!")

# pre-release spellings folded to one canonical tag per ecosystem
_PYPI_TAGS = {"alpha": "a", "beta": "b", "c": "rc", "pre": "rc", "preview": "rc"}
_MAVEN_TAGS = {"a": "alpha", "b": "beta", "m": "milestone", "cr": "rc"}
_PACKAGIST_TAGS = {"a": "alpha", "b": "beta"}

# qualifiers meaning "this is the release itself"
_RELEASE_QUALIFIERS = {
    eco.MAVEN: {"final", "release", "ga"},
    eco.PACKAGIST: {"stable"},
}
# post-release markers; dropped, which makes the value lossy
_POST_QUALIFIERS = {
    eco.PYPI: {"post", "rev", "r"},
    eco.MAVEN: {"sp"},
    eco.PACKAGIST: {"patch", "p", "pl"},
}
_TAG_ALIASES = {eco.PYPI: _PYPI_TAGS, eco.MAVEN: _MAVEN_TAGS, eco.PACKAGIST: _PACKAGIST_TAGS}
# ecosystems whose pre-release tags are case-insensitive and split at letter/digit runs
_LOOSE_TAG_ECOSYSTEMS = {eco.PYPI, eco.MAVEN, eco.RUBYGEMS, eco.PACKAGIST}


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


class RemediationBucket(str, enum.Enum):
    """Semantic-version distance from a vulnerable release to its patch."""

    BUG_FIX = "BugFix"
    MINOR = "Minor"
    MAJOR = "Major"
    OTHER = "Other"

    @property
    def rank(self) -> int:
        return _BUCKET_RANK[self]


_BUCKET_RANK = {
    RemediationBucket.BUG_FIX: 0,
    RemediationBucket.MINOR: 1,
    RemediationBucket.MAJOR: 2,
    RemediationBucket.OTHER: 3,
}


@dataclass(frozen=True)
class Version:
    """A parsed version. Equality and ordering ignore ``raw`` and ``lossy``.

    Ordering between versions of different ecosystems raises
    ``EcosystemMismatch``; equality simply answers ``False``.
    """

    ecosystem: str
    major: int
    minor: int = 0
    patch: int = 0
    prerelease: Tuple[str, ...] = ()
    raw: str = field(default="", compare=False)
    lossy: bool = field(default=False, compare=False)

    @property
    def normalized(self) -> str:
        text = f"{self.major}.{self.minor}.{self.patch}"
        if self.prerelease:
            text += "-" + ".".join(self.prerelease)
        return text

    @property
    def is_prerelease(self) -> bool:
        return bool(self.prerelease)

    def __str__(self) -> str:
        return self.normalized

    def __lt__(self, other: "Version") -> bool:
        return compare(self, other) is Ordering.LESS

    def __le__(self, other: "Version") -> bool:
        return compare(self, other) is not Ordering.GREATER

    def __gt__(self, other: "Version") -> bool:
        return compare(self, other) is Ordering.GREATER

    def __ge__(self, other: "Version") -> bool:
        return compare(self, other) is not Ordering.LESS


def _split_tags(ecosystem: str, rest: str) -> tuple[list[str], bool]:
    lossy = not _CLEAN_REST.match(rest)
    if lossy:
        rest = re.sub(r"[^0-9A-Za-z]+", ".", rest)
    pieces = [p for p in _SEPARATORS.split(rest) if p]
    if ecosystem in _LOOSE_TAG_ECOSYSTEMS:
        pieces = [run for p in pieces for run in _ALNUM_RUN.findall(p.lower())]
    aliases = _TAG_ALIASES.get(ecosystem, {})
    release = _RELEASE_QUALIFIERS.get(ecosystem, set())
    post = _POST_QUALIFIERS.get(ecosystem, set())
    tags: list[str] = []
    i = 0
    while i < len(pieces):
        tag = aliases.get(pieces[i], pieces[i])
        if tag in post:
            lossy = True
            # swallow the post-release number too
            i += 2 if i + 1 < len(pieces) and pieces[i + 1].isdigit() else 1
            continue
        if tag in release:
            i += 1
            continue
        tags.append(str(int(tag)) if tag.isdigit() else tag)
        i += 1
    return tags, lossy


def parse_version(ecosystem: str, text: str) -> Version:
    """Parse ``text`` as a version of ``ecosystem``.

    A leading ``v``, ``+build`` metadata (PEP 440 local labels and Go's
    ``+incompatible`` included) and PEP 440 epochs are stripped; the original
    text stays available as ``raw``.

    Raises:
        UnparseableVersion: no leading numeric component remains.
    """
    if ecosystem not in eco.ECOSYSTEMS:
        ecosystem = eco.canonical_ecosystem(ecosystem)
    if not isinstance(text, str) or not text.strip():
        raise UnparseableVersion(str(text), ecosystem)
    s = text.strip().lstrip("\ufeff")
    if len(s) > 1 and s[0] in "vV" and s[1].isdigit():
        s = s[1:]
    s = s.split("+", 1)[0]
    if ecosystem == eco.PYPI:
        s = _PEP440_EPOCH.sub("", s)
    m = _NUMERIC.match(s)
    if not m:
        raise UnparseableVersion(text, ecosystem)
    tags, lossy = _split_tags(ecosystem, s[m.end():])
    return Version(
        ecosystem=ecosystem,
        major=int(m.group(1)),
        minor=int(m.group(2) or 0),
        patch=int(m.group(3) or 0),
        prerelease=tuple(tags),
        raw=text,
        lossy=lossy or bool(m.group(4)),
    )


def _cmp(a, b) -> int:
    return (a > b) - (a < b)


def _compare_tag(a: str, b: str) -> int:
    if a.isdigit() and b.isdigit():
        return _cmp(int(a), int(b))
    return _cmp(a, b)


def compare(a: Version, b: Version) -> Ordering:
    """Total order within one ecosystem.

    Numeric triple first; then a release outranks any pre-release of the same
    triple; pre-release tags compare pairwise (numerically when both are
    digits, textually otherwise) and a shorter tag list that is a prefix of a
    longer one sorts first.
    """
    if a.ecosystem != b.ecosystem:
        raise EcosystemMismatch(a.ecosystem, b.ecosystem)
    c = _cmp((a.major, a.minor, a.patch), (b.major, b.minor, b.patch))
    if c:
        return Ordering(c)
    if not a.prerelease or not b.prerelease:
        # empty pre-release is the release and ranks above any pre-release
        return Ordering(_cmp(not a.prerelease, not b.prerelease))
    for x, y in zip(a.prerelease, b.prerelease):
        c = _compare_tag(x, y)
        if c:
            return Ordering(c)
    return Ordering(_cmp(len(a.prerelease), len(b.prerelease)))


@dataclass(frozen=True)
class Interval:
    """Half-open ``[introduced, fixed)``; ``fixed=None`` means unbounded."""

    introduced: Version
    fixed: Optional[Version] = None

    def contains(self, v: Version) -> bool:
        return self.introduced <= v and (self.fixed is None or v < self.fixed)


VersionLike = Union[Version, str]


@dataclass(frozen=True)
class VersionRange:
    """Sorted, non-overlapping affected intervals for one ecosystem."""

    ecosystem: str
    intervals: Tuple[Interval, ...] = ()

    def __post_init__(self) -> None:
        for iv in self.intervals:
            for v in (iv.introduced, iv.fixed):
                if v is not None and v.ecosystem != self.ecosystem:
                    raise EcosystemMismatch(self.ecosystem, v.ecosystem)
            if iv.fixed is not None and iv.fixed <= iv.introduced:
                raise ValueError(f"empty interval [{iv.introduced}, {iv.fixed})")
        for prev, cur in zip(self.intervals, self.intervals[1:]):
            if prev.fixed is None or cur.introduced < prev.fixed:
                raise ValueError("intervals must be sorted and non-overlapping")

    @classmethod
    def of(
        cls,
        ecosystem: str,
        events: Iterable[Tuple[VersionLike, Optional[VersionLike]]],
    ) -> "VersionRange":
        """Build a range from (introduced, fixed) pairs in any order.

        Overlapping or touching intervals are merged.
        """

        def as_version(v: VersionLike) -> Version:
            return v if isinstance(v, Version) else parse_version(ecosystem, v)

        ivs = []
        for intro, fixed in events:
            iv = Interval(as_version(intro), None if fixed is None else as_version(fixed))
            if iv.fixed is not None and iv.fixed <= iv.introduced:
                raise ValueError(f"empty interval [{iv.introduced}, {iv.fixed})")
            ivs.append(iv)
        ivs.sort(key=lambda iv: iv.introduced)
        merged: list[Interval] = []
        for iv in ivs:
            if merged:
                last = merged[-1]
                if last.fixed is None or iv.introduced <= last.fixed:
                    if last.fixed is None or iv.fixed is None:
                        fixed = None
                    else:
                        fixed = max(last.fixed, iv.fixed)
                    merged[-1] = Interval(last.introduced, fixed)
                    continue
            merged.append(iv)
        return cls(ecosystem, tuple(merged))

    def __contains__(self, v: Version) -> bool:
        return range_contains(self, v)


def range_contains(vrange: VersionRange, v: Version) -> bool:
    if vrange.ecosystem != v.ecosystem:
        raise EcosystemMismatch(vrange.ecosystem, v.ecosystem)
    for iv in vrange.intervals:
        if v < iv.introduced:
            # later intervals start even higher
            return False
        if iv.contains(v):
            return True
    return False


def remediation_bucket(vulnerable: Version, patched: Optional[Version]) -> RemediationBucket:
    """Classify the upgrade step from ``vulnerable`` to ``patched``.

    Only clean upgrades get a semver bucket. A missing patch, a downgrade or
    no-op, any pre-release on either side, a lossy parse, or an ecosystem
    mismatch all land in ``OTHER``.
    """
    if patched is None or patched.ecosystem != vulnerable.ecosystem:
        return RemediationBucket.OTHER
    if vulnerable.prerelease or patched.prerelease or vulnerable.lossy or patched.lossy:
        return RemediationBucket.OTHER
    if patched <= vulnerable:
        return RemediationBucket.OTHER
    if patched.major != vulnerable.major:
        return RemediationBucket.MAJOR
    if patched.minor != vulnerable.minor:
        return RemediationBucket.MINOR
    return RemediationBucket.BUG_FIX
