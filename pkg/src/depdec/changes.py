"""Classify dependency edits between a base and a head repository state.

Each manifest change keyed by (ecosystem, name, scope) is one dependency
decision: an addition, a removal, or an update of its specifier.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from depdec.errors import FormatMismatch, MalformedManifest
from depdec.manifests import (
    DependencyDecl,
    ManifestSnapshot,
    Scope,
    detect_format,
    parse_manifest,
)
from depdec.version_core import Version


class ChangeKind(str, enum.Enum):
    ADDITION = "Addition"
    REMOVAL = "Removal"
    UPDATE = "Update"


@dataclass(frozen=True)
class DependencyChange:
    kind: ChangeKind
    ecosystem: str
    name: str
    base_version: Optional[Version]
    base_spec: Optional[str]
    head_version: Optional[Version]
    head_spec: Optional[str]
    scope: Scope
    source_path: str

    def __post_init__(self) -> None:
        has_base, has_head = self.base_spec is not None, self.head_spec is not None
        if self.kind is ChangeKind.ADDITION:
            ok = not has_base and has_head
        elif self.kind is ChangeKind.REMOVAL:
            ok = has_base and not has_head
        else:
            ok = has_base and has_head and self.base_spec != self.head_spec
        if not ok:
            raise ValueError(f"inconsistent {self.kind.value} for {self.name}")

    @property
    def key(self) -> tuple[str, str, Scope]:
        return (self.ecosystem, self.name, self.scope)

    @property
    def is_version_neutral(self) -> bool:
        """An update that only rewrites the specifier around the same pin."""
        return (
            self.kind is ChangeKind.UPDATE
            and self.base_version is not None
            and self.base_version == self.head_version
        )


def _sort_key(change: DependencyChange):
    return (change.name, change.scope.rank, change.ecosystem, change.source_path)


def _change(kind: ChangeKind, base: Optional[DependencyDecl], head: Optional[DependencyDecl], path: str):
    ref = head or base
    return DependencyChange(
        kind=kind,
        ecosystem=ref.ecosystem,
        name=ref.name,
        base_version=base.pinned if base else None,
        base_spec=base.spec if base else None,
        head_version=head.pinned if head else None,
        head_spec=head.spec if head else None,
        scope=ref.scope,
        source_path=path,
    )


def classify_changes(base: ManifestSnapshot, head: ManifestSnapshot) -> list[DependencyChange]:
    """Diff two snapshots of the same manifest.

    Keys only in ``head`` are additions, keys only in ``base`` removals, and
    keys in both whose specifier text differs are updates. The result is
    sorted by (name, scope).

    Raises:
        FormatMismatch: the snapshots come from different manifest formats.
    """
    if base.format != head.format:
        raise FormatMismatch(base.format.value, head.format.value)
    path = head.path or base.path
    before = {d.key: d for d in base.decls}
    after = {d.key: d for d in head.decls}
    out = []
    for key, decl in after.items():
        old = before.get(key)
        if old is None:
            out.append(_change(ChangeKind.ADDITION, None, decl, path))
        elif old.spec != decl.spec:
            out.append(_change(ChangeKind.UPDATE, old, decl, path))
    for key, decl in before.items():
        if key not in after:
            out.append(_change(ChangeKind.REMOVAL, decl, None, path))
    out.sort(key=_sort_key)
    return out


FileChange = tuple[str, Optional[str], Optional[str]]


def classify_file(path: str, base_text: Optional[str], head_text: Optional[str]) -> list[DependencyChange]:
    """Classify one changed file; non-manifests and lockfiles yield nothing."""
    fmt = detect_format(path)
    if fmt is None or fmt.is_lockfile:
        return []
    try:
        base = parse_manifest(fmt, base_text, path) if base_text is not None else ManifestSnapshot.empty(fmt, path)
        head = parse_manifest(fmt, head_text, path) if head_text is not None else ManifestSnapshot.empty(fmt, path)
    except MalformedManifest as exc:
        raise exc.with_path(path) from None
    return classify_changes(base, head)


def classify_from_pr(files: Iterable[FileChange]) -> list[DependencyChange]:
    """Concatenate per-file classifications for every manifest a PR touches.

    A missing side (file created or deleted) parses as an empty snapshot.

    Raises:
        MalformedManifest: tagged with the offending path.
    """
    out: list[DependencyChange] = []
    for path, base_text, head_text in files:
        out.extend(classify_file(path, base_text, head_text))
    return out


def count_by_kind(changes: Sequence[DependencyChange]) -> dict[ChangeKind, int]:
    counts = {kind: 0 for kind in ChangeKind}
    for c in changes:
        counts[c.kind] += 1
    return counts
