"""Replay PR records through classification and PR-time labeling."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Mapping, Optional, Sequence, Union

from depdec.advisories import AdvisoryStore
from depdec.changes import DependencyChange, classify_file
from depdec.errors import FormatMismatch, MalformedManifest
from depdec.scoring import AuthorKind, ChangeSecurityLabel, CorpusAggregate, aggregate, label_change
from depdec.timeutil import parse_utc
from depdec.version_core import Version

CandidateSource = Callable[[str, str], Optional[Sequence[Version]]]


@dataclass(frozen=True)
class FileEdit:
    path: str
    base_text: Optional[str]
    head_text: Optional[str]

    def __post_init__(self) -> None:
        if self.base_text is None and self.head_text is None:
            raise ValueError(f"{self.path}: a file edit needs a base or a head side")


@dataclass(frozen=True)
class PrRecord:
    pr_id: str
    repo: str
    author_kind: AuthorKind
    created_at: datetime
    files: tuple[FileEdit, ...] = ()


class RecordError(ValueError):
    """A corpus line that cannot be turned into a ``PrRecord``."""


def record_from_dict(data: Mapping[str, Any], base_dir: Union[str, Path] = ".") -> PrRecord:
    """Decode one corpus line. ``base_file``/``head_file`` resolve against ``base_dir``."""
    if not isinstance(data, Mapping):
        raise RecordError("record must be a JSON object")
    try:
        author = AuthorKind.parse(data["author_kind"])
        created = parse_utc(data["created_at"])
    except KeyError as exc:
        raise RecordError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise RecordError(str(exc)) from None
    files = []
    for i, f in enumerate(data.get("files") or []):
        if not isinstance(f, Mapping) or not isinstance(f.get("path"), str):
            raise RecordError(f"files[{i}] needs a string path")
        sides = []
        for side in ("base", "head"):
            text = f.get(f"{side}_text")
            ref = f.get(f"{side}_file")
            if text is None and ref is not None:
                try:
                    text = (Path(base_dir) / ref).read_text(encoding="utf-8")
                except OSError as exc:
                    raise RecordError(f"files[{i}].{side}_file: {exc}") from None
            if text is not None and not isinstance(text, str):
                raise RecordError(f"files[{i}].{side}_text must be a string")
            sides.append(text)
        try:
            files.append(FileEdit(f["path"], *sides))
        except ValueError as exc:
            raise RecordError(str(exc)) from None
    return PrRecord(
        pr_id=str(data.get("pr_id", "")),
        repo=str(data.get("repo", "")),
        author_kind=author,
        created_at=created,
        files=tuple(files),
    )


def read_corpus(path: Union[str, Path], diagnostics: Optional["Diagnostics"] = None) -> Iterator[PrRecord]:
    """Stream records from a JSON Lines file, reporting bad lines to ``diagnostics``."""
    path = Path(path)
    with open(path, encoding="utf-8-sig") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                yield record_from_dict(json.loads(line), path.parent)
            except (json.JSONDecodeError, RecordError) as exc:
                if diagnostics is not None:
                    diagnostics.note_bad_record(f"line {lineno}: {exc}")


@dataclass
class Diagnostics:
    records: int = 0
    bad_records: int = 0
    skipped_files: int = 0
    unaudited_changes: int = 0
    messages: list[str] = field(default_factory=list)

    def note_bad_record(self, message: str) -> None:
        self.bad_records += 1
        self.messages.append(message)

    def note_skipped(self, pr_id: str, path: str, reason: str) -> None:
        self.skipped_files += 1
        where = "" if reason.startswith(path) else f"{path}: "
        self.messages.append(f"{pr_id}: {where}{reason}")

    def merge(self, other: "Diagnostics") -> "Diagnostics":
        return Diagnostics(
            self.records + other.records,
            self.bad_records + other.bad_records,
            self.skipped_files + other.skipped_files,
            self.unaudited_changes + other.unaudited_changes,
            self.messages + other.messages,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "records": self.records,
            "bad_records": self.bad_records,
            "skipped_files": self.skipped_files,
            "unaudited_changes": self.unaudited_changes,
            "messages": list(self.messages),
        }


ProcessedRecord = tuple[AuthorKind, list[DependencyChange], list[ChangeSecurityLabel]]


def process_record(
    rec: PrRecord,
    store: AdvisoryStore,
    candidates: Optional[CandidateSource] = None,
    diagnostics: Optional[Diagnostics] = None,
) -> ProcessedRecord:
    """Classify and label one PR using its creation time as the reference date.

    Files that fail to parse are skipped and noted in ``diagnostics``.
    """
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    diagnostics.records += 1
    changes: list[DependencyChange] = []
    for f in rec.files:
        try:
            changes.extend(classify_file(f.path, f.base_text, f.head_text))
        except (MalformedManifest, FormatMismatch) as exc:
            diagnostics.note_skipped(rec.pr_id, f.path, str(exc))
    labels = []
    for change in changes:
        cands = candidates(change.ecosystem, change.name) if candidates else None
        label = label_change(change, store, rec.created_at, cands)
        if label.unaudited:
            diagnostics.unaudited_changes += 1
        labels.append(label)
    return rec.author_kind, changes, labels


@dataclass
class CorpusResult:
    aggregates: dict[AuthorKind, CorpusAggregate]
    diagnostics: Diagnostics


def run_corpus(
    records: Iterable[PrRecord],
    store: AdvisoryStore,
    candidates: Optional[CandidateSource] = None,
    diagnostics: Optional[Diagnostics] = None,
) -> CorpusResult:
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    processed = (process_record(rec, store, candidates, diagnostics) for rec in records)
    return CorpusResult(aggregate(processed), diagnostics)
