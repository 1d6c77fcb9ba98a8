"""Benchmark instances: materialize the head state, run tests, score."""

from __future__ import annotations

import enum
import json
import os
import shlex
import shutil
import subprocess
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Iterator, Mapping, Optional, Sequence, Union

from depdec import ecosystems as eco
from depdec.advisories import AdvisoryStore
from depdec.changes import DependencyChange, classify_from_pr
from depdec.errors import ConfigError, MalformedManifest, UnparseableVersion
from depdec.manifests import detect_format, parse_lockfile, parse_manifest
from depdec.patching import apply_patch
from depdec.policy import (
    AvailabilityDefinition,
    AvailabilitySet,
    EvidenceSource,
    ExecutionEvidence,
    PolicyEnvelope,
    Track,
    default_policy,
    policy_from_dict,
)
from depdec.scoring import ScoreReport, score_instance
from depdec.timeutil import parse_utc
from depdec.version_core import Version, parse_version

SKIP_DIRS = frozenset({".git", "node_modules", "vendor", "target", "__pycache__", ".venv", "venv", ".tox"})


class TaskFamily(str, enum.Enum):
    REUSE_AVAILABLE = "ReuseAvailable"
    JUSTIFIED_ADD = "JustifiedAdd"
    AVOID_UNNECESSARY = "AvoidUnnecessary"
    POLICY_SAFE_SELECTION = "PolicySafeSelection"


@dataclass(frozen=True)
class TaskInstance:
    id: str
    family: TaskFamily
    snapshot_dir: Path
    reference_date: datetime
    availability_definition: AvailabilityDefinition = AvailabilityDefinition.IN_MANIFEST
    policy: Optional[PolicyEnvelope] = None
    required_capabilities: tuple[frozenset[str], ...] = ()
    justified_names: frozenset[str] = frozenset()
    test_command: Optional[tuple[str, ...]] = None
    test_timeout: Optional[float] = None
    evidence_path: Optional[Path] = None
    candidates_path: Optional[Path] = None
    vendored_path: Optional[Path] = None

    def __post_init__(self) -> None:
        if not self.snapshot_dir.is_dir():
            raise ConfigError(f"{self.id}: snapshot_dir {self.snapshot_dir} is not a directory")
        if self.availability_definition is AvailabilityDefinition.IN_TREE and self.vendored_path is None:
            raise ConfigError(f"{self.id}: InTree availability needs a vendored_path listing")


def _enum(kind, value, field_name: str):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"{field_name}: unknown value {value!r}") from None


def _opt_path(base: Path, value: Any, field_name: str) -> Optional[Path]:
    if value is None:
        return None
    if not isinstance(value, str):
        raise ConfigError(f"{field_name} must be a path string")
    return (base / value).resolve()


def instance_from_dict(data: Mapping[str, Any], base_dir: Union[str, Path] = ".") -> TaskInstance:
    """Build a ``TaskInstance``; relative paths resolve against ``base_dir``.

    Capability metadata may sit at top level or under ``capability_metadata``.
    """
    if not isinstance(data, Mapping):
        raise ConfigError("instance config must be a JSON object")
    base = Path(base_dir)
    for required in ("id", "family", "snapshot_dir", "reference_date"):
        if not isinstance(data.get(required), str):
            raise ConfigError(f"missing or non-string field {required!r}")
    try:
        ref = parse_utc(data["reference_date"])
    except ValueError as exc:
        raise ConfigError(f"reference_date: {exc}") from None

    meta = data.get("capability_metadata") or data
    caps = meta.get("required_capabilities") or []
    if not isinstance(caps, list) or not all(
        isinstance(c, list) and all(isinstance(n, str) for n in c) for c in caps
    ):
        raise ConfigError("required_capabilities must be an array of arrays of package names")
    justified = meta.get("justified_names") or []
    if not isinstance(justified, list) or not all(isinstance(n, str) for n in justified):
        raise ConfigError("justified_names must be an array of strings")

    cmd = data.get("test_command")
    if isinstance(cmd, str):
        cmd = tuple(shlex.split(cmd))
    elif isinstance(cmd, list) and all(isinstance(x, str) for x in cmd):
        cmd = tuple(cmd)
    elif cmd is not None:
        raise ConfigError("test_command must be a string or an array of strings")
    timeout = data.get("test_timeout")
    if timeout is not None and (isinstance(timeout, bool) or not isinstance(timeout, (int, float))):
        raise ConfigError("test_timeout must be a number of seconds")

    policy = data.get("policy")
    return TaskInstance(
        id=data["id"],
        family=_enum(TaskFamily, data["family"], "family"),
        snapshot_dir=(base / data["snapshot_dir"]).resolve(),
        reference_date=ref,
        availability_definition=_enum(
            AvailabilityDefinition, data.get("availability_definition", "InManifest"), "availability_definition"
        ),
        policy=None if policy is None else policy_from_dict(policy),
        required_capabilities=tuple(frozenset(n.lower() for n in c) for c in caps),
        justified_names=frozenset(n.lower() for n in justified),
        test_command=cmd or None,
        test_timeout=timeout,
        evidence_path=_opt_path(base, data.get("evidence_path"), "evidence_path"),
        candidates_path=_opt_path(base, data.get("candidates_path"), "candidates_path"),
        vendored_path=_opt_path(base, data.get("vendored_path"), "vendored_path"),
    )


def load_instance(path: Union[str, Path]) -> TaskInstance:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8-sig"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read instance config {path}: {exc}") from None
    return instance_from_dict(data, path.parent)


# ---------------------------------------------------------------------------
# repository state helpers
# ---------------------------------------------------------------------------


def walk_files(root: Path) -> Iterator[str]:
    """Relative POSIX paths of regular files, skipping dependency/VCS dirs."""
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d not in SKIP_DIRS)
        rel_dir = Path(dirpath).relative_to(root)
        for name in sorted(filenames):
            yield (rel_dir / name).as_posix()


def _read(root: Path, rel: str) -> Optional[str]:
    path = root / rel
    if not path.is_file():
        return None
    return path.read_bytes().decode("utf-8", "replace")


def manifest_pairs(base: Path, head: Path) -> list[tuple[str, Optional[str], Optional[str]]]:
    """(path, base_text, head_text) for each manifest present on either side."""
    paths = {p for root in (base, head) for p in walk_files(root) if detect_format(p) is not None}
    out = []
    for rel in sorted(paths):
        if detect_format(rel).is_lockfile:
            continue
        before, after = _read(base, rel), _read(head, rel)
        if before != after:
            out.append((rel, before, after))
    return out


def _vendored_members(path: Path) -> set[tuple[str, str, Optional[Version]]]:
    """Listing entries are names, or objects with name/ecosystem/version."""
    try:
        data = json.loads(path.read_text(encoding="utf-8-sig"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read vendored listing {path}: {exc}") from None
    if not isinstance(data, list):
        raise ConfigError("vendored listing must be a JSON array")
    members = set()
    for item in data:
        if isinstance(item, str):
            members.add(("", item.lower(), None))
        elif isinstance(item, Mapping) and isinstance(item.get("name"), str):
            ecosystem = item.get("ecosystem") or ""
            version = None
            if ecosystem and item.get("version"):
                try:
                    ecosystem = eco.canonical_ecosystem(ecosystem)
                    version = parse_version(ecosystem, item["version"])
                except (ValueError, UnparseableVersion):
                    version = None
            name = eco.normalize_name(ecosystem, item["name"]) if ecosystem in eco.ECOSYSTEMS else item["name"].lower()
            members.add((ecosystem, name, version))
        else:
            raise ConfigError(f"bad vendored listing entry {item!r}")
    return members


def build_availability(instance: TaskInstance, root: Optional[Path] = None) -> AvailabilitySet:
    """Packages already present in the base state under the instance's definition.

    InLockfile includes both lockfile entries and direct manifest declarations.
    """
    root = root or instance.snapshot_dir
    definition = instance.availability_definition
    if definition is AvailabilityDefinition.IN_TREE:
        return AvailabilitySet(definition, frozenset(_vendored_members(instance.vendored_path)))
    members: set[tuple[str, str, Optional[Version]]] = set()
    for rel in walk_files(root):
        fmt = detect_format(rel)
        if fmt is None:
            continue
        text = _read(root, rel)
        if fmt.is_lockfile:
            if definition is AvailabilityDefinition.IN_LOCKFILE:
                try:
                    members.update((fmt.ecosystem, n, v) for n, v in parse_lockfile(fmt, text))
                except MalformedManifest as exc:
                    raise exc.with_path(rel) from None
            continue
        try:
            snap = parse_manifest(fmt, text, rel)
        except MalformedManifest as exc:
            raise exc.with_path(rel) from None
        members.update((d.ecosystem, d.name, d.pinned) for d in snap.decls)
    return AvailabilitySet(definition, frozenset(members))


def load_evidence(path: Optional[Path]) -> ExecutionEvidence:
    if path is None:
        return ExecutionEvidence()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8-sig"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read evidence {path}: {exc}") from None
    if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
        raise ConfigError("evidence must be a JSON array of package names")
    return ExecutionEvidence.of(data, EvidenceSource.IMPORT_TRACE)


class CandidateIndex:
    """Release lists keyed by package name; parsed lazily per ecosystem."""

    def __init__(self, releases: Mapping[str, Sequence[str]] = None):
        self._raw = {eco.loose_key(k): list(v) for k, v in (releases or {}).items()}

    @classmethod
    def read(cls, path: Optional[Path]) -> "CandidateIndex":
        if path is None:
            return cls()
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8-sig"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read candidates {path}: {exc}") from None
        if not isinstance(data, Mapping) or not all(
            isinstance(v, list) and all(isinstance(x, str) for x in v) for v in data.values()
        ):
            raise ConfigError("candidates must map package names to arrays of version strings")
        return cls(data)

    def __bool__(self) -> bool:
        return bool(self._raw)

    def __call__(self, ecosystem: str, name: str) -> Optional[list[Version]]:
        raw = self._raw.get(eco.loose_key(name))
        if raw is None:
            return None
        out = []
        for text in raw:
            try:
                out.append(parse_version(ecosystem, text))
            except UnparseableVersion:
                continue
        return out


def run_test_command(command: Sequence[str], cwd: Path, timeout: Optional[float] = None) -> bool:
    """Exit status 0 means pass; a missing binary or timeout is a failure."""
    try:
        proc = subprocess.run(
            list(command),
            cwd=cwd,
            stdin=subprocess.DEVNULL,
            env={**os.environ, "PYTHONDONTWRITEBYTECODE": "1"},
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
            timeout=timeout,
        )
    except (OSError, subprocess.TimeoutExpired):
        return False
    return proc.returncode == 0


def effective_policy(instance: TaskInstance, track: Optional[Track] = None) -> PolicyEnvelope:
    """Instance policy, unless absent or the unspecified track is forced."""
    if track is Track.POLICY_UNSPECIFIED or instance.policy is None:
        return default_policy()
    return instance.policy


def run_instance(
    instance: TaskInstance,
    store: AdvisoryStore,
    diff_text: Optional[Union[str, bytes]] = None,
    head_dir: Optional[Union[str, Path]] = None,
    track: Optional[Track] = None,
    evidence_path: Optional[Path] = None,
) -> ScoreReport:
    """Materialize the head state, classify, test and score one instance.

    Exactly one of ``diff_text`` and ``head_dir`` must be given.

    Raises:
        PatchRejected, PathEscape: the diff does not apply.
        MalformedManifest: a manifest in either state cannot be parsed.
    """
    if (diff_text is None) == (head_dir is None):
        raise ValueError("supply exactly one of diff_text or head_dir")
    scratch = None
    if diff_text is not None:
        result = apply_patch(instance.snapshot_dir, diff_text)
        head = result.head_dir
        scratch = head.parent
    else:
        head = Path(head_dir)
        if not head.is_dir():
            raise ConfigError(f"head directory {head} does not exist")
    try:
        changes: list[DependencyChange] = classify_from_pr(manifest_pairs(instance.snapshot_dir, head))
        functional = None
        if instance.test_command:
            functional = run_test_command(instance.test_command, head, instance.test_timeout)
        return score_instance(
            instance_id=instance.id,
            changes=changes,
            envelope=effective_policy(instance, track),
            availability=build_availability(instance),
            evidence=load_evidence(evidence_path or instance.evidence_path),
            required_capabilities=instance.required_capabilities,
            justified_names=instance.justified_names,
            functional_pass=functional,
            store=store,
            ref_date=instance.reference_date,
            candidates=CandidateIndex.read(instance.candidates_path) or None,
            require_capability=instance.family is TaskFamily.JUSTIFIED_ADD,
        )
    finally:
        if scratch is not None:
            shutil.rmtree(scratch, ignore_errors=True)
