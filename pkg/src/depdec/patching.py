"""Strict unified-diff application onto a copy of a snapshot directory."""

from __future__ import annotations

import os
import re
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import Optional, Union

from depdec.errors import PatchRejected, PathEscape

_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")
DEV_NULL = "/dev/null"


@dataclass
class Hunk:
    old_start: int
    old_count: int
    new_start: int
    new_count: int
    old_lines: list[bytes] = field(default_factory=list)
    new_lines: list[bytes] = field(default_factory=list)


@dataclass
class FilePatch:
    old_path: Optional[str]
    new_path: Optional[str]
    hunks: list[Hunk] = field(default_factory=list)

    @property
    def path(self) -> str:
        return self.new_path or self.old_path


@dataclass(frozen=True)
class PatchResult:
    applied_files: tuple[str, ...]
    rejected_hunks: int
    head_dir: Path


def _header_path(line: bytes) -> str:
    raw = line[4:].decode("utf-8", "surrogateescape").rstrip("\r")
    # drop a trailing tab-separated timestamp
    raw = raw.split("\t", 1)[0].rstrip()
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        raw = raw[1:-1].encode("latin-1", "backslashreplace").decode("unicode_escape")
    return raw


def _strip_prefixes(old: str, new: str, git: bool) -> tuple[Optional[str], Optional[str]]:
    """Remove ``a/`` / ``b/`` prefixes when the diff evidently uses them."""
    old_p = None if old == DEV_NULL else old
    new_p = None if new == DEV_NULL else new
    prefixed = git or (
        (old_p is None or old_p.startswith("a/")) and (new_p is None or new_p.startswith("b/"))
    )
    if prefixed:
        if old_p is not None and old_p.startswith("a/"):
            old_p = old_p[2:]
        if new_p is not None and new_p.startswith("b/"):
            new_p = new_p[2:]
    return old_p, new_p


def parse_unified_diff(text: Union[str, bytes]) -> list[FilePatch]:
    """Parse unified diff text into per-file hunks.

    Lines are split on ``\\n`` only, so carriage returns inside the diff are
    preserved as file content.

    Raises:
        PatchRejected: a hunk is truncated or contains an unknown line marker.
    """
    data = text.encode("utf-8", "surrogateescape") if isinstance(text, str) else text
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    patches: list[FilePatch] = []
    git = False
    pending: Optional[FilePatch] = None  # git header with no ---/+++ yet
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith(b"diff --git "):
            if pending is not None:
                patches.append(pending)
            pending = _git_header(line)
            git = True
            i += 1
            continue
        if pending is not None and line.startswith(b"new file mode"):
            pending.old_path = None
        elif pending is not None and line.startswith(b"deleted file mode"):
            pending.new_path = None
        if line.startswith(b"Binary files ") or line.startswith(b"GIT binary patch"):
            raise PatchRejected("<binary>", 0, "binary patches are not supported")
        if not (line.startswith(b"--- ") and i + 1 < len(lines) and lines[i + 1].startswith(b"+++ ")):
            i += 1
            continue
        old_path, new_path = _strip_prefixes(_header_path(line), _header_path(lines[i + 1]), git)
        fp = FilePatch(old_path, new_path)
        i += 2
        while i < len(lines):
            m = _HUNK_RE.match(lines[i].decode("ascii", "replace"))
            if not m:
                break
            i = _read_hunk(lines, i + 1, m, fp)
        patches.append(fp)
        git = False
        pending = None
    if pending is not None:
        patches.append(pending)
    return [p for p in patches if p.hunks or p.old_path is None or p.new_path is None]


def _git_header(line: bytes) -> FilePatch:
    """Paths from ``diff --git a/X b/Y``; used only when no hunks follow."""
    rest = line[len(b"diff --git "):].decode("utf-8", "surrogateescape")
    half = len(rest) // 2
    if rest.startswith("a/") and rest[half:].startswith(" b/") and rest[2:half] == rest[half + 3:]:
        path = rest[2:half]
        return FilePatch(path, path)
    return FilePatch(None, None)


def _read_hunk(lines: list[bytes], i: int, m: re.Match, fp: FilePatch) -> int:
    hunk = Hunk(
        old_start=int(m.group(1)),
        old_count=int(m.group(2)) if m.group(2) is not None else 1,
        new_start=int(m.group(3)),
        new_count=int(m.group(4)) if m.group(4) is not None else 1,
    )
    number = len(fp.hunks) + 1
    old_left, new_left = hunk.old_count, hunk.new_count
    last_kind = None
    while old_left > 0 or new_left > 0 or (i < len(lines) and lines[i].startswith(b"\\")):
        if i >= len(lines):
            raise PatchRejected(fp.path, number, "hunk is truncated")
        line = lines[i]
        i += 1
        marker, body = line[:1], line[1:] + b"\n"
        if line == b"":
            marker = b" "
        if marker == b"\\":
            # "\ No newline at end of file" applies to the previous line
            if last_kind is None:
                raise PatchRejected(fp.path, number, "misplaced no-newline marker")
            if last_kind in (" ", "-"):
                hunk.old_lines[-1] = hunk.old_lines[-1][:-1]
            if last_kind in (" ", "+"):
                hunk.new_lines[-1] = hunk.new_lines[-1][:-1]
            last_kind = None
            continue
        if marker == b" ":
            if old_left <= 0 or new_left <= 0:
                raise PatchRejected(fp.path, number, "hunk has more lines than its header declares")
            hunk.old_lines.append(body)
            hunk.new_lines.append(body)
            old_left -= 1
            new_left -= 1
        elif marker == b"-":
            if old_left <= 0:
                raise PatchRejected(fp.path, number, "hunk has more removed lines than its header declares")
            hunk.old_lines.append(body)
            old_left -= 1
        elif marker == b"+":
            if new_left <= 0:
                raise PatchRejected(fp.path, number, "hunk has more added lines than its header declares")
            hunk.new_lines.append(body)
            new_left -= 1
        else:
            raise PatchRejected(fp.path, number, f"unexpected line {line[:40]!r}")
        last_kind = marker.decode()
    fp.hunks.append(hunk)
    return i


# ---------------------------------------------------------------------------
# application
# ---------------------------------------------------------------------------


def _safe_target(root: Path, rel: str) -> Path:
    pure = PurePosixPath(rel)
    if pure.is_absolute() or ".." in pure.parts or not pure.parts:
        raise PathEscape(rel)
    target = (root / pure).resolve()
    if not target.is_relative_to(root.resolve()):
        raise PathEscape(rel)
    return target


def _apply_hunks(path: str, original: Optional[bytes], hunks: list[Hunk]) -> bytes:
    src: list[bytes] = []
    if original:
        src = [ln + b"\n" for ln in original.split(b"\n")]
        src[-1] = src[-1][:-1]
        if src[-1] == b"":
            src.pop()
    out: list[bytes] = []
    pos = 0
    for number, hunk in enumerate(hunks, 1):
        start = hunk.old_start - 1 if hunk.old_count else hunk.old_start
        if start < pos:
            raise PatchRejected(path, number, "hunk overlaps a previous hunk")
        end = start + len(hunk.old_lines)
        if end > len(src) or src[start:end] != hunk.old_lines:
            raise PatchRejected(path, number, f"context does not match at line {hunk.old_start}")
        out.extend(src[pos:start])
        out.extend(hunk.new_lines)
        pos = end
    out.extend(src[pos:])
    return b"".join(out)


def plan_patch(snapshot_dir: Union[str, Path], diff_text: Union[str, bytes]) -> dict[str, Optional[bytes]]:
    """Compute the post-patch content of every touched file without writing.

    Returns a mapping of relative path to new bytes, ``None`` for deletions.
    """
    root = Path(snapshot_dir)
    state: dict[str, Optional[bytes]] = {}
    for fp in parse_unified_diff(diff_text):
        if fp.path is None:
            continue
        if fp.old_path is not None:
            src_target = _safe_target(root, fp.old_path)
        if fp.new_path is not None:
            _safe_target(root, fp.new_path)
        if fp.old_path is None:
            exists = state[fp.new_path] is not None if fp.new_path in state else _safe_target(root, fp.new_path).exists()
            if exists:
                raise PatchRejected(fp.new_path, 1, "file to create already exists")
            original = None
        elif fp.old_path in state:
            original = state[fp.old_path]
            if original is None:
                raise PatchRejected(fp.old_path, 1, "file was already deleted")
        else:
            if not src_target.is_file():
                raise PatchRejected(fp.old_path, 1, "file does not exist")
            original = src_target.read_bytes()
        result = _apply_hunks(fp.path, original, fp.hunks)
        if fp.new_path is None:
            if result:
                raise PatchRejected(fp.old_path, len(fp.hunks), "deletion leaves content behind")
            state[fp.old_path] = None
        else:
            if fp.old_path is not None and fp.old_path != fp.new_path:
                state[fp.old_path] = None
            state[fp.new_path] = result
    return state


def apply_patch(
    snapshot_dir: Union[str, Path],
    diff_text: Union[str, bytes],
    head_dir: Optional[Union[str, Path]] = None,
) -> PatchResult:
    """Apply a unified diff to a copy of ``snapshot_dir``.

    Every hunk must match its context exactly at the stated line; nothing is
    written until the whole diff has been validated, and ``snapshot_dir`` is
    never modified. ``head_dir`` must not exist yet; by default a fresh
    temporary directory is used.

    Raises:
        PatchRejected: with the file path and 1-based hunk index.
        PathEscape: a diff path points outside the snapshot.
    """
    root = Path(snapshot_dir)
    state = plan_patch(root, diff_text)
    if head_dir is None:
        head = Path(tempfile.mkdtemp(prefix="depdec-head-")) / "head"
    else:
        head = Path(head_dir)
    shutil.copytree(root, head, symlinks=True)
    for rel, content in state.items():
        target = head / rel
        if content is None:
            if target.exists() or target.is_symlink():
                target.unlink()
            continue
        target.parent.mkdir(parents=True, exist_ok=True)
        if target.is_symlink():
            target.unlink()
        target.write_bytes(content)
        src = root / rel
        if src.is_file() and not src.is_symlink():
            os.chmod(target, src.stat().st_mode & 0o777)
    return PatchResult(tuple(sorted(state)), 0, head)
