"""Exception types shared across the package."""

from __future__ import annotations


class DepDecError(Exception):
    """Base class for all package errors."""


class UnparseableVersion(DepDecError, ValueError):
    def __init__(self, text: str, ecosystem: str | None = None):
        self.text = text
        self.ecosystem = ecosystem
        where = f" ({ecosystem})" if ecosystem else ""
        super().__init__(f"unparseable version{where}: {text!r}")


class EcosystemMismatch(DepDecError, ValueError):
    def __init__(self, left: str, right: str):
        self.left = left
        self.right = right
        super().__init__(f"cannot compare {left} version with {right} version")


class MalformedManifest(DepDecError, ValueError):
    """Manifest or lockfile text could not be read structurally."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        self.reason = message
        super().__init__(self._render())

    def _render(self) -> str:
        loc = self.path or "<text>"
        if self.line is not None:
            loc = f"{loc}:{self.line}"
        return f"{loc}: {self.reason}"

    def with_path(self, path: str) -> "MalformedManifest":
        return MalformedManifest(self.reason, path=path, line=self.line)


class FormatMismatch(DepDecError, ValueError):
    def __init__(self, base_format: str, head_format: str):
        self.base_format = base_format
        self.head_format = head_format
        super().__init__(f"base format {base_format} differs from head format {head_format}")


class SchemaViolation(DepDecError, ValueError):
    """An input record does not match its file schema."""

    def __init__(self, ordinal: int, field: str, message: str):
        self.ordinal = ordinal
        self.field = field
        super().__init__(f"record {ordinal}: field {field!r}: {message}")


class PatchRejected(DepDecError):
    def __init__(self, path: str, hunk: int, message: str):
        self.path = path
        self.hunk = hunk
        super().__init__(f"{path}: hunk #{hunk} rejected: {message}")


class PathEscape(DepDecError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"patch path escapes the snapshot root: {path!r}")


class ConfigError(DepDecError, ValueError):
    """Invalid instance configuration or policy file."""
