"""Dependency-decision analysis: manifest diffing, PR-time advisory labeling,
policy checks, and benchmark scoring for code patches."""

from depdec.errors import (
    ConfigError,
    DepDecError,
    EcosystemMismatch,
    FormatMismatch,
    MalformedManifest,
    PatchRejected,
    PathEscape,
    SchemaViolation,
    UnparseableVersion,
)
from depdec.version_core import (
    Ordering,
    RemediationBucket,
    Version,
    VersionRange,
    compare,
    parse_version,
    range_contains,
    remediation_bucket,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DepDecError",
    "EcosystemMismatch",
    "FormatMismatch",
    "MalformedManifest",
    "Ordering",
    "PatchRejected",
    "PathEscape",
    "RemediationBucket",
    "SchemaViolation",
    "UnparseableVersion",
    "Version",
    "VersionRange",
    "compare",
    "parse_version",
    "range_contains",
    "remediation_bucket",
]
