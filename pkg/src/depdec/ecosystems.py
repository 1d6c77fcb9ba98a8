"""Ecosystem identifiers and package-name normalization."""

from __future__ import annotations

import re

NPM = "npm"
PYPI = "pypi"
MAVEN = "maven"
CARGO = "cargo"
GO = "go"
RUBYGEMS = "rubygems"
PACKAGIST = "packagist"

ECOSYSTEMS = (NPM, PYPI, MAVEN, CARGO, GO, RUBYGEMS, PACKAGIST)

_ALIASES = {
    "npm": NPM,
    "pypi": PYPI,
    "python": PYPI,
    "pip": PYPI,
    "maven": MAVEN,
    "cargo": CARGO,
    "crates.io": CARGO,
    "rust": CARGO,
    "go": GO,
    "golang": GO,
    "rubygems": RUBYGEMS,
    "gem": RUBYGEMS,
    "packagist": PACKAGIST,
    "composer": PACKAGIST,
}

_PEP503_RUN = re.compile(r"[-_.]+")
_LOOSE_RUN = re.compile(r"[-_.]+")


def canonical_ecosystem(name: str) -> str:
    """Map a user or feed spelling (``"PyPI"``, ``"crates.io"``) to an ecosystem id."""
    try:
        return _ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown ecosystem: {name!r}") from None


def normalize_name(ecosystem: str, name: str) -> str:
    """Registry-equivalent spelling of a package name.

    Every ecosystem lowercases. PyPI additionally folds runs of ``-_.`` to a
    single hyphen (PEP 503) and Cargo treats ``_`` and ``-`` as the same.
    """
    name = name.strip().lower()
    if ecosystem == PYPI:
        return _PEP503_RUN.sub("-", name)
    if ecosystem == CARGO:
        return name.replace("_", "-")
    return name


def loose_key(name: str) -> str:
    """Ecosystem-agnostic matching key for names whose ecosystem is unknown.

    Used where package names arrive without an ecosystem tag, such as
    execution-evidence traces and capability metadata.
    """
    return _LOOSE_RUN.sub("-", name.strip().lower())
