"""Manifest and lockfile detection and parsing for seven ecosystems.

Structured formats (JSON, TOML, XML) are parsed structurally. Only the
line-oriented formats (pip requirements, Gemfile, go.mod) use pattern
extraction. Entries with no registry version to audit (VCS, path, editable,
workspace or platform requirements) are skipped and tallied in
``ManifestSnapshot.diagnostics``.
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
import xml.parsers.expat
from collections import Counter
from dataclasses import dataclass, field
from pathlib import PurePosixPath
from typing import Optional

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from depdec import ecosystems as eco
from depdec.errors import MalformedManifest, UnparseableVersion
from depdec.version_core import Version, parse_version


class ManifestFormat(str, enum.Enum):
    NPM_MANIFEST = "npm-manifest"
    NPM_LOCKFILE = "npm-lockfile"
    PY_REQUIREMENTS = "python-requirements"
    PY_LOCKFILE = "python-lockfile"
    MAVEN_POM = "maven-pom"
    CARGO_MANIFEST = "cargo-manifest"
    GO_MOD = "go-mod"
    GEMFILE = "gemfile"
    COMPOSER_MANIFEST = "composer-manifest"

    @property
    def ecosystem(self) -> str:
        return _FORMAT_ECOSYSTEM[self]

    @property
    def is_lockfile(self) -> bool:
        return self in (ManifestFormat.NPM_LOCKFILE, ManifestFormat.PY_LOCKFILE)


_FORMAT_ECOSYSTEM = {
    ManifestFormat.NPM_MANIFEST: eco.NPM,
    ManifestFormat.NPM_LOCKFILE: eco.NPM,
    ManifestFormat.PY_REQUIREMENTS: eco.PYPI,
    ManifestFormat.PY_LOCKFILE: eco.PYPI,
    ManifestFormat.MAVEN_POM: eco.MAVEN,
    ManifestFormat.CARGO_MANIFEST: eco.CARGO,
    ManifestFormat.GO_MOD: eco.GO,
    ManifestFormat.GEMFILE: eco.RUBYGEMS,
    ManifestFormat.COMPOSER_MANIFEST: eco.PACKAGIST,
}


class Scope(str, enum.Enum):
    RUNTIME = "Runtime"
    DEV = "Dev"
    OPTIONAL = "Optional"

    @property
    def rank(self) -> int:
        return _SCOPE_RANK[self]


_SCOPE_RANK = {Scope.RUNTIME: 0, Scope.DEV: 1, Scope.OPTIONAL: 2}


@dataclass(frozen=True)
class DependencyDecl:
    ecosystem: str
    name: str
    spec: str
    pinned: Optional[Version]
    scope: Scope
    source_path: str
    source_line: int

    @property
    def key(self) -> tuple[str, str, Scope]:
        return (self.ecosystem, self.name, self.scope)


@dataclass(frozen=True)
class ManifestSnapshot:
    decls: tuple[DependencyDecl, ...]
    format: ManifestFormat
    digest: str
    path: str = ""
    diagnostics: dict[str, int] = field(default_factory=dict, compare=False, hash=False)

    @classmethod
    def empty(cls, fmt: ManifestFormat, path: str = "") -> "ManifestSnapshot":
        return cls((), fmt, hashlib.sha256(b"").hexdigest(), path)


# ---------------------------------------------------------------------------
# format detection
# ---------------------------------------------------------------------------

_EXACT_BASENAMES = {
    "package.json": ManifestFormat.NPM_MANIFEST,
    "package-lock.json": ManifestFormat.NPM_LOCKFILE,
    "npm-shrinkwrap.json": ManifestFormat.NPM_LOCKFILE,
    "poetry.lock": ManifestFormat.PY_LOCKFILE,
    "pipfile.lock": ManifestFormat.PY_LOCKFILE,
    "uv.lock": ManifestFormat.PY_LOCKFILE,
    "pom.xml": ManifestFormat.MAVEN_POM,
    "cargo.toml": ManifestFormat.CARGO_MANIFEST,
    "go.mod": ManifestFormat.GO_MOD,
    "gemfile": ManifestFormat.GEMFILE,
    "composer.json": ManifestFormat.COMPOSER_MANIFEST,
}
_REQUIREMENTS_NAME = re.compile(r"^(?:[\w.-]*[-_.])?requirements(?:[-_.][\w.-]*)?\.(?:txt|in)$", re.I)


def detect_format(path: str) -> Optional[ManifestFormat]:
    """Map a repository path to its manifest format, or ``None``."""
    p = PurePosixPath(str(path).replace("\\", "/"))
    base = p.name.lower()
    if base in _EXACT_BASENAMES:
        return _EXACT_BASENAMES[base]
    if _REQUIREMENTS_NAME.match(base):
        return ManifestFormat.PY_REQUIREMENTS
    if p.suffix.lower() == ".txt" and p.parent.name.lower() == "requirements":
        return ManifestFormat.PY_REQUIREMENTS
    return None


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _strip_bom(text: str) -> str:
    return text[1:] if text.startswith("\ufeff") else text


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8", "surrogatepass")).hexdigest()


def _safe_version(ecosystem: str, text: str) -> Optional[Version]:
    try:
        return parse_version(ecosystem, text)
    except UnparseableVersion:
        return None


class _Collector:
    """Accumulates decls for one file, keeping the last entry per key."""

    def __init__(self, ecosystem: str, path: str):
        self.ecosystem = ecosystem
        self.path = path
        self.decls: dict[tuple, DependencyDecl] = {}
        self.diagnostics: Counter[str] = Counter()

    def add(self, name: str, spec: str, pinned: Optional[Version], scope: Scope, line: int) -> None:
        name = eco.normalize_name(self.ecosystem, name)
        decl = DependencyDecl(self.ecosystem, name, spec.strip(), pinned, scope, self.path, line)
        if decl.key in self.decls:
            self.diagnostics["duplicate"] += 1
            del self.decls[decl.key]
        self.decls[decl.key] = decl

    def skip(self, reason: str) -> None:
        self.diagnostics[reason] += 1

    def snapshot(self, fmt: ManifestFormat, text: str) -> ManifestSnapshot:
        return ManifestSnapshot(
            tuple(self.decls.values()), fmt, _digest(text), self.path, dict(sorted(self.diagnostics.items()))
        )


def _json_key_lines(text: str, keys: list[str], start: int = 0) -> dict[str, int]:
    """Best-effort 1-based line of each ``"key":`` occurrence at or after ``start``."""
    found = {}
    for key in keys:
        m = re.compile(re.escape(json.dumps(key)) + r"\s*:").search(text, start)
        found[key] = text.count("\n", 0, m.start()) + 1 if m else 0
    return found


def _section_offset(text: str, section: str) -> int:
    m = re.search(re.escape(json.dumps(section)) + r"\s*:", text)
    return m.start() if m else 0


def _load_json(text: str, path: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedManifest(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    if not isinstance(data, dict):
        raise MalformedManifest("top-level JSON value must be an object", path)
    return data


def _load_toml(text: str, path: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise MalformedManifest(f"invalid TOML: {exc}", path) from None


def _string_map(data: dict, section: str, path: str) -> dict[str, str]:
    value = data.get(section)
    if value is None:
        return {}
    if not isinstance(value, dict) or not all(isinstance(v, str) for v in value.values()):
        raise MalformedManifest(f"{section!r} must map names to version strings", path)
    return value


# ---------------------------------------------------------------------------
# npm
# ---------------------------------------------------------------------------

_NPM_EXACT = re.compile(r"^(?:=|v)?\s*(\d+\.\d+\.\d+(?:-[0-9A-Za-z.-]+)?(?:\+[0-9A-Za-z.-]+)?)$")
_NPM_NON_REGISTRY = re.compile(r"^(?:file:|link:|git\+|git:|github:|gitlab:|bitbucket:|https?:|workspace:|npm:)|^[\w.-]+/[\w.-]+(?:#.*)?$")
_NPM_SECTIONS = (
    ("dependencies", Scope.RUNTIME),
    ("devDependencies", Scope.DEV),
    ("optionalDependencies", Scope.OPTIONAL),
)


def _npm_pin(spec: str) -> Optional[Version]:
    m = _NPM_EXACT.match(spec.strip())
    return parse_version(eco.NPM, m.group(1)) if m else None


def _parse_npm(text: str, path: str) -> _Collector:
    data = _load_json(text, path)
    out = _Collector(eco.NPM, path)
    for section, scope in _NPM_SECTIONS:
        entries = _string_map(data, section, path)
        lines = _json_key_lines(text, list(entries), _section_offset(text, section))
        for name, spec in entries.items():
            if _NPM_NON_REGISTRY.match(spec.strip()):
                out.skip("non-registry")
                continue
            out.add(name, spec, _npm_pin(spec), scope, lines[name])
    return out


# ---------------------------------------------------------------------------
# composer
# ---------------------------------------------------------------------------

_COMPOSER_EXACT = re.compile(r"^(?:==?\s*)?v?(\d+(?:\.\d+){0,3}(?:-[0-9A-Za-z.]+)?)$")
_COMPOSER_PLATFORM = re.compile(r"^(?:php(?:-64bit|-ipv6|-zts|-debug)?|hhvm|composer(?:-plugin|-runtime)?-api|ext-.+|lib-.+)$", re.I)


def _parse_composer(text: str, path: str) -> _Collector:
    data = _load_json(text, path)
    out = _Collector(eco.PACKAGIST, path)
    for section, scope in (("require", Scope.RUNTIME), ("require-dev", Scope.DEV)):
        entries = _string_map(data, section, path)
        lines = _json_key_lines(text, list(entries), _section_offset(text, section))
        for name, spec in entries.items():
            if _COMPOSER_PLATFORM.match(name):
                out.skip("platform")
                continue
            m = _COMPOSER_EXACT.match(spec.strip())
            pinned = _safe_version(eco.PACKAGIST, m.group(1)) if m else None
            out.add(name, spec, pinned, scope, lines[name])
    return out


# ---------------------------------------------------------------------------
# pip requirements
# ---------------------------------------------------------------------------

_REQ_LINE = re.compile(
    r"^(?P<name>[A-Za-z0-9][A-Za-z0-9._-]*)\s*(?:\[[^\]]*\])?\s*(?P<spec>(?:[<>=!~]=?|===)[^;]*)?\s*(?:;.*)?$"
)
_REQ_PIN = re.compile(r"^===?\s*([0-9][0-9A-Za-z.!+_-]*)$")
_DEV_HINT = re.compile(r"(?:^|[-_./])(dev|develop|test|tests|testing|lint|docs|ci)(?:[-_./]|$)", re.I)


def _requirements_scope(path: str) -> Scope:
    return Scope.DEV if _DEV_HINT.search(PurePosixPath(path).stem) else Scope.RUNTIME


def _logical_lines(text: str):
    """Yield (first physical line number, joined text) honouring ``\\`` continuations."""
    buf, start = [], 0
    for no, raw in enumerate(text.splitlines(), 1):
        if not buf:
            start = no
        if raw.rstrip().endswith("\\"):
            buf.append(raw.rstrip()[:-1])
            continue
        buf.append(raw)
        yield start, " ".join(buf)
        buf = []
    if buf:
        yield start, " ".join(buf)


def _parse_requirements(text: str, path: str) -> _Collector:
    out = _Collector(eco.PYPI, path)
    scope = _requirements_scope(path)
    for no, line in _logical_lines(text):
        line = re.sub(r"(^|\s)#.*$", "", line).strip()
        if not line:
            continue
        if line.startswith(("-e", "--editable")):
            out.skip("editable")
            continue
        if line.startswith("-"):
            out.skip("option")
            continue
        if "://" in line or line.startswith((".", "/")) or " @ " in line or re.match(r"^[\w.-]+\s*@", line):
            out.skip("url-or-path")
            continue
        m = _REQ_LINE.match(line)
        if not m:
            raise MalformedManifest(f"unrecognised requirement {line!r}", path, no)
        spec = re.sub(r"\s+", "", m.group("spec") or "")
        pin = _REQ_PIN.match(spec)
        pinned = None
        if pin and "*" not in pin.group(1):
            pinned = _safe_version(eco.PYPI, pin.group(1))
        out.add(m.group("name"), spec, pinned, scope, no)
    return out


# ---------------------------------------------------------------------------
# Gemfile
# ---------------------------------------------------------------------------

_GEM_LINE = re.compile(r"^\s*gem\s*\(?\s*(['\"])(?P<name>[^'\"]+)\1(?P<rest>.*)$")
_GEM_STRING = re.compile(r"(['\"])([^'\"]*)\1")
_GEM_GROUP_BLOCK = re.compile(r"^\s*group\s+(?P<groups>.+?)\s+do\b")
_GEM_OPTION = re.compile(r"(\w+)\s*:\s*|:(\w+)\s*=>\s*")
_GEM_EXACT = re.compile(r"^(?:=\s*)?(\d+(?:\.[0-9A-Za-z]+)*)$")
_GEM_DEV_GROUPS = {"development", "test"}
_GEM_SOURCE_OPTIONS = {"path", "git", "github", "gitlab", "bitbucket"}
_BLOCK_OPEN = re.compile(r"\bdo\b\s*(\|[^|]*\|)?\s*$")


def _gem_groups(expr: str) -> set[str]:
    return set(re.findall(r":(\w+)", expr)) | {s for _, s in _GEM_STRING.findall(expr)}


def _parse_gemfile(text: str, path: str) -> _Collector:
    out = _Collector(eco.RUBYGEMS, path)
    blocks: list[Optional[set[str]]] = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = re.sub(r"\s#.*$|^#.*$", "", raw).rstrip()
        if not line.strip():
            continue
        g = _GEM_GROUP_BLOCK.match(line)
        if g:
            blocks.append(_gem_groups(g.group("groups")))
            continue
        if re.match(r"^\s*end\b", line):
            if not blocks:
                raise MalformedManifest("unbalanced 'end'", path, no)
            blocks.pop()
            continue
        m = _GEM_LINE.match(line)
        if not m:
            if _BLOCK_OPEN.search(line):
                blocks.append(None)
            continue
        rest = m.group("rest")
        options = {}
        opt_match = _GEM_OPTION.search(rest)
        version_part = rest[: opt_match.start()] if opt_match else rest
        if opt_match:
            for om in re.finditer(r"(\w+)\s*:\s*([^,]+)|:(\w+)\s*=>\s*([^,]+)", rest[opt_match.start():]):
                options[om.group(1) or om.group(3)] = (om.group(2) or om.group(4)).strip()
        if _GEM_SOURCE_OPTIONS & options.keys():
            out.skip("non-registry")
            continue
        specs = [s for _, s in _GEM_STRING.findall(version_part)]
        spec = ", ".join(specs)
        pinned = None
        if len(specs) == 1:
            exact = _GEM_EXACT.match(specs[0].strip())
            if exact:
                pinned = _safe_version(eco.RUBYGEMS, exact.group(1))
        groups: set[str] = set()
        for b in blocks:
            groups |= b or set()
        if "group" in options or "groups" in options:
            groups |= _gem_groups(options.get("group", "") + " " + options.get("groups", ""))
        scope = Scope.DEV if groups and groups <= _GEM_DEV_GROUPS else Scope.RUNTIME
        out.add(m.group("name"), spec, pinned, scope, no)
    if blocks and any(b is not None for b in blocks):
        raise MalformedManifest("unterminated group block", path)
    return out


# ---------------------------------------------------------------------------
# go.mod
# ---------------------------------------------------------------------------

_GO_REQ = re.compile(r"^(?P<module>[^\s]+)\s+(?P<version>v[^\s]+)\s*(?://\s*(?P<comment>.*))?$")


def _parse_gomod(text: str, path: str) -> _Collector:
    out = _Collector(eco.GO, path)
    in_block = False
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("//"):
            continue
        if in_block:
            if line == ")":
                in_block = False
                continue
            body = line
        elif re.match(r"^require\b", line):
            body = line[len("require"):].strip()
            if body == "(":
                in_block = True
                continue
        else:
            continue
        m = _GO_REQ.match(body)
        if not m:
            raise MalformedManifest(f"unrecognised require line {line!r}", path, no)
        if m.group("comment") and "indirect" in m.group("comment"):
            out.skip("indirect")
            continue
        version = m.group("version")
        out.add(m.group("module"), version, _safe_version(eco.GO, version), Scope.RUNTIME, no)
    if in_block:
        raise MalformedManifest("unterminated require block", path)
    return out


def _parse_gomod_blocks(text: str, path: str) -> _Collector:
    # non-require blocks (replace/exclude) are dropped before require parsing
    cleaned, skipping = [], False
    for raw in text.splitlines():
        s = raw.strip()
        if skipping:
            cleaned.append("")
            if s == ")":
                skipping = False
            continue
        if re.match(r"^(replace|exclude|retract|tool|godebug)\s*\($", s):
            skipping = True
            cleaned.append("")
            continue
        cleaned.append(raw)
    if skipping:
        raise MalformedManifest("unterminated directive block", path)
    return _parse_gomod("\n".join(cleaned), path)


# ---------------------------------------------------------------------------
# Cargo.toml
# ---------------------------------------------------------------------------

_CARGO_EXACT = re.compile(r"^=\s*(\d+\.\d+\.\d+(?:-[0-9A-Za-z.-]+)?(?:\+[0-9A-Za-z.-]+)?)$")
_CARGO_SECTIONS = (
    ("dependencies", Scope.RUNTIME),
    ("dev-dependencies", Scope.DEV),
    ("build-dependencies", Scope.DEV),
)


def _toml_line_index(text: str) -> tuple[list[tuple[int, str]], list[str]]:
    """Table headers with their line numbers, plus the raw lines."""
    lines = text.splitlines()
    headers = []
    for no, raw in enumerate(lines, 1):
        m = re.match(r"^\s*\[\s*([^\[\]]+?)\s*\]\s*(?:#.*)?$", raw)
        if m:
            headers.append((no, re.sub(r"\s*\.\s*", ".", m.group(1)).replace('"', "").replace("'", "")))
    return headers, lines


def _cargo_line(index, table: str, key: str) -> int:
    headers, lines = index
    for no, header in headers:
        if header == f"{table}.{key}":
            return no
    key_re = re.compile(r"^\s*[\"']?" + re.escape(key) + r"[\"']?\s*[=.]")
    for i, (no, header) in enumerate(headers):
        if header != table:
            continue
        end = headers[i + 1][0] if i + 1 < len(headers) else len(lines) + 1
        for line_no in range(no + 1, end):
            if key_re.match(lines[line_no - 1]):
                return line_no
    # dotted keys such as ``dependencies.serde = "1"`` under another table
    dotted = re.compile(r"^\s*" + re.escape(table) + r"\." + re.escape(key) + r"\s*=")
    for no, raw in enumerate(lines, 1):
        if dotted.match(raw):
            return no
    return 0


def _cargo_tables(data: dict):
    for section, scope in _CARGO_SECTIONS:
        yield section, section, scope
    for target, body in (data.get("target") or {}).items():
        for section, scope in _CARGO_SECTIONS:
            if isinstance(body, dict) and section in body:
                yield f"target.{target}.{section}", (target, section), scope


def _parse_cargo(text: str, path: str) -> _Collector:
    data = _load_toml(text, path)
    out = _Collector(eco.CARGO, path)
    index = _toml_line_index(text)
    for label, where, scope in _cargo_tables(data):
        table = data.get(where) if isinstance(where, str) else data["target"][where[0]].get(where[1])
        if not table:
            continue
        if not isinstance(table, dict):
            raise MalformedManifest(f"[{label}] must be a table", path)
        for key, value in table.items():
            line = _cargo_line(index, label, key)
            name, entry_scope = key, scope
            if isinstance(value, str):
                spec = value
            elif isinstance(value, dict):
                if value.get("workspace") is True:
                    out.skip("workspace")
                    continue
                if "version" not in value:
                    out.skip("non-registry")
                    continue
                spec = value["version"]
                if not isinstance(spec, str):
                    raise MalformedManifest(f"{key}: version must be a string", path, line or None)
                name = value.get("package", key)
                if value.get("optional") is True:
                    entry_scope = Scope.OPTIONAL
            else:
                raise MalformedManifest(f"{key}: unsupported dependency value", path, line or None)
            m = _CARGO_EXACT.match(spec.strip())
            pinned = parse_version(eco.CARGO, m.group(1)) if m else None
            out.add(name, spec, pinned, entry_scope, line)
    return out


# ---------------------------------------------------------------------------
# Maven POM
# ---------------------------------------------------------------------------


@dataclass
class _XmlNode:
    tag: str
    line: int
    text: str = ""
    children: list["_XmlNode"] = field(default_factory=list)

    def find(self, tag: str) -> Optional["_XmlNode"]:
        return next((c for c in self.children if c.tag == tag), None)

    def findtext(self, tag: str) -> Optional[str]:
        node = self.find(tag)
        return node.text.strip() if node is not None else None


def _parse_xml(text: str, path: str) -> _XmlNode:
    parser = xml.parsers.expat.ParserCreate()
    root = _XmlNode("#document", 0)
    stack = [root]

    def start(name, _attrs):
        node = _XmlNode(name.rsplit(":", 1)[-1], parser.CurrentLineNumber)
        stack[-1].children.append(node)
        stack.append(node)

    def end(_name):
        stack.pop()

    def chars(data):
        stack[-1].text += data

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(text.encode("utf-8"), True)
    except xml.parsers.expat.ExpatError as exc:
        raise MalformedManifest(f"invalid XML: {xml.parsers.expat.errors.messages[exc.code]}", path, exc.lineno) from None
    if not root.children:
        raise MalformedManifest("empty XML document", path)
    return root.children[0]


_MAVEN_PROPERTY = re.compile(r"\$\{([^}]+)\}")
_MAVEN_HARD_PIN = re.compile(r"^\[([^,\[\]()]+)\]$")
_MAVEN_RANGE_CHARS = re.compile(r"[\[\](),]")


def _maven_properties(project: _XmlNode) -> dict[str, str]:
    props = {}
    node = project.find("properties")
    if node is not None:
        props.update({c.tag: c.text.strip() for c in node.children})
    for key in ("version", "groupId", "artifactId"):
        value = project.findtext(key)
        if value is None:
            parent = project.find("parent")
            value = parent.findtext(key) if parent is not None else None
        if value is not None:
            props[f"project.{key}"] = value
            props[f"pom.{key}"] = value
    return props


def _resolve_properties(value: str, props: dict[str, str]) -> str:
    for _ in range(10):
        new = _MAVEN_PROPERTY.sub(lambda m: props.get(m.group(1), m.group(0)), value)
        if new == value:
            break
        value = new
    return value


def _parse_pom(text: str, path: str) -> _Collector:
    project = _parse_xml(text, path)
    if project.tag != "project":
        raise MalformedManifest(f"root element is <{project.tag}>, expected <project>", path)
    out = _Collector(eco.MAVEN, path)
    props = _maven_properties(project)
    deps = project.find("dependencies")
    for dep in deps.children if deps is not None else []:
        if dep.tag != "dependency":
            continue
        group, artifact = dep.findtext("groupId"), dep.findtext("artifactId")
        if not group or not artifact:
            raise MalformedManifest("<dependency> without groupId/artifactId", path, dep.line)
        group = _resolve_properties(group, props)
        spec = _resolve_properties(dep.findtext("version") or "", props)
        scope_text = (dep.findtext("scope") or "compile").lower()
        if scope_text == "import":
            out.skip("bom-import")
            continue
        if scope_text == "test":
            scope = Scope.DEV
        elif (dep.findtext("optional") or "").lower() == "true":
            scope = Scope.OPTIONAL
        else:
            scope = Scope.RUNTIME
        pinned = None
        if spec and not _MAVEN_PROPERTY.search(spec):
            hard = _MAVEN_HARD_PIN.match(spec)
            if hard:
                pinned = _safe_version(eco.MAVEN, hard.group(1))
            elif not _MAVEN_RANGE_CHARS.search(spec):
                pinned = _safe_version(eco.MAVEN, spec)
        out.add(f"{group}:{artifact}", spec, pinned, scope, dep.line)
    return out


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------

_MANIFEST_PARSERS = {
    ManifestFormat.NPM_MANIFEST: _parse_npm,
    ManifestFormat.PY_REQUIREMENTS: _parse_requirements,
    ManifestFormat.MAVEN_POM: _parse_pom,
    ManifestFormat.CARGO_MANIFEST: _parse_cargo,
    ManifestFormat.GO_MOD: _parse_gomod_blocks,
    ManifestFormat.GEMFILE: _parse_gemfile,
    ManifestFormat.COMPOSER_MANIFEST: _parse_composer,
}


def parse_manifest(fmt: ManifestFormat, text: str, path: str = "") -> ManifestSnapshot:
    """Extract direct-dependency declarations from manifest ``text``.

    Raises:
        MalformedManifest: the text cannot be read as ``fmt``.
    """
    fmt = ManifestFormat(fmt)
    if fmt.is_lockfile:
        raise ValueError(f"{fmt.value} is a lockfile format; use parse_lockfile")
    text = _strip_bom(text)
    collector = _MANIFEST_PARSERS[fmt](text, path)
    return collector.snapshot(fmt, text)


def _npm_lock_name(key: str) -> Optional[str]:
    marker = "node_modules/"
    idx = key.rfind(marker)
    return key[idx + len(marker):] if idx >= 0 else None


def _parse_npm_lock(text: str) -> list[tuple[str, str]]:
    data = _load_json(text, "")
    pairs = []
    packages = data.get("packages")
    if isinstance(packages, dict):
        for key, meta in packages.items():
            name = _npm_lock_name(key)
            if name is None or not isinstance(meta, dict) or meta.get("link"):
                continue
            name = meta.get("name", name)
            if isinstance(meta.get("version"), str):
                pairs.append((name, meta["version"]))
        return pairs

    def walk(deps):
        for name, meta in (deps or {}).items():
            if not isinstance(meta, dict):
                raise MalformedManifest(f"lock entry {name!r} is not an object")
            if isinstance(meta.get("version"), str) and not meta["version"].startswith(("file:", "link:")):
                pairs.append((name, meta["version"]))
            walk(meta.get("dependencies"))

    walk(data.get("dependencies"))
    return pairs


def _parse_python_lock(text: str) -> list[tuple[str, str]]:
    if text.lstrip().startswith("{"):
        data = _load_json(text, "")
        pairs = []
        for section in ("default", "develop"):
            for name, meta in (data.get(section) or {}).items():
                version = meta.get("version", "") if isinstance(meta, dict) else ""
                if version:
                    pairs.append((name, version.lstrip("=")))
        return pairs
    data = _load_toml(text, "")
    pairs = []
    for pkg in data.get("package", []):
        if not isinstance(pkg, dict) or "name" not in pkg:
            raise MalformedManifest("[[package]] entry without a name")
        source = pkg.get("source") if isinstance(pkg.get("source"), dict) else {}
        if {"editable", "virtual"} & set(source):
            continue
        if isinstance(pkg.get("version"), str):
            pairs.append((pkg["name"], pkg["version"]))
    return pairs


def parse_lockfile(fmt: ManifestFormat, text: str) -> list[tuple[str, Version]]:
    """Exact (name, version) pairs recorded in a lockfile, transitive included.

    Pairs keep file order; repeated identical pairs appear once.
    """
    fmt = ManifestFormat(fmt)
    if not fmt.is_lockfile:
        raise ValueError(f"{fmt.value} is not a lockfile format")
    text = _strip_bom(text)
    if not text.strip():
        return []
    raw = _parse_npm_lock(text) if fmt is ManifestFormat.NPM_LOCKFILE else _parse_python_lock(text)
    seen, pairs = set(), []
    for name, version in raw:
        parsed = _safe_version(fmt.ecosystem, version)
        if parsed is None:
            continue
        item = (eco.normalize_name(fmt.ecosystem, name), parsed)
        if item not in seen:
            seen.add(item)
            pairs.append(item)
    return pairs


# ---------------------------------------------------------------------------
# specifier semantics (pin soundness checks)
# ---------------------------------------------------------------------------

_COMPARATOR = re.compile(r"^(===|==|=|!=|>=|<=|>|<)?\s*v?(.+)$")


def spec_admits(ecosystem: str, spec: str, version: Version) -> Optional[bool]:
    """Whether ``version`` satisfies a comparator-list ``spec``.

    Understands exact pins and ``=``/``==``/``!=``/``<``/``<=``/``>``/``>=``
    comparators joined by commas or whitespace, plus Maven ``[x]`` hard pins.
    Returns ``None`` for anything else (caret, tilde, wildcards, Maven ranges).
    """
    spec = spec.strip()
    hard = _MAVEN_HARD_PIN.match(spec) if ecosystem == eco.MAVEN else None
    if hard:
        spec = hard.group(1)
    if not spec or re.search(r"[\^~*|\[\]()]|(?:^|[.\s])[xX](?:[.\s]|$)", spec):
        return None
    parts = [p for p in re.split(r"\s*,\s*|\s+(?=[<>=!])", spec) if p]
    for part in parts:
        m = _COMPARATOR.match(part.strip())
        if not m:
            return None
        op = m.group(1) or "="
        try:
            bound = parse_version(ecosystem, m.group(2))
        except UnparseableVersion:
            return None
        ok = {
            "=": version == bound,
            "==": version == bound,
            "===": version == bound,
            "!=": version != bound,
            ">=": version >= bound,
            "<=": version <= bound,
            ">": version > bound,
            "<": version < bound,
        }[op]
        if not ok:
            return False
    return True
