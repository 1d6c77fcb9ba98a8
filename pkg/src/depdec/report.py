"""Render score reports, corpus aggregates and listings as JSON or Markdown."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping, Optional, Sequence

from depdec.advisories import Severity
from depdec.changes import ChangeKind, DependencyChange
from depdec.scoring import (
    AuthorKind,
    CorpusAggregate,
    ScoreReport,
    change_to_dict,
    format_percent,
    report_to_dict,
)
from depdec.version_core import RemediationBucket


class ReportFormat(str, enum.Enum):
    JSON = "json"
    TABLE = "table"


@dataclass(frozen=True)
class RenderedReport:
    format: ReportFormat
    body: str


def dump_json(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def fmt_int(n: int) -> str:
    return f"{n:,}"


def fmt_signed(n: int) -> str:
    return f"+{n:,}" if n > 0 else f"{n:,}"


def _share(count: int, total: int, places: int = 1) -> str:
    return f"{fmt_int(count)} ({format_percent(Fraction(count, total) if total else Fraction(0), places)})"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" if i == 0 else "---:" for i in range(len(header))) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines)


_BUCKET_ROWS = (
    (RemediationBucket.BUG_FIX, "Bug-fix (1.2.X -> 1.2.Y)"),
    (RemediationBucket.MINOR, "Minor (1.X -> 1.Y)"),
    (RemediationBucket.MAJOR, "Major (1 -> 2)"),
    (RemediationBucket.OTHER, "Other"),
)


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------


def corpus_to_dict(aggregates: Mapping[AuthorKind, CorpusAggregate], diagnostics: Optional[Mapping] = None) -> dict:
    out: dict[str, Any] = {"aggregates": {k.value: aggregates[k].to_dict() for k in AuthorKind if k in aggregates}}
    if diagnostics is not None:
        out["diagnostics"] = dict(diagnostics)
    return out


def corpus_markdown(aggregates: Mapping[AuthorKind, CorpusAggregate], diagnostics: Optional[Mapping] = None) -> str:
    kinds = [k for k in AuthorKind if k in aggregates]
    aggs = [aggregates[k] for k in kinds]
    head = ["Metric"] + [k.value for k in kinds]
    parts = []

    rows = [[kind.value] + [_share(a.change_counts[kind], a.total_changes) for a in aggs] for kind in ChangeKind]
    rows.append(["Total"] + [fmt_int(a.total_changes) for a in aggs])
    parts.append("### Dependency change distribution\n\n" + _table(["Change kind"] + head[1:], rows))

    rows = [
        ["Dependencies Introduced"] + [fmt_int(a.introduced_dep_count) for a in aggs],
        ["Vulnerable dependencies"] + [_share(a.vulnerable_dep_count, a.introduced_dep_count) for a in aggs],
        ["Mitigatable (safe version available) (%)"] + [format_percent(a.mitigatable_fraction, 2) for a in aggs],
    ]
    rows += [[label] + [_share(a.remediation[b], a.vulnerable_dep_count) for a in aggs] for b, label in _BUCKET_ROWS]
    parts.append("### Vulnerable selections and remediation effort\n\n" + _table(head, rows))

    parts.append("### (a) Severity of introduced vulnerabilities\n\n" + _severity_table(kinds, aggs, "introduced_severity"))
    rows = [
        ["Introduced (% all changes)"] + [format_percent(a.introduced_pct_all_changes, 2) for a in aggs],
        ["Fixed (% all changes)"] + [format_percent(a.fixed_pct_all_changes, 2) for a in aggs],
        ["Fix rate (remove/update)"] + [format_percent(a.fix_rate, 2) for a in aggs],
        ["Net impact (Fixed - Introduced)"] + [fmt_signed(a.net_impact) for a in aggs],
    ]
    parts.append("### (b) Net security impact\n\n" + _table(["Category"] + head[1:], rows))
    parts.append("### (c) Severity of fixed vulnerabilities\n\n" + _severity_table(kinds, aggs, "fixed_severity"))

    if diagnostics:
        rows = [[k, fmt_int(v)] for k, v in sorted(diagnostics.items()) if isinstance(v, int)]
        parts.append("### Diagnostics\n\n" + _table(["Counter", "Value"], rows))
    return "\n\n".join(parts) + "\n"


def _severity_table(kinds, aggs, attr: str) -> str:
    rows = []
    for sev in Severity:
        cells = []
        for a in aggs:
            hist = getattr(a, attr)
            cells.append(_share(hist[sev], sum(hist.values())))
        rows.append([sev.value] + cells)
    return _table(["Severity"] + [k.value for k in kinds], rows)


def render_corpus(aggregates, diagnostics=None, fmt: ReportFormat = ReportFormat.TABLE) -> RenderedReport:
    if fmt is ReportFormat.JSON:
        return RenderedReport(fmt, dump_json(corpus_to_dict(aggregates, diagnostics)))
    return RenderedReport(fmt, corpus_markdown(aggregates, diagnostics))


# ---------------------------------------------------------------------------
# instance score
# ---------------------------------------------------------------------------


def _tri(value: Optional[bool]) -> str:
    return "n/a" if value is None else ("yes" if value else "no")


def score_markdown(report: ScoreReport) -> str:
    rows = [
        ["Track", report.track or "n/a"],
        ["Functional pass", _tri(report.functional_pass)],
        ["Reuse", f"{report.reuse:.2f}"],
        ["Unnecessary additions", str(report.unnecessary_adds)],
        ["Policy compliant", _tri(report.compliance.compliant)],
        ["Vulnerability compliant", _tri(report.vuln_compliant)],
        ["Worst remediation", report.worst_remediation.value if report.worst_remediation else "n/a"],
        ["Capability satisfied", _tri(report.capability_ok)],
        ["Unaudited changes", str(report.unaudited)],
        ["Passed", _tri(report.passed)],
    ]
    parts = [f"### Instance {report.instance_id}\n\n" + _table(["Metric", "Value"], rows)]
    if report.labels:
        crow = []
        for change, label in report.labels:
            crow.append([
                change.kind.value,
                change.name,
                change.base_spec or "",
                change.head_spec or "",
                ", ".join(a.id for a in label.introduced),
                ", ".join(a.id for a in label.fixed),
                label.remediation.value if label.remediation else "",
            ])
        parts.append(_table(["Kind", "Package", "Base", "Head", "Introduced", "Fixed", "Remediation"], crow))
    if report.compliance.violations:
        vrow = [[v.rule, v.change.name, v.message] for v in report.compliance.violations]
        parts.append(_table(["Rule", "Package", "Detail"], vrow))
    return "\n\n".join(parts) + "\n"


def render_score(report: ScoreReport, fmt: ReportFormat = ReportFormat.TABLE) -> RenderedReport:
    if fmt is ReportFormat.JSON:
        return RenderedReport(fmt, dump_json(report_to_dict(report)))
    return RenderedReport(fmt, score_markdown(report))


# ---------------------------------------------------------------------------
# listings
# ---------------------------------------------------------------------------


def render_changes(changes: Sequence[DependencyChange], fmt: ReportFormat = ReportFormat.TABLE) -> RenderedReport:
    if fmt is ReportFormat.JSON:
        return RenderedReport(fmt, dump_json([change_to_dict(c) for c in changes]))
    if not changes:
        return RenderedReport(fmt, "")
    rows = [[c.kind.value, c.ecosystem, c.name, c.base_spec or "", c.head_spec or "", c.scope.value] for c in changes]
    return RenderedReport(fmt, _table(["Kind", "Ecosystem", "Package", "Base", "Head", "Scope"], rows) + "\n")


AuditRow = tuple[str, str, str, str]


def render_audit(rows: Sequence[AuditRow], fmt: ReportFormat = ReportFormat.TABLE) -> RenderedReport:
    if fmt is ReportFormat.JSON:
        keys = ("package", "version", "advisory", "severity")
        return RenderedReport(fmt, dump_json([dict(zip(keys, r)) for r in rows]))
    if not rows:
        return RenderedReport(fmt, "")
    return RenderedReport(fmt, _table(["Package", "Version", "Advisory", "Severity"], [list(r) for r in rows]) + "\n")
