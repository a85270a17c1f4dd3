"""Render run records and ANOVA outcomes as CSV and Markdown tables.

Output is a pure function of the inputs (fixed column order, sorted rows,
fixed number formatting) so reruns produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from ..domain import RunRecord
from ..errors import InsufficientData, IoFailure
from .metrics import ANOVA_METRICS, Factor, group_runs, metric
from .stats import AnovaResult, anova_oneway, descriptive

RUNS_COLUMNS = (
    "run_id", "project", "process", "model", "seed", "status", "failure_reason",
    "files", "all_files", "loc", "tokens_per_loc", "total_tokens", "wall_time",
    "code_smells", "vulnerabilities", "ai_bug_rate", "human_bug_rate", "transcript_path",
)

_FACTOR_TITLE = {Factor.PROCESS: "Process", Factor.MODEL: "Model"}


@dataclass(frozen=True)
class AnovaOutcome:
    metric_name: str
    factor: Factor
    result: Optional[AnovaResult] = None
    error: Optional[str] = None


def run_anovas(records: Sequence[RunRecord], metrics: Sequence[str] = ANOVA_METRICS) -> list[AnovaOutcome]:
    out = []
    for factor in (Factor.PROCESS, Factor.MODEL):
        for name in metrics:
            groups = group_runs(records, factor, name)
            try:
                res = anova_oneway(list(groups.values()), labels=list(groups), metric_name=name,
                                   factor=factor.value)
                out.append(AnovaOutcome(name, factor, result=res))
            except InsufficientData as exc:
                out.append(AnovaOutcome(name, factor, error=str(exc)))
    return out


def stars(p: float) -> str:
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def format_p(p: float) -> str:
    text = f"{p:.3f}"
    if text == "0.000":
        text = "<0.001"
    return text + stars(p)


def format_f(f: float) -> str:
    if math.isinf(f):
        return "inf"
    return f"{f:.3f}" if f < 1 else f"{f:.2f}"


def _num(v) -> str:
    if v is None:
        return "n/a"
    if float(v).is_integer():
        return str(int(v))
    return f"{v:.2f}"


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def runs_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUNS_COLUMNS)
    for r in sorted(records, key=lambda r: r.run_id):
        row = {
            "run_id": r.run_id,
            "project": r.config.project.id,
            "process": r.config.process.value,
            "model": r.config.model_label,
            "seed": r.config.seed,
            "status": r.status,
            "failure_reason": r.failure_reason,
            "files": r.size.files,
            "all_files": r.size.all_files,
            "loc": r.size.loc,
            "tokens_per_loc": r.size.tokens_per_loc,
            "total_tokens": r.cost.total_tokens,
            "wall_time": r.cost.wall_time,
            "code_smells": r.quality.code_smells,
            "vulnerabilities": r.quality.vulnerabilities,
            "ai_bug_rate": r.quality.ai_bug_rate,
            "human_bug_rate": r.quality.human_bug_rate,
            "transcript_path": r.transcript_path,
        }
        w.writerow([_csv_value(row[c]) for c in RUNS_COLUMNS])
    return buf.getvalue()


def scatter_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("total_tokens", "loc", "process"))
    for r in sorted(records, key=lambda r: r.run_id):
        if r.completed:
            w.writerow((r.cost.total_tokens, r.size.loc, r.config.process.value))
    return buf.getvalue()


_DESCRIPTIVE_TABLES = (
    ("Size", (("files", "No. of Files"), ("loc", "No. of LOC"))),
    ("Cost", (("wall_time", "Execution Time (s)"), ("total_tokens", "Total Tokens Used"))),
    ("Quality", (("code_smells", "Code Smells"), ("ai_bug_rate", "AI Bug Rate"),
                 ("human_bug_rate", "Manual Failure Rate"))),
)


def _descriptive_table(records, factor: Factor, metrics) -> list[str]:
    header = [_FACTOR_TITLE[factor]]
    for _, label in metrics:
        header += [f"{label} Min", "Med.", "Max"]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    grouped = {name: group_runs(records, factor, name) for name, _ in metrics}
    levels = sorted({lvl for g in grouped.values() for lvl in g}
                    | {factor.level(r) for r in records if r.completed})
    for level in levels:
        cells = [level]
        for name, _ in metrics:
            values = grouped[name].get(level)
            if values:
                s = descriptive(values)
                cells += [_num(s.min), _num(s.median), _num(s.max)]
            else:
                cells += ["n/a"] * 3
        lines.append("| " + " | ".join(cells) + " |")
    return lines


def descriptives_md(records: Sequence[RunRecord]) -> str:
    completed = sum(1 for r in records if r.completed)
    out = ["# Descriptive statistics", "",
           f"Runs: {len(records)} total, {completed} completed. Failed runs are excluded from the tables.", ""]
    for factor in (Factor.PROCESS, Factor.MODEL):
        out += [f"## By {_FACTOR_TITLE[factor].lower()}", ""]
        for title, metrics in _DESCRIPTIVE_TABLES:
            out += [f"### {title}", ""]
            out += _descriptive_table(records, factor, metrics)
            out.append("")
    return "\n".join(out)


def anova_md(outcomes: Sequence[AnovaOutcome]) -> str:
    out = ["# One-way ANOVA", "", "Significance: `*` p < 0.05, `**` p < 0.01.", ""]
    for factor in (Factor.PROCESS, Factor.MODEL):
        rows = [o for o in outcomes if o.factor is factor]
        if not rows:
            continue
        out += [f"## Effect of {_FACTOR_TITLE[factor].lower()}", "",
                "| Metric | F-Statistic | p-value | df |", "|---|---|---|---|"]
        for o in rows:
            label = metric(o.metric_name).label
            if o.result is None:
                out.append(f"| {label} | InsufficientData | InsufficientData | - |")
            else:
                r = o.result
                out.append(f"| {label} | {format_f(r.f_stat)} | {format_p(r.p_value)} | "
                           f"({r.df_between}, {r.df_within}) |")
        out.append("")
    return "\n".join(out)


def emit_report(outcomes: Sequence[AnovaOutcome], records: Sequence[RunRecord], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    files = {
        "runs.csv": runs_csv(records),
        "descriptives.md": descriptives_md(records),
        "anova.md": anova_md(outcomes),
        "scatter.csv": scatter_csv(records),
    }
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            path = out / name
            path.write_text(text, encoding="utf-8", newline="\n")
            written.append(path)
    except OSError as exc:
        raise IoFailure(f"cannot write report to {out}: {exc}") from exc
    return written
