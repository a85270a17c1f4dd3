"""Metric lookup on run records and grouping by experimental factor."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Optional

from ..domain import RunRecord
from ..errors import UnknownMetric


class Factor(str, Enum):
    PROCESS = "process"
    MODEL = "model"

    def level(self, record: RunRecord) -> str:
        if self is Factor.PROCESS:
            return record.config.process.value
        return record.config.model_label


@dataclass(frozen=True)
class Metric:
    name: str
    code: str
    label: str
    get: Callable[[RunRecord], Optional[float]]


METRICS = {
    m.name: m
    for m in (
        Metric("files", "S1", "Number of Files", lambda r: r.size.files),
        Metric("loc", "S2", "Lines of Code (LOC)", lambda r: r.size.loc),
        Metric("tokens_per_loc", "S3", "Tokens per LOC", lambda r: r.size.tokens_per_loc),
        Metric("total_tokens", "C1", "Token Cost", lambda r: r.cost.total_tokens),
        Metric("wall_time", "C2", "Execution Time", lambda r: r.cost.wall_time),
        Metric("code_smells", "Q1", "Code Smells", lambda r: r.quality.code_smells),
        Metric("vulnerabilities", "Q2", "Vulnerabilities", lambda r: r.quality.vulnerabilities),
        Metric("ai_bug_rate", "Q3", "Failure rate of AI tests", lambda r: r.quality.ai_bug_rate),
        Metric("human_bug_rate", "Q4", "Failure rate of manual tests", lambda r: r.quality.human_bug_rate),
    )
}
_ALIASES = {m.code.lower(): m.name for m in METRICS.values()}

# the five metrics compared across factors in the published ANOVA tables
ANOVA_METRICS = ("files", "loc", "wall_time", "total_tokens", "human_bug_rate")


def metric(name: str) -> Metric:
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    try:
        return METRICS[key]
    except KeyError:
        raise UnknownMetric(name) from None


def group_runs(records: Iterable[RunRecord], factor: Factor | str, metric_name: str) -> dict[str, list[float]]:
    """Metric values of completed runs keyed by factor level, levels sorted by name.

    Runs where the metric is missing (e.g. no manual session ingested) are left out.
    """
    factor = Factor(factor)
    m = metric(metric_name)
    groups: dict[str, list[float]] = {}
    for rec in records:
        if not rec.completed:
            continue
        value = m.get(rec)
        if value is None:
            continue
        groups.setdefault(factor.level(rec), []).append(value)
    return {level: groups[level] for level in sorted(groups)}
