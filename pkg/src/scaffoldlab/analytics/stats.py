"""Descriptive statistics and one-way ANOVA with an F-distribution tail."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..errors import ConvergenceError, EmptyInput, InsufficientData

BETACF_RTOL = 1e-12
BETACF_MAX_ITER = 10_000
_TINY = 1e-300


@dataclass(frozen=True)
class Summary:
    n: int
    mean: float
    min: float
    median: float
    max: float


def descriptive(values: Sequence[float]) -> Summary:
    if len(values) == 0:
        raise EmptyInput("descriptive statistics need at least one value")
    return Summary(
        n=len(values),
        mean=statistics.fmean(values),
        min=min(values),
        median=statistics.median(values),
        max=max(values),
    )


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b), modified Lentz evaluation."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < BETACF_RTOL:
            return h
    raise ConvergenceError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float, y: Optional[float] = None) -> float:
    """Regularized incomplete beta I_x(a, b).

    ``y`` may carry an accurately computed ``1 - x``.
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if y is None:
        y = 1.0 - x
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log(y)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, y) / b


def f_sf(f: float, df1: float, df2: float) -> float:
    """Survival function P(F > f) of the F distribution."""
    if df1 <= 0 or df2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isnan(f):
        raise ValueError("F is NaN")
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    denom = df2 + df1 * f
    return betainc(df2 / 2.0, df1 / 2.0, df2 / denom, df1 * f / denom)


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    df_between: int
    df_within: int
    p_value: float
    ss_between: float
    ss_within: float
    metric_name: str = ""
    factor: str = ""
    group_summaries: dict[str, Summary] = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return self.ss_between == 0 and self.ss_within == 0


def anova_oneway(
    groups: Sequence[Sequence[float]],
    labels: Optional[Sequence[str]] = None,
    metric_name: str = "",
    factor: str = "",
) -> AnovaResult:
    """Classic one-way ANOVA (equal variances, no Welch correction).

    All-identical data gives F = 0 and p = 1. Zero within-group spread with
    differing group means gives F = inf and p = 0.
    """
    groups = [list(map(float, g)) for g in groups]
    k = len(groups)
    n_total = sum(len(g) for g in groups)
    if k < 2:
        raise InsufficientData(f"need at least 2 groups, got {k}")
    if any(len(g) == 0 for g in groups):
        raise InsufficientData("every group needs at least one observation")
    if n_total - k < 1:
        raise InsufficientData(f"need more observations than groups (N={n_total}, k={k})")

    means = [math.fsum(g) / len(g) for g in groups]
    grand = math.fsum(v for g in groups for v in g) / n_total
    ssb = math.fsum(len(g) * (m - grand) ** 2 for g, m in zip(groups, means))
    ssw = math.fsum((v - m) ** 2 for g, m in zip(groups, means) for v in g)
    dfb, dfw = k - 1, n_total - k

    if ssw == 0.0:
        f, p = (0.0, 1.0) if ssb == 0.0 else (math.inf, 0.0)
    else:
        f = (ssb / dfb) / (ssw / dfw)
        p = f_sf(f, dfb, dfw)

    if labels is None:
        labels = [str(i) for i in range(k)]
    return AnovaResult(
        f_stat=f,
        df_between=dfb,
        df_within=dfw,
        p_value=min(1.0, max(0.0, p)),
        ss_between=ssb,
        ss_within=ssw,
        metric_name=metric_name,
        factor=factor,
        group_summaries={lab: descriptive(g) for lab, g in zip(labels, groups)},
    )
