"""Independent reference computations for the statistics tests.

Sums of squares are done in exact rational arithmetic; the p-value is the
tail integral of the F density evaluated by mpmath quadrature. Neither path
shares code with the implementation under test.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath as mp


def anova_oracle(groups):
    """(F, p) for a one-way layout, or None when the within sum of squares is 0."""
    gs = [[Fraction(v) for v in g] for g in groups]
    k = len(gs)
    n = sum(len(g) for g in gs)
    grand = sum(sum(g) for g in gs) / n
    means = [sum(g) / len(g) for g in gs]
    ssb = sum(len(g) * (m - grand) ** 2 for g, m in zip(gs, means))
    ssw = sum((v - m) ** 2 for g, m in zip(gs, means) for v in g)
    if ssw == 0:
        return None
    d1, d2 = k - 1, n - k
    f = (ssb / d1) / (ssw / d2)
    with mp.workdps(40):
        F = mp.mpf(f.numerator) / f.denominator
        a, b = mp.mpf(d1), mp.mpf(d2)
        norm = mp.beta(a / 2, b / 2)

        def pdf(x):
            return mp.sqrt((a * x) ** a * b ** b / (a * x + b) ** (a + b)) / (x * norm)

        if F == 0:
            p = mp.mpf(1)
        else:
            p = mp.quad(pdf, [F, 2 * F + 1, 10 * F + 10, 100 * F + 100, mp.inf])
        return float(F), float(p)
