"""One-sided Wilcoxon signed-rank test for paired rank comparisons.

The pairs are (soft_rank, hard_rank); the alternative is that the soft
scheme produces smaller ranks. Differences d = hard - soft are ranked by
absolute value with average ranks for ties, zero differences are
dropped, and the statistic is W-minus, the rank sum of the pairs where
soft did worse. Small W-minus is evidence for the alternative, so the
one-sided p-value is P(W- <= observed) under the sign-flip null.

For n <= 25 the null distribution is enumerated exactly. Tied ranks are
half-integers, so doubling them gives integers and the count of sign
assignments per achievable rank sum follows from one convolution pass
per pair, equivalent to full enumeration of the 2^n assignments. Above
25 a normal approximation with tie correction and continuity correction
takes over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .special import std_normal_cdf

EXACT_LIMIT = 25
MIN_P = 1e-300


class DegenerateDataError(ValueError):
    """All differences are zero; the test carries no information."""


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    n_used: int
    method: str


def average_ranks(values: Sequence[float]) -> list[float]:
    """Ranks 1..n with ties sharing the average of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = 0.5 * (i + j) + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def exact_null_counts(doubled_ranks: Sequence[int]) -> list[int]:
    """Counts of sign assignments per achievable doubled rank sum.

    counts[s] is the number of subsets of the ranks whose doubled sum is
    s; summing over all 2^n subsets.
    """
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled_ranks:
        for s in range(total, r - 1, -1):
            if counts[s - r]:
                counts[s] += counts[s - r]
    return counts


def _exact_p(ranks: Sequence[float], w_minus: float) -> float:
    doubled = [int(round(2.0 * r)) for r in ranks]
    counts = exact_null_counts(doubled)
    cutoff = int(round(2.0 * w_minus))
    favourable = sum(counts[: cutoff + 1])
    return favourable / float(2 ** len(ranks))


def _approx_p(ranks: Sequence[float], w_minus: float) -> float:
    n = len(ranks)
    mean = n * (n + 1) / 4.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0
    # tie correction: each group of t equal ranks removes (t^3 - t) / 48
    groups: dict[float, int] = {}
    for r in ranks:
        groups[r] = groups.get(r, 0) + 1
    variance -= sum(t**3 - t for t in groups.values()) / 48.0
    if variance <= 0.0:
        raise DegenerateDataError("tie structure leaves no variance in the rank sum")
    z = (w_minus + 0.5 - mean) / math.sqrt(variance)
    return min(1.0, max(MIN_P, std_normal_cdf(z)))


def wilcoxon_signed_rank(
    pairs: Sequence[tuple[float, float]],
    alternative: str = "soft_less",
    method: str = "auto",
) -> WilcoxonResult:
    """Test whether soft ranks are systematically smaller than hard ranks.

    pairs holds (soft_rank, hard_rank) per evaluation fold. method picks
    the exact enumeration, the normal approximation, or the default
    size-based choice.
    """
    if alternative != "soft_less":
        raise ValueError(f"unsupported alternative: {alternative!r}")
    if method not in ("auto", "exact", "approx"):
        raise ValueError(f"method must be 'auto', 'exact' or 'approx', got {method!r}")
    if len(pairs) == 0:
        raise DegenerateDataError("no pairs to test")
    diffs = [float(hard) - float(soft) for soft, hard in pairs]
    nonzero = [d for d in diffs if d != 0.0]
    if not nonzero:
        raise DegenerateDataError("all differences are zero")
    n = len(nonzero)
    ranks = average_ranks([abs(d) for d in nonzero])
    w_minus = math.fsum(r for d, r in zip(nonzero, ranks) if d < 0.0)

    if method == "auto":
        method = "exact" if n <= EXACT_LIMIT else "approx"
    if method == "exact":
        p = _exact_p(ranks, w_minus)
    else:
        p = _approx_p(ranks, w_minus)
    return WilcoxonResult(statistic=w_minus, p_value=p, n_used=n, method=method)
