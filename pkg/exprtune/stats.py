"""
Statistics for replacement decisions and reports.

The replacement rule compares the normalized per-run scores of two trees
with a one-sided Wilcoxon rank-sum (Mann-Whitney U) test: "is the newcomer
better?". The p-value comes from the normal approximation with midranks and
tie-corrected variance, except for small tie-free samples where one side
holds only two values; those use the exact distribution of U.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache
from math import comb, sqrt

import numpy as np
from scipy.stats import norm, rankdata

#: Normalized per-run scores of one candidate.
SampleVector = np.ndarray

#: Tie-free samples where one side has two values, up to this pooled size,
#: use the exact null distribution; the normal tail is too coarse there.
EXACT_POOLED_SIZE = 12


@dataclass(frozen=True)
class RankSumResult:
    u_statistic: float
    p_value: float


@lru_cache(maxsize=None)
def _u_counts(m: int, n: int) -> tuple[int, ...]:
    """Number of rank assignments giving each U = #{(a, b): b > a}, |a|=m, |b|=n."""
    if m == 0 or n == 0:
        return (1,)
    counts = [0] * (m * n + 1)
    # largest pooled value belongs to a: contributes nothing
    for u, count in enumerate(_u_counts(m - 1, n)):
        counts[u] += count
    # largest pooled value belongs to b: beats all m values of a
    for u, count in enumerate(_u_counts(m, n - 1)):
        counts[u + m] += count
    return tuple(counts)


def exact_rank_sum_p(m: int, n: int, u_statistic: float) -> float:
    """Exact P(U >= u) under the null for tie-free samples of sizes m and n."""
    counts = _u_counts(m, n)
    start = max(0, int(np.ceil(u_statistic)))
    return sum(counts[start:]) / comb(m + n, m)


def rank_sum_test(
    a: Sequence[float], b: Sequence[float], alternative: str = "b_greater"
) -> RankSumResult:
    """
    One-sided Wilcoxon rank-sum test that ``b`` tends to be greater than ``a``.

    Returns U for ``b`` and the p-value. A continuity correction of 0.5 is
    applied to tie-free samples only; if every pooled value is the same
    there is no evidence either way and p is 0.5.

    Raises:
        ValueError: If either sample has fewer than two values.
    """
    if alternative != "b_greater":
        raise ValueError(f"Unsupported alternative: {alternative}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = a.size, b.size
    if m < 2 or n < 2:
        raise ValueError(f"Both samples need at least two values, got {m} and {n}")

    pooled = np.concatenate([a, b])
    ranks = rankdata(pooled)
    u_b = float(ranks[m:].sum() - n * (n + 1) / 2.0)

    _, counts = np.unique(pooled, return_counts=True)
    if counts.size == 1:
        return RankSumResult(u_b, 0.5)
    tied = counts.size < pooled.size
    total = m + n
    # with only two values on one side the corrected normal tail can be off by more than 0.02
    if not tied and min(m, n) == 2 and total <= EXACT_POOLED_SIZE:
        return RankSumResult(u_b, exact_rank_sum_p(m, n, u_b))

    tie_term = float((counts**3 - counts).sum())
    variance = m * n / 12.0 * ((total + 1) - tie_term / (total * (total - 1)))
    numerator = u_b - m * n / 2.0
    if not tied:
        numerator -= 0.5
    p_value = float(norm.sf(numerator / sqrt(variance)))
    return RankSumResult(u_b, min(max(p_value, 0.0), 1.0))


def mean(values: Sequence[float]) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("mean of an empty sample")
    return float(values.mean())


def summarize(values: Sequence[float]) -> dict[str, float]:
    """Summary used in reports: quartiles, mean, spread and extremes."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("summary of an empty sample")
    q1, median, q3 = np.percentile(values, [25, 50, 75])
    return {
        "count": int(values.size),
        "mean": float(values.mean()),
        "std": float(values.std()),
        "min": float(values.min()),
        "q1": float(q1),
        "median": float(median),
        "q3": float(q3),
        "max": float(values.max()),
    }
