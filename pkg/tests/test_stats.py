import itertools
from math import comb

import numpy as np
import pytest

from exprtune.stats import exact_rank_sum_p, mean, rank_sum_test, summarize
from exprtune.streams import stream


def permutation_p(a, b):
    """Exact one-sided p-value by enumerating every split of the pooled values."""
    pooled = list(a) + list(b)
    observed = sum(1 for x in a for y in b if y > x)
    hits = 0
    total = 0
    for chosen in itertools.combinations(range(len(pooled)), len(b)):
        chosen = set(chosen)
        group_b = [pooled[i] for i in chosen]
        group_a = [pooled[i] for i in range(len(pooled)) if i not in chosen]
        u = sum(1 for x in group_a for y in group_b if y > x)
        hits += u >= observed
        total += 1
    return hits / total


def test_separated_samples():
    """
    Test the fully separated case: U is maximal and p within 0.02 of the exact 1/20.
    """
    result = rank_sum_test([1, 2, 3], [4, 5, 6])
    assert result.u_statistic == 9
    assert result.p_value < 0.05
    assert result.p_value == pytest.approx(0.05, abs=0.02)


@pytest.mark.parametrize(
    "a, b",
    [
        ([1, 2, 3], [1, 2, 3]),
        ([1, 1, 1, 1], [1, 1, 1, 1]),
        ([0.5, 0.7, 0.9, 0.9, 1.0], [0.5, 0.7, 0.9, 0.9, 1.0]),
    ],
)
def test_identical_samples_give_no_evidence(a, b):
    assert rank_sum_test(a, b).p_value == pytest.approx(0.5)


def test_rejects_tiny_samples():
    with pytest.raises(ValueError):
        rank_sum_test([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        rank_sum_test([1.0, 2.0], [3.0, 4.0], alternative="two_sided")


def test_exact_distribution():
    assert exact_rank_sum_p(3, 3, 9) == pytest.approx(1 / comb(6, 3))
    assert exact_rank_sum_p(3, 3, 0) == 1.0
    assert exact_rank_sum_p(2, 5, 9) == pytest.approx(permutation_p([0, 2], [1, 3, 4, 5, 6]))


@pytest.mark.parametrize(
    "m, n",
    [(m, n) for m in range(2, 11) for n in range(2, 11) if m + n <= 12],
)
def test_agrees_with_permutation_oracle(m, n):
    """
    Test the p-value against the exact permutation p for every split of distinct values.
    """
    values = list(range(m + n))
    splits = []
    for chosen in itertools.combinations(values, n):
        b = list(chosen)
        a = [v for v in values if v not in chosen]
        splits.append((a, b, sum(1 for x in a for y in b if y > x)))
    null = np.array([u for _, _, u in splits])
    for a, b, u in splits:
        expected = np.mean(null >= u)
        assert rank_sum_test(a, b).p_value == pytest.approx(expected, abs=0.02)


@pytest.mark.parametrize(
    "a, b",
    [
        ([0.0, 1.0], [2.0, 3.0, 4.0]),
        ([5.0, 1.0, 3.0], [2.0, 4.0]),
    ],
)
def test_exact_helper_matches_enumeration(a, b):
    u = sum(1 for x in a for y in b if y > x)
    assert exact_rank_sum_p(len(a), len(b), u) == pytest.approx(permutation_p(a, b))


def test_scale_invariance():
    rng = stream(1)
    a = rng.random(15)
    b = rng.random(12) + 0.1
    plain = rank_sum_test(a, b)
    scaled = rank_sum_test(a * 7.5, b * 7.5)
    assert scaled.u_statistic == plain.u_statistic
    assert scaled.p_value == pytest.approx(plain.p_value)


def test_shift_monotonicity():
    rng = stream(2)
    a = rng.normal(size=20)
    b = rng.normal(size=20)
    previous = 1.0
    for shift in np.linspace(0.0, 3.0, 31):
        p_value = rank_sum_test(a, b + shift + 1e-9).p_value
        assert p_value <= previous + 1e-12
        previous = p_value


def test_ties_in_normalized_scores():
    """
    Test samples with many ties, as produced when most runs reach the optimum.
    """
    better = [1.0] * 9 + [0.9]
    worse = [0.8] * 5 + [0.9] * 5
    assert rank_sum_test(worse, better).p_value < 0.02
    assert rank_sum_test(better, worse).p_value > 0.98


def test_mean():
    assert mean([0.5, 1.0]) == 0.75
    assert mean([0.3]) == 0.3
    assert mean(stream(3).random(100)) == pytest.approx(0.5, abs=0.1)
    with pytest.raises(ValueError):
        mean([])


def test_summarize():
    summary = summarize([1.0, 2.0, 3.0, 4.0, 5.0])
    assert summary["count"] == 5
    assert summary["median"] == 3.0
    assert summary["q1"] == 2.0
    assert summary["q3"] == 4.0
    assert summary["min"] == 1.0
    assert summary["max"] == 5.0
    assert summary["mean"] == 3.0


def test_two_value_side_uses_the_exact_distribution():
    result = rank_sum_test([0.0, 1.0], [2.0, 3.0, 4.0, 5.0])
    assert result.u_statistic == 8
    assert result.p_value == pytest.approx(exact_rank_sum_p(2, 4, 8))
    assert result.p_value == pytest.approx(1 / comb(6, 2))
