import math

import pytest
from hypothesis import given, settings, strategies as st

from coevo.stats import mean_sd, mean_sem_curve, sem, wilcoxon_rank_sum
from oracles import rank_sum_exact_p, rank_sum_normal_p


def test_separated_samples():
    r = wilcoxon_rank_sum(list(range(1, 11)), list(range(11, 21)))
    assert r.p_value < 0.05 and r.verdict == "−"
    assert wilcoxon_rank_sum(list(range(11, 21)), list(range(1, 11))).verdict == "+"
    assert r.statistic == 0.0


def test_identical_samples():
    r = wilcoxon_rank_sum([3.0] * 6, [3.0] * 6)
    assert r.verdict == "≈" and r.p_value == 1.0


def test_overlapping_samples_are_equal():
    assert wilcoxon_rank_sum([1, 3, 5, 7, 9], [2, 4, 6, 8, 10]).verdict == "≈"


def test_small_sample_rejected():
    with pytest.raises(ValueError):
        wilcoxon_rank_sum([1, 2, 3], [4, 5, 6])


@given(st.lists(st.integers(0, 10**6), min_size=10, max_size=12, unique=True), st.integers(0, 2))
@settings(max_examples=60, deadline=None)
def test_matches_normal_oracle_and_tracks_exact(values, n1):
    n1 = 5 + min(n1, len(values) - 10)
    a, b = values[:n1], values[n1:]
    r = wilcoxon_rank_sum(a, b)
    assert r.p_value == pytest.approx(rank_sum_normal_p(a, b), abs=1e-12)
    # the approximation stays within a few points of the exact permutation p
    assert abs(r.p_value - rank_sum_exact_p(a, b)) < 0.1


def test_mean_sd_and_sem():
    m, sd = mean_sd([1, 2, 3, 4])
    assert m == 2.5 and sd == pytest.approx(math.sqrt(5 / 3))
    assert sem([1, 2, 3, 4]) == pytest.approx(sd / 2)
    assert mean_sd([7]) == (7.0, 0.0) and sem([7]) == 0.0
    with pytest.raises(ValueError):
        mean_sd([])


def test_mean_sem_curve():
    curve = mean_sem_curve([[1, 2], [3, 2]])
    assert curve[0] == pytest.approx((2.0, 1.0))
    assert curve[1] == (2.0, 0.0)
    with pytest.raises(ValueError):
        mean_sem_curve([[1, 2], [3]])


def test_separated_samples_against_exact_enumeration():
    a, b = list(range(1, 11)), list(range(11, 21))
    exact = rank_sum_exact_p(a, b)
    assert exact == pytest.approx(2 / math.comb(20, 10))
    assert wilcoxon_rank_sum(a, b).p_value < 0.05 and exact < 0.05
