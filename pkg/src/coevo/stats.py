"""Summary statistics and the two-sided Wilcoxon rank-sum comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as sps

ALPHA = 0.05
MIN_SAMPLE = 5


@dataclass(frozen=True)
class RankSumResult:
    statistic: float  # Mann-Whitney U of sample_a
    p_value: float
    verdict: str  # "+", "≈" or "−" as seen from sample_a


def wilcoxon_rank_sum(sample_a: Sequence[float], sample_b: Sequence[float], alpha: float = ALPHA) -> RankSumResult:
    """Normal approximation with tie correction and no continuity correction.

    The verdict is ``+`` when ``sample_a`` is significantly larger (by median,
    then mean), ``−`` when significantly smaller, ``≈`` otherwise.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if len(a) < MIN_SAMPLE or len(b) < MIN_SAMPLE:
        raise ValueError(f"each sample needs at least {MIN_SAMPLE} values, got {len(a)} and {len(b)}")
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return RankSumResult(len(a) * len(b) / 2, 1.0, "≈")
    res = sps.mannwhitneyu(a, b, alternative="two-sided", use_continuity=False, method="asymptotic")
    u, p = float(res.statistic), float(res.pvalue)
    if p >= alpha:
        return RankSumResult(u, p, "≈")
    ma, mb = np.median(a), np.median(b)
    better = ma > mb if ma != mb else a.mean() > b.mean()
    return RankSumResult(u, p, "+" if better else "−")


def mean_sd(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (ddof=1; zero for one value)."""
    v = np.asarray(values, dtype=float)
    if len(v) == 0:
        raise ValueError("no values")
    return float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0


def sem(values: Sequence[float]) -> float:
    v = np.asarray(values, dtype=float)
    return float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0


def mean_sem_curve(traces: Sequence[Sequence[float]]) -> list[tuple[float, float]]:
    """Per-generation (mean, SEM) across equally long traces."""
    arr = np.asarray(traces, dtype=float)
    if arr.ndim != 2:
        raise ValueError("traces must be equally long sequences")
    m = arr.mean(axis=0)
    s = arr.std(axis=0, ddof=1) / math.sqrt(arr.shape[0]) if arr.shape[0] > 1 else np.zeros(arr.shape[1])
    return [(float(x), float(y)) for x, y in zip(m, s)]
