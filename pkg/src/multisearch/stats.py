"""Paired significance testing: Wilcoxon signed-rank with Bonferroni correction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EXACT_MIN, EXACT_MAX = 6, 50


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # W = min(W+, W-)
    p_value: float
    n: int  # non-zero differences
    method: str  # "exact", "normal" or "degenerate"


def _ranks(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based) with ties sharing the mean rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_v = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_two_sided(doubled: list[int], w_plus2: int) -> float:
    """Exact null distribution of 2*W+ by subset-sum counting over doubled ranks."""
    total = sum(doubled)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled:
        for s in range(total, r - 1, -1):
            counts[s] += counts[s - r]
    n_sub = 2 ** len(doubled)
    lo = min(w_plus2, total - w_plus2)
    tail = sum(counts[: lo + 1])
    return min(1.0, 2.0 * tail / n_sub)


def wilcoxon_signed_rank(a, b) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test of paired samples ``a`` and ``b``.

    Zero differences are discarded.  With 6 to 50 non-zero differences the
    p-value comes from the exact permutation distribution (ties handled via
    mid-ranks); otherwise from the normal approximation with tie and
    continuity corrections.  All-zero differences give p = 1.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-D and of equal length")
    d = a - b
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, "degenerate")
    ranks = _ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)
    if EXACT_MIN <= n <= EXACT_MAX:
        doubled = [int(round(2 * r)) for r in ranks]
        return WilcoxonResult(stat, _exact_two_sided(doubled, int(round(2 * w_plus))), n, "exact")
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float((tie_counts ** 3 - tie_counts).sum()) / 48.0
    if var <= 0:
        return WilcoxonResult(stat, 1.0, n, "normal")
    z = max(0.0, abs(w_plus - mean) - 0.5) / math.sqrt(var)
    p = math.erfc(z / math.sqrt(2.0))
    return WilcoxonResult(stat, min(1.0, p), n, "normal")


def bonferroni_threshold(alpha: float, m: int) -> float:
    if m < 1:
        raise ValueError("need at least one comparison")
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    return alpha / m
