"""Rank statistics for the two-group feature comparison.

Implements the Mann-Whitney U test (exact enumeration for small samples,
normal approximation with tie and continuity corrections otherwise) and
Cliff's delta with the conventional effect-size buckets
(0.147 / 0.33 / 0.474).
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

# Exhaustive enumeration is used below this many arrangements; small
# samples paired with a huge counterpart fall back to the approximation.
_MAX_ENUMERATION = 2_000_000

EFFECT_THRESHOLDS = (0.147, 0.33, 0.474)
EFFECT_LEVELS = ("Negligible", "Small", "Medium", "Large")


@dataclass(frozen=True)
class StatResult:
    u_statistic: float
    p_value: float
    cliffs_delta: float
    effect_level: str

    def to_dict(self) -> dict:
        return {
            "u_statistic": self.u_statistic,
            "p_value": self.p_value,
            "cliffs_delta": self.cliffs_delta,
            "effect_level": self.effect_level,
        }


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        midrank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = midrank
        i = j + 1
    return ranks


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """U statistic of the first sample and the two-sided p-value.

    min(n) <= 20 with a tractable number of arrangements: exact p by
    enumerating all C(n+m, n) group assignments of the pooled values
    (valid under ties).  Otherwise: normal approximation with midrank tie
    correction and 0.5 continuity correction.
    """
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("mann_whitney_u requires two non-empty samples")

    ranks = _midranks(list(a) + list(b))
    r1 = sum(ranks[:n1])
    u1 = r1 - n1 * (n1 + 1) / 2
    mean_u = n1 * n2 / 2

    if min(n1, n2) <= 20 and math.comb(n1 + n2, n1) <= _MAX_ENUMERATION:
        observed_dev = abs(u1 - mean_u)
        hits = 0
        total = 0
        offset = n1 * (n1 + 1) / 2
        for combo in combinations(range(n1 + n2), n1):
            u_perm = sum(ranks[i] for i in combo) - offset
            if abs(u_perm - mean_u) >= observed_dev - 1e-12:
                hits += 1
            total += 1
        return u1, hits / total

    n = n1 + n2
    tie_term = sum(t**3 - t for t in Counter(ranks).values())
    sigma_sq = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma_sq <= 0:
        return u1, 1.0
    z = max(abs(u1 - mean_u) - 0.5, 0.0) / math.sqrt(sigma_sq)
    p = math.erfc(z / math.sqrt(2))
    return u1, min(1.0, p)


def cliffs_delta(a: Sequence[float], b: Sequence[float]) -> tuple[float, str]:
    """(#(a_i > b_j) - #(a_i < b_j)) / (|a|*|b|) and its effect level."""
    if not a or not b:
        raise ValueError("cliffs_delta requires two non-empty samples")
    b_sorted = sorted(b)
    m = len(b_sorted)
    dominance = 0
    for x in a:
        greater = bisect_left(b_sorted, x)          # b_j < x
        less = m - bisect_right(b_sorted, x)        # b_j > x
        dominance += greater - less
    delta = dominance / (len(a) * m)
    return delta, effect_level(delta)


def effect_level(delta: float) -> str:
    magnitude = abs(delta)
    for threshold, label in zip(EFFECT_THRESHOLDS, EFFECT_LEVELS):
        if magnitude < threshold:
            return label
    return EFFECT_LEVELS[-1]


def compare_samples(a: Sequence[float], b: Sequence[float]) -> StatResult:
    """Both tests for one feature across two groups."""
    u, p = mann_whitney_u(a, b)
    delta, level = cliffs_delta(a, b)
    return StatResult(u_statistic=u, p_value=p, cliffs_delta=delta, effect_level=level)
