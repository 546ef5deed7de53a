"""Episode metrics: success rate, MSPL and the exact multi-target optimal length."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .world import MAX_TARGETS, Cell, GridWorld, WorldError, bfs_distances


@dataclass(frozen=True)
class EpisodeResult:
    seed: int
    policy: str
    success: bool
    path_length: int
    optimal_length: int
    steps: int
    found_steps: tuple[int | None, ...]
    fail_reason: str = ""
    found_order: tuple[int, ...] = ()
    score_updates: int = field(default=0, compare=False)

    @property
    def spl_term(self) -> float:
        """This episode's contribution ``S * l / max(p, l)`` to MSPL."""
        if not self.success:
            return 0.0
        denom = max(self.path_length, self.optimal_length)
        return 1.0 if denom == 0 else self.optimal_length / denom


def pairwise_distances(world: GridWorld, start: Cell, targets) -> np.ndarray:
    """``(K+1) x (K+1)`` exact grid distances; row/column 0 is the start."""
    points = [start, *targets]
    n = len(points)
    d = np.zeros((n, n), dtype=np.int64)
    for i, p in enumerate(points):
        field_ = bfs_distances(world.occupancy, p)
        for j, q in enumerate(points):
            v = int(field_[q[1], q[0]])
            if v < 0:
                raise WorldError(f"target at {q} is unreachable from {p}")
            d[i, j] = v
    return d


def optimal_tour(dist: np.ndarray) -> tuple[int, list[int]]:
    """Shortest open walk from node 0 through all other nodes (Held-Karp).

    Returns ``(length, order)`` where ``order`` lists the visited node
    indices (1-based, excluding the start).  Ties resolve to the
    lexicographically smallest order.
    """
    d = [[int(v) for v in row] for row in np.asarray(dist)]
    k = len(d) - 1
    if k == 0:
        return 0, []
    full = (1 << k) - 1
    # tail[mask][j]: cheapest walk from target j through every target outside mask
    tail = [[math.inf] * k for _ in range(1 << k)]
    tail[full] = [0] * k
    for mask in range(full - 1, 0, -1):
        for j in range(k):
            if not mask >> j & 1:
                continue
            tail[mask][j] = min(
                (d[j + 1][n + 1] + tail[mask | 1 << n][n] for n in range(k) if not mask >> n & 1),
                default=0,
            )
    length = min(d[0][n + 1] + tail[1 << n][n] for n in range(k))

    order, mask, last, budget = [], 0, 0, length
    while mask != full:
        for n in range(k):
            if mask >> n & 1:
                continue
            if d[last][n + 1] + tail[mask | 1 << n][n] == budget:
                budget -= d[last][n + 1]
                mask |= 1 << n
                last = n + 1
                order.append(last)
                break
    return int(length), order


def optimal_multi_target_length(world: GridWorld, start: Cell, targets=None) -> int:
    """Length of the shortest open tour from ``start`` visiting every target cell."""
    targets = world.target_cells if targets is None else list(targets)
    if len(targets) > MAX_TARGETS:
        raise WorldError(f"at most {MAX_TARGETS} targets supported")
    return optimal_tour(pairwise_distances(world, start, targets))[0]


def success_rate(results) -> float:
    results = list(results)
    if not results:
        raise ValueError("success rate of an empty result list")
    return sum(1 for r in results if r.success) / len(results)


def mspl(results) -> float:
    """Mean of ``S_i * l_i / max(p_i, l_i)`` over episodes."""
    results = list(results)
    if not results:
        raise ValueError("MSPL of an empty result list")
    return sum(r.spl_term for r in results) / len(results)
