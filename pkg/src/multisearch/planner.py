"""Frontier extraction and selection, A* planning, and target bookkeeping.

Frontier cells are known-free cells with a 4-neighbour that is still
unknown.  They are grouped into 8-connected segments; each segment
contributes one goal, its midpoint.  The midpoint is taken along the
segment's longest geodesic: with ``a, b`` the pair of cells at maximal
in-segment distance ``D`` (lexicographically first in ``(y, x)`` order), it
is the first cell ``c`` in ``(y, x)`` order on a shortest ``a-b`` walk with
``d(a, c) = floor(D / 2)``.  For a simple chain this is the middle cell,
the lower one for even lengths.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra, shortest_path

from .mapping import FREE, OBSTACLE, UNKNOWN, OccupancyMap
from .world import NEIGHBOURS_4, UNREACHABLE, Action, Cell, RobotState

_EIGHT = np.ones((3, 3), dtype=bool)
# east, north, west, south: the heading order 0, 90, 180, 270
_AXES = ((1, 0), (0, 1), (-1, 0), (0, -1))
_QUARTERS = (0, 1, 2, 1)


@dataclass(frozen=True)
class Frontier:
    cell: Cell
    score: float = 0.0
    segment_len: int = 1


@dataclass(frozen=True)
class TargetWaypoint:
    cell: Cell
    target: int


@dataclass
class SearchState:
    remaining: list[int]
    found_steps: dict[int, int] = field(default_factory=dict)
    found_order: list[int] = field(default_factory=list)
    known_targets: dict[int, Cell] = field(default_factory=dict)
    current_goal: Frontier | TargetWaypoint | None = None
    path: list[Cell] | None = None
    step_count: int = 0
    travelled: int = 0
    # poses visited since the occupancy map last changed, for cycle detection
    poses: set = field(default_factory=set)
    locked: bool = False


def frontier_mask(cells: np.ndarray) -> np.ndarray:
    free = cells == FREE
    unknown = cells == UNKNOWN
    near = np.zeros_like(unknown)
    near[1:, :] |= unknown[:-1, :]
    near[:-1, :] |= unknown[1:, :]
    near[:, 1:] |= unknown[:, :-1]
    near[:, :-1] |= unknown[:, 1:]
    return free & near


@lru_cache(maxsize=4096)
def _segment_midpoint(key: bytes) -> tuple[int, int]:
    pts = np.frombuffer(key, dtype=np.int32).reshape(-1, 2)  # (y, x), sorted
    n = len(pts)
    if n <= 2:
        return int(pts[0, 1]), int(pts[0, 0])
    ys, xs = pts[:, 0], pts[:, 1]
    y0, x0 = ys.min(), xs.min()
    h, w = ys.max() - y0 + 3, xs.max() - x0 + 3
    index = np.full((h, w), -1, dtype=np.int64)
    index[ys - y0 + 1, xs - x0 + 1] = np.arange(n)
    src, dst = [], []
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            nb = index[ys - y0 + 1 + dy, xs - x0 + 1 + dx]
            ok = nb >= 0
            src.append(np.arange(n)[ok])
            dst.append(nb[ok])
    src, dst = np.concatenate(src), np.concatenate(dst)
    graph = csr_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
    dist = shortest_path(graph, method="D", unweighted=True)
    diameter = dist.max()
    a, b = next((i, j) for i, j in np.argwhere(dist == diameter) if i < j)
    half = diameter // 2
    on_walk = (dist[a] == half) & (dist[a] + dist[b] == diameter)
    c = int(np.argmax(on_walk))
    return int(xs[c]), int(ys[c])


def extract_frontiers(occ: OccupancyMap, min_size: int = 1, with_segments: bool = False):
    """Midpoints of all frontier segments with at least ``min_size`` cells, ordered by (y, x).

    With ``with_segments`` also returns an int map whose value at a frontier
    cell is one plus the index of its segment's entry in the list (0 elsewhere).
    """
    mask = frontier_mask(occ.cells)
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        return ([], np.zeros(mask.shape, dtype=np.int32)) if with_segments else []
    ys, xs = np.nonzero(labels)  # row-major, so each segment is already (y, x) sorted
    lab = labels[ys, xs]
    order = np.argsort(lab, kind="stable")
    ys, xs, lab = ys[order], xs[order], lab[order]
    bounds = np.flatnonzero(np.diff(lab)) + 1
    out = []
    for seg_y, seg_x in zip(np.split(ys, bounds), np.split(xs, bounds)):
        if len(seg_y) < min_size:
            continue
        key = np.stack([seg_y, seg_x], axis=1).astype(np.int32).tobytes()
        out.append((Frontier(_segment_midpoint(key), 0.0, len(seg_y)), seg_y, seg_x))
    out.sort(key=lambda t: (t[0].cell[1], t[0].cell[0]))
    if not with_segments:
        return [f for f, _, _ in out]
    segments = np.zeros(mask.shape, dtype=np.int32)
    for i, (_, seg_y, seg_x) in enumerate(out):
        segments[seg_y, seg_x] = i + 1
    return [f for f, _, _ in out], segments


def distance_field(occ: OccupancyMap, start: Cell, unknown_cost: float = 1.0) -> np.ndarray:
    """Planning distance from ``start`` to every cell over free and unknown cells (inf if cut off).

    Entering a free cell costs 1, entering an unknown cell ``unknown_cost``.
    """
    if unknown_cost <= 0:
        raise ValueError("unknown_cost must be positive")
    cells = occ.cells
    h, w = cells.shape
    passable = (cells != OBSTACLE).ravel()
    cost = np.where(cells.ravel() == UNKNOWN, unknown_cost, 1.0)
    idx = np.arange(h * w).reshape(h, w)
    pairs = [(idx[:, :-1], idx[:, 1:]), (idx[:, 1:], idx[:, :-1]),
             (idx[:-1, :], idx[1:, :]), (idx[1:, :], idx[:-1, :])]
    src = np.concatenate([p[0].ravel() for p in pairs])
    dst = np.concatenate([p[1].ravel() for p in pairs])
    ok = passable[src] & passable[dst]
    src, dst = src[ok], dst[ok]
    graph = csr_matrix((cost[dst], (src, dst)), shape=(h * w, h * w))
    s = start[1] * w + start[0]
    if not passable[s]:
        return np.full((h, w), np.inf)
    return dijkstra(graph, indices=s).reshape(h, w)


def select_frontier(frontiers, unified: np.ndarray, robot: RobotState, distances=None,
                    tolerance: float = 0.0, prefer: Cell | None = None):
    """Highest unified score wins; ties go to the nearer frontier, then to (y, x) order.

    Scores of at least ``(1 - tolerance)`` times the best count as tied, and
    among tied frontiers ``prefer`` (the goal being pursued) wins before
    distance is consulted.  A relative band keeps the choice invariant to
    rescaling the score map.  ``distances`` is a planning distance field from the robot;
    frontiers it marks unreachable are skipped.  Returns None when nothing
    is left.
    """
    if not 0 <= tolerance < 1:
        raise ValueError("tolerance must lie in [0, 1)")
    cands = []
    for f in frontiers:
        x, y = f.cell
        d = float(distances[y, x]) if distances is not None else 0.0
        if math.isfinite(d):
            cands.append((float(unified[y, x]), d, f))
    if not cands:
        return None
    top = max(c[0] for c in cands)
    tied = [c for c in cands if c[0] >= top * (1.0 - tolerance)] if tolerance > 0 else \
        [c for c in cands if c[0] == top]
    score, _, best = min(tied, key=lambda c: (c[2].cell != prefer, c[1], c[2].cell[1], c[2].cell[0]))
    return Frontier(best.cell, score, best.segment_len)


def select_nearest_frontier(frontiers, distances, prefer: Cell | None = None):
    """Nearest reachable frontier by planning distance; ignores every score map.

    On a distance tie ``prefer`` wins, then (y, x) order.
    """
    best, best_key = None, None
    for f in frontiers:
        x, y = f.cell
        d = float(distances[y, x])
        key = (d, f.cell != prefer, y, x)
        if math.isfinite(d) and (best_key is None or key < best_key):
            best, best_key = f, key
    return best


def plan_path(occ: OccupancyMap, start: Cell, goal: Cell, unknown_cost: float = 1.0,
              heading: int | None = None):
    """A* over free and unknown cells (4-connected).

    Among the cheapest paths it returns one with the fewest quarter turns,
    counting the turn out of ``heading`` when that is axis-aligned.  Returns
    the cell sequence from ``start`` to ``goal`` inclusive, or
    ``UNREACHABLE`` when known obstacles seal the goal off.
    """
    cells = occ.cells
    h, w = cells.shape
    if cells[goal[1], goal[0]] == OBSTACLE or cells[start[1], start[0]] == OBSTACLE:
        return UNREACHABLE
    if start == goal:
        return [start]
    flat = cells.ravel().tolist()
    hscale = min(1.0, unknown_cost)
    gx, gy = goal
    d0 = 4
    if heading is not None and heading % 90 == 0:
        d0 = (heading % 360) // 90
    # state = cell * 5 + direction of arrival (4 = none yet)
    s = (start[1] * w + start[0]) * 5 + d0
    best = {s: (0.0, 0)}
    parent = {s: -1}
    heap = [(hscale * (abs(start[0] - gx) + abs(start[1] - gy)), 0, 0, s)]
    counter = 0
    closed = set()
    while heap:
        _, turns, _, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        closed.add(cur)
        cell, d = divmod(cur, 5)
        cx, cy = cell % w, cell // w
        if cx == gx and cy == gy:
            path = []
            while cur >= 0:
                c = cur // 5
                path.append((c % w, c // w))
                cur = parent[cur]
            return path[::-1]
        gc, tc = best[cur]
        for nd, (dx, dy) in enumerate(_AXES):
            nx, ny = cx + dx, cy + dy
            if not (0 <= nx < w and 0 <= ny < h):
                continue
            state = flat[ny * w + nx]
            if state == OBSTACLE:
                continue
            nxt = (ny * w + nx) * 5 + nd
            ng = gc + (unknown_cost if state == UNKNOWN else 1.0)
            nt = tc + (0 if d == 4 else _QUARTERS[(nd - d) % 4])
            old = best.get(nxt)
            if old is None or (ng, nt) < old:
                best[nxt] = (ng, nt)
                parent[nxt] = cur
                counter += 1
                heapq.heappush(heap, (ng + hscale * (abs(nx - gx) + abs(ny - gy)), nt, counter, nxt))
    return UNREACHABLE


def path_still_valid(occ: OccupancyMap, path, unknown_cost: float = 1.0, snapshot=None) -> bool:
    """Whether a cached path is still an optimal plan.

    With unit unknown cost, revealing a cell can only raise costs elsewhere,
    so the path survives until one of its own cells turns out to be an
    obstacle.  Otherwise it survives only while its cells keep the states in
    ``snapshot`` (their states at planning time).
    """
    xs = np.fromiter((c[0] for c in path), dtype=np.int64, count=len(path))
    ys = np.fromiter((c[1] for c in path), dtype=np.int64, count=len(path))
    states = occ.cells[ys, xs]
    if (states == OBSTACLE).any():
        return False
    if unknown_cost == 1.0:
        return True
    return snapshot is not None and np.array_equal(states, snapshot[-len(path):])


def bearing_deg(a: Cell, b: Cell) -> float:
    return math.degrees(math.atan2(b[1] - a[1], b[0] - a[0]))


def next_action(robot: RobotState, path, turn_increment: int = 30, done: bool = False) -> Action:
    """Turn toward the next path cell until within half a turn increment, then go forward."""
    if done:
        return Action.STOP
    if path is None or len(path) < 2:
        raise ValueError("need a path with at least one step")
    diff = (bearing_deg(robot.cell, path[1]) - robot.heading + 180.0) % 360.0 - 180.0
    if diff == -180.0:
        diff = 180.0
    if abs(diff) <= turn_increment / 2.0:
        return Action.FORWARD
    return Action.TURN_LEFT if diff > 0 else Action.TURN_RIGHT


def known_distance(occ: OccupancyMap, a: Cell, b: Cell, limit: int) -> int | None:
    """Hop distance between two cells through known-free cells, searched up to ``limit`` hops."""
    if a == b:
        return 0
    cells = occ.cells
    h, w = cells.shape
    seen = {a}
    frontier = deque([(a, 0)])
    while frontier:
        (x, y), d = frontier.popleft()
        if d >= limit:
            continue
        for dx, dy in NEIGHBOURS_4:
            n = (x + dx, y + dy)
            if n in seen or not (0 <= n[0] < w and 0 <= n[1] < h) or cells[n[1], n[0]] != FREE:
                continue
            if n == b:
                return d + 1
            seen.add(n)
            frontier.append((n, d + 1))
    return None


def on_detection(state: SearchState, obs, robot: RobotState, occ: OccupancyMap,
                 epsilon: int = 2, step_index: int | None = None) -> list[int]:
    """Record sightings of remaining targets and mark those within ``epsilon`` as found.

    Each sighting becomes a remembered waypoint (the detected cell).  Targets
    found in the same step are credited nearest-first.  Returns the targets
    found this call, in that order.
    """
    step_index = state.step_count if step_index is None else step_index
    seen = {}
    for det in obs.detections:
        j = det.target_index
        if j is None or j not in state.remaining:
            continue
        prev = seen.get(j)
        if prev is None or _hop(robot.cell, det.cell) < _hop(robot.cell, prev):
            seen[j] = det.cell
    for j, cell in seen.items():
        state.known_targets[j] = cell
    hits = []
    for j, cell in seen.items():
        d = known_distance(occ, robot.cell, cell, epsilon)
        if d is not None and d <= epsilon:
            hits.append((d, j))
    found = [j for _, j in sorted(hits)]
    for j in found:
        state.remaining.remove(j)
        state.found_steps[j] = step_index
        state.found_order.append(j)
        state.known_targets.pop(j, None)
        if isinstance(state.current_goal, TargetWaypoint) and state.current_goal.target == j:
            state.current_goal, state.path = None, None
    return found


def _hop(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def look_target(occ: OccupancyMap, cell: Cell) -> Cell | None:
    """First unknown 4-neighbour of ``cell``; used when the robot stands on its frontier goal."""
    h, w = occ.shape
    for dx, dy in NEIGHBOURS_4:
        n = (cell[0] + dx, cell[1] + dy)
        if 0 <= n[0] < w and 0 <= n[1] < h and occ.cells[n[1], n[0]] == UNKNOWN:
            return n
    return None
