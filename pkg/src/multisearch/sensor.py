"""Cone-limited line-of-sight sensing and simulated object detection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .world import Cell, GridWorld, RobotState


@dataclass(frozen=True)
class SensorConfig:
    range: int = 10
    fov_deg: float = 79.0
    turn_increment: int = 30

    def __post_init__(self):
        if self.range < 1:
            raise ValueError("sensor range must be >= 1")
        if not 0 < self.fov_deg <= 360:
            raise ValueError("fov_deg must be in (0, 360]")
        if not 0 < self.turn_increment < 360 or 360 % self.turn_increment:
            raise ValueError("turn_increment must divide 360")

    @property
    def half_fov(self) -> float:
        return math.radians(self.fov_deg) / 2.0


@dataclass(frozen=True)
class Detection:
    class_id: int
    cell: Cell
    object_index: int
    target_index: int | None = None

    @property
    def is_target(self) -> bool:
        return self.target_index is not None


@dataclass(frozen=True, eq=False)
class Observation:
    """One sensing step.

    ``cells`` is an ``(N, 2)`` array of visible ``(x, y)``; ``angles`` holds
    the signed off-axis angle in radians; ``occluding`` marks obstacle cells.
    """

    cells: np.ndarray
    angles: np.ndarray
    occluding: np.ndarray
    detections: tuple[Detection, ...]
    room_histogram: np.ndarray

    @property
    def visible_cells(self) -> set[tuple[Cell, float, bool]]:
        return {
            ((int(c[0]), int(c[1])), float(a), bool(o))
            for c, a, o in zip(self.cells, self.angles, self.occluding)
        }

    def visible_set(self) -> set[Cell]:
        return {(int(c[0]), int(c[1])) for c in self.cells}

    @classmethod
    def empty(cls, n_room_types: int = 1) -> "Observation":
        return cls(
            cells=np.zeros((0, 2), dtype=np.int64),
            angles=np.zeros(0),
            occluding=np.zeros(0, dtype=bool),
            detections=(),
            room_histogram=np.zeros(n_room_types, dtype=np.int64),
        )


def _segment_touches_cell(dx: int, dy: int, cx: int, cy: int) -> bool:
    """Does the closed segment (0,0)-(dx,dy) touch the closed unit square at (cx,cy)?"""
    return _entry(dx, dy, cx, cy) is not None


def _entry(dx: int, dy: int, cx: int, cy: int) -> Fraction | None:
    """Ray parameter in [0, 1] where the segment first touches the square, or None."""
    lo, hi = Fraction(0), Fraction(1)
    for d, c in ((dx, cx), (dy, cy)):
        if d == 0:
            if abs(c) * 2 > 1:
                return None
            continue
        a = Fraction(2 * c - 1, 2 * d)
        b = Fraction(2 * c + 1, 2 * d)
        if a > b:
            a, b = b, a
        lo, hi = max(lo, a), min(hi, b)
    return lo if lo <= hi else None


def supercover(dx: int, dy: int) -> list[Cell]:
    """Cells strictly between the origin and ``(dx, dy)`` touched by the centre-to-centre ray.

    Cells touched only at a corner are included, so a ray grazing an
    obstacle corner counts as blocked.  Cells are listed in the order the
    ray reaches them.
    """
    cells = []
    for cy in range(min(0, dy), max(0, dy) + 1):
        for cx in range(min(0, dx), max(0, dx) + 1):
            if (cx, cy) in ((0, 0), (dx, dy)):
                continue
            t = _entry(dx, dy, cx, cy)
            if t is not None:
                cells.append((t, abs(cx) + abs(cy), cy, cx))
    return [(cx, cy) for _, _, cy, cx in sorted(cells)]


@dataclass(frozen=True)
class _Template:
    offsets: np.ndarray  # (N, 2)
    angles: np.ndarray  # (N,)
    ray_x: np.ndarray  # (N, M) intermediate offsets, padded with 0
    ray_y: np.ndarray
    ray_mask: np.ndarray  # (N, M) valid entries
    index: np.ndarray  # (2r+1, 2r+1) offset -> row in ``offsets``, -1 outside the view


@lru_cache(maxsize=None)
def _ray_table(rng: int) -> dict[Cell, tuple[Cell, ...]]:
    table = {}
    for dy in range(-rng, rng + 1):
        for dx in range(-rng, rng + 1):
            if dx * dx + dy * dy <= rng * rng:
                table[(dx, dy)] = tuple(supercover(dx, dy))
    return table


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


@lru_cache(maxsize=None)
def _template(rng: int, fov_deg: float, heading: int) -> _Template:
    half = math.radians(fov_deg) / 2.0
    h = math.radians(heading)
    offsets, angles, rays = [], [], []
    for (dx, dy), ray in _ray_table(rng).items():
        theta = 0.0 if (dx, dy) == (0, 0) else _wrap(math.atan2(dy, dx) - h)
        if abs(theta) <= half + 1e-9:
            offsets.append((dx, dy))
            angles.append(max(-half, min(half, theta)))
            rays.append(ray)
    m = max((len(r) for r in rays), default=0) or 1
    ray_x = np.zeros((len(rays), m), dtype=np.int64)
    ray_y = np.zeros((len(rays), m), dtype=np.int64)
    mask = np.zeros((len(rays), m), dtype=bool)
    for i, ray in enumerate(rays):
        for k, (rx, ry) in enumerate(ray):
            ray_x[i, k], ray_y[i, k], mask[i, k] = rx, ry, True
    index = np.full((2 * rng + 1, 2 * rng + 1), -1, dtype=np.int64)
    for i, (dx, dy) in enumerate(offsets):
        index[dy + rng, dx + rng] = i
    return _Template(np.array(offsets, dtype=np.int64), np.array(angles), ray_x, ray_y, mask, index)


def observe(world: GridWorld, robot: RobotState, sensor: SensorConfig = SensorConfig()) -> Observation:
    """Everything the robot sees from its current pose.

    A cell is visible iff it lies within range and half-FOV and no obstacle
    sits strictly between the robot and the cell on the supercover ray.  An
    obstacle cell is also seen when it is the first obstacle struck by the
    ray toward some cell of the view.
    """
    tpl = _template(sensor.range, float(sensor.fov_deg), robot.heading)
    rx, ry = robot.cell
    xs = tpl.offsets[:, 0] + rx
    ys = tpl.offsets[:, 1] + ry
    inside = (xs >= 0) & (xs < world.width) & (ys >= 0) & (ys < world.height)
    # every intermediate cell lies inside the bounding box of an in-bounds ray
    occ = world.occupancy
    ix = np.clip(tpl.ray_x + rx, 0, world.width - 1)
    iy = np.clip(tpl.ray_y + ry, 0, world.height - 1)
    hits = occ[iy, ix] & tpl.ray_mask
    blocked = hits.any(axis=1)
    vis = inside & ~blocked
    rays = np.nonzero(inside & blocked)[0]
    if len(rays):
        first = hits[rays].argmax(axis=1)
        struck = tpl.index[tpl.ray_y[rays, first] + sensor.range, tpl.ray_x[rays, first] + sensor.range]
        vis[struck[struck >= 0]] = True
    vx, vy = xs[vis], ys[vis]
    cells = np.stack([vx, vy], axis=1)
    occluding = occ[vy, vx]
    free = ~occluding
    hist = np.bincount(world.room_label[vy[free], vx[free]], minlength=world.n_room_types)

    target_of = {obj: j for j, obj in enumerate(world.targets)}
    detections = []
    obj_idx = world.object_grid[vy, vx]
    for k in np.nonzero(obj_idx >= 0)[0]:
        idx = int(obj_idx[k])
        obj = world.scene_objects[idx]
        detections.append(Detection(obj.class_id, obj.cell, idx, target_of.get(idx)))
    return Observation(
        cells=cells,
        angles=tpl.angles[vis],
        occluding=occluding,
        detections=tuple(detections),
        room_histogram=hist.astype(np.int64),
    )
