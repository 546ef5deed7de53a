"""Static grid worlds, robot kinematics and the ground-truth distance oracle.

Coordinates are ``(x, y)`` cell indices; arrays are indexed ``[y, x]``.
Headings are integer degrees measured counter-clockwise from the +x axis,
so ``TurnLeft`` increases the heading.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

import numpy as np

Cell = tuple[int, int]

MAX_TARGETS = 8

# 8-neighbourhood in heading order: 0, 45, 90, ... degrees.
DIRECTIONS_8: tuple[Cell, ...] = (
    (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1),
)
NEIGHBOURS_4: tuple[Cell, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))


class WorldError(ValueError):
    """Raised for worlds that violate a structural invariant."""


class _Unreachable:
    """Marker returned when no path exists. Falsy, and never equal to a number."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __bool__(self) -> bool:
        return False

    def __repr__(self) -> str:
        return "UNREACHABLE"

    def __reduce__(self):
        return (_Unreachable, ())


UNREACHABLE = _Unreachable()


class Action(enum.Enum):
    FORWARD = "forward"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    STOP = "stop"


@dataclass(frozen=True)
class RobotState:
    cell: Cell
    heading: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cell", (int(self.cell[0]), int(self.cell[1])))
        object.__setattr__(self, "heading", int(self.heading) % 360)


@dataclass(frozen=True)
class SceneObject:
    class_id: int
    cell: Cell


@dataclass(frozen=True, eq=False)
class GridWorld:
    """Immutable ground truth for one environment.

    ``occupancy`` is a boolean array, True for obstacle cells.  ``room_label``
    holds the room-type id of every cell.  ``targets`` indexes into
    ``scene_objects``.
    """

    occupancy: np.ndarray
    room_label: np.ndarray
    scene_objects: tuple[SceneObject, ...]
    targets: tuple[int, ...]
    n_room_types: int
    n_classes: int
    resolution: float = 0.25
    _object_grid: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        occ = np.array(self.occupancy, dtype=bool)
        rooms = np.array(self.room_label, dtype=np.int16)
        occ.flags.writeable = False
        rooms.flags.writeable = False
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "room_label", rooms)
        object.__setattr__(self, "scene_objects", tuple(self.scene_objects))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        self._validate()
        grid = np.full(occ.shape, -1, dtype=np.int32)
        for idx, obj in enumerate(self.scene_objects):
            grid[obj.cell[1], obj.cell[0]] = idx
        grid.flags.writeable = False
        object.__setattr__(self, "_object_grid", grid)

    def _validate(self):
        if self.occupancy.ndim != 2 or self.occupancy.shape != self.room_label.shape:
            raise WorldError("occupancy and room rasters must be 2-D and equally sized")
        if not 1 <= self.n_room_types <= 16:
            raise WorldError("room type count out of range (1..16)")
        if self.room_label.min() < 0 or self.room_label.max() >= self.n_room_types:
            raise WorldError("room label out of range")
        if not 1 <= len(self.targets) <= MAX_TARGETS:
            raise WorldError("K out of range")
        seen = set()
        for obj in self.scene_objects:
            if not 0 <= obj.class_id < self.n_classes:
                raise WorldError(f"object class {obj.class_id} out of range")
            if not self.in_bounds(obj.cell) or self.occupancy[obj.cell[1], obj.cell[0]]:
                raise WorldError(f"scene object at {obj.cell} is not on a free cell")
            if obj.cell in seen:
                raise WorldError(f"two scene objects share cell {obj.cell}")
            seen.add(obj.cell)
        if len(set(self.targets)) != len(self.targets):
            raise WorldError("duplicate target index")
        for t in self.targets:
            if not 0 <= t < len(self.scene_objects):
                raise WorldError(f"target index {t} is not a scene object")
        cells = [self.scene_objects[t].cell for t in self.targets]
        dist = bfs_distances(self.occupancy, cells[0])
        for c in cells[1:]:
            if dist[c[1], c[0]] < 0:
                raise WorldError("targets are not mutually reachable")

    @property
    def width(self) -> int:
        return self.occupancy.shape[1]

    @property
    def height(self) -> int:
        return self.occupancy.shape[0]

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    @property
    def target_cells(self) -> list[Cell]:
        return [self.scene_objects[t].cell for t in self.targets]

    @property
    def target_classes(self) -> list[int]:
        return [self.scene_objects[t].class_id for t in self.targets]

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and not self.occupancy[cell[1], cell[0]]

    def object_at(self, cell: Cell) -> int | None:
        idx = int(self._object_grid[cell[1], cell[0]])
        return None if idx < 0 else idx

    @property
    def object_grid(self) -> np.ndarray:
        return self._object_grid

    def free_cells(self) -> list[Cell]:
        ys, xs = np.nonzero(~self.occupancy)
        return [(int(x), int(y)) for y, x in zip(ys, xs)]

    def validate_spawn(self, cell: Cell) -> None:
        if not self.is_free(cell):
            raise WorldError(f"spawn {cell} is not a free cell")
        dist = bfs_distances(self.occupancy, cell)
        for c in self.target_cells:
            if dist[c[1], c[0]] < 0:
                raise WorldError(f"target at {c} unreachable from spawn {cell}")

    def __eq__(self, other):
        if not isinstance(other, GridWorld):
            return NotImplemented
        return (
            np.array_equal(self.occupancy, other.occupancy)
            and np.array_equal(self.room_label, other.room_label)
            and self.scene_objects == other.scene_objects
            and self.targets == other.targets
            and self.n_room_types == other.n_room_types
            and self.n_classes == other.n_classes
            and self.resolution == other.resolution
        )

    __hash__ = None

    @classmethod
    def from_ascii(cls, rows: list[str], objects=(), targets=(), n_classes=None,
                   n_room_types=1, resolution=0.25) -> "GridWorld":
        """Build a single-room world from text rows ('#' obstacle, '.' free).

        Row 0 of ``rows`` is ``y = 0``.  ``objects`` is a sequence of
        ``(class_id, (x, y))``.
        """
        occ = np.array([[ch == "#" for ch in row] for row in rows], dtype=bool)
        objs = tuple(SceneObject(int(c), (int(p[0]), int(p[1]))) for c, p in objects)
        if n_classes is None:
            n_classes = max((o.class_id for o in objs), default=0) + 1
        return cls(
            occupancy=occ,
            room_label=np.zeros(occ.shape, dtype=np.int16),
            scene_objects=objs,
            targets=tuple(targets),
            n_room_types=n_room_types,
            n_classes=n_classes,
            resolution=resolution,
        )


def forward_offset(heading: int) -> Cell:
    """Grid step for a Forward action: the 8-neighbour nearest to ``heading``."""
    return DIRECTIONS_8[int(round((heading % 360) / 45.0)) % 8]


def step(world: GridWorld, robot: RobotState, action: Action, turn_increment: int = 30):
    """Apply one discrete action.  Returns ``(new_state, blocked)``.

    A Forward into an obstacle (or off the map) leaves the state unchanged
    and reports ``blocked=True``.
    """
    if action is Action.TURN_LEFT:
        return RobotState(robot.cell, robot.heading + turn_increment), False
    if action is Action.TURN_RIGHT:
        return RobotState(robot.cell, robot.heading - turn_increment), False
    if action is Action.FORWARD:
        dx, dy = forward_offset(robot.heading)
        nxt = (robot.cell[0] + dx, robot.cell[1] + dy)
        if world.is_free(nxt):
            return RobotState(nxt, robot.heading), False
        return robot, True
    return robot, False


def bfs_distances(blocked: np.ndarray, source: Cell) -> np.ndarray:
    """4-connected hop distances from ``source`` over non-blocked cells; -1 if unreachable."""
    h, w = blocked.shape
    dist = np.full((h, w), -1, dtype=np.int32)
    sx, sy = source
    if blocked[sy, sx]:
        return dist
    flat_blocked = blocked.ravel().tolist()
    flat = [-1] * (h * w)
    start = sy * w + sx
    flat[start] = 0
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        d = flat[cur] + 1
        x = cur % w
        for nxt, ok in ((cur + 1, x + 1 < w), (cur - 1, x > 0), (cur + w, cur + w < h * w),
                        (cur - w, cur >= w)):
            if ok and flat[nxt] < 0 and not flat_blocked[nxt]:
                flat[nxt] = d
                queue.append(nxt)
    dist[:] = np.asarray(flat, dtype=np.int32).reshape(h, w)
    return dist


def shortest_path_len(world: GridWorld, a: Cell, b: Cell):
    """Exact 4-connected hop count between two free cells, or ``UNREACHABLE``."""
    for c in (a, b):
        if not world.is_free(c):
            raise WorldError(f"{c} is not a free cell")
    if a == b:
        return 0
    d = int(bfs_distances(world.occupancy, a)[b[1], b[0]])
    return UNREACHABLE if d < 0 else d
