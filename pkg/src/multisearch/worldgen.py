"""Seeded procedural house generation.

The map is cut into rectangles by binary space partition.  A random
connected subset of them becomes the house; the rest stays solid.  Doors
are cut along a spanning tree of the chosen rooms plus a few extra loops.  Each room is given a
room type, and scene objects are sampled per room from a class-to-room
affinity table, so that room types and object classes are statistically
coupled.  The same table later seeds the synthetic similarity model.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .world import MAX_TARGETS, GridWorld, RobotState, SceneObject, WorldError, bfs_distances


class WorldGenError(WorldError):
    """Raised when no valid world could be produced within the retry budget."""


def default_affinity(n_room_types: int, n_classes: int, home: float = 1.0,
                     secondary: float = 0.25, background: float = 0.0) -> np.ndarray:
    """Room-type x class affinity: each class has a home room and, for odd classes, a second one."""
    a = np.full((n_room_types, n_classes), background)
    for i in range(n_classes):
        a[i % n_room_types, i] = home
        if i % 2 == 1 and n_room_types > 1:
            a[(i // n_room_types + i + 1) % n_room_types, i] = max(secondary, background)
    return a


@dataclass(frozen=True)
class WorldGenParams:
    width: int = 64
    height: int = 64
    n_room_types: int = 5
    n_classes: int = 20
    n_targets: int = 3
    min_room: int = 6
    max_rooms: int = 16
    rooms: tuple[int, int] = (6, 8)
    extra_door_prob: float = 0.3
    objects_per_room: tuple[int, int] = (3, 6)
    affinity: np.ndarray | None = field(default=None, compare=False)
    resolution: float = 0.25
    max_retries: int = 50

    def __post_init__(self):
        if not 1 <= self.n_targets <= MAX_TARGETS:
            raise WorldGenError(f"K out of range: {self.n_targets} (expected 1..{MAX_TARGETS})")
        if not 1 <= self.n_room_types <= 16:
            raise WorldGenError("room type count out of range (1..16)")
        if self.n_classes < self.n_targets:
            raise WorldGenError("need at least K object classes")
        if self.width < 2 * self.min_room + 3 or self.height < self.min_room + 2:
            raise WorldGenError("map too small for the minimum room size")
        if not 1 <= self.rooms[0] <= self.rooms[1]:
            raise WorldGenError("rooms must satisfy 1 <= lo <= hi")
        lo, hi = self.objects_per_room
        if not 0 <= lo <= hi:
            raise WorldGenError("objects_per_room must satisfy 0 <= lo <= hi")
        aff = self.affinity_table()
        if aff.shape != (self.n_room_types, self.n_classes):
            raise WorldGenError("affinity table must be R x L")
        if (aff < 0).any() or (aff > 1).any() or (aff.sum(axis=1) <= 0).any():
            raise WorldGenError("affinity entries must be in [0, 1] with a positive row sum")

    def affinity_table(self) -> np.ndarray:
        if self.affinity is None:
            return default_affinity(self.n_room_types, self.n_classes)
        return np.asarray(self.affinity, dtype=float)

    def placement_probs(self) -> np.ndarray:
        """p(class | room type), row-normalised affinity."""
        a = self.affinity_table()
        return a / a.sum(axis=1, keepdims=True)

    def __hash__(self):
        return hash((self.width, self.height, self.n_room_types, self.n_classes, self.n_targets,
                     self.min_room, self.max_rooms, self.rooms, self.extra_door_prob,
                     self.objects_per_room,
                     self.affinity_table().tobytes(), self.resolution))

    def __eq__(self, other):
        if not isinstance(other, WorldGenParams):
            return NotImplemented
        return hash(self) == hash(other)

    def with_targets(self, k: int) -> "WorldGenParams":
        return replace(self, n_targets=k)


def _partition(rng, rect, min_room, max_rooms):
    """BSP over interior rectangles (x0, y0, x1, y1 inclusive)."""
    leaves = [rect]
    while len(leaves) < max_rooms:
        # split the largest splittable leaf; randomness only in axis/position
        order = sorted(range(len(leaves)), key=lambda i: -((leaves[i][2] - leaves[i][0] + 1)
                                                          * (leaves[i][3] - leaves[i][1] + 1)))
        for i in order:
            x0, y0, x1, y1 = leaves[i]
            w, h = x1 - x0 + 1, y1 - y0 + 1
            can_v, can_h = w >= 2 * min_room + 1, h >= 2 * min_room + 1
            if not (can_v or can_h):
                continue
            if can_v and can_h:
                vertical = bool(rng.random() < w / (w + h))
            else:
                vertical = can_v
            if vertical:
                pos = int(rng.integers(x0 + min_room, x1 - min_room + 1))
                a, b = (x0, y0, pos - 1, y1), (pos + 1, y0, x1, y1)
            else:
                pos = int(rng.integers(y0 + min_room, y1 - min_room + 1))
                a, b = (x0, y0, x1, pos - 1), (x0, pos + 1, x1, y1)
            leaves[i:i + 1] = [a, b]
            break
        else:
            break
    return leaves


def _adjacent_walls(leaves):
    """Wall cells separating each pair of leaves that share a partition wall."""
    walls = {}
    for i, (ax0, ay0, ax1, ay1) in enumerate(leaves):
        for j, (bx0, by0, bx1, by1) in enumerate(leaves):
            if j <= i:
                continue
            cells = []
            if ax1 + 2 == bx0 or bx1 + 2 == ax0:
                x = ax1 + 1 if ax1 + 2 == bx0 else bx1 + 1
                cells = [(x, y) for y in range(max(ay0, by0), min(ay1, by1) + 1)]
            elif ay1 + 2 == by0 or by1 + 2 == ay0:
                y = ay1 + 1 if ay1 + 2 == by0 else by1 + 1
                cells = [(x, y) for x in range(max(ax0, bx0), min(ax1, bx1) + 1)]
            if cells:
                walls[(i, j)] = cells
    return walls


def _pick_rooms(rng, n_leaves, walls, n_rooms):
    """Grow a random connected set of leaves; returns (rooms, tree edges, spare edges)."""
    nbrs = {i: [] for i in range(n_leaves)}
    for i, j in walls:
        nbrs[i].append(j)
        nbrs[j].append(i)
    start = int(rng.integers(n_leaves))
    chosen, tree = [start], []
    while len(chosen) < n_rooms:
        options = sorted({(min(i, j), max(i, j)) for i in chosen for j in nbrs[i] if j not in chosen})
        if not options:
            break
        i, j = options[int(rng.integers(len(options)))]
        tree.append((i, j))
        chosen.append(j if i in chosen else i)
    spare = [e for e in sorted(walls) if e[0] in chosen and e[1] in chosen and e not in tree]
    return chosen, tree, spare


def _try_generate(rng, p: WorldGenParams):
    w, h = p.width, p.height
    occ = np.ones((h, w), dtype=bool)
    leaves = _partition(rng, (1, 1, w - 2, h - 2), p.min_room, p.max_rooms)
    walls = _adjacent_walls(leaves)
    lo_rooms, hi_rooms = p.rooms
    n_rooms = int(rng.integers(lo_rooms, hi_rooms + 1))
    chosen, tree, spare = _pick_rooms(rng, len(leaves), walls, min(n_rooms, len(leaves)))
    if len(chosen) < lo_rooms:
        return None
    leaves = [leaves[i] for i in chosen]
    for x0, y0, x1, y1 in leaves:
        occ[y0:y1 + 1, x0:x1 + 1] = False
    doors = list(tree) + [e for e in spare if rng.random() < p.extra_door_prob]
    for e in doors:
        cells = walls[e]
        x, y = cells[int(rng.integers(len(cells)))]
        occ[y, x] = False

    types = np.array([i % p.n_room_types for i in range(len(leaves))])
    rng.shuffle(types)
    rooms = np.full((h, w), -1, dtype=np.int16)
    for (x0, y0, x1, y1), r in zip(leaves, types):
        rooms[y0:y1 + 1, x0:x1 + 1] = r
    # doors and walls take the label of the room they border
    for _ in range(2):
        for y, x in zip(*np.nonzero(rooms < 0)):
            for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                if 0 <= nx < w and 0 <= ny < h and rooms[ny, nx] >= 0:
                    rooms[y, x] = rooms[ny, nx]
                    break
    rooms[rooms < 0] = 0

    probs = p.placement_probs()
    lo, hi = p.objects_per_room
    objects: list[SceneObject] = []
    for (x0, y0, x1, y1), r in zip(leaves, types):
        n = int(rng.integers(lo, hi + 1))
        cells = [(x, y) for y in range(y0, y1 + 1) for x in range(x0, x1 + 1)]
        picks = rng.choice(len(cells), size=min(n, len(cells)), replace=False)
        for k in picks:
            cls = int(rng.choice(p.n_classes, p=probs[r]))
            objects.append(SceneObject(cls, cells[int(k)]))

    order = rng.permutation(len(objects))
    chosen, classes = [], set()
    for k in order:
        c = objects[int(k)].class_id
        if c not in classes:
            chosen.append(int(k))
            classes.add(c)
        if len(chosen) == p.n_targets:
            break
    if len(chosen) < p.n_targets:
        return None
    # a target's class is unique in the world, so detecting it is unambiguous
    keep = [i for i, o in enumerate(objects) if o.class_id not in classes or i in chosen]
    remap = {old: new for new, old in enumerate(keep)}
    objects = [objects[i] for i in keep]
    targets = tuple(remap[i] for i in chosen)

    dist = bfs_distances(occ, objects[targets[0]].cell)
    if (dist[~occ] < 0).any():
        return None
    return GridWorld(
        occupancy=occ,
        room_label=rooms,
        scene_objects=tuple(objects),
        targets=targets,
        n_room_types=p.n_room_types,
        n_classes=p.n_classes,
        resolution=p.resolution,
    )


def generate_world(seed: int, params: WorldGenParams = WorldGenParams()) -> GridWorld:
    """Deterministically build a connected multi-room world for ``seed``."""
    rng = np.random.default_rng(seed)
    for _ in range(params.max_retries):
        world = _try_generate(rng, params)
        if world is not None:
            return world
    raise WorldGenError(f"no valid world for seed {seed} after {params.max_retries} attempts")


def sample_spawn(world: GridWorld, seed: int, turn_increment: int = 30) -> RobotState:
    """Random free cell and heading for an episode; independent of the policy."""
    rng = np.random.default_rng([seed, 1])
    free = world.free_cells()
    cell = free[int(rng.integers(len(free)))]
    heading = int(rng.integers(360 // turn_increment)) * turn_increment
    return RobotState(cell, heading)
