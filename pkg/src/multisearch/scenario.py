"""Line-oriented text format for worlds.

Grammar (outside the two rasters, blank lines and lines starting with
``;`` are ignored)::

    scenario 1
    size <width> <height>
    counts <R> <L> <K>
    resolution <float>
    grid
    <height rows of '.' (free) / '#' (obstacle), row 0 is y = 0>
    labels
    <height rows of one hex digit per cell: the room type>
    obj <class_id> <x> <y>        (one per scene object, in index order)
    tgt <object_index>            (exactly K, in target order)
    end

Loading validates the world, so a file that parses always describes a legal
world.  ``loads_scenario(dumps_scenario(w)) == w`` for every world.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .world import GridWorld, SceneObject, WorldError

VERSION = 1


class ScenarioFormatError(WorldError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def dumps_scenario(world: GridWorld) -> str:
    lines = [
        f"scenario {VERSION}",
        f"size {world.width} {world.height}",
        f"counts {world.n_room_types} {world.n_classes} {world.n_targets}",
        f"resolution {world.resolution!r}",
        "grid",
    ]
    for row in world.occupancy:
        lines.append("".join("#" if v else "." for v in row))
    lines.append("labels")
    for row in world.room_label:
        lines.append("".join(format(int(v), "x") for v in row))
    for obj in world.scene_objects:
        lines.append(f"obj {obj.class_id} {obj.cell[0]} {obj.cell[1]}")
    for t in world.targets:
        lines.append(f"tgt {t}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def loads_scenario(text: str) -> GridWorld:
    rows = [(i + 1, line.rstrip()) for i, line in enumerate(text.splitlines())]
    last = rows[-1][0] if rows else 0
    pos = 0

    def next_record():
        nonlocal pos
        while pos < len(rows):
            n, s = rows[pos]
            pos += 1
            if s.strip() and not s.lstrip().startswith(";"):
                return n, s
        return None

    def take(expect: str):
        rec = next_record()
        if rec is None:
            raise ScenarioFormatError(last, f"unexpected end, wanted {expect!r}")
        n, s = rec
        parts = s.split()
        if parts[0] != expect:
            raise ScenarioFormatError(n, f"expected {expect!r}, found {parts[0]!r}")
        return n, parts[1:]

    def ints(n, parts, count):
        if len(parts) != count:
            raise ScenarioFormatError(n, f"expected {count} integers")
        try:
            return [int(p) for p in parts]
        except ValueError:
            raise ScenarioFormatError(n, "expected integers") from None

    n, parts = take("scenario")
    if ints(n, parts, 1)[0] != VERSION:
        raise ScenarioFormatError(n, f"unsupported scenario version {parts[0]}")
    n, parts = take("size")
    width, height = ints(n, parts, 2)
    if width < 1 or height < 1:
        raise ScenarioFormatError(n, "size must be positive")
    n, parts = take("counts")
    n_rooms, n_classes, k = ints(n, parts, 3)
    n, parts = take("resolution")
    try:
        resolution = float(parts[0])
    except (IndexError, ValueError):
        raise ScenarioFormatError(n, "bad resolution") from None

    def raster(tag, decode):
        nonlocal pos
        take(tag)
        out = []
        for _ in range(height):
            if pos >= len(rows):
                raise ScenarioFormatError(last, f"{tag} raster is short")
            n, s = rows[pos]
            pos += 1
            if len(s) != width:
                raise ScenarioFormatError(n, f"{tag} row has {len(s)} cells, expected {width}")
            try:
                out.append([decode(ch) for ch in s])
            except ValueError as exc:
                raise ScenarioFormatError(n, str(exc)) from None
        return np.array(out)

    def cell_kind(ch):
        if ch not in ".#":
            raise ValueError(f"bad grid character {ch!r}")
        return ch == "#"

    occ = raster("grid", cell_kind).astype(bool)
    labels = raster("labels", lambda ch: int(ch, 16)).astype(np.int16)

    objects, targets = [], []
    while True:
        rec = next_record()
        if rec is None:
            raise ScenarioFormatError(last, "missing 'end'")
        n, s = rec
        parts = s.split()
        if parts[0] == "obj":
            c, x, y = ints(n, parts[1:], 3)
            objects.append(SceneObject(c, (x, y)))
        elif parts[0] == "tgt":
            targets.append(ints(n, parts[1:], 1)[0])
        elif parts[0] == "end":
            break
        else:
            raise ScenarioFormatError(n, f"unknown record {parts[0]!r}")
    if len(targets) != k:
        raise ScenarioFormatError(n, f"header declares K={k} but {len(targets)} tgt lines follow")
    return GridWorld(
        occupancy=occ,
        room_label=labels,
        scene_objects=tuple(objects),
        targets=tuple(targets),
        n_room_types=n_rooms,
        n_classes=n_classes,
        resolution=resolution,
    )


def save_scenario(world: GridWorld, path) -> Path:
    path = Path(path)
    path.write_text(dumps_scenario(world))
    return path


def load_scenario(path) -> GridWorld:
    return loads_scenario(Path(path).read_text())
