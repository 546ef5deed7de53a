"""Similarity model standing in for vision-language embeddings.

Two quantities drive the score maps:

* ``room_affinity[r, j]`` - how strongly room type ``r`` suggests target ``j``.
  The scene-level score of a view is the histogram-weighted mean of this
  column over the room types in view.
* ``W[i, j]`` - object-level similarity between scene class ``i`` and
  target ``j``.

Both live in [0, 1].  A target's own class has similarity exactly 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

FORMAT_HEADER = "simtable v1"


class SimilarityError(ValueError):
    """Base class for malformed or mismatched similarity tables."""


class SimilarityRangeError(SimilarityError):
    pass


class DimensionMismatchError(SimilarityError):
    pass


class DuplicateNameError(SimilarityError):
    pass


@dataclass(frozen=True, eq=False)
class SimilarityTable:
    W: np.ndarray
    class_names: tuple[str, ...]
    target_names: tuple[str, ...]
    room_affinity: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=float, ndmin=2)
        A = np.array(self.room_affinity, dtype=float, ndmin=2)
        names = tuple(self.class_names)
        tnames = tuple(self.target_names)
        L, K = len(names), len(tnames)
        if W.shape != (L, K):
            raise DimensionMismatchError(f"W is {W.shape}, expected {(L, K)}")
        if A.ndim != 2 or A.shape[1] != K:
            raise DimensionMismatchError(f"room affinity is {A.shape}, expected (R, {K})")
        for arr in (W, A):
            if not np.isfinite(arr).all() or (arr < 0).any() or (arr > 1).any():
                raise SimilarityRangeError("similarity out of range [0, 1]")
        if len(set(names)) != L:
            raise DuplicateNameError("duplicate class name")
        if len(set(tnames)) != K:
            raise DuplicateNameError("duplicate target name")
        for j, t in enumerate(tnames):
            if t not in names:
                raise SimilarityError(f"target {t!r} is not a known class")
            if W[names.index(t), j] != 1.0:
                raise SimilarityError(f"self-similarity of target {t!r} must be 1")
        W.flags.writeable = False
        A.flags.writeable = False
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "room_affinity", A)
        object.__setattr__(self, "class_names", names)
        object.__setattr__(self, "target_names", tnames)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def n_targets(self) -> int:
        return len(self.target_names)

    @property
    def n_room_types(self) -> int:
        return self.room_affinity.shape[0]

    def target_class(self, j: int) -> int:
        return self.class_names.index(self.target_names[j])

    def bind(self, world) -> "SimilarityTable":
        """Check that this table describes ``world``; returns self."""
        if self.n_classes != world.n_classes:
            raise DimensionMismatchError(
                f"table has L={self.n_classes}, world has L={world.n_classes}")
        if self.n_targets != world.n_targets:
            raise DimensionMismatchError(
                f"table has K={self.n_targets}, world has K={world.n_targets}")
        if self.n_room_types != world.n_room_types:
            raise DimensionMismatchError(
                f"table has R={self.n_room_types}, world has R={world.n_room_types}")
        for j, cls in enumerate(world.target_classes):
            if self.target_class(j) != cls:
                raise DimensionMismatchError(f"target {j} class differs between table and world")
        return self

    def __eq__(self, other):
        if not isinstance(other, SimilarityTable):
            return NotImplemented
        return (self.class_names == other.class_names
                and self.target_names == other.target_names
                and np.array_equal(self.W, other.W)
                and np.array_equal(self.room_affinity, other.room_affinity))

    __hash__ = None


def _check_target(table: SimilarityTable, j: int) -> None:
    if not 0 <= j < table.n_targets:
        raise IndexError(f"target index {j} out of range (K={table.n_targets})")


def scene_score(obs, target_index: int, table: SimilarityTable) -> float:
    """Histogram-weighted mean room affinity of the current view; 0 for an empty view."""
    _check_target(table, target_index)
    hist = np.asarray(obs.room_histogram if hasattr(obs, "room_histogram") else obs, dtype=float)
    total = hist.sum()
    if total <= 0:
        return 0.0
    return float(hist @ table.room_affinity[:, target_index] / total)


def object_similarity(class_id: int, target_index: int, table: SimilarityTable) -> float:
    _check_target(table, target_index)
    if not 0 <= class_id < table.n_classes:
        raise IndexError(f"class id {class_id} out of range (L={table.n_classes})")
    return float(table.W[class_id, target_index])


def class_cooccurrence(placement: np.ndarray, room_weights: np.ndarray | None = None) -> np.ndarray:
    """Normalised same-room co-occurrence between classes.

    With ``p(i | r)`` the placement distribution and ``pi_r`` the room-type
    frequency, two objects drawn from one random room are classes ``(i, j)``
    with probability ``c_ij = sum_r pi_r p(i|r) p(j|r)``.  The result is
    ``c_ij / sqrt(c_ii c_jj)``: 1 for classes with proportional room profiles,
    0 for classes that never share a room type.
    """
    P = np.asarray(placement, dtype=float)
    R = P.shape[0]
    pi = np.full(R, 1.0 / R) if room_weights is None else np.asarray(room_weights, dtype=float)
    c = (P * pi[:, None]).T @ P
    d = np.sqrt(np.diag(c))
    with np.errstate(invalid="ignore", divide="ignore"):
        w = c / np.outer(d, d)
    w = np.nan_to_num(w, nan=0.0)
    np.fill_diagonal(w, np.where(d > 0, 1.0, 0.0))
    return np.clip(w, 0.0, 1.0)


def synthetic_similarity(params, target_classes, seed: int = 0, noise: float = 0.0,
                         class_names=None) -> SimilarityTable:
    """Ground-truth similarity table derived from the world generator's own statistics.

    ``noise`` adds seeded uniform jitter to off-diagonal entries, mimicking an
    imperfect embedding model; the default keeps the table exact.
    """
    target_classes = [int(c) for c in target_classes]
    L = params.n_classes
    names = tuple(class_names) if class_names is not None else tuple(f"class{i:02d}" for i in range(L))
    cooc = class_cooccurrence(params.placement_probs())
    W = cooc[:, target_classes].copy()
    aff = params.affinity_table()
    A = aff[:, target_classes].copy()
    if noise > 0:
        rng = np.random.default_rng(seed)
        W = np.clip(W + rng.uniform(-noise, noise, W.shape), 0.0, 1.0)
        A = np.clip(A + rng.uniform(-noise, noise, A.shape), 0.0, 1.0)
    for j, c in enumerate(target_classes):
        W[c, j] = 1.0
    return SimilarityTable(W, names, tuple(names[c] for c in target_classes), A)


def table_for_world(world, params, seed: int = 0, noise: float = 0.0) -> SimilarityTable:
    return synthetic_similarity(params, world.target_classes, seed=seed, noise=noise).bind(world)


def _fmt(v: float) -> str:
    return repr(float(v))


def dumps_similarity(table: SimilarityTable) -> str:
    lines = [FORMAT_HEADER,
             f"L {table.n_classes} K {table.n_targets} R {table.n_room_types}"]
    lines += [f"class {n}" for n in table.class_names]
    lines += [f"target {n}" for n in table.target_names]
    lines.append("W")
    lines += [" ".join(_fmt(v) for v in row) for row in table.W]
    lines.append("A")
    lines += [" ".join(_fmt(v) for v in row) for row in table.room_affinity]
    return "\n".join(lines) + "\n"


def loads_similarity(text: str) -> SimilarityTable:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != FORMAT_HEADER:
        raise SimilarityError(f"missing header {FORMAT_HEADER!r}")
    try:
        tok = lines[1].split()
        dims = dict(zip(tok[0::2], (int(v) for v in tok[1::2])))
        L, K, R = dims["L"], dims["K"], dims["R"]
    except (IndexError, KeyError, ValueError) as exc:
        raise SimilarityError("bad dimension line, expected 'L <n> K <n> R <n>'") from exc
    pos = 2
    classes, targets = [], []
    while pos < len(lines) and lines[pos].startswith("class "):
        classes.append(lines[pos][6:].strip())
        pos += 1
    while pos < len(lines) and lines[pos].startswith("target "):
        targets.append(lines[pos][7:].strip())
        pos += 1
    if len(classes) != L or len(targets) != K:
        raise DimensionMismatchError("class/target line counts do not match the header")

    def block(tag, rows):
        nonlocal pos
        if pos >= len(lines) or lines[pos] != tag:
            raise SimilarityError(f"expected {tag!r} block")
        pos += 1
        body = lines[pos:pos + rows]
        pos += rows
        if len(body) != rows:
            raise DimensionMismatchError(f"{tag} block has too few rows")
        try:
            mat = np.array([[float(v) for v in row.split()] for row in body], dtype=float)
        except ValueError as exc:
            raise SimilarityError(f"non-numeric entry in {tag} block") from exc
        if mat.shape != (rows, K):
            raise DimensionMismatchError(f"{tag} block must be {rows} x {K}")
        return mat

    W = block("W", L)
    A = block("A", R)
    if pos != len(lines):
        raise SimilarityError("trailing content after A block")
    return SimilarityTable(W, tuple(classes), tuple(targets), A)


def save_similarity(table: SimilarityTable, path) -> None:
    Path(path).write_text(dumps_similarity(table))


def load_similarity(path) -> SimilarityTable:
    return loads_similarity(Path(path).read_text())
