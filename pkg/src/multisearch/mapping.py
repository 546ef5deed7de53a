"""The robot's metric belief: occupancy, per-class semantic layers, view confidence."""

from __future__ import annotations

import numpy as np

UNKNOWN, FREE, OBSTACLE = 0, 1, 2


class OccupancyMap:
    """Three-state grid; cells only ever leave the Unknown state."""

    def __init__(self, height: int, width: int):
        self.cells = np.zeros((height, width), dtype=np.uint8)

    @property
    def shape(self):
        return self.cells.shape

    def copy(self) -> "OccupancyMap":
        out = OccupancyMap(*self.shape)
        out.cells = self.cells.copy()
        return out

    def unknown_count(self) -> int:
        return int((self.cells == UNKNOWN).sum())

    def state(self, cell) -> int:
        return int(self.cells[cell[1], cell[0]])


class SemanticMap:
    """``L`` boolean layers; layer ``i`` marks where class ``i`` was seen.

    ``footprint`` is the Chebyshev radius stamped around each detection,
    restricted to free cells visible in the same observation (0 marks the
    detected cell only).  It stands in for the projected extent of
    an object's segmentation mask.
    """

    def __init__(self, n_classes: int, height: int, width: int, footprint: int = 0):
        if footprint < 0:
            raise ValueError("footprint must be >= 0")
        self.layers = np.zeros((n_classes, height, width), dtype=bool)
        self.footprint = footprint

    @property
    def n_classes(self) -> int:
        return self.layers.shape[0]

    def copy(self) -> "SemanticMap":
        out = SemanticMap(self.n_classes, *self.layers.shape[1:], footprint=self.footprint)
        out.layers = self.layers.copy()
        return out


def update_occupancy(occ: OccupancyMap, obs) -> OccupancyMap:
    """Write visible free cells as Free and visible obstacle faces as Obstacle, in place."""
    if len(obs.cells):
        xs, ys = obs.cells[:, 0], obs.cells[:, 1]
        occ.cells[ys, xs] = np.where(obs.occluding, OBSTACLE, FREE)
    return occ


def update_semantic(sem: SemanticMap, obs) -> SemanticMap:
    """Mark every non-target detection on its class layer, in place."""
    h, w = sem.layers.shape[1:]
    r = sem.footprint
    seen = np.zeros((h, w), dtype=bool)
    if r > 0 and len(obs.cells):
        free = ~obs.occluding
        seen[obs.cells[free, 1], obs.cells[free, 0]] = True
    for det in obs.detections:
        if det.is_target:
            continue
        if not 0 <= det.class_id < sem.n_classes:
            raise IndexError(f"class id {det.class_id} out of range (L={sem.n_classes})")
        x, y = det.cell
        sem.layers[det.class_id, y, x] = True
        if r > 0:
            ys, xs = slice(max(0, y - r), min(h, y + r + 1)), slice(max(0, x - r), min(w, x + r + 1))
            sem.layers[det.class_id, ys, xs] |= seen[ys, xs]
    return sem


def cone_weight(theta, fov_deg: float):
    """cos^2 fall-off from 1 on the optical axis to 0 at the FOV edge."""
    half = np.radians(fov_deg) / 2.0
    return np.cos(np.asarray(theta, dtype=float) / half * (np.pi / 2.0)) ** 2


def cone_mask(shape, obs, fov_deg: float) -> np.ndarray:
    """Per-cell confidence of the current view.

    Visible free cells get :func:`cone_weight` of their off-axis angle;
    obstacle faces and everything not in view stay 0.
    """
    conf = np.zeros(shape, dtype=float)
    if len(obs.cells):
        free = ~obs.occluding
        xs, ys = obs.cells[free, 0], obs.cells[free, 1]
        conf[ys, xs] = np.clip(cone_weight(obs.angles[free], fov_deg), 0.0, 1.0)
    return conf


def fuse_confidence(c_new, c_prev) -> np.ndarray:
    """Confidence-weighted accumulation ``(a^2 + b^2) / (a + b)``, 0 where both are 0."""
    a = np.asarray(c_new, dtype=float)
    b = np.asarray(c_prev, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    # weighted-mean form hi*t + lo*(1-t), t = hi/(a+b): no underflow from squaring tiny
    # values, and ordering the pair keeps the result exactly symmetric
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    den = a + b
    t = np.zeros(den.shape)
    np.divide(hi, den, out=t, where=den > 0)
    return np.where(a == b, a, np.where(den > 0, hi * t + lo * (1.0 - t), 0.0))
