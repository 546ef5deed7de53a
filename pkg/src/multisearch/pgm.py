"""Plain-text greymap (P2) dumps of maps and score channels."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def to_grey(values, vmax: float | None = None, maxval: int = 255) -> np.ndarray:
    """Scale non-negative reals to integers in ``[0, maxval]``.

    ``vmax`` is the value mapped to ``maxval`` (default: the array max).  An
    all-zero array, or ``vmax == 0``, maps to zeros.
    """
    v = np.asarray(values, dtype=float)
    if not np.isfinite(v).all():
        raise ValueError("cannot dump non-finite values")
    if (v < 0).any():
        raise ValueError("cannot dump negative values")
    top = float(v.max()) if vmax is None else float(vmax)
    if top <= 0:
        return np.zeros(v.shape, dtype=np.int64)
    return np.clip(np.rint(v / top * maxval), 0, maxval).astype(np.int64)


def dumps_pgm(grey, maxval: int = 255, flip: bool = True) -> str:
    """Serialise an integer image.

    Row 0 of the array is y = 0; with ``flip`` the file lists the top row
    (largest y) first, so viewers show +y upward.
    """
    g = np.asarray(grey)
    if g.ndim != 2:
        raise ValueError("greymap must be 2-D")
    if not 0 < maxval < 65536:
        raise ValueError("maxval must be in 1..65535")
    if g.size and (g.min() < 0 or g.max() > maxval):
        raise ValueError("pixel outside [0, maxval]")
    rows = g[::-1] if flip else g
    h, w = g.shape
    lines = ["P2", f"{w} {h}", str(maxval)]
    lines += [" ".join(str(int(v)) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def loads_pgm(text: str, flip: bool = True) -> tuple[np.ndarray, int]:
    """Parse a P2 file (comments allowed) into ``(image, maxval)``."""
    tokens = []
    for line in text.splitlines():
        tokens += line.split("#", 1)[0].split()
    if not tokens or tokens[0] != "P2":
        raise ValueError("not a plain greymap (missing P2 magic)")
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        data = [int(t) for t in tokens[4:]]
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed greymap header or pixels: {exc}") from None
    if len(data) != w * h:
        raise ValueError(f"expected {w * h} pixels, found {len(data)}")
    img = np.asarray(data, dtype=np.int64).reshape(h, w)
    if img.size and (img.min() < 0 or img.max() > maxval):
        raise ValueError("pixel outside [0, maxval]")
    return (img[::-1] if flip else img), maxval


def save_pgm(path, values, vmax: float | None = None, maxval: int = 255) -> Path:
    path = Path(path)
    path.write_text(dumps_pgm(to_grey(values, vmax, maxval), maxval))
    return path
