"""Multi-channel scene-to-object (StO) and object-to-object (OtO) score maps.

Every remaining target owns one channel in each stack.  StO channels
accumulate the scene-level score of each view, weighted by the view cone's
confidence; OtO channels are recomputed from the semantic map.  Both are
min-max normalised per channel and summed into one target-agnostic map that
ranks frontiers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .mapping import fuse_confidence

STO, OTO = "sto", "oto"


class ChannelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ScoreStack:
    """``channels[k]`` belongs to original target index ``targets[k]``."""

    kind: str
    targets: tuple[int, ...]
    channels: np.ndarray
    confidence: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in (STO, OTO):
            raise ValueError(f"unknown stack kind {self.kind!r}")
        if self.channels.ndim != 3 or self.channels.shape[0] != len(self.targets):
            raise ChannelError("channel count must equal the number of remaining targets")

    @property
    def k(self) -> int:
        return len(self.targets)

    @property
    def shape(self) -> tuple[int, int]:
        return self.channels.shape[1:]

    def channel(self, target: int) -> np.ndarray:
        return self.channels[self.targets.index(target)]


def empty_sto(targets, shape) -> ScoreStack:
    targets = tuple(targets)
    return ScoreStack(STO, targets, np.zeros((len(targets), *shape)), np.zeros(shape))


def sto_update(stack: ScoreStack, cone: np.ndarray, scores) -> ScoreStack:
    """One temporal update of the StO stack.

    The current view proposes ``cone * s_j`` for channel ``j``; the stored
    value moves toward it by confidence-weighted averaging against the
    accumulated confidence, which is then advanced in turn.
    """
    scores = np.asarray(scores, dtype=float).reshape(-1)
    if scores.shape[0] != stack.k:
        raise ChannelError(f"got {scores.shape[0]} scene scores for {stack.k} channels")
    c_new = np.asarray(cone, dtype=float)
    c_prev = stack.confidence
    proposal = c_new[None] * scores[:, None, None]
    den = c_new + c_prev
    t = np.zeros_like(den)
    np.divide(c_new, den, out=t, where=den > 0)
    # t*proposal + (1-t)*previous; cells never seen (den == 0) stay 0
    out = np.where(den > 0, t * proposal + (1.0 - t) * stack.channels, 0.0)
    return replace(stack, channels=out, confidence=fuse_confidence(c_new, c_prev))


def oto_compute(sem, table, remaining) -> ScoreStack:
    """Channel ``j`` sums the class layers of ``sem`` weighted by ``W[:, j]``."""
    remaining = tuple(remaining)
    layers = sem.layers if hasattr(sem, "layers") else np.asarray(sem)
    L, h, w = layers.shape
    if L != table.n_classes:
        raise ChannelError(f"semantic map has {L} classes, table has {table.n_classes}")
    if not remaining:
        return ScoreStack(OTO, (), np.zeros((0, h, w)))
    weights = table.W[:, list(remaining)].T  # (K, L)
    present = np.nonzero(layers.reshape(L, -1).any(axis=1))[0]
    flat = np.zeros((len(remaining), h * w))
    if len(present):
        flat = weights[:, present] @ layers[present].reshape(len(present), -1).astype(float)
    return ScoreStack(OTO, remaining, flat.reshape(len(remaining), h, w))


def normalize_channel(channel) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant channel carries no ranking signal and maps to zeros."""
    v = np.asarray(channel, dtype=float)
    lo, hi = v.min(), v.max()
    if not hi > lo:
        return np.zeros_like(v)
    return np.clip((v - lo) / (hi - lo), 0.0, 1.0)


def fuse(sto: ScoreStack | None, oto: ScoreStack | None) -> np.ndarray:
    """Sum of the normalised channels of both stacks.

    Passing ``None`` for one stack drops that term entirely (ablations).
    """
    stacks = [s for s in (sto, oto) if s is not None]
    if not stacks:
        raise ValueError("need at least one score stack")
    if sto is not None and oto is not None:
        if sto.k != oto.k or sto.targets != oto.targets:
            raise ChannelError(f"stack target mismatch: {sto.targets} vs {oto.targets}")
        if sto.shape != oto.shape:
            raise ChannelError("stack dimensions differ")
    unified = np.zeros(stacks[0].shape)
    for s in stacks:
        for ch in s.channels:
            unified += normalize_channel(ch)
    return unified


def drop_target_channel(stacks, target: int):
    """Remove the channel of a found target from every stack given."""
    out = []
    for s in stacks:
        if s is None:
            out.append(None)
            continue
        if target not in s.targets:
            raise ChannelError(f"target {target} is not a remaining channel")
        k = s.targets.index(target)
        keep = [i for i in range(s.k) if i != k]
        out.append(replace(s, targets=tuple(s.targets[i] for i in keep),
                           channels=s.channels[keep]))
    return out
