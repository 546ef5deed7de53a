"""Randomised property suites; each runs at least 1000 cases."""

from collections import Counter

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from multisearch.mapping import fuse_confidence
from multisearch.metrics import EpisodeResult, mspl, success_rate
from multisearch.planner import Frontier, select_frontier
from multisearch.scoremap import OTO, STO, ScoreStack, empty_sto, fuse, normalize_channel, oto_compute, sto_update
from multisearch.semantics import SimilarityTable
from multisearch.world import RobotState

# cases actually executed per property, checked by the acceptance suite
CALLS = Counter()

CASES = settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])

finite = st.floats(-1e6, 1e6, allow_nan=False)
unit = st.floats(0.0, 1.0, allow_nan=False)
shapes = st.tuples(st.integers(1, 6), st.integers(1, 6))


@CASES
@given(shapes.flatmap(lambda s: arrays(float, s, elements=finite)))
def test_normalization_bounds(v):
    CALLS["test_normalization_bounds"] += 1
    out = normalize_channel(v)
    assert np.isfinite(out).all()
    assert out.min() >= 0.0 and out.max() <= 1.0
    if v.max() > v.min():
        assert out.min() == 0.0 and out.max() == 1.0
    else:
        assert not out.any()


@CASES
@given(shapes.flatmap(lambda s: st.tuples(arrays(float, s, elements=unit), arrays(float, s, elements=unit))))
def test_fuse_confidence_properties(pair):
    CALLS["test_fuse_confidence_properties"] += 1
    a, b = pair
    out = fuse_confidence(a, b)
    assert np.isfinite(out).all()
    assert np.array_equal(out, fuse_confidence(b, a))
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    assert (out >= lo - 1e-12).all() and (out <= hi + 1e-12).all()
    assert np.allclose(fuse_confidence(a, a), a, rtol=1e-12, atol=0)


def random_table(rng, n_classes, k):
    W = rng.random((n_classes, k))
    names = tuple(f"c{i}" for i in range(n_classes))
    tnames = names[n_classes - k:]
    for j in range(k):
        W[n_classes - k + j, j] = 1.0
    return SimilarityTable(W, names, tnames, np.ones((1, k)))


@CASES
@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.integers(1, 2), shapes)
def test_oto_monotone_in_semantic_bits(seed, n_classes, k, shape):
    CALLS["test_oto_monotone_in_semantic_bits"] += 1
    rng = np.random.default_rng(seed)
    table = random_table(rng, n_classes, k)
    sem = rng.random((n_classes, *shape)) < 0.3
    before = oto_compute(sem, table, range(k)).channels
    more = sem.copy()
    more[rng.integers(n_classes), rng.integers(shape[0]), rng.integers(shape[1])] = True
    after = oto_compute(more, table, range(k)).channels
    assert (after >= before).all()


def stacks(rng, k, shape):
    sto = ScoreStack(STO, tuple(range(k)), rng.random((k, *shape)))
    oto = ScoreStack(OTO, tuple(range(k)), rng.random((k, *shape)) * 3)
    return sto, oto


def scaled(stack, c):
    return ScoreStack(stack.kind, stack.targets, stack.channels * c)


@CASES
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), shapes, st.floats(1e-3, 1e3))
def test_argmax_scale_invariance(seed, k, shape, c):
    CALLS["test_argmax_scale_invariance"] += 1
    rng = np.random.default_rng(seed)
    sto, oto = stacks(rng, k, shape)
    u = fuse(sto, oto)
    v = fuse(scaled(sto, c), scaled(oto, c))
    assert np.allclose(u, v, rtol=0, atol=1e-12)
    # the scaled map's argmax is a maximiser of the original (up to rounding)
    assert u.flat[int(np.argmax(v))] >= u.max() - 1e-12
    # frontier choice with a relative tie band does not move either
    fronts = [Frontier((int(x), int(y))) for y, x in np.argwhere(rng.random(shape) < 0.5)]
    robot = RobotState((0, 0), 0)
    a, b = select_frontier(fronts, u, robot, tolerance=0.3), select_frontier(fronts, u * c, robot, tolerance=0.3)
    assert (a is None and b is None) or a.cell == b.cell


@CASES
@given(st.integers(0, 2**32 - 1), shapes, st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
def test_single_channel_affine_invariance(seed, shape, scale, shift):
    CALLS["test_single_channel_affine_invariance"] += 1
    rng = np.random.default_rng(seed)
    sto, oto = stacks(rng, 2, shape)
    ch = sto.channels.copy()
    ch[1] = ch[1] * scale + shift
    moved = ScoreStack(STO, sto.targets, ch)
    assert np.allclose(fuse(sto, oto), fuse(moved, oto), rtol=0, atol=1e-9)


@CASES
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), shapes, st.integers(1, 6))
def test_sto_values_bounded_by_scene_scores(seed, k, shape, steps):
    CALLS["test_sto_values_bounded_by_scene_scores"] += 1
    rng = np.random.default_rng(seed)
    stack = empty_sto(range(k), shape)
    top = np.zeros(k)
    for _ in range(steps):
        # cones with exact zeros exercise the 0/0 guard
        cone = rng.random(shape) * (rng.random(shape) < 0.6)
        scores = rng.random(k)
        top = np.maximum(top, scores)
        stack = sto_update(stack, cone, scores)
        assert np.isfinite(stack.channels).all() and np.isfinite(stack.confidence).all()
        assert (stack.channels >= 0).all()
        assert (stack.channels <= top[:, None, None] + 1e-12).all()


episodes = st.lists(
    st.tuples(st.booleans(), st.integers(0, 1000), st.integers(0, 1000)).map(
        lambda t: EpisodeResult(0, "x", t[0], t[1], t[2], t[1], ())),
    min_size=1, max_size=40)


@CASES
@given(episodes)
def test_mspl_never_exceeds_sr(results):
    CALLS["test_mspl_never_exceeds_sr"] += 1
    m, s = mspl(results), success_rate(results)
    assert 0.0 <= m <= s <= 1.0
