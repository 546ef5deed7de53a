import numpy as np
import pytest

from multisearch.mapping import SemanticMap
from multisearch.scoremap import (
    OTO,
    STO,
    ChannelError,
    ScoreStack,
    drop_target_channel,
    empty_sto,
    fuse,
    normalize_channel,
    oto_compute,
    sto_update,
)
from multisearch.semantics import SimilarityTable


def table(W):
    W = np.asarray(W, dtype=float)
    L, K = W.shape
    names = tuple(f"c{i}" for i in range(L))
    tnames = tuple(f"c{L - K + j}" for j in range(K))
    for j in range(K):
        W[L - K + j, j] = 1.0
    return SimilarityTable(W, names, tnames, np.ones((1, K)))


def test_first_observation_equals_proposal():
    st = empty_sto([0], (2, 2))
    cone = np.array([[1.0, 0.5], [0.0, 0.25]])
    out = sto_update(st, cone, [0.8])
    assert np.allclose(out.channels[0], cone * 0.8, rtol=1e-12, atol=0)
    assert np.array_equal(out.confidence, cone)


def test_zero_scene_score_keeps_channel_zero():
    st = empty_sto([0, 1], (3, 3))
    rng = np.random.default_rng(0)
    for _ in range(10):
        st = sto_update(st, rng.random((3, 3)), [0.0, 0.5])
    assert not st.channels[0].any()


def test_weighted_average_fixture():
    st = ScoreStack(STO, (0,), np.array([[[0.4]]]), np.array([[1.0]]))
    out = sto_update(st, np.array([[1.0]]), [0.8])
    assert out.channels[0, 0, 0] == pytest.approx(0.6, rel=1e-12)


def test_unseen_cells_stay_zero():
    st = empty_sto([0], (2, 2))
    out = sto_update(st, np.zeros((2, 2)), [1.0])
    assert not out.channels.any() and not out.confidence.any()


def test_score_count_mismatch():
    with pytest.raises(ChannelError):
        sto_update(empty_sto([0, 1], (2, 2)), np.ones((2, 2)), [0.5])


def sem_with(L, marks, shape=(3, 3)):
    sem = SemanticMap(L, *shape)
    for cls, (x, y) in marks:
        sem.layers[cls, y, x] = True
    return sem


def test_oto_empty_semantic_map():
    t = table(np.zeros((3, 1)))
    out = oto_compute(sem_with(3, []), t, [0])
    assert out.kind == OTO and not out.channels.any()


def test_oto_single_object():
    W = np.zeros((3, 1))
    W[0, 0] = 0.35
    out = oto_compute(sem_with(3, [(0, (1, 2))]), table(W), [0])
    expect = np.zeros((3, 3))
    expect[2, 1] = 0.35
    assert np.array_equal(out.channels[0], expect)


def test_oto_two_classes_same_cell():
    W = np.zeros((3, 1))
    W[0, 0], W[1, 0] = 0.7, 0.2
    out = oto_compute(sem_with(3, [(0, (0, 0)), (1, (0, 0))]), table(W), [0])
    assert out.channels[0, 0, 0] == pytest.approx(0.9, rel=1e-12)


def test_oto_uses_remaining_targets_only():
    W = np.array([[0.3, 0.6], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
    out = oto_compute(sem_with(4, [(0, (1, 1))]), table(W), [1])
    assert out.targets == (1,)
    assert out.channels[0, 1, 1] == pytest.approx(0.6)


def test_normalize_fixtures():
    assert not normalize_channel(np.full((2, 2), 3.0)).any()
    assert np.allclose(normalize_channel(np.array([0.0, 2.0, 4.0])), [0.0, 0.5, 1.0], rtol=1e-12)
    v = np.array([0.0, 0.3, 1.0])
    assert np.array_equal(normalize_channel(v), v)


def test_fuse_single_channel_zero_oto():
    sto = ScoreStack(STO, (0,), np.array([[[0.0, 1.0], [3.0, 2.0]]]))
    oto = ScoreStack(OTO, (0,), np.zeros((1, 2, 2)))
    assert np.allclose(fuse(sto, oto), normalize_channel(sto.channels[0]))


def test_fuse_all_zero():
    z = np.zeros((2, 3, 3))
    assert not fuse(ScoreStack(STO, (0, 1), z), ScoreStack(OTO, (0, 1), z)).any()


def test_fuse_four_channel_fixture():
    s0 = np.arange(16, dtype=float).reshape(4, 4)
    s1 = np.eye(4) * 2.0
    o0 = np.zeros((4, 4))
    o0[0, 0] = 5.0
    o1 = np.full((4, 4), 1.0)
    o1[3, 3] = 3.0
    sto = ScoreStack(STO, (0, 1), np.stack([s0, s1]))
    oto = ScoreStack(OTO, (0, 1), np.stack([o0, o1]))
    expect = s0 / 15.0 + np.eye(4) + o0 / 5.0 + (o1 - 1.0) / 2.0
    assert np.allclose(fuse(sto, oto), expect, rtol=1e-12, atol=1e-15)


def test_fuse_k_mismatch():
    with pytest.raises(ChannelError):
        fuse(ScoreStack(STO, (0, 1), np.zeros((2, 2, 2))), ScoreStack(OTO, (0,), np.zeros((1, 2, 2))))


def test_fuse_single_stack_for_ablations():
    sto = ScoreStack(STO, (0,), np.array([[[0.0, 2.0]]]))
    assert np.array_equal(fuse(sto, None), [[0.0, 1.0]])
    assert np.array_equal(fuse(None, ScoreStack(OTO, (0,), np.array([[[0.0, 2.0]]]))), [[0.0, 1.0]])


def test_drop_channel_preserves_others():
    rng = np.random.default_rng(1)
    sto = ScoreStack(STO, (0, 1, 2), rng.random((3, 4, 4)), rng.random((4, 4)))
    oto = ScoreStack(OTO, (0, 1, 2), rng.random((3, 4, 4)))
    s2, o2 = drop_target_channel([sto, oto], 1)
    assert s2.targets == (0, 2) and o2.targets == (0, 2)
    assert np.array_equal(s2.channels, sto.channels[[0, 2]])
    assert np.array_equal(o2.channels, oto.channels[[0, 2]])
    assert np.array_equal(s2.confidence, sto.confidence)


def test_drop_last_channel_and_missing():
    sto = ScoreStack(STO, (4,), np.ones((1, 2, 2)))
    (out,) = drop_target_channel([sto], 4)
    assert out.k == 0
    with pytest.raises(ChannelError):
        drop_target_channel([out], 4)


def test_drop_then_fuse_matches_fresh():
    rng = np.random.default_rng(2)
    s = rng.random((3, 5, 5))
    o = rng.random((3, 5, 5))
    sto, oto = drop_target_channel([ScoreStack(STO, (0, 1, 2), s), ScoreStack(OTO, (0, 1, 2), o)], 0)
    fresh = fuse(ScoreStack(STO, (1, 2), s[1:].copy()), ScoreStack(OTO, (1, 2), o[1:].copy()))
    assert np.array_equal(fuse(sto, oto), fresh)
