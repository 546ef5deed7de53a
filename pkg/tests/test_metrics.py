import numpy as np
import pytest

from oracles import brute_tour_length

from multisearch.metrics import (
    EpisodeResult,
    mspl,
    optimal_multi_target_length,
    optimal_tour,
    success_rate,
)
from multisearch.world import GridWorld, WorldError, shortest_path_len
from multisearch.worldgen import WorldGenParams, generate_world, sample_spawn


def ep(success, p, ell):
    return EpisodeResult(0, "x", success, p, ell, p, ())


def test_single_target_equals_shortest_path():
    w = generate_world(0, WorldGenParams(n_targets=1))
    s = sample_spawn(w, 0).cell
    assert optimal_multi_target_length(w, s) == shortest_path_len(w, s, w.target_cells[0])


def test_collinear_corridor():
    w = GridWorld.from_ascii(["........"], objects=[(0, (3, 0)), (1, (7, 0))], targets=[0, 1])
    assert optimal_multi_target_length(w, (0, 0)) == 7


def test_open_tour_picks_best_order():
    # start between the targets: going to the near one first is cheaper
    w = GridWorld.from_ascii(["..........."], objects=[(0, (0, 0)), (1, (10, 0))], targets=[0, 1])
    assert optimal_multi_target_length(w, (3, 0)) == 3 + 10


def test_matches_permutation_oracle():
    for seed in range(3):
        w = generate_world(seed, WorldGenParams(width=32, height=32, rooms=(3, 5), max_rooms=8))
        s = sample_spawn(w, seed).cell
        assert optimal_multi_target_length(w, s) == brute_tour_length(w, s, w.target_cells)


def test_tour_order_is_consistent():
    rng = np.random.default_rng(0)
    for _ in range(50):
        k = int(rng.integers(1, 6))
        pts = rng.integers(0, 20, size=(k + 1, 2))
        d = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)
        length, order = optimal_tour(d)
        walk = [0, *order]
        assert sorted(order) == list(range(1, k + 1))
        assert sum(d[a, b] for a, b in zip(walk, walk[1:])) == length


def test_too_many_targets():
    w = GridWorld.from_ascii(["." * 10], objects=[(0, (0, 0))], targets=[0])
    with pytest.raises(WorldError):
        optimal_multi_target_length(w, (0, 0), [(i, 0) for i in range(9)])


def test_mspl_fixtures():
    assert mspl([ep(True, 10, 10)]) == 1.0
    assert mspl([ep(False, 10, 10)]) == 0.0
    assert mspl([ep(True, 20, 10), ep(True, 10, 10)]) == pytest.approx(0.75, rel=1e-12)


def test_mspl_short_path_clamped():
    assert mspl([ep(True, 8, 10)]) == 1.0


def test_success_rate_fixtures():
    assert success_rate([ep(True, 1, 1)] * 3) == 1.0
    assert success_rate([ep(False, 1, 1)] * 3) == 0.0
    assert success_rate([ep(True, 1, 1)] * 3 + [ep(False, 1, 1)]) == 0.75


def test_empty_lists_rejected():
    with pytest.raises(ValueError):
        mspl([])
    with pytest.raises(ValueError):
        success_rate([])
