from pathlib import Path

import numpy as np
import pytest

from multisearch.config import BenchConfig, ConfigError, SweepConfig, dumps_config, parse_config
from multisearch.pgm import dumps_pgm, loads_pgm, save_pgm, to_grey
from multisearch.scenario import ScenarioFormatError, dumps_scenario, load_scenario, loads_scenario, save_scenario
from multisearch.scoremap import OTO, STO, ScoreStack, fuse
from multisearch.world import GridWorld, WorldError
from multisearch.worldgen import WorldGenParams, generate_world

GOLDEN = Path(__file__).parent / "golden"


# greymaps


def fixture_unified():
    sto = ScoreStack(STO, (0,), np.array([[[0.0, 1.0, 2.0, 4.0], [0.0, 0.0, 2.0, 2.0], [4.0, 0.0, 0.0, 0.0]]]))
    oto = ScoreStack(OTO, (0,), np.array([[[0.0, 0.0, 0.0, 0.0], [0.0, 0.9, 0.0, 0.0], [0.0, 0.0, 0.0, 0.45]]]))
    return fuse(sto, oto)


def test_unified_map_golden(tmp_path):
    out = save_pgm(tmp_path / "u.pgm", fixture_unified(), vmax=2.0)
    assert out.read_text() == (GOLDEN / "unified_4x3.pgm").read_text()


def test_golden_file_is_hand_checkable():
    img, maxval = loads_pgm((GOLDEN / "unified_4x3.pgm").read_text())
    assert maxval == 255
    # loads_pgm undoes the vertical flip; row y=0 of the fixture: StO normalised to 0, .25, .5, 1 with zero OtO; scaled by 255 / 2
    assert list(img[0]) == [0, 32, 64, 128]
    assert img[1, 1] == 128  # OtO peak only
    assert img[2, 0] == 128 and img[2, 3] == 64


def test_pgm_round_trip():
    rng = np.random.default_rng(0)
    g = rng.integers(0, 1000, size=(5, 7))
    img, maxval = loads_pgm(dumps_pgm(g, 1000))
    assert maxval == 1000 and np.array_equal(img, g)


def test_pgm_header_and_flip():
    text = dumps_pgm(np.array([[1, 2], [3, 4]]), 4)
    assert text.splitlines()[:4] == ["P2", "2 2", "4", "3 4"]
    assert dumps_pgm(np.array([[1, 2], [3, 4]]), 4, flip=False).splitlines()[3] == "1 2"


def test_pgm_comments_allowed():
    img, _ = loads_pgm("P2\n# made by hand\n2 1\n9\n0 9\n")
    assert list(img[0]) == [0, 9]


def test_pgm_rejects_bad_input():
    with pytest.raises(ValueError):
        to_grey(np.array([np.nan]))
    with pytest.raises(ValueError):
        to_grey(np.array([-1.0]))
    with pytest.raises(ValueError):
        loads_pgm("P5\n1 1\n255\n0\n")
    with pytest.raises(ValueError):
        loads_pgm("P2\n2 2\n255\n0 0 0\n")


def test_to_grey_zero_map():
    assert not to_grey(np.zeros((2, 2))).any()


# scenarios


def test_scenario_round_trip(tmp_path):
    for seed in range(3):
        w = generate_world(seed, WorldGenParams())
        p = save_scenario(w, tmp_path / f"w{seed}.txt")
        assert load_scenario(p) == w
        assert dumps_scenario(loads_scenario(p.read_text())) == p.read_text()


def test_scenario_comments_and_blank_lines():
    w = GridWorld.from_ascii(["#..", "..#"], objects=[(0, (1, 0))], targets=[0])
    text = dumps_scenario(w).replace("grid\n", "; a comment\n\ngrid\n", 1)
    assert loads_scenario(text) == w


def test_scenario_errors_carry_line_numbers():
    w = GridWorld.from_ascii(["#..", "..#"], objects=[(0, (1, 0))], targets=[0])
    text = dumps_scenario(w)
    with pytest.raises(ScenarioFormatError, match="line 1"):
        loads_scenario(text.replace("scenario 1", "scenario 9"))
    with pytest.raises(ScenarioFormatError):
        loads_scenario(text.replace("obj 0 1 0", "obj 0 one 0"))


def test_scenario_invalid_world_rejected():
    w = GridWorld.from_ascii(["#..", "..#"], objects=[(0, (1, 0))], targets=[0])
    with pytest.raises(WorldError):
        loads_scenario(dumps_scenario(w).replace("obj 0 1 0", "obj 0 0 0"))


# configuration


def test_config_defaults():
    bench, sweep = parse_config("")
    assert bench == BenchConfig() and sweep == SweepConfig()


def test_config_round_trip():
    text = "[bench]\nepisodes = 7\npolicies = full, random_walk\n[world]\nrooms = 5, 7\n[policy]\nfov = 90\n"
    bench, sweep = parse_config(text)
    assert bench.episodes == 7 and bench.policies == ("full", "random_walk")
    assert bench.world.rooms == (5, 7) and bench.policy.sensor.fov_deg == 90.0
    assert parse_config(dumps_config(bench, sweep)) == (bench, sweep)


def test_config_errors_itemized():
    text = "[bench]\nepisodes = 0\npolicies = full, teleport\n[world]\ntargets = 9\n[oops]\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    problems = exc.value.problems
    assert len(problems) == 4
    assert any("episodes" in p for p in problems)
    assert any("teleport" in p for p in problems)
    assert any("K out of range" in p for p in problems)
    assert any("oops" in p for p in problems)
