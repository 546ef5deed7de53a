import json
from dataclasses import replace

import pytest

from multisearch.bench import (
    episode_seeds,
    report_to_json,
    results_from_csv,
    results_to_csv,
    run_benchmark,
    scalability_sweep,
    sweep_to_csv,
    write_outputs,
)
from multisearch.cli import main
from multisearch.config import BenchConfig, SweepConfig
from multisearch.episode import PolicyConfig
from multisearch.worldgen import WorldGenParams

SMALL = WorldGenParams(width=32, height=32, rooms=(3, 5), max_rooms=8)


def small_config(**kw):
    base = dict(episodes=4, world=SMALL, policy=PolicyConfig(budget=200),
                policies=("full", "greedy_frontier", "random_walk"))
    base.update(kw)
    return BenchConfig(**base)


@pytest.fixture(scope="module")
def report():
    return run_benchmark(small_config())


def test_seeds_are_deterministic():
    assert episode_seeds(7, 5) == episode_seeds(7, 5)
    assert episode_seeds(7, 5) != episode_seeds(8, 5)
    assert episode_seeds(7, 3) == episode_seeds(7, 5)[:3]


def test_policies_are_paired_by_seed(report):
    for name in ("full", "greedy_frontier", "random_walk"):
        rs = report.by_policy(name)
        assert [r.seed for r in rs] == list(report.seeds)
    # every policy sees the same optimal length on each world
    lengths = {}
    for r in report.results:
        assert lengths.setdefault(r.seed, r.optimal_length) == r.optimal_length


def test_csv_round_trip(report):
    text = results_to_csv(report.results)
    assert text.startswith("#version=1\n")
    # found_order is not a CSV column
    assert tuple(results_from_csv(text)) == tuple(replace(r, found_order=()) for r in report.results)
    assert results_to_csv(results_from_csv(text)) == text


def test_csv_rejects_unknown_version(report):
    text = results_to_csv(report.results).replace("#version=1", "#version=2")
    with pytest.raises(ValueError):
        results_from_csv(text)


def test_worker_count_does_not_change_results(report):
    parallel = run_benchmark(small_config(), workers=2)
    assert results_to_csv(parallel.results) == results_to_csv(report.results)


def test_report_json(report, tmp_path):
    data = json.loads(report_to_json(report))
    assert {s["policy"] for s in data["policies"]} == {"full", "greedy_frontier", "random_walk"}
    csv_path, json_path = write_outputs(report, tmp_path)
    assert csv_path.read_text() == results_to_csv(report.results)
    assert json.loads(json_path.read_text()) == data


def test_comparisons_use_bonferroni(report):
    # two other policies times two metrics
    assert report.threshold == pytest.approx(0.05 / 4)
    assert len(report.comparisons) == 4


def test_single_episode_random_walk():
    r = run_benchmark(small_config(episodes=1, policies=("random_walk",)))
    assert len(r.results) == 1 and r.comparisons == ()


def test_sweep_small():
    sweep = SweepConfig(ks=(1, 2), successes=3, max_attempts=12)
    rows = scalability_sweep(sweep, SMALL, PolicyConfig(budget=300))
    assert [r.k for r in rows] == [1, 2]
    for r in rows:
        assert r.attempts <= 12
        assert r.partial == (r.successes < 3)
    assert scalability_sweep(sweep, SMALL, PolicyConfig(budget=300), workers=2) == rows
    assert sweep_to_csv(rows).splitlines()[1] == "K,successes,attempts,mean_steps,median_steps,partial"


def test_sweep_cap_reports_partial():
    rows = scalability_sweep(SweepConfig(ks=(3,), successes=5, max_attempts=2), SMALL, PolicyConfig(budget=5))
    assert rows[0].partial and rows[0].attempts == 2 and rows[0].mean_steps is None


# command line


def write_small_ini(path):
    path.write_text("[bench]\nepisodes = 3\npolicies = full, random_walk\n"
                    "[world]\nwidth = 32\nheight = 32\nrooms = 3, 5\nmax_rooms = 8\n"
                    "[policy]\nbudget = 150\n")
    return path


def test_cli_bench_and_stats(tmp_path, capsys):
    ini = write_small_ini(tmp_path / "run.ini")
    assert main(["bench", "--config", str(ini), "--out", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out
    assert "full" in out and "random_walk" in out
    csv_path = tmp_path / "out" / "results.csv"
    assert len(results_from_csv(csv_path.read_text())) == 6
    assert main(["stats", str(csv_path)]) == 0
    assert "n=3" in capsys.readouterr().out


def test_cli_gen_and_run(tmp_path, capsys):
    ini = write_small_ini(tmp_path / "run.ini")
    assert main(["gen", "--config", str(ini), "--seed", "4", "--out", str(tmp_path), "--similarity"]) == 0
    scen = tmp_path / "world_4.txt"
    assert scen.exists() and (tmp_path / "world_4.sim").exists()
    code = main(["run", "--config", str(ini), "--world", str(scen), "--policy", "oracle",
                 "--dump", str(tmp_path / "maps")])
    assert code == 0
    assert "policy=oracle success=1" in capsys.readouterr().out
    assert (tmp_path / "maps" / "occupancy.pgm").exists()


def test_cli_reports_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[bench]\nepisodes = -1\n")
    assert main(["bench", "--config", str(bad)]) == 2
    assert "episodes" in capsys.readouterr().err


def test_cli_stats_refuses_unpaired(tmp_path, capsys, report):
    a = tmp_path / "a.csv"
    a.write_text(results_to_csv([r for r in report.results if r.policy == "full"][:2]
                                + [r for r in report.results if r.policy == "random_walk"]))
    assert main(["stats", str(a)]) == 2
