"""Paired benchmark runs, scalability sweeps and their CSV/JSON outputs.

Episode ``i`` of a run uses world seed ``seeds[i]`` for every policy, so all
policies face the same world, spawn and targets.  The seed list itself is
drawn from the run's single base seed.  Results are sorted by episode index
and policy order before anything is written, which keeps outputs identical
for any worker count.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import BenchConfig, SweepConfig, dumps_config
from .episode import PolicyConfig, run_episode
from .metrics import EpisodeResult, mspl, optimal_tour, pairwise_distances, success_rate
from .pgm import save_pgm
from .semantics import table_for_world
from .stats import bonferroni_threshold, wilcoxon_signed_rank
from .worldgen import WorldGenParams, generate_world, sample_spawn

CSV_VERSION = 1
CSV_COLUMNS = ("seed", "policy", "S", "p", "l", "steps", "found_steps", "fail_reason")
REFERENCE = "full"


def episode_seeds(base_seed: int, n: int) -> list[int]:
    """The ``n`` world seeds of a run, derived from its base seed."""
    return [int(s) for s in np.random.default_rng(base_seed).integers(0, 2**31 - 1, size=n)]


def _run_seed(job):
    """All policies on one world seed; executed in worker processes."""
    seed, policies, params, policy_cfg, noise, dump_dir = job
    world = generate_world(seed, params)
    spawn = sample_spawn(world, seed, policy_cfg.sensor.turn_increment)
    ell = optimal_tour(pairwise_distances(world, spawn.cell, world.target_cells))[0]
    table = table_for_world(world, params, seed=seed, noise=noise) if noise > 0 else table_for_world(world, params)
    out = []
    for name in policies:
        maps = {} if dump_dir is not None else None
        cfg = replace(policy_cfg, variant=name)
        out.append(run_episode(world, cfg, seed, table=table, spawn=spawn, optimal_length=ell, maps=maps))
        if maps:
            _dump_maps(Path(dump_dir), seed, name, maps)
    return out


def _dump_maps(root: Path, seed: int, policy: str, maps: dict) -> None:
    root.mkdir(parents=True, exist_ok=True)
    for key, arr in sorted(maps.items()):
        # occupancy states 0..2 keep their codes; score maps scale to their own max
        vmax = 2 if key == "occupancy" else None
        save_pgm(root / f"{seed}_{policy}_{key}.pgm", arr, vmax=vmax)


def _map_jobs(jobs, workers: int):
    if workers <= 1:
        return [_run_seed(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_seed, jobs))


@dataclass(frozen=True)
class PolicySummary:
    policy: str
    episodes: int
    sr: float
    mspl: float
    mean_steps: float
    mean_success_steps: float | None


@dataclass(frozen=True)
class Comparison:
    policy: str  # compared against the reference policy
    metric: str  # "SR" or "MSPL"
    p_value: float
    n_nonzero: int
    significant: bool


@dataclass(frozen=True)
class BenchReport:
    results: tuple[EpisodeResult, ...]
    summaries: tuple[PolicySummary, ...]
    comparisons: tuple[Comparison, ...]
    threshold: float | None
    seeds: tuple[int, ...]
    config: BenchConfig

    def summary(self, policy: str) -> PolicySummary:
        return next(s for s in self.summaries if s.policy == policy)

    def by_policy(self, policy: str) -> list[EpisodeResult]:
        return [r for r in self.results if r.policy == policy]


def summarize(results, policies) -> tuple[PolicySummary, ...]:
    out = []
    for name in policies:
        rs = [r for r in results if r.policy == name]
        wins = [r.steps for r in rs if r.success]
        out.append(PolicySummary(
            policy=name,
            episodes=len(rs),
            sr=success_rate(rs),
            mspl=mspl(rs),
            mean_steps=float(np.mean([r.steps for r in rs])),
            mean_success_steps=float(np.mean(wins)) if wins else None,
        ))
    return tuple(out)


def compare(results, policies, alpha: float = 0.05, reference: str = REFERENCE):
    """Wilcoxon tests of ``reference`` against every other non-oracle policy, on SR and MSPL."""
    others = [p for p in policies if p not in (reference, "oracle")]
    if reference not in policies or not others:
        return (), None
    threshold = bonferroni_threshold(alpha, 2 * len(others))
    ref = [r for r in results if r.policy == reference]
    out = []
    for name in others:
        rs = [r for r in results if r.policy == name]
        for metric, value in (("SR", lambda r: float(r.success)), ("MSPL", lambda r: r.spl_term)):
            w = wilcoxon_signed_rank([value(r) for r in ref], [value(r) for r in rs])
            out.append(Comparison(name, metric, w.p_value, w.n, w.p_value < threshold))
    return tuple(out), threshold


def run_benchmark(config: BenchConfig = BenchConfig(), workers: int | None = None,
                  dump_dir=None) -> BenchReport:
    """Run every configured policy on the same ``config.episodes`` seeded worlds."""
    workers = config.workers if workers is None else workers
    seeds = episode_seeds(config.seed, config.episodes)
    dump = str(dump_dir) if dump_dir is not None else None
    jobs = [(s, config.policies, config.world, config.policy, config.similarity_noise, dump) for s in seeds]
    per_seed = _map_jobs(jobs, workers)
    results = tuple(r for batch in per_seed for r in batch)
    comparisons, threshold = compare(results, config.policies, config.alpha)
    return BenchReport(results, summarize(results, config.policies), comparisons, threshold,
                       tuple(seeds), config)


def _fmt_found(found) -> str:
    return ";".join("-" if f is None else str(f) for f in found)


def results_to_csv(results) -> str:
    buf = io.StringIO()
    buf.write(f"#version={CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        w.writerow([r.seed, r.policy, int(r.success), r.path_length, r.optimal_length, r.steps,
                    _fmt_found(r.found_steps), r.fail_reason])
    return buf.getvalue()


def results_from_csv(text: str) -> list[EpisodeResult]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != f"#version={CSV_VERSION}":
        raise ValueError(f"expected a '#version={CSV_VERSION}' results file")
    reader = csv.reader(lines[1:])
    header = tuple(next(reader, ()))
    if header != CSV_COLUMNS:
        raise ValueError(f"unexpected columns {header}")
    out = []
    for row in reader:
        if not row:
            continue
        seed, policy, s, p, ell, steps, found, reason = row
        out.append(EpisodeResult(
            seed=int(seed), policy=policy, success=s == "1", path_length=int(p),
            optimal_length=int(ell), steps=int(steps),
            found_steps=tuple(None if f == "-" else int(f) for f in found.split(";")) if found else (),
            fail_reason=reason,
        ))
    return out


def report_to_json(report: BenchReport) -> str:
    doc = {
        "version": __version__,
        "csv_version": CSV_VERSION,
        "base_seed": report.config.seed,
        "episodes": report.config.episodes,
        "seeds": list(report.seeds),
        "config": dumps_config(report.config),
        "policies": [
            {"policy": s.policy, "episodes": s.episodes, "SR": s.sr, "MSPL": s.mspl,
             "mean_steps": s.mean_steps, "mean_success_steps": s.mean_success_steps}
            for s in report.summaries
        ],
        "reference": REFERENCE,
        "alpha": report.config.alpha,
        "bonferroni_threshold": report.threshold,
        "comparisons": [
            {"policy": c.policy, "metric": c.metric, "p_value": c.p_value,
             "n_nonzero": c.n_nonzero, "significant": c.significant}
            for c in report.comparisons
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def format_table(report: BenchReport) -> str:
    lines = [f"{'policy':<16} {'SR':>7} {'MSPL':>7} {'steps':>7}"]
    for s in report.summaries:
        lines.append(f"{s.policy:<16} {s.sr:>7.3f} {s.mspl:>7.3f} {s.mean_steps:>7.1f}")
    if report.comparisons:
        lines.append(f"Wilcoxon vs {REFERENCE} (Bonferroni threshold {report.threshold:.4g}):")
        for c in report.comparisons:
            mark = "*" if c.significant else " "
            lines.append(f"  {c.policy:<16} {c.metric:<4} p={c.p_value:.3g} {mark}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SweepRow:
    k: int
    successes: int
    attempts: int
    mean_steps: float | None
    median_steps: float | None
    partial: bool


def _sweep_job(job):
    seed, params, policy_cfg = job
    world = generate_world(seed, params)
    return run_episode(world, policy_cfg, seed, table=table_for_world(world, params))


def scalability_sweep(sweep: SweepConfig = SweepConfig(), world: WorldGenParams = WorldGenParams(),
                      policy: PolicyConfig = PolicyConfig(), seed: int = 0,
                      workers: int = 1) -> tuple[SweepRow, ...]:
    """Collect ``sweep.successes`` successful episodes per K, capped at ``sweep.max_attempts``.

    A K whose cap is hit before enough successes is reported with
    ``partial=True``.  Episodes are processed in seed order in fixed-size
    batches, so the outcome does not depend on ``workers``.
    """
    cfg = replace(policy, variant=sweep.variant)
    rows = []
    for k in sweep.ks:
        params = world.with_targets(k)
        seeds = episode_seeds(int(np.random.default_rng([seed, k]).integers(2**31 - 1)), sweep.max_attempts)
        steps, attempts = [], 0
        batch = max(8, workers)
        while len(steps) < sweep.successes and attempts < len(seeds):
            chunk = seeds[attempts: attempts + batch]
            jobs = [(s, params, cfg) for s in chunk]
            if workers <= 1:
                done = [_sweep_job(j) for j in jobs]
            else:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    done = list(pool.map(_sweep_job, jobs))
            for r in done:
                attempts += 1
                if r.success:
                    steps.append(r.steps)
                if len(steps) == sweep.successes:
                    break
        rows.append(SweepRow(
            k=k,
            successes=len(steps),
            attempts=attempts,
            mean_steps=float(np.mean(steps)) if steps else None,
            median_steps=float(statistics.median(steps)) if steps else None,
            partial=len(steps) < sweep.successes,
        ))
    return tuple(rows)


def sweep_to_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(f"#version={CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("K", "successes", "attempts", "mean_steps", "median_steps", "partial"))
    for r in rows:
        w.writerow([r.k, r.successes, r.attempts,
                    "" if r.mean_steps is None else repr(r.mean_steps),
                    "" if r.median_steps is None else repr(r.median_steps), int(r.partial)])
    return buf.getvalue()


def write_outputs(report: BenchReport, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / "results.csv", out / "report.json"
    csv_path.write_text(results_to_csv(report.results))
    json_path.write_text(report_to_json(report))
    return csv_path, json_path
