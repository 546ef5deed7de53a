"""Command-line entry point: ``multisearch {gen,run,bench,sweep,stats}``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .bench import (
    episode_seeds,
    format_table,
    results_from_csv,
    run_benchmark,
    scalability_sweep,
    sweep_to_csv,
    write_outputs,
)
from .config import BenchConfig, ConfigError, SweepConfig, load_config
from .episode import VARIANTS, run_episode
from .pgm import save_pgm
from .scenario import load_scenario, save_scenario
from .semantics import save_similarity, table_for_world
from .stats import wilcoxon_signed_rank
from .world import WorldError
from .worldgen import generate_world


def _configs(args) -> tuple[BenchConfig, SweepConfig]:
    bench, sweep = load_config(args.config) if args.config else (BenchConfig(), SweepConfig())
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "episodes", None) is not None:
        changes["episodes"] = args.episodes
    if getattr(args, "workers", None) is not None:
        changes["workers"] = args.workers
    if getattr(args, "policies", None):
        changes["policies"] = tuple(args.policies.split(","))
    if getattr(args, "targets", None) is not None:
        changes["world"] = bench.world.with_targets(args.targets)
    if getattr(args, "budget", None) is not None:
        changes["policy"] = replace(bench.policy, budget=args.budget)
    return replace(bench, **changes), sweep


def cmd_gen(args) -> int:
    bench, _ = _configs(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = [args.seed] if args.count is None else episode_seeds(args.seed, args.count)
    for s in seeds:
        world = generate_world(s, bench.world)
        path = save_scenario(world, out / f"world_{s}.txt")
        if args.similarity:
            save_similarity(table_for_world(world, bench.world), out / f"world_{s}.sim")
        print(path)
    return 0


def cmd_run(args) -> int:
    bench, _ = _configs(args)
    params = bench.world
    if args.world:
        world = load_scenario(args.world)
        params = replace(params, width=world.width, height=world.height,
                         n_room_types=world.n_room_types, n_classes=world.n_classes,
                         n_targets=world.n_targets, affinity=None)
    else:
        world = generate_world(args.seed, params)
    maps = {} if args.dump else None
    cfg = replace(bench.policy, variant=args.policy)
    table = table_for_world(world, params) if args.policy in ("full", "no_sto", "no_oto") else None
    result = run_episode(world, cfg, args.episode_seed, table=table, maps=maps)
    print(f"policy={result.policy} success={int(result.success)} steps={result.steps} "
          f"p={result.path_length} l={result.optimal_length} spl={result.spl_term:.4f} "
          f"found={list(result.found_steps)} reason={result.fail_reason or '-'}")
    if args.dump:
        out = Path(args.dump)
        out.mkdir(parents=True, exist_ok=True)
        for key, arr in sorted(maps.items()):
            save_pgm(out / f"{key}.pgm", arr, vmax=2 if key == "occupancy" else None)
    return 0 if result.success else 1


def cmd_bench(args) -> int:
    bench, _ = _configs(args)
    report = run_benchmark(bench, dump_dir=args.dump_maps)
    csv_path, json_path = write_outputs(report, args.out)
    sys.stdout.write(format_table(report))
    print(f"wrote {csv_path} and {json_path}")
    return 0


def cmd_sweep(args) -> int:
    bench, sweep = _configs(args)
    if args.k:
        sweep = replace(sweep, ks=tuple(int(k) for k in args.k.split(",")))
    if args.successes is not None:
        sweep = replace(sweep, successes=args.successes)
    if args.max_attempts is not None:
        sweep = replace(sweep, max_attempts=args.max_attempts)
    rows = scalability_sweep(sweep, bench.world, bench.policy, bench.seed, bench.workers)
    text = sweep_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_stats(args) -> int:
    a = [r for r in results_from_csv(Path(args.a).read_text()) if r.policy == args.policy_a]
    b = [r for r in results_from_csv(Path(args.b or args.a).read_text()) if r.policy == args.policy_b]
    by_seed = {r.seed: r for r in b}
    pairs = [(r, by_seed[r.seed]) for r in a if r.seed in by_seed]
    if not pairs or len(pairs) != len(a) or len(pairs) != len(b):
        print("error: the two result sets are not paired by seed", file=sys.stderr)
        return 2

    def value(r):
        return float(r.success) if args.metric == "SR" else r.spl_term

    w = wilcoxon_signed_rank([value(x) for x, _ in pairs], [value(y) for _, y in pairs])
    print(f"{args.policy_a} vs {args.policy_b} on {args.metric}: n={len(pairs)} "
          f"nonzero={w.n} W={w.statistic} p={w.p_value:.6g} ({w.method})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multisearch", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI run configuration")
        sp.add_argument("--seed", type=int, default=None, help="base seed")

    g = sub.add_parser("gen", help="generate scenario files")
    common(g)
    g.add_argument("--count", type=int, help="number of worlds (seeds drawn from --seed)")
    g.add_argument("--out", default=".", help="output directory")
    g.add_argument("--similarity", action="store_true", help="also write each world's similarity table")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run a single episode")
    common(r)
    r.add_argument("--world", help="scenario file (default: generate from --seed)")
    r.add_argument("--policy", choices=VARIANTS, default="full")
    r.add_argument("--episode-seed", type=int, default=0, help="spawn and action-noise seed")
    r.add_argument("--budget", type=int)
    r.add_argument("--dump", help="directory for final map dumps")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="paired benchmark suite")
    common(b)
    b.add_argument("--episodes", type=int)
    b.add_argument("--workers", type=int)
    b.add_argument("--policies", help="comma-separated policy list")
    b.add_argument("--targets", type=int, help="K")
    b.add_argument("--budget", type=int)
    b.add_argument("--out", default="bench_out", help="output directory")
    b.add_argument("--dump-maps", help="directory for per-episode map dumps")
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("sweep", help="scalability sweep over K")
    common(s)
    s.add_argument("--k", help="comma-separated K values")
    s.add_argument("--successes", type=int)
    s.add_argument("--max-attempts", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--budget", type=int)
    s.add_argument("--out", help="CSV output path")
    s.set_defaults(func=cmd_sweep)

    t = sub.add_parser("stats", help="Wilcoxon signed-rank test on paired result CSVs")
    t.add_argument("a", help="results CSV")
    t.add_argument("b", nargs="?", help="second results CSV (default: same file)")
    t.add_argument("--policy-a", default="full")
    t.add_argument("--policy-b", default="random_walk")
    t.add_argument("--metric", choices=("SR", "MSPL"), default="SR")
    t.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, WorldError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
