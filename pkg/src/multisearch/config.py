"""INI run configuration for benchmarks and sweeps.

Every section and key is optional; anything missing keeps the dataclass
default.  Problems are collected and reported together::

    [bench]
    policies = full, no_sto, no_oto, greedy_frontier, random_walk, oracle
    episodes = 100
    seed = 0
    workers = 1
    alpha = 0.05

    [world]
    width = 64
    height = 64
    room_types = 5
    classes = 20
    targets = 3
    rooms = 6, 8
    objects_per_room = 3, 6

    [policy]
    epsilon = 2
    budget = 500
    range = 10
    fov = 79
    turn = 30

    [sweep]
    k = 1, 2, 3, 4, 5, 6, 7, 8
    successes = 100
    max_attempts = 400
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .episode import VARIANTS, PolicyConfig
from .sensor import SensorConfig
from .worldgen import WorldGenParams


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in problems))
        self.problems = problems


@dataclass(frozen=True)
class BenchConfig:
    policies: tuple[str, ...] = VARIANTS
    episodes: int = 100
    seed: int = 0
    workers: int = 1
    alpha: float = 0.05
    similarity_noise: float = 0.0
    world: WorldGenParams = field(default_factory=WorldGenParams)
    policy: PolicyConfig = field(default_factory=PolicyConfig)


@dataclass(frozen=True)
class SweepConfig:
    ks: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8)
    successes: int = 100
    max_attempts: int = 400
    variant: str = "full"


# ini key -> (target, attribute, parser)
def _int(s):
    return int(s)


def _float(s):
    return float(s)


def _pair(s):
    lo, hi = (int(v) for v in s.split(","))
    return lo, hi


def _names(s):
    return tuple(v.strip() for v in s.split(",") if v.strip())


def _ints(s):
    return tuple(int(v) for v in s.split(",") if v.strip())


_KEYS = {
    "bench": {
        "policies": ("bench", "policies", _names),
        "episodes": ("bench", "episodes", _int),
        "seed": ("bench", "seed", _int),
        "workers": ("bench", "workers", _int),
        "alpha": ("bench", "alpha", _float),
        "similarity_noise": ("bench", "similarity_noise", _float),
    },
    "world": {
        "width": ("world", "width", _int),
        "height": ("world", "height", _int),
        "room_types": ("world", "n_room_types", _int),
        "classes": ("world", "n_classes", _int),
        "targets": ("world", "n_targets", _int),
        "min_room": ("world", "min_room", _int),
        "max_rooms": ("world", "max_rooms", _int),
        "rooms": ("world", "rooms", _pair),
        "extra_door_prob": ("world", "extra_door_prob", _float),
        "objects_per_room": ("world", "objects_per_room", _pair),
        "resolution": ("world", "resolution", _float),
    },
    "policy": {
        "epsilon": ("policy", "epsilon", _int),
        "budget": ("policy", "budget", _int),
        "unknown_cost": ("policy", "unknown_cost", _float),
        "min_frontier_size": ("policy", "min_frontier_size", _int),
        "semantic_footprint": ("policy", "semantic_footprint", _int),
        "score_tolerance": ("policy", "score_tolerance", _float),
        "range": ("sensor", "range", _int),
        "fov": ("sensor", "fov_deg", _float),
        "turn": ("sensor", "turn_increment", _int),
    },
    "sweep": {
        "k": ("sweep", "ks", _ints),
        "successes": ("sweep", "successes", _int),
        "max_attempts": ("sweep", "max_attempts", _int),
        "variant": ("sweep", "variant", str),
    },
}


def parse_config(text: str) -> tuple[BenchConfig, SweepConfig]:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    problems: list[str] = []
    values: dict[str, dict] = {k: {} for k in ("bench", "world", "policy", "sensor", "sweep")}
    for section in cp.sections():
        if section not in _KEYS:
            problems.append(f"[{section}]: unknown section")
            continue
        for key, raw in cp.items(section):
            spec = _KEYS[section].get(key)
            if spec is None:
                problems.append(f"[{section}] {key}: unknown key")
                continue
            target, attr, parse = spec
            try:
                values[target][attr] = parse(raw)
            except ValueError:
                problems.append(f"[{section}] {key}: cannot parse {raw!r}")

    def build(cls, kwargs, label, base=None):
        try:
            return replace(base, **kwargs) if base is not None else cls(**kwargs)
        except (ValueError, TypeError) as exc:
            problems.append(f"[{label}] {exc}")
            return None

    world = build(WorldGenParams, values["world"], "world")
    sensor = build(SensorConfig, values["sensor"], "policy")
    policy = None
    if sensor is not None:
        policy = build(PolicyConfig, {**values["policy"], "sensor": sensor}, "policy")
    b = values["bench"]
    for name in b.get("policies", ()):
        if name not in VARIANTS:
            problems.append(f"[bench] policies: unknown policy {name!r}")
    if "policies" in b and not b["policies"]:
        problems.append("[bench] policies: empty list")
    if b.get("episodes", 1) < 1:
        problems.append("[bench] episodes: must be >= 1")
    if b.get("workers", 1) < 1:
        problems.append("[bench] workers: must be >= 1")
    if not 0 < b.get("alpha", 0.05) < 1:
        problems.append("[bench] alpha: must be in (0, 1)")
    if not 0 <= b.get("similarity_noise", 0.0) <= 1:
        problems.append("[bench] similarity_noise: must be in [0, 1]")
    s = values["sweep"]
    if any(not 1 <= k <= 8 for k in s.get("ks", ())) or ("ks" in s and not s["ks"]):
        problems.append("[sweep] k: values must lie in 1..8")
    if s.get("successes", 1) < 1:
        problems.append("[sweep] successes: must be >= 1")
    if s.get("max_attempts", 1) < 1:
        problems.append("[sweep] max_attempts: must be >= 1")
    if s.get("variant", "full") not in VARIANTS:
        problems.append(f"[sweep] variant: unknown policy {s['variant']!r}")
    if problems:
        raise ConfigError(problems)
    bench = BenchConfig(**b, world=world, policy=policy)
    return bench, SweepConfig(**s)


def load_config(path) -> tuple[BenchConfig, SweepConfig]:
    return parse_config(Path(path).read_text())


def dumps_config(bench: BenchConfig, sweep: SweepConfig = SweepConfig()) -> str:
    """Render a configuration that ``parse_config`` reads back to equal objects."""
    w, p, sn = bench.world, bench.policy, bench.policy.sensor
    lines = [
        "[bench]",
        f"policies = {', '.join(bench.policies)}",
        f"episodes = {bench.episodes}",
        f"seed = {bench.seed}",
        f"workers = {bench.workers}",
        f"alpha = {bench.alpha!r}",
        f"similarity_noise = {bench.similarity_noise!r}",
        "",
        "[world]",
    ]
    inverse = {attr: key for key, (t, attr, _) in _KEYS["world"].items()}
    for f in fields(WorldGenParams):
        if f.name in inverse:
            v = getattr(w, f.name)
            v = ", ".join(str(x) for x in v) if isinstance(v, tuple) else repr(v)
            lines.append(f"{inverse[f.name]} = {v}")
    lines += ["", "[policy]"]
    for key, (target, attr, _) in _KEYS["policy"].items():
        src = sn if target == "sensor" else p
        lines.append(f"{key} = {getattr(src, attr)!r}")
    lines += [
        "",
        "[sweep]",
        f"k = {', '.join(str(k) for k in sweep.ks)}",
        f"successes = {sweep.successes}",
        f"max_attempts = {sweep.max_attempts}",
        f"variant = {sweep.variant}",
    ]
    return "\n".join(lines) + "\n"
