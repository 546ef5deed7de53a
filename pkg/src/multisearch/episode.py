"""One search episode: sense, map, score, pick a goal, act; repeat until done."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mapping import FREE, OBSTACLE, OccupancyMap, SemanticMap, cone_mask, update_occupancy, update_semantic
from .metrics import EpisodeResult, optimal_tour, pairwise_distances
from .planner import (
    Frontier,
    SearchState,
    TargetWaypoint,
    distance_field,
    extract_frontiers,
    look_target,
    next_action,
    on_detection,
    path_still_valid,
    plan_path,
    select_frontier,
    select_nearest_frontier,
)
from .scoremap import drop_target_channel, empty_sto, fuse, oto_compute, sto_update
from .semantics import SimilarityTable, scene_score, table_for_world
from .sensor import SensorConfig, observe
from .world import UNREACHABLE, Action, GridWorld, RobotState, step
from .worldgen import WorldGenParams, sample_spawn

VARIANTS = ("full", "no_sto", "no_oto", "greedy_frontier", "random_walk", "oracle")
SCORED = {"full": (True, True), "no_sto": (False, True), "no_oto": (True, False)}


@dataclass(frozen=True)
class PolicyConfig:
    variant: str = "full"
    epsilon: int = 2
    budget: int = 500
    sensor: SensorConfig = field(default_factory=SensorConfig)
    unknown_cost: float = 1.0
    min_frontier_size: int = 1
    semantic_footprint: int = 2
    score_tolerance: float = 0.3

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown policy variant {self.variant!r}; expected one of {VARIANTS}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.unknown_cost <= 0:
            raise ValueError("unknown_cost must be positive")
        if not 0 <= self.score_tolerance < 1:
            raise ValueError("score_tolerance must lie in [0, 1)")
        if self.min_frontier_size < 1:
            raise ValueError("min_frontier_size must be >= 1")


class _ScoreMaps:
    """StO accumulator plus the per-step OtO recomputation and fusion."""

    def __init__(self, world: GridWorld, table: SimilarityTable, use_sto: bool, use_oto: bool,
                 footprint: int):
        shape = world.occupancy.shape
        self.table = table
        self.use_sto, self.use_oto = use_sto, use_oto
        self.sem = SemanticMap(world.n_classes, *shape, footprint=footprint)
        self.sto = empty_sto(range(world.n_targets), shape) if use_sto else None
        self.oto = None
        self.updates = 0
        self.last_unified = None

    def update(self, obs, fov_deg: float, remaining) -> np.ndarray:
        self.updates += 1
        update_semantic(self.sem, obs)
        if self.use_sto:
            cone = cone_mask(self.sem.layers.shape[1:], obs, fov_deg)
            scores = [scene_score(obs, j, self.table) for j in self.sto.targets]
            self.sto = sto_update(self.sto, cone, scores)
        if self.use_oto:
            self.oto = oto_compute(self.sem, self.table, remaining)
        self.last_unified = fuse(self.sto, self.oto)
        return self.last_unified

    def drop(self, target: int) -> None:
        if self.sto is not None:
            (self.sto,) = drop_target_channel([self.sto], target)


def _truth_map(world: GridWorld) -> OccupancyMap:
    occ = OccupancyMap(world.height, world.width)
    occ.cells[:] = np.where(world.occupancy, OBSTACLE, FREE)
    return occ


def run_episode(world: GridWorld, config: PolicyConfig = PolicyConfig(), seed: int = 0,
                table: SimilarityTable | None = None, spawn: RobotState | None = None,
                optimal_length: int | None = None, maps: dict | None = None) -> EpisodeResult:
    """Run one episode to success, budget exhaustion, or an exhausted map.

    ``seed`` fixes the spawn pose (unless ``spawn`` is given) and the
    random-walk action stream, so every policy replays the same start.
    Passing a dict as ``maps`` fills it with the final occupancy map and,
    for scored variants, the confidence, unified and per-target score maps.
    """
    sensor = config.sensor
    if spawn is None:
        spawn = sample_spawn(world, seed, sensor.turn_increment)
    world.validate_spawn(spawn.cell)
    if optimal_length is None:
        optimal_length = optimal_tour(pairwise_distances(world, spawn.cell, world.target_cells))[0]

    variant = config.variant
    scores = None
    if variant in SCORED:
        if table is None:
            # the table depends on the class statistics only, not the grid size
            table = table_for_world(world, WorldGenParams(
                n_room_types=world.n_room_types, n_classes=world.n_classes, n_targets=world.n_targets))
        else:
            table.bind(world)
        scores = _ScoreMaps(world, table, *SCORED[variant], config.semantic_footprint)

    rng = np.random.default_rng([seed, 2])
    truth = _truth_map(world) if variant == "oracle" else None
    tour = []
    if variant == "oracle":
        dist = pairwise_distances(world, spawn.cell, world.target_cells)
        tour = [n - 1 for n in optimal_tour(dist)[1]]

    state = SearchState(remaining=list(range(world.n_targets)))
    occ = OccupancyMap(world.height, world.width)
    robot = spawn
    success, reason = False, "budget"
    snapshot = None

    for t in range(config.budget):
        state.step_count = t
        obs = observe(world, robot, sensor)
        known = occ.unknown_count()
        update_occupancy(occ, obs)
        if occ.unknown_count() != known:
            state.poses.clear()
            state.locked = False
        pose = (robot.cell, robot.heading)
        if pose in state.poses:
            # back in a pose with nothing new learned: the goal choice is cycling
            state.locked = True
        state.poses.add(pose)
        for j in on_detection(state, obs, robot, occ, config.epsilon, t):
            if scores is not None:
                scores.drop(j)
        if not state.remaining:
            success, reason = True, ""
            state.step_count = t + 1
            break

        if variant == "random_walk":
            action = (Action.FORWARD, Action.TURN_LEFT, Action.TURN_RIGHT)[int(rng.integers(3))]
        else:
            unified = None
            if scores is not None:
                unified = scores.update(obs, sensor.fov_deg, state.remaining)
            if variant == "oracle":
                goal = next(j for j in tour if j in state.remaining)
                target = world.target_cells[goal]
                if state.path is None or state.path[-1] != target or state.path[0] != robot.cell:
                    state.path = plan_path(truth, robot.cell, target, heading=robot.heading)
                path = state.path
            else:
                path = _choose_path(state, occ, robot, unified, config)
                if path is None:
                    reason = "exhausted"
                    state.step_count = t
                    break
            action = next_action(robot, path, sensor.turn_increment)

        robot, blocked = step(world, robot, action, sensor.turn_increment)
        if action is Action.FORWARD and not blocked:
            state.travelled += 1
            if state.path and len(state.path) > 1 and state.path[1] == robot.cell:
                state.path = state.path[1:]
        state.step_count = t + 1

    if maps is not None:
        maps["occupancy"] = occ.cells.copy()
        if scores is not None:
            _export_maps(scores, maps)
    found = tuple(state.found_steps.get(j) for j in range(world.n_targets))
    return EpisodeResult(
        seed=seed,
        policy=variant,
        success=success,
        path_length=state.travelled,
        optimal_length=int(optimal_length),
        steps=state.step_count,
        found_steps=found,
        fail_reason=reason,
        found_order=tuple(state.found_order),
        score_updates=scores.updates if scores is not None else 0,
    )


def _export_maps(scores: _ScoreMaps, maps: dict) -> None:
    if scores.sto is not None:
        maps["confidence"] = scores.sto.confidence.copy()
        for j, ch in zip(scores.sto.targets, scores.sto.channels):
            maps[f"sto_{j}"] = ch.copy()
    if scores.oto is not None:
        for j, ch in zip(scores.oto.targets, scores.oto.channels):
            maps[f"oto_{j}"] = ch.copy()
    if scores.last_unified is not None:
        maps["unified"] = scores.last_unified.copy()


def _choose_path(state: SearchState, occ: OccupancyMap, robot: RobotState, unified, config):
    """Pick this step's goal and return a path to it, or None if nothing is reachable."""
    field_ = distance_field(occ, robot.cell, config.unknown_cost)

    goal = None
    known = [(field_[c[1], c[0]], j, c) for j, c in state.known_targets.items()
             if j in state.remaining and np.isfinite(field_[c[1], c[0]])]
    if known:
        _, j, c = min(known)
        goal = TargetWaypoint(c, j)
    else:
        frontiers, segments = extract_frontiers(occ, config.min_frontier_size, with_segments=True)
        held = _held_frontier(state.current_goal, frontiers, segments, field_)
        prefer = held.cell if held is not None else None
        if held is not None and state.locked:
            goal = held
        elif unified is None:
            goal = select_nearest_frontier(frontiers, field_, prefer)
        else:
            goal = select_frontier(frontiers, unified, robot, field_, config.score_tolerance, prefer)
        if goal is None:
            return None

    if goal.cell == robot.cell:
        look = look_target(occ, robot.cell)
        state.current_goal, state.path = goal, None
        return [robot.cell, look] if look is not None else None

    cached = state.path
    if (cached is not None and state.current_goal is not None
            and state.current_goal.cell == goal.cell and cached[0] == robot.cell
            and cached[-1] == goal.cell and path_still_valid(occ, cached, config.unknown_cost)):
        state.current_goal = goal
        return cached
    path = plan_path(occ, robot.cell, goal.cell, config.unknown_cost, robot.heading)
    if path is UNREACHABLE:
        return None
    state.current_goal, state.path = goal, path
    return path


def _held_frontier(goal, frontiers, segments, field_):
    """The frontier whose segment still contains the previous frontier goal, if reachable."""
    if not isinstance(goal, Frontier):
        return None
    k = segments[goal.cell[1], goal.cell[0]]
    if k == 0:
        return None
    f = frontiers[k - 1]
    return f if np.isfinite(field_[f.cell[1], f.cell[0]]) else None
