"""Seeded scenario generation with planner-verified structure.

Scenarios are built from a layout recipe (walls with short gaps vs. long
detours, candidate objects, quiet-corner regions) and then checked with the
actual planner: on-path regions must swing the optimal plan by at least
``min_cost_gap`` steps, off-path regions must leave the optimal plan
byte-identical under every hypothesis combination.  Layouts that fail
verification are resampled deterministically from the same seeded stream, so
a fixed (seed, params) pair always yields the same document.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .planner import plan_task
from .world import (
    Action,
    Cell,
    DefaultPolicy,
    GridMap,
    Hypothesis,
    InfeasibleParamsError,
    Instruction,
    Scenario,
    Step,
    UncertainRegion,
    WorldObject,
    apply_hypothesis,
    candidates_for_step,
    validate_scenario,
)

_COLORS = ("red", "blue")
_SIZES = ("small", "large")
_MARKS = ("round", "square")

_MAX_LAYOUT_ATTEMPTS = 150
_MAX_REGION_ATTEMPTS = 200


@dataclass(frozen=True)
class GenParams:
    """Knobs for generate_scenario; defaults give a 12x9 two-region world."""

    width: int = 12
    height: int = 9
    regions: int = 2
    off_path_fraction: float = 0.5
    goal_candidates: int = 1
    goal_steps: int = 1  # 1 = Visit, 2 = Pickup + Deliver
    region_prior: float = 0.5  # prior of the traversable hypothesis
    detour: bool = True  # critical walls keep a long way around
    min_cost_gap: int = 6
    budget_factor: int = 4
    force_region_truths: tuple[int, ...] | None = None  # per on-path wall, 0=safe 1=blocked
    force_goal_truth: int | None = None  # candidate index


def _candidate_attributes(index: int) -> dict[str, str]:
    # bit-indexed attributes give every candidate set a halving subset
    return {
        "color": _COLORS[index & 1],
        "size": _SIZES[(index >> 1) & 1],
        "mark": _MARKS[(index >> 2) & 1],
    }


def _region(region_id: str, cells: set[Cell], prior: float, truth: int) -> UncertainRegion:
    return UncertainRegion(
        id=region_id,
        cells=frozenset(cells),
        hypotheses=(Hypothesis("safe", True, prior), Hypothesis("toxic", False, 1.0 - prior)),
        truth=truth,
    )


def _plans_equal(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return a.path == b.path


def generate_scenario(seed: int, params: GenParams) -> Scenario:
    """Deterministic scenario for (seed, params); raises InfeasibleParamsError
    when no layout passes verification."""
    w, h = params.width, params.height
    if w < 8 or h < 6:
        raise InfeasibleParamsError(f"grid {w}x{h} too small; need at least 8x6")
    if params.regions < 0 or params.goal_candidates < 1 or params.goal_steps not in (1, 2):
        raise InfeasibleParamsError("regions >= 0, goal_candidates >= 1, goal_steps in (1, 2) required")
    n_off = round(params.regions * params.off_path_fraction)
    n_on = params.regions - n_off
    wall_slots = list(range(3, w - 4))
    if n_on > max(0, len(wall_slots) // 2):
        raise InfeasibleParamsError(f"{n_on} on-path regions do not fit {w} columns")
    if params.goal_candidates + params.goal_steps + n_off * 2 + n_on > w * h // 4:
        raise InfeasibleParamsError("more objects/regions than free cells can host")

    rng = random.Random(seed)
    for _ in range(_MAX_LAYOUT_ATTEMPTS):
        scenario = _try_layout(rng, params, n_on, n_off)
        if scenario is not None:
            validate_scenario(scenario)
            return scenario
    raise InfeasibleParamsError(f"no valid layout found for seed={seed} params={params}")


def _try_layout(rng: random.Random, params: GenParams, n_on: int, n_off: int) -> Scenario | None:
    w, h = params.width, params.height
    band_lo, band_hi = h // 3, max(h // 3 + 1, (2 * h) // 3)
    start = (0, rng.randrange(band_lo, band_hi))

    # evenly spread wall columns, two columns of clearance between them
    wall_cols: list[int] = []
    if n_on:
        span = (w - 7) // n_on
        if span < 2:
            return None
        wall_cols = [3 + i * span + rng.randrange(max(1, span - 1)) for i in range(n_on)]

    obstacles: set[Cell] = set()
    regions: list[UncertainRegion] = []
    used: set[Cell] = {start}
    for i, col in enumerate(wall_cols):
        # gaps sit in the middle band; detours alternate bottom/top row so
        # one blocked wall does not cheapen the next wall's detour
        gap_y = rng.randrange(band_lo, band_hi)
        opening = {(col, h - 1 if i % 2 == 0 else 0)} if params.detour else set()
        obstacles |= {(col, y) for y in range(h)} - {(col, gap_y)} - opening
        if params.force_region_truths is not None:
            truth = params.force_region_truths[i % len(params.force_region_truths)]
        else:
            truth = 0 if rng.random() < params.region_prior else 1
        regions.append(_region(f"smoke-{i}", {(col, gap_y)}, params.region_prior, truth))
        used.add((col, gap_y))

    objects, steps, truth_goals = _place_goals(rng, params, wall_cols, used, obstacles)
    if objects is None:
        return None

    scenario = Scenario(
        grid=GridMap(width=w, height=h, obstacles=frozenset(obstacles)),
        objects=tuple(objects),
        regions=tuple(regions),
        instruction=Instruction(steps=tuple(steps)),
        start=start,
        truth_goals=tuple(truth_goals),
        step_budget=0,
    )
    if not _verify_on_path(scenario, params, n_on):
        return None

    scenario = _add_off_path_regions(rng, scenario, params, n_off)
    if scenario is None:
        return None

    true_plan = _omniscient_plan(scenario)
    if true_plan is None:
        return None
    budget = max(1, params.budget_factor * true_plan.total_cost)
    return Scenario(
        grid=scenario.grid,
        objects=scenario.objects,
        regions=scenario.regions,
        instruction=scenario.instruction,
        start=scenario.start,
        truth_goals=scenario.truth_goals,
        step_budget=budget,
    )


def _place_goals(rng, params: GenParams, wall_cols, used: set[Cell], obstacles: set[Cell]):
    w, h = params.width, params.height
    k = params.goal_candidates
    free_cols = [c for c in range(w - 1, 2, -1) if c not in wall_cols]

    # candidate cells on a >=4-spaced lattice so per-candidate plans diverge
    cols: list[int] = []
    for col in free_cols:
        if not cols or cols[-1] - col >= 4:
            cols.append(col)
        if len(cols) == 2:
            break
    rows = list(range(2, h - 2, 4))  # keep clear of the detour corridors
    spots = [(c, r) for r in rows for c in cols]
    rng.shuffle(spots)
    if k > len(spots):
        return None, None, None

    label = "box" if k > 1 else "person"
    candidates = []
    for idx in range(k):
        cell = spots[idx]
        if cell in used or cell in obstacles:
            return None, None, None
        used.add(cell)
        attrs = _candidate_attributes(idx) if k > 1 else {}
        candidates.append(WorldObject(id=f"{label}-{idx}", label=label, attributes=attrs, cell=cell))
    objects = list(candidates)

    if params.force_goal_truth is not None:
        truth_idx = params.force_goal_truth
        if not 0 <= truth_idx < k:
            return None, None, None
    else:
        truth_idx = rng.randrange(k)

    steps = [Step(action=Action.PICKUP if params.goal_steps == 2 else Action.VISIT, constraints={"label": label})]
    truth_goals = [candidates[truth_idx].id]
    if params.goal_steps == 2:
        drop = (w - 1, h - 2)
        if drop in used or drop in obstacles:
            return None, None, None
        used.add(drop)
        objects.append(WorldObject(id="patient-0", label="person", attributes={}, cell=drop))
        steps.append(Step(action=Action.DELIVER, constraints={"label": "person"}))
        truth_goals.append("patient-0")
    return objects, steps, truth_goals


def _goal_combos(scenario: Scenario) -> list[tuple[str, ...]]:
    per_step = [candidates_for_step(scenario, i) for i in range(len(scenario.instruction.steps))]
    combos = list(itertools.product(*per_step))
    return combos[:16]


def _region_combos(region_ids: list[str]) -> list[dict[str, object]]:
    combos: list[dict[str, object]] = []
    for values in itertools.product((0, 1), repeat=min(len(region_ids), 4)):
        combos.append({f"region:{rid}": v for rid, v in zip(region_ids, values)})
    return combos


def _verify_on_path(scenario: Scenario, params: GenParams, n_on: int) -> bool:
    """Each wall region must swing the plan by >= min_cost_gap (or close the
    only passage when detour is off), with the other walls conservative.

    Checked for the goal choices that drive behavior: the ground-truth goals
    (the omniscient plan must move) and the default max-weight pick (root
    criticality must fire before any goal question is answered)."""
    default_choice = tuple(candidates_for_step(scenario, i)[0] for i in range(len(scenario.instruction.steps)))
    combos = {tuple(scenario.truth_goals), default_choice}
    for region in scenario.regions[:n_on]:
        gap_id = f"region:{region.id}"
        for goals in combos:
            plans = {}
            for value in (0, 1):
                semantic = apply_hypothesis(scenario, {gap_id: value}, DefaultPolicy.CONSERVATIVE)
                plans[value] = plan_task(scenario, semantic, goals)
            if plans[0] is None:
                return False
            if params.detour:
                if plans[1] is None or plans[1].total_cost - plans[0].total_cost < params.min_cost_gap:
                    return False
            elif plans[1] is not None:
                return False
    return True


def _add_off_path_regions(rng, scenario: Scenario, params: GenParams, n_off: int) -> Scenario | None:
    w, h = params.width, params.height
    for j in range(n_off):
        existing = [r.id for r in scenario.regions]
        taken = set(scenario.grid.obstacles) | {scenario.start} | {o.cell for o in scenario.objects}
        for r in scenario.regions:
            taken |= r.cells
        pool = sorted(
            (x, y) for x in range(1, w - 1) for y in range(1, h - 1) if (x, y) not in taken
        )
        placed = None
        for _ in range(_MAX_REGION_ATTEMPTS):
            anchor = pool[rng.randrange(len(pool))]
            cells = {anchor}
            below = (anchor[0], anchor[1] + 1)
            if rng.random() < 0.5 and below not in taken and below[1] < h - 1 and below[1] > 0:
                cells.add(below)
            region = _region(f"haze-{j}", cells, params.region_prior, 0 if rng.random() < params.region_prior else 1)
            trial = Scenario(
                grid=scenario.grid,
                objects=scenario.objects,
                regions=scenario.regions + (region,),
                instruction=scenario.instruction,
                start=scenario.start,
                truth_goals=scenario.truth_goals,
                step_budget=0,
            )
            if _is_off_path(trial, region.id, existing):
                placed = trial
                break
        if placed is None:
            return None
        scenario = placed
    return scenario


def _is_off_path(scenario: Scenario, region_id: str, other_ids: list[str]) -> bool:
    """True when the region never changes any optimal plan, under every
    combination of the other regions' hypotheses and every goal choice."""
    gap_id = f"region:{region_id}"
    for combo in _region_combos(other_ids):
        for goals in _goal_combos(scenario):
            with_free = plan_task(
                scenario, apply_hypothesis(scenario, {**combo, gap_id: 0}, DefaultPolicy.CONSERVATIVE), goals
            )
            with_blocked = plan_task(
                scenario, apply_hypothesis(scenario, {**combo, gap_id: 1}, DefaultPolicy.CONSERVATIVE), goals
            )
            if not _plans_equal(with_free, with_blocked):
                return False
    return True


def _omniscient_plan(scenario: Scenario):
    semantic = apply_hypothesis(scenario, {f"region:{r.id}": r.truth for r in scenario.regions})
    return plan_task(scenario, semantic, tuple(scenario.truth_goals))
