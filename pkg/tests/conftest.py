"""Shared fixtures and independent oracle implementations for the test suite."""

from __future__ import annotations

import math
from functools import lru_cache

import pytest

from mintops.mint import Config
from mintops.suites import bundled_scenario
from mintops.world import (
    Action,
    GridMap,
    Hypothesis,
    Instruction,
    Scenario,
    Step,
    UncertainRegion,
    WorldObject,
    validate_scenario,
)


@pytest.fixture(scope="session")
def warehouse() -> Scenario:
    return bundled_scenario("warehouse_smoke")


@pytest.fixture(scope="session")
def shortcut() -> Scenario:
    return bundled_scenario("shortcut")


@pytest.fixture(scope="session")
def decoy_box() -> Scenario:
    return bundled_scenario("decoy_box")


@pytest.fixture
def default_config() -> Config:
    return Config()


def make_scenario(
    width: int = 6,
    height: int = 6,
    obstacles: set | None = None,
    objects: list[WorldObject] | None = None,
    regions: list[UncertainRegion] | None = None,
    steps: list[Step] | None = None,
    start=(0, 0),
    truth_goals: tuple[str, ...] | None = None,
    step_budget: int = 100,
    goal_priors: dict | None = None,
) -> Scenario:
    """Hand-made scenario with sane defaults: one person at the far corner."""
    objects = objects if objects is not None else [
        WorldObject(id="person-0", label="person", attributes={}, cell=(width - 1, height - 1))
    ]
    steps = steps if steps is not None else [Step(action=Action.VISIT, constraints={"label": "person"})]
    scenario = Scenario(
        grid=GridMap(width=width, height=height, obstacles=frozenset(obstacles or set())),
        objects=tuple(objects),
        regions=tuple(regions or ()),
        instruction=Instruction(steps=tuple(steps)),
        start=start,
        truth_goals=truth_goals if truth_goals is not None else (objects[0].id,),
        step_budget=step_budget,
        goal_priors=goal_priors or {},
    )
    validate_scenario(scenario)
    return scenario


def binary_region(region_id: str, cells: set, prior_safe: float = 0.5, truth: int = 1) -> UncertainRegion:
    return UncertainRegion(
        id=region_id,
        cells=frozenset(cells),
        hypotheses=(Hypothesis("safe", True, prior_safe), Hypothesis("toxic", False, 1.0 - prior_safe)),
        truth=truth,
    )


# ---------------------------------------------------------------------------
# Independent oracles (deliberately separate code paths from the package)


def frechet_oracle(p, q) -> float:
    """Discrete Frechet distance straight from the coupling recurrence."""
    p, q = tuple(p), tuple(q)

    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> float:
        d = max(abs(p[i][0] - q[j][0]), abs(p[i][1] - q[j][1]))
        if i == 0 and j == 0:
            return d
        if i == 0:
            return max(rec(0, j - 1), d)
        if j == 0:
            return max(rec(i - 1, 0), d)
        return max(min(rec(i - 1, j), rec(i, j - 1), rec(i - 1, j - 1)), d)

    return float(rec(len(p) - 1, len(q) - 1))


def frechet_all_couplings(p, q) -> float:
    """Exhaustive minimum over every monotone coupling; tiny inputs only."""
    best = math.inf

    def walk(i: int, j: int, worst: float) -> None:
        nonlocal best
        worst = max(worst, max(abs(p[i][0] - q[j][0]), abs(p[i][1] - q[j][1])))
        if worst >= best:
            return
        if i == len(p) - 1 and j == len(q) - 1:
            best = min(best, worst)
            return
        if i + 1 < len(p):
            walk(i + 1, j, worst)
        if j + 1 < len(q):
            walk(i, j + 1, worst)
        if i + 1 < len(p) and j + 1 < len(q):
            walk(i + 1, j + 1, worst)

    walk(0, 0, 0.0)
    return float(best)


def ig_bruteforce(tree, beliefs, query) -> float:
    """Recompute information gain from scratch: enumerate both answers, reweight
    every leaf by its likelihood, merge by per-segment plan identity, and take
    Shannon entropies with plain dict arithmetic."""
    from mintops.mint import GoalIs

    scenario = tree.scenario
    leaves = list(tree.leaves())

    def plan_key(leaf):
        return None if leaf.plan is None else tuple(seg.cells for seg in leaf.plan.segments)

    def entropy(masses) -> float:
        total = sum(masses)
        return -sum((m / total) * math.log2(m / total) for m in masses if m > 0)

    belief = beliefs.gaps[query.gap_id]
    if isinstance(query, GoalIs):
        p_yes = sum(w for c, w in belief.dist.items() if c in set(query.subset))
    else:
        region = scenario.region_by_id(query.region_id)
        p_yes = sum(w for i, w in belief.dist.items() if region.hypotheses[i].traversable)
    if p_yes <= 0 or p_yes >= 1:
        return 0.0

    def likelihood(leaf, yes: bool) -> float:
        gap_id = query.gap_id
        if gap_id not in leaf.assignment:
            return p_yes if yes else 1 - p_yes
        value = leaf.assignment[gap_id]
        if isinstance(query, GoalIs):
            holds = value in set(query.subset)
        else:
            holds = scenario.region_by_id(query.region_id).hypotheses[value].traversable
        return 1.0 if holds is yes else 0.0

    before: dict = {}
    for leaf in leaves:
        before[plan_key(leaf)] = before.get(plan_key(leaf), 0.0) + leaf.mass
    h_before = entropy(before.values())

    expected = 0.0
    for yes, p_answer in ((True, p_yes), (False, 1 - p_yes)):
        merged: dict = {}
        for leaf in leaves:
            mass = leaf.mass * likelihood(leaf, yes)
            if mass > 0:
                merged[plan_key(leaf)] = merged.get(plan_key(leaf), 0.0) + mass
        expected += p_answer * entropy(merged.values())
    return h_before - expected
