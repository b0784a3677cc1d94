import math
import random

import pytest

from mintops.generate import GenParams, generate_scenario
from mintops.mint import (
    Answer,
    Config,
    ContradictionError,
    GoalIs,
    MissionInfeasibleError,
    RegionTraversable,
    assess_criticality,
    best_plan,
    build_tree,
    enumerate_queries,
    goal_entropy,
    information_gain,
    prune,
    select_query,
    tree_entropy,
)
from mintops.planner import plan_task
from mintops.world import (
    Action,
    DefaultPolicy,
    Step,
    WorldObject,
    apply_hypothesis,
    identify_gaps,
    initial_beliefs,
    true_map,
)

from conftest import binary_region, ig_bruteforce, make_scenario


def beliefs_of(scenario):
    return initial_beliefs(scenario, identify_gaps(scenario))


# ---------------------------------------------------------------------------
# goal_entropy


def test_goal_entropy_point_mass():
    assert goal_entropy([1.0]) == 0.0


def test_goal_entropy_uniform_binary():
    assert goal_entropy([0.5, 0.5]) == 1.0


def test_goal_entropy_half_quarter_quarter():
    assert goal_entropy([0.5, 0.25, 0.25]) == 1.5


def test_goal_entropy_rejects_negative():
    with pytest.raises(ValueError):
        goal_entropy([1.2, -0.2])


# ---------------------------------------------------------------------------
# Criticality


def test_shortcut_smoke_is_critical(shortcut, default_config):
    beliefs = beliefs_of(shortcut)
    # oracle check first: plan under each hypothesis and compare costs
    safe = plan_task(shortcut, apply_hypothesis(shortcut, {"region:smoke": 0}), ("person-0",))
    toxic = plan_task(shortcut, apply_hypothesis(shortcut, {"region:smoke": 1}), ("person-0",))
    assert safe.total_cost == 6 and toxic.total_cost == 14
    crit = assess_criticality(shortcut, beliefs, default_config, "region:smoke")
    assert crit.critical
    assert crit.cost_spread == 8


def test_off_corridor_region_is_irrelevant(default_config):
    scenario = generate_scenario(3, GenParams())
    beliefs = beliefs_of(scenario)
    crit = assess_criticality(scenario, beliefs, default_config, "region:haze-0")
    assert not crit.critical
    assert assess_criticality(scenario, beliefs, default_config, "region:smoke-0").critical


def test_same_cell_candidates_are_irrelevant(default_config):
    twins = [
        WorldObject(id="box-0", label="box", attributes={}, cell=(4, 4)),
        WorldObject(id="box-1", label="box", attributes={}, cell=(4, 4)),
    ]
    scenario = make_scenario(
        objects=twins,
        steps=[Step(action=Action.VISIT, constraints={"label": "box"})],
        truth_goals=("box-0",),
    )
    beliefs = beliefs_of(scenario)
    assert goal_entropy(beliefs["goal:0"].dist.values()) == 1.0
    assert not assess_criticality(scenario, beliefs, default_config, "goal:0").critical


# ---------------------------------------------------------------------------
# build_tree / tree_entropy


def test_no_gaps_yields_single_omniscient_leaf(default_config):
    scenario = make_scenario()
    tree = build_tree(scenario, beliefs_of(scenario), default_config)
    assert tree.root.is_leaf
    omniscient = plan_task(scenario, true_map(scenario), scenario.truth_goals)
    assert tree.root.plan.total_cost == omniscient.total_cost
    assert tree_entropy(tree) == 0.0


def test_single_critical_region_splits_half_half(shortcut, default_config):
    tree = build_tree(shortcut, beliefs_of(shortcut), default_config)
    assert tree.root.gap_id == "region:smoke"
    leaves = list(tree.leaves())
    assert [leaf.mass for leaf in leaves] == [0.5, 0.5]
    assert tree_entropy(tree) == 1.0


def test_warehouse_tree_has_four_distinct_quarter_leaves(warehouse, default_config):
    beliefs = beliefs_of(warehouse)
    tree = build_tree(warehouse, beliefs, default_config)
    leaves = list(tree.leaves())
    assert [leaf.mass for leaf in leaves] == [0.25] * 4
    # oracle: enumerate all four hypothesis assignments and plan each
    expected_costs = set()
    for smoke in (0, 1):
        for goal in ("person-a", "person-b"):
            semantic = apply_hypothesis(warehouse, {"region:smoke": smoke})
            expected_costs.add(plan_task(warehouse, semantic, (goal,)).total_cost)
    assert {leaf.cost for leaf in leaves} == expected_costs
    keys = {tuple(s.cells for s in leaf.plan.segments) for leaf in leaves}
    assert len(keys) == 4
    assert tree_entropy(tree) == 2.0


def test_fully_blocked_scenario_yields_nopath_leaf(default_config):
    scenario = make_scenario(obstacles={(3, y) for y in range(6)})
    tree = build_tree(scenario, beliefs_of(scenario), default_config)
    assert tree.root.is_leaf and tree.root.plan is None
    with pytest.raises(MissionInfeasibleError):
        best_plan(tree, beliefs_of(scenario))


# ---------------------------------------------------------------------------
# enumerate_queries


def test_single_branched_region_yields_one_query(shortcut, default_config):
    beliefs = beliefs_of(shortcut)
    tree = build_tree(shortcut, beliefs, default_config)
    queries = enumerate_queries(tree, beliefs)
    assert [q.query_id for q in queries] == ["q:region:smoke"]


def test_two_distinct_colors_collapse_to_singletons(default_config):
    boxes = [
        WorldObject(id="box-r", label="box", attributes={"color": "red"}, cell=(5, 0)),
        WorldObject(id="box-b", label="box", attributes={"color": "blue"}, cell=(5, 5)),
    ]
    scenario = make_scenario(
        objects=boxes,
        steps=[Step(action=Action.VISIT, constraints={"label": "box"})],
        truth_goals=("box-r",),
    )
    beliefs = beliefs_of(scenario)
    tree = build_tree(scenario, beliefs, default_config)
    queries = enumerate_queries(tree, beliefs)
    assert [q.query_id for q in queries] == ["q:goal:0:box-b", "q:goal:0:box-r"]


def test_four_boxes_two_colors_enumerate_six_queries(decoy_box, default_config):
    beliefs = beliefs_of(decoy_box)
    tree = build_tree(decoy_box, beliefs, default_config)
    queries = enumerate_queries(tree, beliefs)
    singles = [q for q in queries if len(q.subset) == 1]
    pairs = [q for q in queries if len(q.subset) == 2]
    assert len(singles) == 4 and len(pairs) == 2
    assert {q.attribute for q in pairs} == {("color", "red"), ("color", "blue")}


def test_unknown_marks_query_unanswerable(shortcut, default_config):
    beliefs = beliefs_of(shortcut)
    tree = build_tree(shortcut, beliefs, default_config)
    query = enumerate_queries(tree, beliefs)[0]
    tree2, beliefs2 = prune(tree, beliefs, query, Answer.UNKNOWN)
    assert tree2 is tree
    assert beliefs2.gaps == beliefs.gaps
    assert enumerate_queries(tree2, beliefs2) == []


# ---------------------------------------------------------------------------
# information_gain


def test_uniform_region_gain_is_one_bit(shortcut, default_config):
    beliefs = beliefs_of(shortcut)
    tree = build_tree(shortcut, beliefs, default_config)
    ig = information_gain(tree, beliefs, RegionTraversable("smoke"))
    assert ig == pytest.approx(1.0, abs=1e-12)


def test_unbranched_region_gains_nothing(default_config):
    scenario = generate_scenario(3, GenParams())
    beliefs = beliefs_of(scenario)
    tree = build_tree(scenario, beliefs, default_config)
    assert "region:haze-0" not in tree.branched_gap_ids()
    assert information_gain(tree, beliefs, RegionTraversable("haze-0")) == 0.0


def test_weighted_goal_singleton_gain(default_config):
    # weights (0.5, 0.25, 0.25); asking the top candidate: H = 1.5,
    # posterior = 0.5 * 0 + 0.5 * 1.0, so gain is exactly 1 bit
    boxes = [
        WorldObject(id="box-0", label="box", attributes={}, cell=(7, 0)),
        WorldObject(id="box-1", label="box", attributes={}, cell=(7, 4)),
        WorldObject(id="box-2", label="box", attributes={}, cell=(0, 7)),
    ]
    scenario = make_scenario(
        width=8,
        height=8,
        objects=boxes,
        steps=[Step(action=Action.VISIT, constraints={"label": "box"})],
        truth_goals=("box-0",),
        goal_priors={0: {"box-0": 0.5, "box-1": 0.25, "box-2": 0.25}},
    )
    beliefs = beliefs_of(scenario)
    tree = build_tree(scenario, beliefs, default_config)
    assert tree_entropy(tree) == 1.5
    ig = information_gain(tree, beliefs, GoalIs(step_index=0, subset=("box-0",)))
    assert ig == pytest.approx(1.0, abs=1e-12)
    assert ig == pytest.approx(ig_bruteforce(tree, beliefs, GoalIs(step_index=0, subset=("box-0",))), abs=1e-12)


def test_vacuous_query_gains_nothing(shortcut, default_config):
    beliefs = beliefs_of(shortcut)
    tree = build_tree(shortcut, beliefs, default_config)
    query = RegionTraversable("smoke")
    tree2, beliefs2 = prune(tree, beliefs, query, Answer.YES)
    assert information_gain(tree2, beliefs2, query) == 0.0


def _random_small_instances(count: int, seed: int):
    rng = random.Random(seed)
    shapes = [
        GenParams(regions=1, off_path_fraction=0.0),
        GenParams(regions=2, off_path_fraction=0.0),
        GenParams(regions=2, off_path_fraction=0.5),
        GenParams(regions=1, off_path_fraction=0.0, goal_candidates=2),
        GenParams(regions=0, goal_candidates=4),
        GenParams(regions=1, off_path_fraction=0.0, goal_candidates=3),
        GenParams(regions=0, goal_candidates=2, goal_steps=2),
    ]
    made = 0
    while made < count:
        params = shapes[rng.randrange(len(shapes))]
        yield generate_scenario(rng.randrange(1_000_000), params)
        made += 1


def test_information_gain_matches_bruteforce_oracle(default_config):
    checked = 0
    for scenario in _random_small_instances(40, seed=555):
        beliefs = beliefs_of(scenario)
        tree = build_tree(scenario, beliefs, default_config)
        if len(tree.branched_gap_ids()) > 3:
            continue
        for query in enumerate_queries(tree, beliefs):
            fast = information_gain(tree, beliefs, query)
            slow = ig_bruteforce(tree, beliefs, query)
            assert fast == pytest.approx(slow, abs=1e-9)
            assert fast >= -1e-9
            assert fast <= 1.0 + 1e-9  # binary answers carry at most one bit
            checked += 1
    assert checked > 50


# ---------------------------------------------------------------------------
# select_query


def test_zero_entropy_stops(default_config):
    scenario = make_scenario()
    beliefs = beliefs_of(scenario)
    tree = build_tree(scenario, beliefs, default_config)
    assert select_query(tree, beliefs, default_config, asked_count=0) is None


def test_budget_exhaustion_stops(shortcut, default_config):
    beliefs = beliefs_of(shortcut)
    tree = build_tree(shortcut, beliefs, default_config)
    assert select_query(tree, beliefs, default_config, asked_count=default_config.max_queries) is None


def test_critical_region_dominates_irrelevant_one(default_config):
    scenario = generate_scenario(3, GenParams())
    beliefs = beliefs_of(scenario)
    tree = build_tree(scenario, beliefs, default_config)
    query = select_query(tree, beliefs, default_config, asked_count=0)
    assert query == RegionTraversable("smoke-0")


def test_ig_tie_breaks_on_expected_final_cost(warehouse, default_config):
    beliefs = beliefs_of(warehouse)
    tree = build_tree(warehouse, beliefs, default_config)
    queries = enumerate_queries(tree, beliefs)
    gains = {q.query_id: information_gain(tree, beliefs, q) for q in queries}
    assert all(g == pytest.approx(1.0) for g in gains.values())

    # oracle: expected post-resolution cost of each pruning, by direct planning
    def fallback_cost(smoke=None, goal="person-a"):
        assignment = {} if smoke is None else {"region:smoke": smoke}
        semantic = apply_hypothesis(warehouse, assignment, DefaultPolicy.CONSERVATIVE)
        return plan_task(warehouse, semantic, (goal,)).total_cost

    exp_region = 0.5 * fallback_cost(smoke=0) + 0.5 * fallback_cost(smoke=1)
    exp_goal_a = 0.5 * fallback_cost(goal="person-a") + 0.5 * fallback_cost(goal="person-b")
    assert exp_region < exp_goal_a

    assert select_query(tree, beliefs, default_config, asked_count=0) == RegionTraversable("smoke")


def test_selection_is_deterministic(warehouse, default_config):
    beliefs = beliefs_of(warehouse)
    tree = build_tree(warehouse, beliefs, default_config)
    picks = {select_query(tree, beliefs, default_config, 0).query_id for _ in range(5)}
    assert len(picks) == 1


# ---------------------------------------------------------------------------
# prune


def test_yes_collapses_two_leaf_tree(shortcut, default_config):
    beliefs = beliefs_of(shortcut)
    tree = build_tree(shortcut, beliefs, default_config)
    tree2, beliefs2 = prune(tree, beliefs, RegionTraversable("smoke"), Answer.YES)
    leaves = list(tree2.leaves())
    assert len(leaves) == 1 and leaves[0].mass == 1.0
    assert tree_entropy(tree2) == 0.0
    assert beliefs2["region:smoke"].resolved
    assert beliefs2["region:smoke"].resolved_value == 0  # the traversable hypothesis


def test_goal_no_renormalizes_bayes_style(default_config):
    # Bayes oracle: dropping 0.5 leaves (0.25, 0.25) -> renormalized (0.5, 0.5)
    boxes = [
        WorldObject(id="box-0", label="box", attributes={}, cell=(7, 0)),
        WorldObject(id="box-1", label="box", attributes={}, cell=(7, 4)),
        WorldObject(id="box-2", label="box", attributes={}, cell=(0, 7)),
    ]
    scenario = make_scenario(
        width=8,
        height=8,
        objects=boxes,
        steps=[Step(action=Action.VISIT, constraints={"label": "box"})],
        truth_goals=("box-1",),
        goal_priors={0: {"box-0": 0.5, "box-1": 0.25, "box-2": 0.25}},
    )
    beliefs = beliefs_of(scenario)
    tree = build_tree(scenario, beliefs, default_config)
    _, beliefs2 = prune(tree, beliefs, GoalIs(step_index=0, subset=("box-0",)), Answer.NO)
    assert beliefs2["goal:0"].dist == {"box-1": 0.5, "box-2": 0.5}
    assert not beliefs2["goal:0"].resolved


def test_contradiction_is_reported(shortcut, default_config):
    beliefs = beliefs_of(shortcut)
    tree = build_tree(shortcut, beliefs, default_config)
    tree2, beliefs2 = prune(tree, beliefs, RegionTraversable("smoke"), Answer.YES)
    with pytest.raises(ContradictionError):
        prune(tree2, beliefs2, RegionTraversable("smoke"), Answer.NO)
    # beliefs unchanged by the failed prune
    assert beliefs2["region:smoke"].resolved_value == 0


def test_entropy_never_rises_after_answers(warehouse, shortcut, decoy_box, default_config):
    from mintops.elicitation import oracle_answer

    for scenario in (warehouse, shortcut, decoy_box):
        beliefs = beliefs_of(scenario)
        tree = build_tree(scenario, beliefs, default_config)
        while True:
            query = select_query(tree, beliefs, default_config, asked_count=0)
            if query is None:
                break
            before = tree_entropy(tree)
            tree, beliefs = prune(tree, beliefs, query, oracle_answer(query, scenario))
            assert tree_entropy(tree) <= before + 1e-12


# ---------------------------------------------------------------------------
# best_plan


def test_resolved_tree_returns_omniscient_plan(shortcut, default_config):
    beliefs = beliefs_of(shortcut)
    tree = build_tree(shortcut, beliefs, default_config)
    tree2, beliefs2 = prune(tree, beliefs, RegionTraversable("smoke"), Answer.NO)  # truth is toxic
    plan = best_plan(tree2, beliefs2)
    omniscient = plan_task(shortcut, true_map(shortcut), shortcut.truth_goals)
    assert plan.total_cost == omniscient.total_cost == 14


def test_unresolved_irrelevant_region_costs_within_delta_c(default_config):
    for seed in range(5):
        scenario = generate_scenario(100 + seed, GenParams(regions=1, off_path_fraction=1.0))
        beliefs = beliefs_of(scenario)
        tree = build_tree(scenario, beliefs, default_config)
        plan = best_plan(tree, beliefs)
        omniscient = plan_task(scenario, true_map(scenario), scenario.truth_goals)
        assert plan.total_cost - omniscient.total_cost <= default_config.delta_c
        haze = scenario.regions[0]
        assert not set(plan.path) & haze.cells


def test_unknown_then_fallback_goes_to_max_weight(default_config):
    boxes = [
        WorldObject(id="box-0", label="box", attributes={}, cell=(7, 0)),
        WorldObject(id="box-1", label="box", attributes={}, cell=(7, 4)),
    ]
    scenario = make_scenario(
        width=8,
        height=8,
        objects=boxes,
        steps=[Step(action=Action.VISIT, constraints={"label": "box"})],
        truth_goals=("box-1",),
        goal_priors={0: {"box-0": 0.6, "box-1": 0.4}},
    )
    beliefs = beliefs_of(scenario)
    tree = build_tree(scenario, beliefs, default_config)
    for query in enumerate_queries(tree, beliefs):
        tree, beliefs = prune(tree, beliefs, query, Answer.UNKNOWN)
    assert enumerate_queries(tree, beliefs) == []
    plan = best_plan(tree, beliefs)
    assert plan.goal_choice == ("box-0",)  # max weight wins
