"""Minimal-information reasoning tree over critical knowledge gaps.

The tree branches only on gaps whose hypotheses lead to materially different
plans (cost gap above delta_c or trajectory divergence above delta_d); every
other gap is noise and is absorbed by risk-averse defaults.  Leaves hold
hypothesis-conditioned optimal plans with the probability mass of reaching
them.  Query selection maximizes expected entropy reduction over distinct
leaf plans; answers prune beliefs and the tree is rebuilt so criticality
interactions between gaps are re-detected.

All operations are pure functions over immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping

from .planner import TaskPlan, divergence, plan_cost, plan_task
from .world import (
    PROB_TOL,
    Belief,
    BeliefState,
    DefaultPolicy,
    Scenario,
    apply_hypothesis,
    candidates_for_step,
)


class MintError(Exception):
    """Base class for reasoning-tree failures."""


class MassConservationError(MintError):
    """Leaf masses or belief weights stopped summing to 1."""


class ContradictionError(MintError):
    """An answer is inconsistent with an already-resolved gap."""


class MissionInfeasibleError(MintError):
    """No plan exists under the risk-averse rendering of residual uncertainty."""


@dataclass(frozen=True)
class Config:
    """Thresholds and budgets for tree construction and query selection."""

    delta_c: float = 2.0  # cost-gap threshold, steps
    delta_d: float = 2.0  # divergence threshold, cells
    h_min: float = 0.5  # goal-entropy threshold, bits
    eps_ig: float = 1e-6  # minimum information gain worth asking, bits
    max_queries: int = 5
    max_branch_gaps: int = 6

    def __post_init__(self) -> None:
        if min(self.delta_c, self.delta_d, self.h_min, self.eps_ig) < 0:
            raise ValueError("thresholds must be >= 0")
        if self.max_queries < 0:
            raise ValueError("max_queries must be >= 0")
        if self.max_branch_gaps < 1:
            raise ValueError("max_branch_gaps must be >= 1")


class Answer(str, Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class RegionTraversable:
    """Binary question: is this region safe to pass through?"""

    region_id: str

    @property
    def gap_id(self) -> str:
        return f"region:{self.region_id}"

    @property
    def query_id(self) -> str:
        return f"q:region:{self.region_id}"


@dataclass(frozen=True)
class GoalIs:
    """Binary question: is the step's target inside this candidate subset?"""

    step_index: int
    subset: tuple[str, ...]
    attribute: tuple[str, str] | None = None  # (key, value) when attribute-derived

    def __post_init__(self) -> None:
        if not self.subset:
            raise ValueError("GoalIs subset must be nonempty")
        object.__setattr__(self, "subset", tuple(sorted(self.subset)))

    @property
    def gap_id(self) -> str:
        return f"goal:{self.step_index}"

    @property
    def query_id(self) -> str:
        return f"q:goal:{self.step_index}:{','.join(self.subset)}"


Query = RegionTraversable | GoalIs


@dataclass(frozen=True)
class MintNode:
    """Tree node; a leaf iff gap_id is None.  Leaf plan None encodes NoPath."""

    assignment: Mapping[str, object]
    mass: float
    gap_id: str | None = None
    choices: tuple[object, ...] = ()
    children: tuple["MintNode", ...] = ()
    plan: TaskPlan | None = None
    cost: float = math.inf

    @property
    def is_leaf(self) -> bool:
        return self.gap_id is None


@dataclass(frozen=True)
class MintTree:
    root: MintNode
    scenario: Scenario
    config: Config

    def leaves(self) -> Iterator[MintNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                yield node
            else:
                stack.extend(reversed(node.children))

    def branched_gap_ids(self) -> set[str]:
        out: set[str] = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if not node.is_leaf:
                out.add(node.gap_id)
                stack.extend(node.children)
        return out


@dataclass(frozen=True)
class Criticality:
    critical: bool
    cost_spread: float
    path_divergence: float


# ---------------------------------------------------------------------------
# Planning under partial assignments


def _base_assignment(beliefs: BeliefState) -> dict[str, object]:
    return {gid: b.resolved_value for gid, b in beliefs.gaps.items() if b.resolved}


def risk_averse_goals(scenario: Scenario, beliefs: BeliefState, assignment: Mapping[str, object]) -> tuple[str, ...]:
    """Per-step targets: assigned choice, else max-weight candidate (id tie-break)."""
    choice: list[str] = []
    for i in range(len(scenario.instruction.steps)):
        gap_id = f"goal:{i}"
        if gap_id in assignment:
            choice.append(str(assignment[gap_id]))
        elif gap_id in beliefs.gaps:
            dist = beliefs.gaps[gap_id].dist
            top = max(dist.values())
            choice.append(min(str(c) for c, w in dist.items() if w >= top - PROB_TOL))
        else:
            choice.append(candidates_for_step(scenario, i)[0])
    return tuple(choice)


def risk_averse_plan(
    scenario: Scenario,
    beliefs: BeliefState,
    assignment: Mapping[str, object],
    cache: dict | None = None,
) -> TaskPlan | None:
    """Optimal plan for assignment + risk-averse defaults (conservative regions,
    max-weight goals)."""
    goals = risk_averse_goals(scenario, beliefs, assignment)
    region_key = tuple(sorted((g, v) for g, v in assignment.items() if g.startswith("region:")))
    key = (region_key, goals)
    if cache is not None and key in cache:
        return cache[key]
    semantic_map = apply_hypothesis(scenario, assignment, DefaultPolicy.CONSERVATIVE)
    plan = plan_task(scenario, semantic_map, goals)
    if cache is not None:
        cache[key] = plan
    return plan


def _pair_stats(a: TaskPlan | None, b: TaskPlan | None) -> tuple[float, float]:
    if a is None and b is None:
        return 0.0, 0.0
    if a is None or b is None:
        return math.inf, math.inf
    # compare segment by segment: plans that trace the same cells but stop at
    # different goal cells must still count as divergent
    spread = abs(a.total_cost - b.total_cost)
    div = max(divergence(sa, sb) for sa, sb in zip(a.segments, b.segments))
    return spread, div


# ---------------------------------------------------------------------------
# Entropy and criticality


def goal_entropy(weights: Iterable[float] | Mapping[object, float]) -> float:
    """Shannon entropy of a candidate distribution in bits (0*log 0 = 0)."""
    values = list(weights.values()) if isinstance(weights, Mapping) else list(weights)
    if any(w < 0 for w in values):
        raise ValueError("weights must be nonnegative")
    return -sum(w * math.log2(w) for w in values if w > 0)


def _shannon(masses: Iterable[float]) -> float:
    return -sum(m * math.log2(m) for m in masses if m > 0)


def assess_criticality(
    scenario: Scenario,
    beliefs: BeliefState,
    config: Config,
    gap_id: str,
    assignment: Mapping[str, object] | None = None,
    _cache: dict | None = None,
) -> Criticality:
    """Decide whether resolving this gap could change the plan enough to matter.

    Plans for each hypothesis are computed under the given assignment, with
    all other unresolved regions conservative and goal gaps fixed to their
    max-weight candidates.  An obstacle gap is critical when its two plans
    differ by more than delta_c in cost or delta_d in divergence (NoPath
    counts as infinite cost).  A goal gap additionally requires entropy at or
    above h_min.
    """
    assignment = dict(assignment or {})
    belief = beliefs.gaps[gap_id]
    if belief.resolved:
        return Criticality(critical=False, cost_spread=0.0, path_divergence=0.0)

    if gap_id.startswith("region:"):
        choices: list[object] = [0, 1]
    else:
        choices = [c for c in sorted(belief.dist, key=str) if belief.dist[c] > 0]
    plans = [risk_averse_plan(scenario, beliefs, {**assignment, gap_id: c}, _cache) for c in choices]

    spread, div = 0.0, 0.0
    for i in range(len(plans)):
        for j in range(i + 1, len(plans)):
            s, d = _pair_stats(plans[i], plans[j])
            spread, div = max(spread, s), max(div, d)

    differs = spread > config.delta_c or div > config.delta_d
    if gap_id.startswith("goal:"):
        critical = differs and goal_entropy(belief.dist.values()) >= config.h_min
    else:
        critical = differs
    return Criticality(critical=critical, cost_spread=spread, path_divergence=div)


# ---------------------------------------------------------------------------
# Tree construction


def build_tree(scenario: Scenario, beliefs: BeliefState, config: Config) -> MintTree:
    """Expand recursively on critical gaps; attach risk-averse plans at leaves.

    At each node, every unresolved unassigned gap is assessed under the
    node's assignment; the critical gap with the largest cost spread wins the
    branch (ties: larger divergence, then gap id).  Child masses multiply the
    parent mass by the belief probability of each hypothesis, so leaf masses
    always sum to 1.
    """
    cache: dict = {}

    def expand(assignment: dict[str, object], mass: float, depth: int) -> MintNode:
        unresolved = [
            gid for gid in sorted(beliefs.gaps) if not beliefs.gaps[gid].resolved and gid not in assignment
        ]
        stats = {gid: assess_criticality(scenario, beliefs, config, gid, assignment, cache) for gid in unresolved}
        critical = [gid for gid in unresolved if stats[gid].critical]
        if not critical or depth >= config.max_branch_gaps:
            plan = risk_averse_plan(scenario, beliefs, assignment, cache)
            return MintNode(assignment=assignment, mass=mass, plan=plan, cost=plan_cost(plan))

        branch = min(critical, key=lambda g: (-stats[g].cost_spread, -stats[g].path_divergence, g))
        belief = beliefs.gaps[branch]
        if branch.startswith("region:"):
            choices: tuple[object, ...] = (0, 1)
        else:
            choices = tuple(c for c in sorted(belief.dist, key=str) if belief.dist[c] > 0)
        children = tuple(
            expand({**assignment, branch: choice}, mass * belief.dist[choice], depth + 1) for choice in choices
        )
        return MintNode(assignment=assignment, mass=mass, gap_id=branch, choices=choices, children=children)

    root = expand(_base_assignment(beliefs), 1.0, 0)
    return MintTree(root=root, scenario=scenario, config=config)


def _plan_key(plan: TaskPlan | None) -> tuple | None:
    # segment-level identity: same cells AND same per-step stop cells
    return None if plan is None else tuple(s.cells for s in plan.segments)


def _merged_plan_masses(weighted_leaves: Iterable[tuple[MintNode, float]]) -> dict:
    merged: dict = {}
    for leaf, mass in weighted_leaves:
        key = _plan_key(leaf.plan)
        merged[key] = merged.get(key, 0.0) + mass
    return merged


def tree_entropy(tree: MintTree) -> float:
    """Shannon entropy over distinct leaf plans (identical cell sequences merge)."""
    leaves = list(tree.leaves())
    total = sum(leaf.mass for leaf in leaves)
    if abs(total - 1.0) > PROB_TOL:
        raise MassConservationError(f"leaf masses sum to {total!r}, expected 1")
    return _shannon(_merged_plan_masses((leaf, leaf.mass) for leaf in leaves).values())


# ---------------------------------------------------------------------------
# Query space


def enumerate_queries(tree: MintTree, beliefs: BeliefState) -> list[Query]:
    """All askable binary questions, sorted by query id.

    Regions yield one traversability question each, but only when the tree
    actually branched on them.  Goal gaps yield one question per singleton
    candidate plus one per maximal same-attribute-value subset (proper,
    size >= 2).  Questions previously answered Unknown are excluded.
    """
    scenario = tree.scenario
    branched = tree.branched_gap_ids()
    queries: dict[str, Query] = {}

    for gap_id, belief in beliefs.gaps.items():
        if belief.resolved:
            continue
        if gap_id.startswith("region:"):
            if gap_id in branched:
                q: Query = RegionTraversable(region_id=gap_id.removeprefix("region:"))
                queries.setdefault(q.query_id, q)
            continue

        step_index = int(gap_id.removeprefix("goal:"))
        support = sorted(c for c, w in belief.dist.items() if w > 0)
        if len(support) < 2:
            continue
        for candidate in support:
            q = GoalIs(step_index=step_index, subset=(str(candidate),))
            queries.setdefault(q.query_id, q)
        attr_keys = sorted({k for c in support for k in scenario.object_by_id(str(c)).attributes})
        for key in attr_keys:
            by_value: dict[str, list[str]] = {}
            for candidate in support:
                value = scenario.object_by_id(str(candidate)).attributes.get(key)
                if value is not None:
                    by_value.setdefault(value, []).append(str(candidate))
            for value in sorted(by_value):
                subset = tuple(sorted(by_value[value]))
                if 2 <= len(subset) < len(support):
                    q = GoalIs(step_index=step_index, subset=subset, attribute=(key, value))
                    queries.setdefault(q.query_id, q)

    return [queries[qid] for qid in sorted(queries) if qid not in beliefs.unanswerable]


# ---------------------------------------------------------------------------
# Information gain


def _p_yes(scenario: Scenario, beliefs: BeliefState, query: Query) -> float:
    belief = beliefs.gaps[query.gap_id]
    if isinstance(query, RegionTraversable):
        region = scenario.region_by_id(query.region_id)
        return sum(w for i, w in belief.dist.items() if region.hypotheses[i].traversable)
    return sum(w for c, w in belief.dist.items() if c in set(query.subset))


def _leaf_likelihood(scenario: Scenario, leaf: MintNode, query: Query, yes: bool, p_yes: float) -> float:
    gap_id = query.gap_id
    if gap_id not in leaf.assignment:
        return p_yes if yes else 1.0 - p_yes
    value = leaf.assignment[gap_id]
    if isinstance(query, RegionTraversable):
        consistent = scenario.region_by_id(query.region_id).hypotheses[value].traversable is yes
    else:
        consistent = (value in set(query.subset)) is yes
    return 1.0 if consistent else 0.0


def _posterior_leaves(
    tree: MintTree, beliefs: BeliefState, query: Query, yes: bool, p_yes: float
) -> list[tuple[MintNode, float]]:
    """Leaf masses after conditioning on one answer, by likelihood reweighting
    of the existing tree (no replanning)."""
    weighted = [
        (leaf, leaf.mass * _leaf_likelihood(tree.scenario, leaf, query, yes, p_yes)) for leaf in tree.leaves()
    ]
    total = sum(mass for _, mass in weighted)
    if total <= 0:
        return []
    return [(leaf, mass / total) for leaf, mass in weighted if mass > 0]


def information_gain(tree: MintTree, beliefs: BeliefState, query: Query) -> float:
    """Expected entropy reduction of asking the query, in bits.

    IG = H(tree) - sum_y P(y) H(tree | y), where conditioning prunes leaves
    inconsistent with the answer and renormalizes masses.  Queries on gaps the
    tree never branched cannot move any leaf, so their gain is exactly 0;
    vacuous questions (P(yes) of 0 or 1) are 0 by definition.
    """
    if query.gap_id not in beliefs.gaps:
        raise KeyError(f"query references unknown gap {query.gap_id!r}")
    p_yes = _p_yes(tree.scenario, beliefs, query)
    if p_yes <= 1e-12 or p_yes >= 1.0 - 1e-12:
        return 0.0
    entropy_before = tree_entropy(tree)
    expected = 0.0
    for yes, p_answer in ((True, p_yes), (False, 1.0 - p_yes)):
        posterior = _posterior_leaves(tree, beliefs, query, yes, p_yes)
        expected += p_answer * _shannon(_merged_plan_masses(posterior).values())
    return entropy_before - expected


def _expected_cost_after(tree: MintTree, beliefs: BeliefState, query: Query) -> float:
    """Answer-weighted cost of the plan the agent would commit to next.

    After pruning on an answer, that plan is the surviving leaf plan when one
    remains, else the risk-averse fallback under the updated beliefs.  A mean
    over raw leaf costs would be identical for every query, so this is the
    quantity that actually separates ties.
    """
    p_yes = _p_yes(tree.scenario, beliefs, query)
    total = 0.0
    for answer, yes, p_answer in ((Answer.YES, True, p_yes), (Answer.NO, False, 1.0 - p_yes)):
        if p_answer <= 0:
            continue
        posterior = _posterior_leaves(tree, beliefs, query, yes, p_yes)
        merged = _merged_plan_masses(posterior)
        if len(merged) == 1:
            key = next(iter(merged))
            cost = math.inf if key is None else next(l.cost for l, _ in posterior if l.plan is not None)
        else:
            after = updated_beliefs(tree.scenario, beliefs, query, answer)
            cost = plan_cost(risk_averse_plan(tree.scenario, after, _base_assignment(after)))
        total += p_answer * cost
    return total


def select_query(tree: MintTree, beliefs: BeliefState, config: Config, asked_count: int) -> Query | None:
    """The IG-argmax query, or None (Stop) once certainty, budget, or eps_ig rules out asking.

    IG ties within 1e-9 break toward the lower expected post-resolution plan
    cost, then the lower query id, so selection is deterministic.
    """
    if tree_entropy(tree) <= 1e-12:
        return None
    if asked_count >= config.max_queries:
        return None
    queries = enumerate_queries(tree, beliefs)
    if not queries:
        return None
    scored = [(information_gain(tree, beliefs, q), q) for q in queries]
    best_ig = max(ig for ig, _ in scored)
    if best_ig <= config.eps_ig:
        return None
    tied = [q for ig, q in scored if ig >= best_ig - 1e-9]
    if len(tied) == 1:
        return tied[0]
    return min(tied, key=lambda q: (_expected_cost_after(tree, beliefs, q), q.query_id))


# ---------------------------------------------------------------------------
# Belief updates and pruning


def updated_beliefs(scenario: Scenario, beliefs: BeliefState, query: Query, answer: Answer) -> BeliefState:
    """Bayes-consistent belief update for a Yes/No answer (no tree involved)."""
    if answer is Answer.UNKNOWN:
        raise ValueError("Unknown answers do not update beliefs")
    gap_id = query.gap_id
    belief = beliefs.gaps[gap_id]

    if isinstance(query, RegionTraversable):
        region = scenario.region_by_id(query.region_id)
        target = next(i for i, h in enumerate(region.hypotheses) if h.traversable is (answer is Answer.YES))
        if belief.resolved:
            if belief.resolved_value != target:
                raise ContradictionError(f"answer contradicts resolved gap {gap_id}")
            return beliefs
        if belief.dist.get(target, 0.0) <= 0:
            raise ContradictionError(f"answer has zero prior probability for gap {gap_id}")
        new_belief = Belief(gap_id=gap_id, dist={target: 1.0}, resolved=True, resolved_value=target)
    else:
        subset = set(query.subset)
        if belief.resolved:
            consistent = (belief.resolved_value in subset) is (answer is Answer.YES)
            if not consistent:
                raise ContradictionError(f"answer contradicts resolved gap {gap_id}")
            return beliefs
        keep = {
            c: w for c, w in belief.dist.items() if w > 0 and (c in subset) is (answer is Answer.YES)
        }
        if not keep:
            raise ContradictionError(f"answer eliminates every candidate of gap {gap_id}")
        total = sum(keep.values())
        dist = {c: w / total for c, w in keep.items()}
        if len(dist) == 1:
            only = next(iter(dist))
            new_belief = Belief(gap_id=gap_id, dist={only: 1.0}, resolved=True, resolved_value=only)
        else:
            new_belief = Belief(gap_id=gap_id, dist=dist)

    return BeliefState(gaps={**beliefs.gaps, gap_id: new_belief}, unanswerable=beliefs.unanswerable)


def prune(tree: MintTree, beliefs: BeliefState, query: Query, answer: Answer) -> tuple[MintTree, BeliefState]:
    """Fold an answer into beliefs and rebuild the tree.

    Yes/No removes inconsistent hypotheses and renormalizes, then rebuilds so
    criticality changes propagate.  Unknown marks the query unanswerable and
    leaves tree and beliefs otherwise untouched.
    """
    if answer is Answer.UNKNOWN:
        return tree, BeliefState(gaps=beliefs.gaps, unanswerable=beliefs.unanswerable | {query.query_id})
    new_beliefs = updated_beliefs(tree.scenario, beliefs, query, answer)
    new_tree = build_tree(tree.scenario, new_beliefs, tree.config)
    check_normalization(new_tree, new_beliefs)
    return new_tree, new_beliefs


def check_normalization(tree: MintTree, beliefs: BeliefState) -> None:
    """Raise MassConservationError unless leaf masses and belief weights sum to 1."""
    total = sum(leaf.mass for leaf in tree.leaves())
    if abs(total - 1.0) > PROB_TOL:
        raise MassConservationError(f"leaf masses sum to {total!r}")
    for gap_id, belief in beliefs.gaps.items():
        weight = sum(belief.dist.values())
        if abs(weight - 1.0) > PROB_TOL:
            raise MassConservationError(f"belief weights for {gap_id} sum to {weight!r}")


def best_plan(tree: MintTree, beliefs: BeliefState) -> TaskPlan:
    """Final trajectory: the certain plan if one remains, else the risk-averse fallback."""
    merged = _merged_plan_masses((leaf, leaf.mass) for leaf in tree.leaves())
    if len(merged) == 1:
        key = next(iter(merged))
        if key is None:
            raise MissionInfeasibleError("every hypothesis leads to NoPath")
        return next(leaf.plan for leaf in tree.leaves() if leaf.plan is not None)
    plan = risk_averse_plan(tree.scenario, beliefs, _base_assignment(beliefs))
    if plan is None:
        raise MissionInfeasibleError("no plan under the risk-averse map")
    return plan
