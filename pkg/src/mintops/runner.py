"""Episode loop, baseline policies, execution, and the benchmark driver.

An episode plans under a policy, optionally asks an operator questions, then
walks the chosen plan on the true map.  Failure is recorded the first time
the walk enters a truly blocked cell, ends a step at the wrong goal cell,
or runs past the step budget.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

from .elicitation import Operator, ScriptedOracle, phrase_query
from .mint import (
    Answer,
    Config,
    GoalIs,
    MintTree,
    MissionInfeasibleError,
    Query,
    RegionTraversable,
    best_plan,
    build_tree,
    check_normalization,
    information_gain,
    prune,
    select_query,
    updated_beliefs,
)
from .mint import risk_averse_goals, risk_averse_plan
from .planner import TaskPlan, plan_task
from .world import (
    BeliefState,
    DefaultPolicy,
    ObstacleGap,
    Scenario,
    apply_hypothesis,
    identify_gaps,
    initial_beliefs,
    true_map,
)


class Policy(str, Enum):
    PASSIVE_CONSERVATIVE = "passive-conservative"
    PASSIVE_RISKY = "passive-risky"
    EXHAUSTIVE = "exhaustive"
    MINT = "mint"


class FailureReason(str, Enum):
    ENTERED_HAZARD = "EnteredHazard"
    WRONG_GOAL = "WrongGoal"
    NO_PATH = "NoPath"
    BUDGET_EXCEEDED = "BudgetExceeded"


@dataclass(frozen=True)
class EpisodeResult:
    success: bool
    queries_asked: int
    executed_cost: float  # steps walked; inf when no plan existed
    failure_reason: FailureReason | None
    asked_query_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.success and self.failure_reason is not None:
            raise ValueError("successful episodes carry no failure reason")


class MintSession:
    """Single source of the MINT decision loop, shared by runner and service.

    Holds the current tree/beliefs, exposes the pending query, and folds
    answers in.  ``trace`` (if given) is called with (tree, beliefs) after
    every prune so callers can audit normalization.
    """

    def __init__(self, scenario: Scenario, config: Config, trace: Callable[[MintTree, BeliefState], None] | None = None):
        self.scenario = scenario
        self.config = config
        self.trace = trace
        gaps = identify_gaps(scenario)
        self.beliefs = initial_beliefs(scenario, gaps)
        self.tree = build_tree(scenario, self.beliefs, config)
        self.asked = 0
        self.asked_query_ids: list[str] = []
        self._pending = select_query(self.tree, self.beliefs, config, self.asked)

    @property
    def pending_query(self) -> Query | None:
        return self._pending

    def pending_ig(self) -> float:
        if self._pending is None:
            return 0.0
        return information_gain(self.tree, self.beliefs, self._pending)

    def submit(self, answer: Answer) -> None:
        if self._pending is None:
            raise RuntimeError("no pending query")
        self.asked += 1
        self.asked_query_ids.append(self._pending.query_id)
        self.tree, self.beliefs = prune(self.tree, self.beliefs, self._pending, answer)
        if self.trace is not None:
            self.trace(self.tree, self.beliefs)
        self._pending = select_query(self.tree, self.beliefs, self.config, self.asked)

    def final_plan(self) -> TaskPlan:
        if self._pending is not None:
            raise RuntimeError("queries still pending")
        return best_plan(self.tree, self.beliefs)


def _exhaustive_queries(scenario: Scenario) -> list[Query]:
    """One region question per gap plus fixed bit-halving goal questions.

    The bit questions over id-sorted candidates always number exactly
    ceil(log2 k) per goal gap, whatever the answers turn out to be.
    """
    queries: list[Query] = []
    for gap in identify_gaps(scenario):
        if isinstance(gap, ObstacleGap):
            queries.append(RegionTraversable(region_id=gap.region_id))
        else:
            k = len(gap.candidates)
            bits = max(1, (k - 1).bit_length())
            for bit in range(bits):
                subset = tuple(c for i, c in enumerate(gap.candidates) if i & (1 << bit))
                queries.append(GoalIs(step_index=gap.step_index, subset=subset))
    return queries


def execute_plan(scenario: Scenario, plan: TaskPlan | None) -> tuple[bool, float, FailureReason | None]:
    """Walk the plan on the true map and judge the outcome."""
    if plan is None:
        return False, math.inf, FailureReason.NO_PATH
    truth = true_map(scenario)
    goal_cells = [scenario.object_by_id(g).cell for g in scenario.truth_goals]
    steps = 0
    for i, segment in enumerate(plan.segments):
        for cell in segment.cells[1:]:
            steps += 1
            if steps > scenario.step_budget:
                return False, float(steps), FailureReason.BUDGET_EXCEEDED
            if not truth.passable(cell):
                return False, float(steps), FailureReason.ENTERED_HAZARD
        if segment.cells[-1] != goal_cells[i]:
            return False, float(steps), FailureReason.WRONG_GOAL
    return True, float(steps), None


def run_episode(
    scenario: Scenario,
    policy: Policy,
    operator: Operator | None,
    config: Config,
    trace: Callable[[MintTree, BeliefState], None] | None = None,
) -> EpisodeResult:
    """Run one policy on one scenario and evaluate the executed plan."""
    if policy in (Policy.EXHAUSTIVE, Policy.MINT) and operator is None:
        raise ValueError(f"policy {policy.value} requires an operator")

    asked_ids: list[str] = []
    queries_asked = 0

    if policy is Policy.PASSIVE_CONSERVATIVE or policy is Policy.PASSIVE_RISKY:
        gaps = identify_gaps(scenario)
        beliefs = initial_beliefs(scenario, gaps)
        default = DefaultPolicy.CONSERVATIVE if policy is Policy.PASSIVE_CONSERVATIVE else DefaultPolicy.OPTIMISTIC
        semantic = apply_hypothesis(scenario, {}, default)
        plan = plan_task(scenario, semantic, risk_averse_goals(scenario, beliefs, {}))

    elif policy is Policy.EXHAUSTIVE:
        beliefs = initial_beliefs(scenario, identify_gaps(scenario))
        for query in _exhaustive_queries(scenario):
            answer = operator.ask(query, phrase_query(query, scenario), 0.0)
            queries_asked += 1
            asked_ids.append(query.query_id)
            if answer is not Answer.UNKNOWN:
                beliefs = updated_beliefs(scenario, beliefs, query, answer)
        plan = risk_averse_plan(scenario, beliefs, {g: b.resolved_value for g, b in beliefs.gaps.items() if b.resolved})

    else:
        session = MintSession(scenario, config, trace=trace)
        while (query := session.pending_query) is not None:
            answer = operator.ask(query, phrase_query(query, scenario), session.pending_ig())
            session.submit(answer)
        queries_asked = session.asked
        asked_ids = session.asked_query_ids
        try:
            plan = session.final_plan()
        except MissionInfeasibleError:
            plan = None

    success, cost, reason = execute_plan(scenario, plan)
    return EpisodeResult(
        success=success,
        queries_asked=queries_asked,
        executed_cost=cost,
        failure_reason=reason,
        asked_query_ids=tuple(asked_ids),
    )


# ---------------------------------------------------------------------------
# Benchmarks


@dataclass(frozen=True)
class EpisodeRow:
    policy: str
    scenario_id: str
    success: bool
    queries: int
    cost: float


@dataclass(frozen=True)
class PolicySummary:
    success_rate: float
    avg_queries: float
    avg_cost: float | None  # mean executed cost over successful episodes


@dataclass(frozen=True)
class BenchmarkReport:
    seed: int
    config: Config
    rows: tuple[EpisodeRow, ...]
    summary: dict[str, PolicySummary] = field(default_factory=dict)


def run_benchmark(
    suite: Sequence[tuple[str, Scenario]],
    policies: Iterable[Policy],
    config: Config,
    seed: int,
) -> BenchmarkReport:
    """Run every (scenario, policy) pair against the scripted oracle."""
    if not suite:
        raise ValueError("benchmark suite is empty")
    rows: list[EpisodeRow] = []
    policies = list(policies)
    for policy in policies:
        for scenario_id, scenario in sorted(suite, key=lambda pair: pair[0]):
            result = run_episode(scenario, policy, ScriptedOracle(scenario), config)
            rows.append(
                EpisodeRow(
                    policy=policy.value,
                    scenario_id=scenario_id,
                    success=result.success,
                    queries=result.queries_asked,
                    cost=result.executed_cost,
                )
            )
    summary: dict[str, PolicySummary] = {}
    for policy in policies:
        mine = [r for r in rows if r.policy == policy.value]
        succeeded = [r for r in mine if r.success]
        summary[policy.value] = PolicySummary(
            success_rate=len(succeeded) / len(mine),
            avg_queries=sum(r.queries for r in mine) / len(mine),
            avg_cost=(sum(r.cost for r in succeeded) / len(succeeded)) if succeeded else None,
        )
    return BenchmarkReport(seed=seed, config=config, rows=tuple(rows), summary=summary)


def report_to_csv(report: BenchmarkReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["policy", "scenario_id", "success", "queries", "cost"])
    for row in report.rows:
        cost = "inf" if math.isinf(row.cost) else f"{row.cost:g}"
        writer.writerow([row.policy, row.scenario_id, str(row.success).lower(), row.queries, cost])
    return buffer.getvalue()


def report_to_json(report: BenchmarkReport) -> str:
    doc = {
        "seed": report.seed,
        "config": asdict(report.config),
        "summary": {
            policy: {
                "success_rate": s.success_rate,
                "avg_queries": s.avg_queries,
                "avg_cost": s.avg_cost,
            }
            for policy, s in sorted(report.summary.items())
        },
        "rows": [
            {
                "policy": r.policy,
                "scenario_id": r.scenario_id,
                "success": r.success,
                "queries": r.queries,
                "cost": None if math.isinf(r.cost) else r.cost,
            }
            for r in report.rows
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def read_report_json(text: str) -> BenchmarkReport:
    doc = json.loads(text)
    rows = tuple(
        EpisodeRow(
            policy=r["policy"],
            scenario_id=r["scenario_id"],
            success=r["success"],
            queries=r["queries"],
            cost=math.inf if r["cost"] is None else r["cost"],
        )
        for r in doc["rows"]
    )
    summary = {
        policy: PolicySummary(
            success_rate=s["success_rate"], avg_queries=s["avg_queries"], avg_cost=s["avg_cost"]
        )
        for policy, s in doc["summary"].items()
    }
    return BenchmarkReport(seed=doc["seed"], config=Config(**doc["config"]), rows=rows, summary=summary)


def write_report(report: BenchmarkReport, fmt: str, path: str) -> None:
    """Write rows (csv) or the full report (json) with deterministic bytes."""
    if fmt == "csv":
        payload = report_to_csv(report)
    elif fmt == "json":
        payload = report_to_json(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(payload)
