"""Grid-world scenario model: map, objects, uncertain regions, knowledge gaps.

A scenario bundles everything one episode needs: the occupancy grid, the
observed objects with their attributes, the uncertain regions (each carrying
exactly two competing hypotheses about traversability), the task instruction,
and the hidden ground truth used only by the oracle operator and the
evaluator.  All types are immutable after construction and safe to share
across concurrent episode runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping

Cell = tuple[int, int]  # (x, y), zero-based; x = column, y = row


class ScenarioError(Exception):
    """Base class for scenario problems."""


class ScenarioParseError(ScenarioError):
    """Document is not syntactically well-formed."""


class ScenarioValidationError(ScenarioError):
    """Document parses but violates an invariant; message names the field."""


class UnsatisfiableInstructionError(ScenarioError):
    """Some instruction step has no constraint-satisfying object."""


class InfeasibleParamsError(ScenarioError):
    """Generation parameters admit no valid scenario."""


PROB_TOL = 1e-9


class Action(str, Enum):
    VISIT = "Visit"
    PICKUP = "Pickup"
    DELIVER = "Deliver"


class DefaultPolicy(str, Enum):
    """How unassigned uncertain regions are rendered in a semantic map."""

    CONSERVATIVE = "conservative"  # non-traversable
    OPTIMISTIC = "optimistic"  # traversable


@dataclass(frozen=True)
class GridMap:
    """Base terrain: every cell is Free unless listed in ``obstacles``."""

    width: int
    height: int
    obstacles: frozenset[Cell]

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ScenarioValidationError(f"grid: width/height must be >= 1, got {self.width}x{self.height}")
        for cell in self.obstacles:
            if not self.in_bounds(cell):
                raise ScenarioValidationError(f"grid.obstacles: cell {list(cell)} out of bounds")

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def cells(self) -> Iterator[Cell]:
        for y in range(self.height):
            for x in range(self.width):
                yield (x, y)


@dataclass(frozen=True)
class SemanticMap:
    """Traversability grid produced by fixing region hypotheses."""

    width: int
    height: int
    blocked: frozenset[Cell]

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def passable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.blocked


@dataclass(frozen=True)
class WorldObject:
    id: str
    label: str
    attributes: Mapping[str, str]
    cell: Cell


@dataclass(frozen=True)
class Hypothesis:
    name: str
    traversable: bool
    prior: float


@dataclass(frozen=True)
class UncertainRegion:
    """A set of cells whose traversability is unknown.

    Exactly two hypotheses with opposite ``traversable`` flags; ``truth``
    indexes the real one and is read only by the oracle and the evaluator.
    """

    id: str
    cells: frozenset[Cell]
    hypotheses: tuple[Hypothesis, Hypothesis]
    truth: int

    def traversable_index(self) -> int:
        return 0 if self.hypotheses[0].traversable else 1


@dataclass(frozen=True)
class Step:
    action: Action
    constraints: Mapping[str, str]


@dataclass(frozen=True)
class Instruction:
    steps: tuple[Step, ...]


@dataclass(frozen=True)
class Scenario:
    grid: GridMap
    objects: tuple[WorldObject, ...]
    regions: tuple[UncertainRegion, ...]
    instruction: Instruction
    start: Cell
    truth_goals: tuple[str, ...]
    step_budget: int
    # optional per-step goal prior override: step index -> {object id: weight}
    goal_priors: Mapping[int, Mapping[str, float]] = field(default_factory=dict)

    def object_by_id(self, object_id: str) -> WorldObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)

    def region_by_id(self, region_id: str) -> UncertainRegion:
        for region in self.regions:
            if region.id == region_id:
                return region
        raise KeyError(region_id)


# ---------------------------------------------------------------------------
# Knowledge gaps and beliefs


@dataclass(frozen=True)
class ObstacleGap:
    region_id: str

    @property
    def gap_id(self) -> str:
        return f"region:{self.region_id}"


@dataclass(frozen=True)
class GoalGap:
    step_index: int
    candidates: tuple[str, ...]
    weights: tuple[float, ...]

    @property
    def gap_id(self) -> str:
        return f"goal:{self.step_index}"


KnowledgeGap = ObstacleGap | GoalGap


@dataclass(frozen=True)
class Belief:
    """Current distribution over one gap's values.

    Keys are hypothesis indices (0/1) for obstacle gaps and candidate object
    ids for goal gaps.  Resolved beliefs are point masses.
    """

    gap_id: str
    dist: Mapping[object, float]
    resolved: bool = False
    resolved_value: object | None = None

    def __post_init__(self) -> None:
        total = sum(self.dist.values())
        if abs(total - 1.0) > PROB_TOL:
            raise ScenarioValidationError(f"belief[{self.gap_id}]: distribution sums to {total!r}, expected 1")
        if self.resolved and len(self.dist) != 1:
            raise ScenarioValidationError(f"belief[{self.gap_id}]: resolved belief must be a point mass")

    def support(self) -> list[object]:
        return sorted(self.dist, key=str)


@dataclass(frozen=True)
class BeliefState:
    """Beliefs for every gap plus the set of queries declared unanswerable."""

    gaps: Mapping[str, Belief]
    unanswerable: frozenset[str] = frozenset()

    def __getitem__(self, gap_id: str) -> Belief:
        return self.gaps[gap_id]

    def unresolved_ids(self) -> list[str]:
        return sorted(g for g, b in self.gaps.items() if not b.resolved)


def matches_constraints(obj: WorldObject, constraints: Mapping[str, str]) -> bool:
    for key, value in constraints.items():
        actual = obj.label if key == "label" else obj.attributes.get(key)
        if actual != value:
            return False
    return True


def candidates_for_step(scenario: Scenario, step_index: int) -> list[str]:
    """Ids of objects satisfying the step's constraints, sorted."""
    step = scenario.instruction.steps[step_index]
    return sorted(o.id for o in scenario.objects if matches_constraints(o, step.constraints))


# ---------------------------------------------------------------------------
# Loading / validation / serialization


def _parse_cell(raw: object, where: str) -> Cell:
    if not isinstance(raw, (list, tuple)) or len(raw) != 2 or not all(isinstance(v, int) for v in raw):
        raise ScenarioParseError(f"{where}: expected [x, y] pair, got {raw!r}")
    return (raw[0], raw[1])


def load_scenario(text: str) -> Scenario:
    """Parse and validate a UTF-8 JSON scenario document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioParseError("document root must be a JSON object")

    try:
        grid_doc = doc["grid"]
        grid = GridMap(
            width=int(grid_doc["width"]),
            height=int(grid_doc["height"]),
            obstacles=frozenset(_parse_cell(c, "grid.obstacles") for c in grid_doc.get("obstacles", [])),
        )
        objects = tuple(
            WorldObject(
                id=str(o["id"]),
                label=str(o["label"]),
                attributes={str(k): str(v) for k, v in o.get("attributes", {}).items()},
                cell=_parse_cell(o["cell"], f"objects[{o.get('id')}].cell"),
            )
            for o in doc.get("objects", [])
        )
        regions = tuple(
            UncertainRegion(
                id=str(r["id"]),
                cells=frozenset(_parse_cell(c, f"regions[{r.get('id')}].cells") for c in r["cells"]),
                hypotheses=tuple(
                    Hypothesis(name=str(h["name"]), traversable=bool(h["traversable"]), prior=float(h["prior"]))
                    for h in r["hypotheses"]
                ),
                truth=int(r["truth"]),
            )
            for r in doc.get("regions", [])
        )
        instruction = Instruction(
            steps=tuple(
                Step(action=Action(s["action"]), constraints={str(k): str(v) for k, v in s.get("constraints", {}).items()})
                for s in doc["instruction"]["steps"]
            )
        )
        goal_priors = {
            int(step): {str(oid): float(w) for oid, w in weights.items()}
            for step, weights in doc.get("goal_priors", {}).items()
        }
        scenario = Scenario(
            grid=grid,
            objects=objects,
            regions=regions,
            instruction=instruction,
            start=_parse_cell(doc["start"], "start"),
            truth_goals=tuple(str(g) for g in doc["truth_goals"]),
            step_budget=int(doc["step_budget"]),
            goal_priors=goal_priors,
        )
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioParseError(f"malformed scenario document: {exc!r}") from exc

    validate_scenario(scenario)
    return scenario


def validate_scenario(scenario: Scenario) -> None:
    """Check every type invariant; raise ScenarioValidationError naming the field."""
    grid = scenario.grid

    seen_ids: set[str] = set()
    for obj in scenario.objects:
        if obj.id in seen_ids:
            raise ScenarioValidationError(f"objects[{obj.id}].id: duplicate object id")
        seen_ids.add(obj.id)
        if not grid.in_bounds(obj.cell):
            raise ScenarioValidationError(f"objects[{obj.id}].cell: {list(obj.cell)} out of bounds")

    region_ids: set[str] = set()
    for region in scenario.regions:
        if region.id in region_ids:
            raise ScenarioValidationError(f"regions[{region.id}].id: duplicate region id")
        region_ids.add(region.id)
        if len(region.hypotheses) != 2:
            raise ScenarioValidationError(f"regions[{region.id}].hypotheses: exactly 2 required")
        h0, h1 = region.hypotheses
        if h0.traversable == h1.traversable:
            raise ScenarioValidationError(f"regions[{region.id}].hypotheses: traversable flags must differ")
        for h in region.hypotheses:
            if not (0.0 < h.prior < 1.0):
                raise ScenarioValidationError(f"regions[{region.id}].hypotheses[{h.name}].prior: must be in (0,1)")
        if abs(h0.prior + h1.prior - 1.0) > PROB_TOL:
            raise ScenarioValidationError(
                f"regions[{region.id}].hypotheses: priors sum to {h0.prior + h1.prior}, expected 1"
            )
        if region.truth not in (0, 1):
            raise ScenarioValidationError(f"regions[{region.id}].truth: must be 0 or 1")
        if not region.cells:
            raise ScenarioValidationError(f"regions[{region.id}].cells: empty")
        for cell in region.cells:
            if not grid.in_bounds(cell):
                raise ScenarioValidationError(f"regions[{region.id}].cells: {list(cell)} out of bounds")

    if not scenario.instruction.steps:
        raise ScenarioValidationError("instruction.steps: at least one step required")
    known_keys = {"label"} | {k for o in scenario.objects for k in o.attributes}
    for i, step in enumerate(scenario.instruction.steps):
        for key in step.constraints:
            if key not in known_keys:
                raise ScenarioValidationError(f"instruction.steps[{i}].constraints: unknown attribute key {key!r}")

    if not grid.in_bounds(scenario.start):
        raise ScenarioValidationError(f"start: {list(scenario.start)} out of bounds")
    if scenario.start in grid.obstacles:
        raise ScenarioValidationError(f"start: {list(scenario.start)} lies on an obstacle cell")

    if len(scenario.truth_goals) != len(scenario.instruction.steps):
        raise ScenarioValidationError(
            f"truth_goals: got {len(scenario.truth_goals)} entries for {len(scenario.instruction.steps)} steps"
        )
    for i, goal_id in enumerate(scenario.truth_goals):
        if goal_id not in seen_ids:
            raise ScenarioValidationError(f"truth_goals[{i}]: unknown object id {goal_id!r}")
        obj = scenario.object_by_id(goal_id)
        if not matches_constraints(obj, scenario.instruction.steps[i].constraints):
            raise ScenarioValidationError(f"truth_goals[{i}]: {goal_id!r} does not satisfy the step's constraints")

    if scenario.step_budget < 0:
        raise ScenarioValidationError(f"step_budget: must be >= 0, got {scenario.step_budget}")

    for step, weights in scenario.goal_priors.items():
        if not (0 <= step < len(scenario.instruction.steps)):
            raise ScenarioValidationError(f"goal_priors[{step}]: no such step")
        cands = set(candidates_for_step(scenario, step))
        if set(weights) != cands:
            raise ScenarioValidationError(f"goal_priors[{step}]: weights must cover exactly the candidate ids")
        total = sum(weights.values())
        if abs(total - 1.0) > PROB_TOL:
            raise ScenarioValidationError(f"goal_priors[{step}]: weights sum to {total}, expected 1")


def scenario_to_doc(scenario: Scenario) -> dict:
    return {
        "grid": {
            "width": scenario.grid.width,
            "height": scenario.grid.height,
            "obstacles": [list(c) for c in sorted(scenario.grid.obstacles)],
        },
        "objects": [
            {"id": o.id, "label": o.label, "attributes": dict(sorted(o.attributes.items())), "cell": list(o.cell)}
            for o in scenario.objects
        ],
        "regions": [
            {
                "id": r.id,
                "cells": [list(c) for c in sorted(r.cells)],
                "hypotheses": [
                    {"name": h.name, "traversable": h.traversable, "prior": h.prior} for h in r.hypotheses
                ],
                "truth": r.truth,
            }
            for r in scenario.regions
        ],
        "instruction": {
            "steps": [{"action": s.action.value, "constraints": dict(sorted(s.constraints.items()))} for s in scenario.instruction.steps]
        },
        "start": list(scenario.start),
        "truth_goals": list(scenario.truth_goals),
        "step_budget": scenario.step_budget,
        **({"goal_priors": {str(k): dict(sorted(v.items())) for k, v in sorted(scenario.goal_priors.items())}} if scenario.goal_priors else {}),
    }


def dump_scenario(scenario: Scenario) -> str:
    """Serialize deterministically; load(dump(s)) round-trips to an equal Scenario."""
    return json.dumps(scenario_to_doc(scenario), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Gap identification and hypothesis application


def identify_gaps(scenario: Scenario) -> list[KnowledgeGap]:
    """Find the unresolved variables that may change the optimal plan.

    One ObstacleGap per uncertain region, one GoalGap per instruction step
    with two or more constraint-satisfying candidates.  Output is sorted by
    (kind, id) with obstacle gaps first; the empty list means deterministic
    planning can proceed directly.
    """
    gaps: list[KnowledgeGap] = [ObstacleGap(r.id) for r in sorted(scenario.regions, key=lambda r: r.id)]
    for i in range(len(scenario.instruction.steps)):
        candidates = candidates_for_step(scenario, i)
        if not candidates:
            raise UnsatisfiableInstructionError(f"instruction.steps[{i}]: no object satisfies the constraints")
        if len(candidates) < 2:
            continue
        override = scenario.goal_priors.get(i)
        if override is not None:
            weights = tuple(override[c] for c in candidates)
        else:
            weights = tuple(1.0 / len(candidates) for _ in candidates)
        gaps.append(GoalGap(step_index=i, candidates=tuple(candidates), weights=weights))
    return gaps


def initial_beliefs(scenario: Scenario, gaps: list[KnowledgeGap]) -> BeliefState:
    beliefs: dict[str, Belief] = {}
    for gap in gaps:
        if isinstance(gap, ObstacleGap):
            region = scenario.region_by_id(gap.region_id)
            dist: dict[object, float] = {i: h.prior for i, h in enumerate(region.hypotheses)}
        else:
            dist = dict(zip(gap.candidates, gap.weights))
        beliefs[gap.gap_id] = Belief(gap_id=gap.gap_id, dist=dist)
    return BeliefState(gaps=beliefs)


def apply_hypothesis(
    scenario: Scenario,
    assignment: Mapping[str, object],
    default: DefaultPolicy = DefaultPolicy.CONSERVATIVE,
) -> SemanticMap:
    """Instantiate the traversability grid for a partial hypothesis choice.

    ``assignment`` maps gap ids to chosen values; region gaps take hypothesis
    indices.  Regions left unassigned are rendered per ``default``.  Goal-gap
    entries are accepted and ignored (they do not affect traversability).
    """
    region_gap_ids = {f"region:{r.id}" for r in scenario.regions}
    goal_gap_ids = {f"goal:{i}" for i in range(len(scenario.instruction.steps))}
    for key in assignment:
        if key not in region_gap_ids and key not in goal_gap_ids:
            raise KeyError(f"assignment references unknown gap id {key!r}")

    blocked = set(scenario.grid.obstacles)
    for region in scenario.regions:
        gap_id = f"region:{region.id}"
        if gap_id in assignment:
            choice = assignment[gap_id]
            if choice not in (0, 1):
                raise KeyError(f"assignment[{gap_id}]: invalid hypothesis index {choice!r}")
            traversable = region.hypotheses[choice].traversable
        else:
            traversable = default is DefaultPolicy.OPTIMISTIC
        if not traversable:
            blocked |= region.cells
    return SemanticMap(width=scenario.grid.width, height=scenario.grid.height, blocked=frozenset(blocked))


def truth_assignment(scenario: Scenario) -> dict[str, object]:
    """Ground-truth assignment for every gap; evaluator/oracle use only."""
    assignment: dict[str, object] = {f"region:{r.id}": r.truth for r in scenario.regions}
    for i, goal_id in enumerate(scenario.truth_goals):
        assignment[f"goal:{i}"] = goal_id
    return assignment


def true_map(scenario: Scenario) -> SemanticMap:
    """Traversability grid with all region truths revealed; evaluator use only."""
    return apply_hypothesis(scenario, {f"region:{r.id}": r.truth for r in scenario.regions})
