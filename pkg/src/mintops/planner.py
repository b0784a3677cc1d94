"""Hypothesis-conditioned path planning on 4-connected unit-cost grids.

plan_path is A* with a Manhattan heuristic and a fixed tie-break (lower
(y, x) expanded first) so identical inputs always produce identical paths.
NoPath is represented by None; downstream code treats it as infinite cost.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import cached_property
from math import inf

from .world import Cell, Scenario, SemanticMap


@dataclass(frozen=True)
class Trajectory:
    cells: tuple[Cell, ...]

    @property
    def cost(self) -> int:
        return len(self.cells) - 1


@dataclass(frozen=True)
class TaskPlan:
    """One trajectory per instruction step, chained end to start."""

    segments: tuple[Trajectory, ...]
    goal_choice: tuple[str, ...]

    @property
    def total_cost(self) -> int:
        return sum(s.cost for s in self.segments)

    @cached_property
    def path(self) -> tuple[Cell, ...]:
        """Full cell sequence, junction cells not repeated."""
        cells: list[Cell] = []
        for segment in self.segments:
            cells.extend(segment.cells if not cells else segment.cells[1:])
        return tuple(cells)


def plan_cost(plan: TaskPlan | Trajectory | None) -> float:
    if plan is None:
        return inf
    return plan.total_cost if isinstance(plan, TaskPlan) else plan.cost


_NEIGHBOR_OFFSETS = ((0, -1), (0, 1), (-1, 0), (1, 0))


def plan_path(semantic_map: SemanticMap, start: Cell, goal: Cell) -> Trajectory | None:
    """Minimum-cost 4-connected path from start to goal, or None if unreachable."""
    if not semantic_map.passable(start) or not semantic_map.passable(goal):
        return None
    if start == goal:
        return Trajectory(cells=(start,))

    def h(cell: Cell) -> int:
        return abs(cell[0] - goal[0]) + abs(cell[1] - goal[1])

    # heap entries (f, y, x): ties on f expand the lower (y, x) first
    open_heap: list[tuple[int, int, int]] = [(h(start), start[1], start[0])]
    g_score: dict[Cell, int] = {start: 0}
    came_from: dict[Cell, Cell] = {}
    closed: set[Cell] = set()

    while open_heap:
        f, y, x = heapq.heappop(open_heap)
        current = (x, y)
        if current in closed:
            continue
        closed.add(current)
        if current == goal:
            cells = [current]
            while current in came_from:
                current = came_from[current]
                cells.append(current)
            cells.reverse()
            return Trajectory(cells=tuple(cells))
        ng = g_score[current] + 1
        for dx, dy in _NEIGHBOR_OFFSETS:
            nxt = (x + dx, y + dy)
            if not semantic_map.passable(nxt) or nxt in closed:
                continue
            if ng < g_score.get(nxt, 1 << 30):
                g_score[nxt] = ng
                came_from[nxt] = current
                heapq.heappush(open_heap, (ng + h(nxt), nxt[1], nxt[0]))
    return None


def plan_task(scenario: Scenario, semantic_map: SemanticMap, goal_choice: tuple[str, ...]) -> TaskPlan | None:
    """Chain one plan_path segment per step: start -> goal_1 -> goal_2 -> ..."""
    if len(goal_choice) != len(scenario.instruction.steps):
        raise KeyError(f"goal_choice must name {len(scenario.instruction.steps)} objects")
    segments: list[Trajectory] = []
    position = scenario.start
    for object_id in goal_choice:
        target = scenario.object_by_id(object_id).cell  # KeyError on unknown id
        segment = plan_path(semantic_map, position, target)
        if segment is None:
            return None
        segments.append(segment)
        position = target
    return TaskPlan(segments=tuple(segments), goal_choice=tuple(goal_choice))


def divergence(t1: Trajectory | tuple[Cell, ...], t2: Trajectory | tuple[Cell, ...]) -> float:
    """Discrete Frechet distance between two cell sequences (Chebyshev metric)."""
    p = t1.cells if isinstance(t1, Trajectory) else tuple(t1)
    q = t2.cells if isinstance(t2, Trajectory) else tuple(t2)
    if not p or not q:
        raise ValueError("divergence requires non-empty trajectories")

    def ground(a: Cell, b: Cell) -> int:
        return max(abs(a[0] - b[0]), abs(a[1] - b[1]))

    # row-rolling DP over the coupling recurrence
    prev = [0.0] * len(q)
    prev[0] = ground(p[0], q[0])
    for j in range(1, len(q)):
        prev[j] = max(prev[j - 1], ground(p[0], q[j]))
    for i in range(1, len(p)):
        row = [max(prev[0], ground(p[i], q[0]))] + [0.0] * (len(q) - 1)
        for j in range(1, len(q)):
            row[j] = max(min(prev[j], prev[j - 1], row[j - 1]), ground(p[i], q[j]))
        prev = row
    return float(prev[-1])


def dijkstra_reference(semantic_map: SemanticMap, start: Cell, goal: Cell) -> int | None:
    """Exact shortest-path cost by uniform-cost search; test oracle for plan_path."""
    if not semantic_map.passable(start) or not semantic_map.passable(goal):
        return None
    best: dict[Cell, int] = {start: 0}
    heap: list[tuple[int, Cell]] = [(0, start)]
    while heap:
        cost, cell = heapq.heappop(heap)
        if cell == goal:
            return cost
        if cost > best.get(cell, 1 << 30):
            continue
        x, y = cell
        for dx, dy in _NEIGHBOR_OFFSETS:
            nxt = (x + dx, y + dy)
            if semantic_map.passable(nxt) and cost + 1 < best.get(nxt, 1 << 30):
                best[nxt] = cost + 1
                heapq.heappush(heap, (cost + 1, nxt))
    return None
