"""Active human-in-the-loop planning over semantic grid worlds.

The package identifies knowledge gaps in a scenario, builds a minimal
reasoning tree over the critical ones, asks information-gain-optimal binary
questions, prunes beliefs on the answers, and executes the refined plan.
"""

from .generate import GenParams, generate_scenario
from .mint import (
    Answer,
    Config,
    GoalIs,
    MintNode,
    MintTree,
    Query,
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
from .planner import TaskPlan, Trajectory, dijkstra_reference, divergence, plan_path, plan_task
from .runner import (
    BenchmarkReport,
    EpisodeResult,
    MintSession,
    Policy,
    run_benchmark,
    run_episode,
    write_report,
)
from .world import (
    Belief,
    BeliefState,
    GoalGap,
    GridMap,
    Instruction,
    KnowledgeGap,
    ObstacleGap,
    Scenario,
    SemanticMap,
    UncertainRegion,
    WorldObject,
    apply_hypothesis,
    dump_scenario,
    identify_gaps,
    initial_beliefs,
    load_scenario,
)

__version__ = "0.1.0"
