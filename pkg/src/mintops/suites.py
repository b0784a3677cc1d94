"""Bundled scenarios and the three benchmark suites used for acceptance.

Suite A: two-region scenarios, one critical wall and one quiet region each.
Suite B: a passive-stress mix built so both passive baselines land between
         0.60 and 0.90 success (individually and as a per-scenario union)
         while querying policies stay at 1.00.
Suite C: decoy-box goal ambiguity with four candidates and no regions.
"""

from __future__ import annotations

import importlib.resources
import os

from .generate import GenParams, generate_scenario
from .world import Scenario, load_scenario

SUITE_A_SEED = 11001
SUITE_B_SEED = 22002
SUITE_C_SEED = 33003

SUITE_A_PARAMS = GenParams(regions=2, off_path_fraction=0.5, goal_candidates=1)

SuiteEntry = tuple[str, Scenario]


def bundled_scenario(name: str) -> Scenario:
    """Load one of the scenarios shipped with the package (by file stem)."""
    text = importlib.resources.files("mintops.scenarios").joinpath(f"{name}.json").read_text("utf-8")
    return load_scenario(text)


def bundled_scenarios() -> list[SuiteEntry]:
    names = sorted(
        entry.name.removesuffix(".json")
        for entry in importlib.resources.files("mintops.scenarios").iterdir()
        if entry.name.endswith(".json")
    )
    return [(name, bundled_scenario(name)) for name in names]


def make_suite_a(seed: int = SUITE_A_SEED, count: int = 100) -> list[SuiteEntry]:
    return [(f"a-{i:03d}", generate_scenario(seed + i, SUITE_A_PARAMS)) for i in range(count)]


def make_suite_b(seed: int = SUITE_B_SEED) -> list[SuiteEntry]:
    """40 scenarios: 20 quiet-region, 4 toxic-shortcut-with-detour (risky
    fails), 8 safe-only-passage (conservative fails), 8 decoy-goal where the
    max-weight pick is wrong (both passives fail)."""
    quiet = GenParams(regions=1, off_path_fraction=1.0, goal_candidates=1)
    toxic_detour = GenParams(regions=1, off_path_fraction=0.0, goal_candidates=1, detour=True, force_region_truths=(1,))
    safe_no_detour = GenParams(regions=1, off_path_fraction=0.0, goal_candidates=1, detour=False, force_region_truths=(0,))

    suite: list[SuiteEntry] = []
    kinds: list[GenParams] = [quiet] * 20 + [toxic_detour] * 4 + [safe_no_detour] * 8
    for i, params in enumerate(kinds):
        suite.append((f"b-{i:03d}", generate_scenario(seed + i, params)))
    for j in range(8):
        decoy = GenParams(regions=0, goal_candidates=4, force_goal_truth=1 + j % 3)
        suite.append((f"b-{20 + 4 + 8 + j:03d}", generate_scenario(seed + 100 + j, decoy)))
    return suite


def make_suite_c(seed: int = SUITE_C_SEED, count: int = 20) -> list[SuiteEntry]:
    """Goal ambiguity only: 4 candidates, truth cycling over the candidates."""
    suite = []
    for i in range(count):
        params = GenParams(regions=0, goal_candidates=4, goal_steps=2, force_goal_truth=i % 4)
        suite.append((f"c-{i:03d}", generate_scenario(seed + i, params)))
    return suite


def load_suite_dir(path: str) -> list[SuiteEntry]:
    """Load every *.json scenario in a directory, sorted by file name."""
    entries: list[SuiteEntry] = []
    for name in sorted(os.listdir(path)):
        if not name.endswith(".json"):
            continue
        with open(os.path.join(path, name), encoding="utf-8") as handle:
            entries.append((name.removesuffix(".json"), load_scenario(handle.read())))
    return entries
