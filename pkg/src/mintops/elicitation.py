"""Turn queries into natural language and answers back into symbols.

Phrasing is a deterministic template; an optional provider hook may rewrite
the text (with a hard timeout and template fallback), but the query id always
travels with the text so answers bind to the query, not the phrasing.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Protocol

from .mint import Answer, GoalIs, Query, RegionTraversable
from .world import Scenario

_YES_TOKENS = {"yes", "y", "affirmative", "safe", "correct"}
_NO_TOKENS = {"no", "n", "negative", "unsafe", "wrong"}
_UNKNOWN_TOKENS = {"unknown", "unsure", "skip"}

PhrasingProvider = Callable[[str], str]


def describe_object(scenario: Scenario, object_id: str) -> str:
    obj = scenario.object_by_id(object_id)
    values = [obj.attributes[k] for k in sorted(obj.attributes)]
    return " ".join(values + [obj.label])


def phrase_query(
    query: Query,
    scenario: Scenario,
    provider: PhrasingProvider | None = None,
    provider_timeout: float = 2.0,
) -> str:
    """Deterministic natural-language text for a query."""
    if isinstance(query, RegionTraversable):
        scenario.region_by_id(query.region_id)  # KeyError on unknown region
        text = f"Is the {query.region_id} ahead safe to fly through?"
    elif query.attribute is not None:
        text = f"Is the target {query.attribute[1]}?"
    elif len(query.subset) == 1:
        text = f"Should I take the {describe_object(scenario, query.subset[0])}?"
    else:
        options = ", ".join(describe_object(scenario, oid) for oid in query.subset)
        text = f"Is the target one of: {options}?"

    if provider is not None:
        with ThreadPoolExecutor(max_workers=1) as pool:
            future = pool.submit(provider, text)
            try:
                rewritten = future.result(timeout=provider_timeout)
                if isinstance(rewritten, str) and rewritten.strip():
                    return rewritten
            except Exception:  # timeout or provider failure: fall back to the template
                future.cancel()
    return text


def parse_answer(text: str) -> Answer | None:
    """Map free text onto Yes/No/Unknown; None signals a re-prompt."""
    token = text.strip().lower().strip(".,!? ")
    if token in _YES_TOKENS:
        return Answer.YES
    if token in _NO_TOKENS:
        return Answer.NO
    if token in _UNKNOWN_TOKENS:
        return Answer.UNKNOWN
    return None


def canonical_text(answer: Answer) -> str:
    return answer.value


def oracle_answer(query: Query, scenario: Scenario) -> Answer:
    """Truthful answer from the scenario's hidden ground truth."""
    if isinstance(query, RegionTraversable):
        region = scenario.region_by_id(query.region_id)
        return Answer.YES if region.hypotheses[region.truth].traversable else Answer.NO
    true_goal = scenario.truth_goals[query.step_index]
    return Answer.YES if true_goal in set(query.subset) else Answer.NO


class Operator(Protocol):
    """Something that can answer a phrased query."""

    def ask(self, query: Query, text: str, ig_bits: float) -> Answer: ...


class ScriptedOracle:
    """Simulated truthful operator; never answers Unknown."""

    def __init__(self, scenario: Scenario) -> None:
        self.scenario = scenario

    def ask(self, query: Query, text: str, ig_bits: float) -> Answer:
        return oracle_answer(query, self.scenario)


class ConsoleOperator:
    """Interactive operator on stdio; re-prompts until the answer parses."""

    def __init__(self, input_fn: Callable[[str], str] = input, output_fn: Callable[[str], None] = print) -> None:
        self.input_fn = input_fn
        self.output_fn = output_fn

    def ask(self, query: Query, text: str, ig_bits: float) -> Answer:
        self.output_fn(f"[{query.query_id}] (+{ig_bits:.3f} bits) {text}")
        while True:
            answer = parse_answer(self.input_fn("yes/no/unknown> "))
            if answer is not None:
                return answer
            self.output_fn("Could not parse that; please answer yes, no, or unknown.")
