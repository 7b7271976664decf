"""Built-in task families: tiny goal fixtures per evaluator kind.

These stand in for real benchmark datasets so the measurement stack
can be exercised end to end. Each family carries 3-5 goals; paired
experiments cycle through a family across repetitions. Deterministic
validators live in a named registry so configs can reference them.
"""

from __future__ import annotations

from .attribution import Phase
from .workflow import (
    EvaluatorKind,
    Goal,
    PhaseSpec,
    SuccessEvaluator,
    SyntheticExecutor,
)


def _numeric_equal(output: str, expected) -> bool:
    try:
        return float(output.strip()) == float(expected)
    except ValueError:
        return False


def _rows_equal(output: str, expected) -> bool:
    got = [line.strip() for line in output.strip().splitlines() if line.strip()]
    want = [line.strip() for line in str(expected).strip().splitlines() if line.strip()]
    return got == want


VALIDATORS = {
    "numeric_equal": _numeric_equal,
    "rows_equal": _rows_equal,
}


def _goal(task_id, idx, description, evaluator, expected) -> Goal:
    return Goal(
        goal_id=f"{task_id}-g{idx}",
        task_id=task_id,
        description=description,
        evaluator=evaluator,
        expected=expected,
    )


_EXACT = SuccessEvaluator(EvaluatorKind.EXACT_STRING)
_NORMSET = SuccessEvaluator(EvaluatorKind.NORMALIZED_SET)
_INT = SuccessEvaluator(EvaluatorKind.INTEGER_EXACT)
_CALC = SuccessEvaluator(
    EvaluatorKind.DETERMINISTIC_VALIDATOR, validator=VALIDATORS["numeric_equal"]
)
_DB = SuccessEvaluator(
    EvaluatorKind.DETERMINISTIC_VALIDATOR, validator=VALIDATORS["rows_equal"]
)

TASK_FAMILIES: dict[str, list[Goal]] = {
    "factual_qa": [
        _goal("factual_qa", 1, "Capital of France?", _EXACT, "Paris"),
        _goal("factual_qa", 2, "Chemical symbol for gold?", _EXACT, "Au"),
        _goal("factual_qa", 3, "Planet closest to the sun?", _EXACT, "Mercury"),
    ],
    "science_qa": [
        _goal(
            "science_qa", 1,
            "Process by which plants convert light to chemical energy?",
            _NORMSET, ("photosynthesis", "light reaction"),
        ),
        _goal(
            "science_qa", 2,
            "Force that keeps planets in orbit?",
            _NORMSET, ("gravity", "gravitation", "gravitational force"),
        ),
        _goal(
            "science_qa", 3,
            "Gas animals exhale as a respiration byproduct?",
            _NORMSET, ("carbon dioxide", "co2"),
        ),
        _goal(
            "science_qa", 4,
            "Organelle that produces most cellular ATP?",
            _NORMSET, ("mitochondria", "mitochondrion"),
        ),
    ],
    "logical_reasoning": [
        _goal(
            "logical_reasoning", 1,
            "All bloops are razzies; all razzies are lazzies. Are all bloops lazzies? (yes/no)",
            _EXACT, "yes",
        ),
        _goal(
            "logical_reasoning", 2,
            "No cats are dogs; Rex is a dog. Is Rex a cat? (yes/no)",
            _EXACT, "no",
        ),
        _goal(
            "logical_reasoning", 3,
            "If it rains the ground is wet; the ground is dry. Did it rain? (yes/no)",
            _EXACT, "no",
        ),
    ],
    "gsm8k_basic": [
        _goal("gsm8k_basic", 1, "A box holds 6 eggs. How many eggs in 12 boxes?", _INT, 72),
        _goal("gsm8k_basic", 2, "Tickets cost 8 each. Cost of 9 tickets?", _INT, 72),
        _goal("gsm8k_basic", 3, "23 + 47 = ?", _INT, 70),
        _goal("gsm8k_basic", 4, "A week has 7 days. Days in 5 weeks?", _INT, 35),
    ],
    "gsm8k_multi_step": [
        _goal(
            "gsm8k_multi_step", 1,
            "Ann buys 3 packs of 12 pens, gives away 7. Pens left?",
            _INT, 29,
        ),
        _goal(
            "gsm8k_multi_step", 2,
            "A train travels 60 km/h for 2 h then 40 km/h for 3 h. Total km?",
            _INT, 240,
        ),
        _goal(
            "gsm8k_multi_step", 3,
            "Sam earns 15/day for 6 days, spends 28. Amount left?",
            _INT, 62,
        ),
    ],
    "tg_single_calc": [
        _goal("tg_single_calc", 1, "Evaluate 37 * 43", _CALC, 1591),
        _goal("tg_single_calc", 2, "Evaluate 144 / 6", _CALC, 24),
        _goal("tg_single_calc", 3, "Evaluate 2**10", _CALC, 1024),
    ],
    "tg_single_db": [
        _goal("tg_single_db", 1, "Row for order 17", _DB, "17|widget|3"),
        _goal("tg_single_db", 2, "Row for order 42", _DB, "42|gadget|1"),
        _goal("tg_single_db", 3, "Row for order 99", _DB, "99|sprocket|7"),
    ],
    "tg_seq2": [
        _goal("tg_seq2", 1, "Query order 17 then write summary", _DB, "17|widget|3"),
        _goal("tg_seq2", 2, "Query order 42 then write summary", _DB, "42|gadget|1"),
        _goal("tg_seq2", 3, "Query order 99 then write summary", _DB, "99|sprocket|7"),
    ],
}


def goals_for_task(task_id: str) -> list[Goal]:
    if task_id not in TASK_FAMILIES:
        raise KeyError(f"unknown task family {task_id!r}")
    return TASK_FAMILIES[task_id]


def goal_for_repetition(task_id: str, repetition: int) -> Goal:
    """One representative goal per task per repetition, cycling the family."""
    family = goals_for_task(task_id)
    return family[repetition % len(family)]


def default_agentic_executor(scale_s: float = 1.0) -> SyntheticExecutor:
    """Multi-phase profile: planning-heavy with a synthesis pass."""
    return SyntheticExecutor(
        kind="synthetic_agentic",
        phases=[
            PhaseSpec(Phase.PLANNING, duration_s=0.9 * scale_s, intensity=1.0),
            PhaseSpec(Phase.EXECUTION, duration_s=0.5 * scale_s, intensity=1.0),
            PhaseSpec(Phase.SYNTHESIS, duration_s=0.3 * scale_s, intensity=1.0),
        ],
    )


def default_linear_executor(scale_s: float = 1.0) -> SyntheticExecutor:
    """Single-pass profile: one inference-like execution phase."""
    return SyntheticExecutor(
        kind="synthetic_linear",
        phases=[PhaseSpec(Phase.EXECUTION, duration_s=0.6 * scale_s, intensity=1.0)],
    )


def dispatch_agentic_executor(scale_s: float = 1.0) -> SyntheticExecutor:
    """Tool-dispatch profile: O(1) agentic work replacing a long
    compute pass, used to demonstrate the overhead-ratio inversion."""
    return SyntheticExecutor(
        kind="synthetic_agentic",
        phases=[
            PhaseSpec(Phase.PLANNING, duration_s=0.08 * scale_s, intensity=1.0),
            PhaseSpec(Phase.EXECUTION, duration_s=0.05 * scale_s, intensity=1.0),
            PhaseSpec(Phase.SYNTHESIS, duration_s=0.05 * scale_s, intensity=1.0),
        ],
    )


def dispatch_linear_executor(scale_s: float = 1.0) -> SyntheticExecutor:
    """Long token-generation-like pass the dispatch profile avoids."""
    return SyntheticExecutor(
        kind="synthetic_linear",
        phases=[PhaseSpec(Phase.EXECUTION, duration_s=1.8 * scale_s, intensity=1.0)],
    )
