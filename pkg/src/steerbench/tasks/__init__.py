"""Task corpus: seeded generators, dataset loaders, verifiers, and oracles."""

from .datasets import MalformedRecord, MissingFile, dump_instances, load_dataset
from .generators import generate, parse_complexity
from .solvers import (
    StateSpaceTooLarge,
    format_boxlift_plan,
    solve_blocksworld_bfs,
    solve_boxlift_greedy,
    solve_game24_bruteforce,
    solve_pathplan_bfs,
)
from .types import (
    BlocksworldComplexity,
    BoxLiftComplexity,
    BoxNetComplexity,
    Complexity,
    DATASET_KINDS,
    FailureReason,
    Game24Complexity,
    InvalidComplexity,
    LettersComplexity,
    MultiplyComplexity,
    PathPlanComplexity,
    PROCEDURAL_KINDS,
    TaskInstance,
    TaskKind,
    UnsupportedKind,
    Verdict,
    validate_complexity,
)
from .verifiers import (
    verify,
    verify_blocksworld,
    verify_boxlift,
    verify_boxnet,
    verify_exact,
    verify_game24,
    verify_pathplan,
)

__all__ = [
    "BlocksworldComplexity",
    "BoxLiftComplexity",
    "BoxNetComplexity",
    "Complexity",
    "DATASET_KINDS",
    "FailureReason",
    "Game24Complexity",
    "InvalidComplexity",
    "LettersComplexity",
    "MalformedRecord",
    "MissingFile",
    "MultiplyComplexity",
    "PROCEDURAL_KINDS",
    "PathPlanComplexity",
    "StateSpaceTooLarge",
    "TaskInstance",
    "TaskKind",
    "UnsupportedKind",
    "Verdict",
    "dump_instances",
    "format_boxlift_plan",
    "generate",
    "load_dataset",
    "parse_complexity",
    "solve_blocksworld_bfs",
    "solve_boxlift_greedy",
    "solve_game24_bruteforce",
    "solve_pathplan_bfs",
    "validate_complexity",
    "verify",
    "verify_blocksworld",
    "verify_boxlift",
    "verify_boxnet",
    "verify_exact",
    "verify_game24",
    "verify_pathplan",
]
