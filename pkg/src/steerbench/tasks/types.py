"""Core task types: kinds, complexity records, instances, and verdicts."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Union


class TaskKind(str, Enum):
    NUMBER_MULTIPLY = "number_multiply"
    GAME24 = "game24"
    PATH_PLAN = "path_plan"
    LETTERS = "letters"
    BOX_LIFT = "box_lift"
    BOX_NET = "box_net"
    BLOCKSWORLD = "blocksworld"
    DATE_UNDERSTANDING = "date_understanding"
    WEB_OF_LIES = "web_of_lies"
    LOGICAL_DEDUCTION = "logical_deduction"
    NAVIGATE = "navigate"
    GSM_HARD = "gsm_hard"
    MATH_GEOMETRY = "math_geometry"
    MATH_COUNT_PROB = "math_count_prob"


PROCEDURAL_KINDS = frozenset(
    {
        TaskKind.NUMBER_MULTIPLY,
        TaskKind.GAME24,
        TaskKind.PATH_PLAN,
        TaskKind.LETTERS,
        TaskKind.BOX_LIFT,
        TaskKind.BOX_NET,
        TaskKind.BLOCKSWORLD,
    }
)

DATASET_KINDS = frozenset(set(TaskKind) - PROCEDURAL_KINDS)


class UnsupportedKind(ValueError):
    pass


class InvalidComplexity(ValueError):
    pass


@dataclass(frozen=True)
class MultiplyComplexity:
    d1: int
    d2: int

    @property
    def label(self) -> str:
        return f"{self.d1}_{self.d2}"


@dataclass(frozen=True)
class Game24Complexity:
    n_terms: int

    @property
    def label(self) -> str:
        return f"n{self.n_terms}"


@dataclass(frozen=True)
class LettersComplexity:
    word_length: int

    @property
    def label(self) -> str:
        return f"len{self.word_length}"


@dataclass(frozen=True)
class BoxLiftComplexity:
    n_boxes: int
    n_lifters: int

    @property
    def label(self) -> str:
        return f"{self.n_boxes}_{self.n_lifters}"


@dataclass(frozen=True)
class BoxNetComplexity:
    rows: int
    cols: int
    n_boxes: int

    @property
    def label(self) -> str:
        return f"{self.rows}x{self.cols}_{self.n_boxes}"


@dataclass(frozen=True)
class BlocksworldComplexity:
    n_blocks: int

    @property
    def label(self) -> str:
        return f"b{self.n_blocks}"


@dataclass(frozen=True)
class PathPlanComplexity:
    grid_side: int
    n_obstacles: int

    @property
    def label(self) -> str:
        return f"{self.grid_side}_{self.n_obstacles}"


Complexity = Union[
    MultiplyComplexity,
    Game24Complexity,
    LettersComplexity,
    BoxLiftComplexity,
    BoxNetComplexity,
    BlocksworldComplexity,
    PathPlanComplexity,
]

COMPLEXITY_TYPES = {
    TaskKind.NUMBER_MULTIPLY: MultiplyComplexity,
    TaskKind.GAME24: Game24Complexity,
    TaskKind.LETTERS: LettersComplexity,
    TaskKind.BOX_LIFT: BoxLiftComplexity,
    TaskKind.BOX_NET: BoxNetComplexity,
    TaskKind.BLOCKSWORLD: BlocksworldComplexity,
    TaskKind.PATH_PLAN: PathPlanComplexity,
}


def validate_complexity(kind: TaskKind, complexity: Complexity) -> None:
    """Raise InvalidComplexity unless ``complexity`` is valid for ``kind``."""
    expected = COMPLEXITY_TYPES.get(kind)
    if expected is None:
        raise UnsupportedKind(f"{kind.value} is dataset-backed, not procedural")
    if not isinstance(complexity, expected):
        raise InvalidComplexity(
            f"{kind.value} expects {expected.__name__}, got {type(complexity).__name__}"
        )
    if isinstance(complexity, MultiplyComplexity):
        if not (1 <= complexity.d1 <= 64 and 1 <= complexity.d2 <= 64):
            raise InvalidComplexity("digit counts must be in [1, 64]")
    elif isinstance(complexity, Game24Complexity):
        if not (2 <= complexity.n_terms <= 8):
            raise InvalidComplexity("n_terms must be in [2, 8]")
    elif isinstance(complexity, LettersComplexity):
        if complexity.word_length < 1:
            raise InvalidComplexity("word_length must be >= 1")
    elif isinstance(complexity, BoxLiftComplexity):
        if complexity.n_boxes < 1 or complexity.n_lifters < 1:
            raise InvalidComplexity("box and lifter counts must be >= 1")
    elif isinstance(complexity, BoxNetComplexity):
        if complexity.rows < 1 or complexity.cols < 1 or complexity.n_boxes < 1:
            raise InvalidComplexity("rows, cols and n_boxes must be >= 1")
        if complexity.n_boxes > 8:
            raise InvalidComplexity("at most 8 boxes (one per colour)")
    elif isinstance(complexity, BlocksworldComplexity):
        if complexity.n_blocks < 1:
            raise InvalidComplexity("n_blocks must be >= 1")
    elif isinstance(complexity, PathPlanComplexity):
        if complexity.grid_side < 1 or complexity.n_obstacles < 0:
            raise InvalidComplexity("grid_side must be >= 1, n_obstacles >= 0")
        if complexity.n_obstacles > complexity.grid_side**2 - 2:
            raise InvalidComplexity("grid too small for obstacle count")


class FailureReason(str, Enum):
    PARSE_ERROR = "parse_error"
    WRONG_VALUE = "wrong_value"
    ILLEGAL_MOVE = "illegal_move"
    CONSTRAINT_VIOLATED = "constraint_violated"
    STEP_LIMIT_EXCEEDED = "step_limit_exceeded"
    TIMEOUT = "timeout"
    NO_ANSWER = "no_answer"


@dataclass(frozen=True)
class Verdict:
    success: bool
    partial_score: float = 0.0
    failure_reason: Optional[FailureReason] = None

    def __post_init__(self):
        if self.success and self.partial_score != 1.0:
            raise ValueError("success implies partial_score == 1.0")
        if not 0.0 <= self.partial_score <= 1.0:
            raise ValueError("partial_score must be in [0, 1]")

    @classmethod
    def passed(cls) -> "Verdict":
        return cls(success=True, partial_score=1.0)

    @classmethod
    def failed(cls, reason: FailureReason, partial_score: float = 0.0) -> "Verdict":
        return cls(success=False, partial_score=partial_score, failure_reason=reason)

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "partial_score": self.partial_score,
            "failure_reason": self.failure_reason.value if self.failure_reason else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Verdict":
        reason = d.get("failure_reason")
        return cls(
            success=d["success"],
            partial_score=d["partial_score"],
            failure_reason=FailureReason(reason) if reason else None,
        )


@dataclass(frozen=True)
class TaskInstance:
    id: str
    kind: TaskKind
    complexity: Optional[Complexity]
    seed: int
    prompt: str
    payload: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec: dict[str, Any] = {"question": self.prompt}
        gold = self.payload.get("gold")
        if gold is not None:
            rec["answer"] = gold
        rec.update(
            {
                "kind": self.kind.value,
                "complexity": self.complexity.label if self.complexity else None,
                "seed": self.seed,
                "payload": self.payload,
            }
        )
        return rec

    def to_json(self) -> str:
        return json.dumps(self.to_record(), ensure_ascii=False, sort_keys=True)
