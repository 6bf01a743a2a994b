"""Deterministic answer verifiers for all task kinds.

Every verifier is total: arbitrary input text yields a Verdict, never an
exception. Extraction follows a "last match wins" convention, since
chain-of-thought responses mention intermediate values before the final one.
"""

from __future__ import annotations

import re
from collections import Counter
from fractions import Fraction
from typing import Optional

from .. import expr
from .types import FailureReason, TaskInstance, TaskKind, Verdict

# Integer literal, allowing 1,234,567 style digit grouping.
_INT_RE = re.compile(r"-?\d{1,3}(?:,\d{3})+|-?\d+")
_PLAIN_INT_RE = re.compile(r"\d+")
_OPTION_RE = re.compile(r"\(([A-Za-z])\)")
_YESNO_RE = re.compile(r"\b(yes|no|true|false)\b", re.IGNORECASE)
# Number for exact-rational comparison: optional sign, digit grouping,
# decimals, and a/b fractions written without spaces.
_NUMBER_RE = re.compile(r"-?\d[\d,]*(?:\.\d+)?(?:/\d+)?")
_COORD_RE = re.compile(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)")


def _last_int(text: str) -> Optional[int]:
    matches = _INT_RE.findall(text)
    if not matches:
        return None
    return int(matches[-1].replace(",", ""))


def _to_fraction(token: str) -> Optional[Fraction]:
    token = token.replace(",", "").strip()
    try:
        if "/" in token:
            num, den = token.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        return None


def _last_number(text: str) -> Optional[Fraction]:
    cleaned = text.replace("$", "")
    for token in reversed(_NUMBER_RE.findall(cleaned)):
        value = _to_fraction(token)
        if value is not None:
            return value
    return None


def _canonical_gold(gold: str):
    """Classify a gold answer: option letter, yes/no, number, or raw string."""
    stripped = str(gold).strip()
    m = re.fullmatch(r"\(?([A-Za-z])\)?", stripped)
    if m and len(stripped) <= 3:
        return ("option", m.group(1).upper())
    if stripped.lower() in ("yes", "no", "true", "false"):
        return ("boolean", stripped.lower() in ("yes", "true"))
    value = _to_fraction(stripped.rstrip("%"))
    if value is not None:
        return ("number", value)
    return ("string", stripped.lower())


def verify(instance: TaskInstance, answer: str) -> Verdict:
    """Dispatch to the verifier matching the instance kind."""
    handler = _HANDLERS[instance.kind]
    try:
        return handler(instance, answer if isinstance(answer, str) else str(answer))
    except Exception:  # verifiers are contractually total
        return Verdict.failed(FailureReason.PARSE_ERROR)


def verify_exact(instance: TaskInstance, answer: str) -> Verdict:
    """Rule-based check for single-valued answers.

    NumberMultiply compares the last integer literal against the exact
    product; Letters requires both the count and the 1-indexed position
    list; multiple-choice kinds compare the last parenthesised option
    letter; numeric kinds compare exactly as rationals after stripping
    commas, currency signs and units.
    """
    try:
        kind = instance.kind
        if kind == TaskKind.NUMBER_MULTIPLY:
            return _verify_multiply(instance, answer)
        if kind == TaskKind.LETTERS:
            return _verify_letters(instance, answer)
        return _verify_dataset_gold(instance, answer)
    except Exception:
        return Verdict.failed(FailureReason.PARSE_ERROR)


def _verify_multiply(instance: TaskInstance, answer: str) -> Verdict:
    got = _last_int(answer)
    if got is None:
        return Verdict.failed(FailureReason.NO_ANSWER)
    product = int(instance.payload["a"]) * int(instance.payload["b"])
    return Verdict.passed() if got == product else Verdict.failed(FailureReason.WRONG_VALUE)


def _verify_letters(instance: TaskInstance, answer: str) -> Verdict:
    word = instance.payload["word"]
    letter = instance.payload["letter"]
    positions = [i + 1 for i, ch in enumerate(word) if ch == letter]
    ints = [int(tok) for tok in _PLAIN_INT_RE.findall(answer)]
    want = [len(positions)] + positions
    if not ints:
        return Verdict.failed(FailureReason.NO_ANSWER)
    if len(ints) < len(want):
        return Verdict.failed(FailureReason.WRONG_VALUE)
    if ints[-len(want):] == want:
        return Verdict.passed()
    return Verdict.failed(FailureReason.WRONG_VALUE)


def _verify_dataset_gold(instance: TaskInstance, answer: str) -> Verdict:
    gold = instance.payload.get("gold")
    if gold is None:
        return Verdict.failed(FailureReason.NO_ANSWER)
    shape, want = _canonical_gold(gold)
    if shape == "option":
        letters = _OPTION_RE.findall(answer)
        if not letters:
            return Verdict.failed(FailureReason.NO_ANSWER)
        ok = letters[-1].upper() == want
    elif shape == "boolean":
        words = _YESNO_RE.findall(answer)
        if not words:
            return Verdict.failed(FailureReason.NO_ANSWER)
        ok = (words[-1].lower() in ("yes", "true")) == want
    elif shape == "number":
        got = _last_number(answer)
        if got is None:
            return Verdict.failed(FailureReason.NO_ANSWER)
        ok = got == want
    else:
        ok = want in answer.lower()
    return Verdict.passed() if ok else Verdict.failed(FailureReason.WRONG_VALUE)


# --- Game 24 ----------------------------------------------------------------

_EXPR_RUN_RE = re.compile(r"[0-9+\-*/()\s]+")


def verify_game24(instance: TaskInstance, answer: str) -> Verdict:
    """Accept iff the last parseable expression uses exactly the given value
    multiset with + - * / and evaluates to exactly 24."""
    try:
        normalized = (
            answer.replace("×", "*").replace("÷", "/").replace("−", "-")
        )
        ast = None
        for run in reversed(_EXPR_RUN_RE.findall(normalized)):
            candidate = run.strip()
            if not candidate or not any(op in candidate for op in "+-*/"):
                continue
            try:
                ast = expr.parse(candidate)
            except expr.ExprSyntaxError:
                continue
            if isinstance(ast, expr.Leaf):
                ast = None
                continue
            break
        if ast is None:
            return Verdict.failed(FailureReason.NO_ANSWER)
        values = Counter(int(v) for v in instance.payload["values"])
        if expr.leaf_multiset(ast) != values:
            return Verdict.failed(FailureReason.CONSTRAINT_VIOLATED)
        try:
            result = expr.eval_exact(ast)
        except expr.DivisionByZero:
            return Verdict.failed(FailureReason.WRONG_VALUE)
        if result == Fraction(24):
            return Verdict.passed()
        return Verdict.failed(FailureReason.WRONG_VALUE)
    except Exception:
        return Verdict.failed(FailureReason.PARSE_ERROR)


# --- BoxLift ----------------------------------------------------------------

_STEP_LINE_RE = re.compile(r"step\s*\d+\s*:?(.*)", re.IGNORECASE)
_ASSIGNMENT_RE = re.compile(r"\(\s*(\d+)\s*,\s*\[([^\]]*)\]\s*\)")


def verify_boxlift(instance: TaskInstance, answer: str) -> Verdict:
    """Simulate a "Step k: [(weight, [lifters]), ...]" plan.

    A box is lifted when its listed weight matches a not-yet-lifted box and
    the assigned lifters (each usable once per step) cover the weight.
    Partial credit is the fraction of boxes lifted within the step limit.
    """
    try:
        weights = [int(w) for w in instance.payload["weights"]]
        capacities = [int(c) for c in instance.payload["capacities"]]
        limit = int(instance.payload["step_limit"])
        steps = []
        for line in answer.splitlines():
            m = _STEP_LINE_RE.search(line)
            if m:
                steps.append(m.group(1))
        if not steps:
            return Verdict.failed(FailureReason.NO_ANSWER)
        remaining = Counter(weights)
        lifted = 0
        illegal = False
        for body in steps[:limit]:
            used: set[int] = set()
            assignments = _ASSIGNMENT_RE.findall(body)
            if not assignments and body.strip():
                illegal = True
            for weight_text, lifters_text in assignments:
                weight = int(weight_text)
                crew = [int(tok) for tok in _PLAIN_INT_RE.findall(lifters_text)]
                valid = (
                    crew
                    and len(set(crew)) == len(crew)
                    and all(0 <= i < len(capacities) for i in crew)
                    and not (set(crew) & used)
                    and remaining[weight] > 0
                    and sum(capacities[i] for i in crew) >= weight
                )
                if not valid:
                    illegal = True
                    continue
                used.update(crew)
                remaining[weight] -= 1
                lifted += 1
        score = lifted / len(weights) if weights else 1.0
        if score >= 1.0:
            return Verdict.passed()
        if illegal:
            reason = FailureReason.ILLEGAL_MOVE
        elif len(steps) > limit:
            reason = FailureReason.STEP_LIMIT_EXCEEDED
        else:
            reason = FailureReason.CONSTRAINT_VIOLATED
        return Verdict.failed(reason, partial_score=score)
    except Exception:
        return Verdict.failed(FailureReason.PARSE_ERROR)


# --- BoxNet -----------------------------------------------------------------

_BOXNET_ACTION_RE = re.compile(
    r"arm\s*\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*:?\s*"
    r"move[s]?\s+(\w+)\s+box\s+to\s+"
    r"(?:(goal)|cell\s*\(\s*(\d+)\s*,\s*(\d+)\s*\))",
    re.IGNORECASE,
)


def verify_boxnet(instance: TaskInstance, answer: str) -> Verdict:
    """Simulate per-step arm actions on the BoxNet grid.

    Illegal actions (arm acting outside its cell, non-neighbor targets,
    moving a delivered box, goal of the wrong color elsewhere) are no-ops.
    Score is the fraction of boxes resting on same-colored goals at the end.
    """
    try:
        rows = int(instance.payload["rows"])
        cols = int(instance.payload["cols"])
        boxes = {
            color: {"cell": tuple(state["cell"]), "on_goal": bool(state.get("on_goal"))}
            for color, state in instance.payload["boxes"].items()
        }
        goals = {color: tuple(cell) for color, cell in instance.payload["goals"].items()}
        step_lines = []
        for line in answer.splitlines():
            m = _STEP_LINE_RE.search(line)
            if m:
                step_lines.append(m.group(1))
        illegal = False
        for body in step_lines:
            used_arms: set[tuple[int, int]] = set()
            for m in _BOXNET_ACTION_RE.finditer(body):
                arm = (int(m.group(1)), int(m.group(2)))
                color = m.group(3).lower()
                to_goal = m.group(4) is not None
                box = boxes.get(color)
                if (
                    box is None
                    or box["on_goal"]
                    or arm in used_arms
                    or box["cell"] != arm
                    or not (0 <= arm[0] < rows and 0 <= arm[1] < cols)
                ):
                    illegal = True
                    continue
                if to_goal:
                    if goals.get(color) == box["cell"]:
                        box["on_goal"] = True
                        used_arms.add(arm)
                    else:
                        illegal = True
                    continue
                target = (int(m.group(5)), int(m.group(6)))
                adjacent = abs(target[0] - arm[0]) + abs(target[1] - arm[1]) == 1
                if adjacent and 0 <= target[0] < rows and 0 <= target[1] < cols:
                    box["cell"] = target
                    used_arms.add(arm)
                else:
                    illegal = True
        delivered = sum(1 for b in boxes.values() if b["on_goal"])
        score = delivered / len(boxes) if boxes else 1.0
        if score >= 1.0:
            return Verdict.passed()
        if not step_lines:
            return Verdict.failed(FailureReason.NO_ANSWER, partial_score=score)
        reason = FailureReason.ILLEGAL_MOVE if illegal else FailureReason.CONSTRAINT_VIOLATED
        return Verdict.failed(reason, partial_score=score)
    except Exception:
        return Verdict.failed(FailureReason.PARSE_ERROR)


# --- Blocksworld ------------------------------------------------------------

_BLOCKS_ACTION_RE = re.compile(
    r"\b(?:"
    r"(?P<pickup>pick\s+up)\s+(?:block\s+)?(?P<pu_x>[A-Za-z])\b"
    r"|(?P<unstack>unstack)\s+(?:block\s+)?(?P<un_x>[A-Za-z])\s+from\s+"
    r"(?:on\s+top\s+of\s+)?(?:block\s+)?(?P<un_y>[A-Za-z])\b"
    r"|(?P<putdown>put\s+down)\s+(?:block\s+)?(?P<pd_x>[A-Za-z])\b"
    r"|(?P<stack>stack)\s+(?:block\s+)?(?P<st_x>[A-Za-z])\s+on\s+"
    r"(?:top\s+of\s+)?(?:block\s+)?(?P<st_y>[A-Za-z])\b"
    r")",
    re.IGNORECASE,
)


def parse_blocksworld_plan(answer: str) -> list[tuple]:
    """Extract (verb, args...) actions in order of appearance."""
    actions: list[tuple] = []
    for m in _BLOCKS_ACTION_RE.finditer(answer):
        if m.group("pickup"):
            actions.append(("pick up", m.group("pu_x").upper()))
        elif m.group("unstack"):
            actions.append(("unstack", m.group("un_x").upper(), m.group("un_y").upper()))
        elif m.group("putdown"):
            actions.append(("put down", m.group("pd_x").upper()))
        else:
            actions.append(("stack", m.group("st_x").upper(), m.group("st_y").upper()))
    return actions


def verify_blocksworld(instance: TaskInstance, answer: str) -> Verdict:
    """Replay the plan under standard preconditions; any violation fails."""
    try:
        on = dict(instance.payload["initial"])
        goal = dict(instance.payload["goal"])
        holding: Optional[str] = None

        def clear(block: str) -> bool:
            return block not in set(on.values()) and block != holding

        for action in parse_blocksworld_plan(answer):
            verb = action[0]
            if verb == "pick up":
                x = action[1]
                if x not in on or on[x] != "table" or not clear(x) or holding is not None:
                    return Verdict.failed(FailureReason.ILLEGAL_MOVE)
                del on[x]
                holding = x
            elif verb == "unstack":
                x, y = action[1], action[2]
                if x not in on or on[x] != y or not clear(x) or holding is not None:
                    return Verdict.failed(FailureReason.ILLEGAL_MOVE)
                del on[x]
                holding = x
            elif verb == "put down":
                x = action[1]
                if holding != x:
                    return Verdict.failed(FailureReason.ILLEGAL_MOVE)
                on[x] = "table"
                holding = None
            else:
                x, y = action[1], action[2]
                if holding != x or y not in on or not clear(y):
                    return Verdict.failed(FailureReason.ILLEGAL_MOVE)
                on[x] = y
                holding = None
        if holding is None and on == goal:
            return Verdict.passed()
        return Verdict.failed(FailureReason.WRONG_VALUE)
    except Exception:
        return Verdict.failed(FailureReason.PARSE_ERROR)


# --- Path planning ----------------------------------------------------------


def verify_pathplan(instance: TaskInstance, answer: str) -> Verdict:
    """Check a waypoint sequence: starts at start, ends at goal, 4-connected,
    obstacle-free. The path is read as the coordinate pairs from the last
    occurrence of the start cell onwards (responses echo the question)."""
    try:
        grid_side = int(instance.payload["grid_side"])
        start = tuple(instance.payload["start"])
        goal = tuple(instance.payload["goal"])
        obstacles = {tuple(o) for o in instance.payload["obstacles"]}
        pairs = [(int(r), int(c)) for r, c in _COORD_RE.findall(answer)]
        if not pairs:
            return Verdict.failed(FailureReason.NO_ANSWER)
        try:
            first = len(pairs) - 1 - pairs[::-1].index(start)
        except ValueError:
            return Verdict.failed(FailureReason.CONSTRAINT_VIOLATED)
        path = pairs[first:]
        if path[-1] != goal:
            return Verdict.failed(FailureReason.CONSTRAINT_VIOLATED)
        for cell in path:
            inside = 0 <= cell[0] < grid_side and 0 <= cell[1] < grid_side
            if not inside or cell in obstacles:
                return Verdict.failed(FailureReason.ILLEGAL_MOVE)
        for a, b in zip(path, path[1:]):
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
                return Verdict.failed(FailureReason.ILLEGAL_MOVE)
        return Verdict.passed()
    except Exception:
        return Verdict.failed(FailureReason.PARSE_ERROR)


_HANDLERS = {
    TaskKind.NUMBER_MULTIPLY: verify_exact,
    TaskKind.LETTERS: verify_exact,
    TaskKind.DATE_UNDERSTANDING: verify_exact,
    TaskKind.WEB_OF_LIES: verify_exact,
    TaskKind.LOGICAL_DEDUCTION: verify_exact,
    TaskKind.NAVIGATE: verify_exact,
    TaskKind.GSM_HARD: verify_exact,
    TaskKind.MATH_GEOMETRY: verify_exact,
    TaskKind.MATH_COUNT_PROB: verify_exact,
    TaskKind.GAME24: verify_game24,
    TaskKind.BOX_LIFT: verify_boxlift,
    TaskKind.BOX_NET: verify_boxnet,
    TaskKind.BLOCKSWORLD: verify_blocksworld,
    TaskKind.PATH_PLAN: verify_pathplan,
}
