"""Seeded instance generators for the seven procedural task kinds.

Every generator is a pure function of (kind, complexity, seed): the RNG is
seeded from those three alone, so regeneration is bit-identical.
"""

from __future__ import annotations

import math
import random
from typing import Optional

from .solvers import (
    format_boxlift_plan,
    solve_boxlift_greedy,
    solve_game24_bruteforce,
    solve_pathplan_bfs,
)
from .types import (
    BlocksworldComplexity,
    BoxLiftComplexity,
    BoxNetComplexity,
    Complexity,
    Game24Complexity,
    InvalidComplexity,
    LettersComplexity,
    MultiplyComplexity,
    PathPlanComplexity,
    PROCEDURAL_KINDS,
    TaskInstance,
    TaskKind,
    UnsupportedKind,
    validate_complexity,
)

BOX_COLORS = ("red", "blue", "green", "yellow", "purple", "orange", "cyan", "magenta")

# Common letters so that generated words repeat characters at natural rates.
_LETTER_POOL = "aabcdeeefghiilmnnoopqrrssttuuwy"

BLOCK_NAMES = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _rng_for(kind: TaskKind, complexity: Complexity, seed: int) -> random.Random:
    # String seeding hashes with sha512 internally, stable across platforms.
    return random.Random(f"{kind.value}|{complexity.label}|{seed}")


def _instance_id(kind: TaskKind, complexity: Complexity, seed: int) -> str:
    return f"{kind.value}-{complexity.label}-s{seed}"


def generate(kind: TaskKind, complexity: Complexity, seed: int) -> TaskInstance:
    """Build a solvable, deterministic instance for a procedural task kind."""
    if kind not in PROCEDURAL_KINDS:
        raise UnsupportedKind(f"{kind.value} instances are loaded from datasets")
    validate_complexity(kind, complexity)
    rng = _rng_for(kind, complexity, seed)
    builder = _BUILDERS[kind]
    prompt, payload = builder(complexity, rng)
    return TaskInstance(
        id=_instance_id(kind, complexity, seed),
        kind=kind,
        complexity=complexity,
        seed=seed,
        prompt=prompt,
        payload=payload,
    )


def _build_multiply(c: MultiplyComplexity, rng: random.Random):
    a = rng.randint(10 ** (c.d1 - 1), 10**c.d1 - 1)
    b = rng.randint(10 ** (c.d2 - 1), 10**c.d2 - 1)
    prompt = f"Calculate the result of {a} multiplied by {b}."
    return prompt, {"a": a, "b": b}


def _build_game24(c: Game24Complexity, rng: random.Random):
    while True:
        values = [rng.randint(1, 13) for _ in range(c.n_terms)]
        if solve_game24_bruteforce(values) is not None:
            break
    prompt = (
        "Use numbers and basic arithmetic operations (+ - * /) to obtain 24. "
        "Each number must be used exactly once.\n"
        f"Input: {' '.join(str(v) for v in values)}"
    )
    return prompt, {"values": values}


def _build_letters(c: LettersComplexity, rng: random.Random):
    word = "".join(rng.choice(_LETTER_POOL) for _ in range(c.word_length))
    letter = word[rng.randrange(len(word))]
    prompt = f"How many {letter}'s in the word {word} and their positions?"
    return prompt, {"word": word, "letter": letter}


def _build_pathplan(c: PathPlanComplexity, rng: random.Random):
    cells = [(r, col) for r in range(c.grid_side) for col in range(c.grid_side)]
    while True:
        obstacles = rng.sample(cells, c.n_obstacles)
        free = [cell for cell in cells if cell not in obstacles]
        start, goal = rng.sample(free, 2)
        if solve_pathplan_bfs(c.grid_side, start, goal, obstacles) is not None:
            break
    prompt = (
        "Task: Path Plan\n\n"
        f"You are planning the waypoints of a robot trajectory on a {c.grid_side}x{c.grid_side} grid. "
        "Cells are written (row, col) with (0, 0) at the top-left. In one step the robot moves "
        "one cell up, down, left, or right; it must stay on the grid and cannot enter obstacle cells.\n"
        f"Start: {start}\n"
        f"Goal: {goal}\n"
        f"Obstacles: {obstacles}\n\n"
        "Output the full waypoint sequence from start to goal as coordinate pairs, "
        "for example: (0, 0) -> (0, 1) -> (1, 1)"
    )
    return prompt, {
        "grid_side": c.grid_side,
        "start": list(start),
        "goal": list(goal),
        "obstacles": [list(o) for o in obstacles],
    }


def _build_boxlift(c: BoxLiftComplexity, rng: random.Random):
    capacities = [rng.randint(40, 160) for _ in range(c.n_lifters)]
    heaviest = max(20, min(300, int(0.9 * sum(capacities))))
    weights = [rng.randint(20, heaviest) for _ in range(c.n_boxes)]
    reference = solve_boxlift_greedy(weights, capacities)
    step_limit = math.ceil(1.5 * len(reference))
    prompt = (
        "Task: BoxLift\n\n"
        f"You are given a list of boxes with the following weights: {weights}\n"
        f"And a list of lifters with the following maximum lifting capacities: {capacities}\n\n"
        "Your task is to assign the lifters to lift all the boxes in multiple steps, "
        "following these rules:\n"
        "1. Multiple boxes can be lifted in each step.\n"
        "2. Each lifter can only lift one box at a time.\n"
        "3. Each lifting agent can be used only once in each step.\n"
        "4. Multiple lifters can combine together to lift one box if the box is too "
        "heavy for a single lifter.\n"
        "5. Try to lift all the boxes using the minimum number of steps possible.\n"
        f"6. You need to lift all the boxes in less than or equal to {step_limit} steps.\n\n"
        "Please provide your solution in the following format:\n"
        "Step 1: [(Box weight, [Lifter indices]), (Box weight, [Lifter indices]), ...]\n"
        "Step 2: [(Box weight, [Lifter indices]), (Box weight, [Lifter indices]), ...]\n"
        "...\n\n"
        "For example:\n"
        "Step 1: [(50, [0, 2]), (30, [1]), (20, [3])]\n"
        "This means in Step 1, lifters 0 and 2 are lifting a box weighing 50, lifter 1 "
        "is lifting a box weighing 30, and lifter 3 is lifting a box weighing 20.\n\n"
        "Ensure all boxes are lifted and provide the most efficient solution possible."
    )
    return prompt, {"weights": weights, "capacities": capacities, "step_limit": step_limit}


def _build_boxnet(c: BoxNetComplexity, rng: random.Random):
    colors = BOX_COLORS[: c.n_boxes]
    cells = [(r, col) for r in range(c.rows) for col in range(c.cols)]
    boxes = {color: rng.choice(cells) for color in colors}
    goals = {color: rng.choice(cells) for color in colors}
    box_desc = ", ".join(f"{color} box in cell{boxes[color]}" for color in colors)
    goal_desc = ", ".join(f"{color} goal in cell{goals[color]}" for color in colors)
    prompt = (
        "Task: BoxNet\n\n"
        f"You are given a {c.rows}x{c.cols} grid of cells. Each cell (row, col) has a robot "
        "arm arm(row, col) that can only act on boxes currently inside its own cell.\n"
        f"Boxes: {box_desc}\n"
        f"Goals: {goal_desc}\n\n"
        "Each arm has two possible actions:\n"
        "1. Move a box within its cell to a neighboring cell (up, down, left, or right).\n"
        "2. Move a box within its cell to the goal location of the same color within its cell.\n"
        "A box moved onto its goal stays there. The task is finished when every box rests "
        "on the goal of its color, in as few steps as possible.\n\n"
        "Provide your plan with one step per line; within a step each arm may perform at "
        "most one action. Use this exact format:\n"
        "Step 1: arm(0, 0): move red box to cell(0, 1); arm(1, 1): move blue box to goal\n"
        "Step 2: arm(0, 1): move red box to goal"
    )
    payload = {
        "rows": c.rows,
        "cols": c.cols,
        "boxes": {color: list(cell) for color, cell in boxes.items()},
        "goals": {color: list(cell) for color, cell in goals.items()},
    }
    return prompt, payload


def _random_configuration(names: list[str], rng: random.Random) -> dict:
    order = list(names)
    rng.shuffle(order)
    on: dict[str, str] = {}
    stack_tops: list[str] = []
    for block in order:
        if not stack_tops or rng.random() < 0.5:
            on[block] = "table"
        else:
            top = rng.choice(stack_tops)
            on[block] = top
            stack_tops.remove(top)
        stack_tops.append(block)
    return on


def _describe_configuration(on: dict) -> str:
    supports = set(on.values())
    parts = []
    for block in sorted(on):
        below = on[block]
        if below == "table":
            parts.append(f"block {block} is on the table")
        else:
            parts.append(f"block {block} is on top of block {below}")
    for block in sorted(on):
        if block not in supports:
            parts.append(f"block {block} is clear")
    return ", ".join(parts)


def _build_blocksworld(c: BlocksworldComplexity, rng: random.Random):
    names = list(BLOCK_NAMES[: c.n_blocks])
    initial = _random_configuration(names, rng)
    while True:
        goal = _random_configuration(names, rng)
        if goal != initial or c.n_blocks == 1:
            break
    prompt = (
        "Task: Blocksworld\n\n"
        f"You have {c.n_blocks} blocks: {', '.join(names)}. A robot hand can perform four "
        "actions, one block at a time:\n"
        "- pick up <X>: pick up block X from the table (X must be clear and the hand empty).\n"
        "- unstack <X> from <Y>: pick up block X from on top of block Y (X must be clear "
        "and the hand empty).\n"
        "- put down <X>: put the held block X down on the table.\n"
        "- stack <X> on <Y>: put the held block X on top of block Y (Y must be clear).\n"
        "A block is clear when no block is on top of it and it is not being held.\n\n"
        f"Initial state: {_describe_configuration(initial)}, the hand is empty.\n"
        f"Goal state: {_describe_configuration(goal)}.\n\n"
        "Output a plan that reaches the goal state, one action per line, using exactly "
        "the four action forms above."
    )
    return prompt, {"initial": initial, "goal": goal}


_BUILDERS = {
    TaskKind.NUMBER_MULTIPLY: _build_multiply,
    TaskKind.GAME24: _build_game24,
    TaskKind.LETTERS: _build_letters,
    TaskKind.PATH_PLAN: _build_pathplan,
    TaskKind.BOX_LIFT: _build_boxlift,
    TaskKind.BOX_NET: _build_boxnet,
    TaskKind.BLOCKSWORLD: _build_blocksworld,
}


def parse_complexity(kind: TaskKind, spec: Optional[str]) -> Complexity:
    """Parse a CLI-style complexity label such as "3_4", "n4", or "5x5_3"."""
    defaults = {
        TaskKind.NUMBER_MULTIPLY: MultiplyComplexity(3, 3),
        TaskKind.GAME24: Game24Complexity(4),
        TaskKind.LETTERS: LettersComplexity(10),
        TaskKind.BOX_LIFT: BoxLiftComplexity(8, 4),
        TaskKind.BOX_NET: BoxNetComplexity(2, 3, 3),
        TaskKind.BLOCKSWORLD: BlocksworldComplexity(4),
        TaskKind.PATH_PLAN: PathPlanComplexity(5, 5),
    }
    if kind not in defaults:
        raise UnsupportedKind(f"{kind.value} has no complexity parameters")
    if spec is None or spec == "":
        return defaults[kind]
    try:
        if kind == TaskKind.NUMBER_MULTIPLY:
            d1, d2 = spec.split("_")
            return MultiplyComplexity(int(d1), int(d2))
        if kind == TaskKind.GAME24:
            return Game24Complexity(int(spec.lstrip("n")))
        if kind == TaskKind.LETTERS:
            return LettersComplexity(int(spec.replace("len", "")))
        if kind == TaskKind.BOX_LIFT:
            n_boxes, n_lifters = spec.split("_")
            return BoxLiftComplexity(int(n_boxes), int(n_lifters))
        if kind == TaskKind.BOX_NET:
            grid, n_boxes = spec.split("_")
            rows, cols = grid.split("x")
            return BoxNetComplexity(int(rows), int(cols), int(n_boxes))
        if kind == TaskKind.BLOCKSWORLD:
            return BlocksworldComplexity(int(spec.lstrip("b")))
        grid_side, n_obstacles = spec.split("_")
        return PathPlanComplexity(int(grid_side), int(n_obstacles))
    except (ValueError, TypeError) as exc:
        raise InvalidComplexity(f"bad complexity spec {spec!r} for {kind.value}") from exc
