"""Reference solvers: Game 24 brute force, Blocksworld BFS, BoxLift greedy
scheduling, and grid-path BFS. These back instance generation (solvability
filters) and serve as oracles in the test suite."""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .types import TaskInstance

GAME24_TARGET = Fraction(24)


class StateSpaceTooLarge(ValueError):
    pass


def solve_game24_bruteforce(values: Sequence[int]) -> Optional[str]:
    """Exhaustive exact-rational search for an expression evaluating to 24.

    Searches all ways of repeatedly combining two remaining values with
    + - * / (both operand orders). Returns a witness expression string, or
    None when the multiset cannot reach 24.
    """
    if not 2 <= len(values) <= 8:
        raise ValueError("solver accepts between 2 and 8 values")
    items = tuple((Fraction(v), str(v)) for v in values)
    seen: set = set()

    def search(pool) -> Optional[str]:
        if len(pool) == 1:
            value, text = pool[0]
            return text if value == GAME24_TARGET else None
        key = tuple(sorted(v for v, _ in pool))
        if key in seen:
            return None
        seen.add(key)
        for i in range(len(pool)):
            for j in range(i + 1, len(pool)):
                (a, ea), (b, eb) = pool[i], pool[j]
                rest = tuple(pool[k] for k in range(len(pool)) if k not in (i, j))
                combos = [
                    (a + b, f"({ea}+{eb})"),
                    (a * b, f"({ea}*{eb})"),
                    (a - b, f"({ea}-{eb})"),
                    (b - a, f"({eb}-{ea})"),
                ]
                if b != 0:
                    combos.append((a / b, f"({ea}/{eb})"))
                if a != 0:
                    combos.append((b / a, f"({eb}/{ea})"))
                for value, text in combos:
                    found = search(rest + ((value, text),))
                    if found is not None:
                        return found
        return None

    witness = search(items)
    if witness is None:
        return None
    # Strip the redundant outermost parentheses.
    if witness.startswith("(") and witness.endswith(")"):
        witness = witness[1:-1]
    return witness


# --- Blocksworld ------------------------------------------------------------
#
# A configuration maps every block to its support: "table" or another block.
# A state is (configuration, held block or None).


def _clear_blocks(on: dict, holding: Optional[str]) -> set:
    supports = set(on.values())
    return {b for b in on if b not in supports and b != holding}


def _blocks_successors(on: dict, holding: Optional[str]):
    """Yield (action string, next state) for every legal move."""
    clear = _clear_blocks(on, holding)
    if holding is None:
        for b in clear:
            below = on[b]
            rest = {k: v for k, v in on.items() if k != b}
            if below == "table":
                yield f"pick up {b}", (rest, b)
            else:
                yield f"unstack {b} from {below}", (rest, b)
    else:
        held = holding
        placed = dict(on)
        placed[held] = "table"
        yield f"put down {held}", (placed, None)
        for b in clear:
            stacked = dict(on)
            stacked[held] = b
            yield f"stack {held} on {b}", (stacked, None)


def _freeze(on: dict, holding: Optional[str]):
    return (tuple(sorted(on.items())), holding)


def solve_blocksworld_bfs(instance: TaskInstance) -> Optional[list[str]]:
    """Shortest plan from the instance's initial to goal configuration.

    Raises StateSpaceTooLarge above 6 blocks.
    """
    initial: dict = dict(instance.payload["initial"])
    goal: dict = dict(instance.payload["goal"])
    if len(initial) > 6:
        raise StateSpaceTooLarge("BFS oracle is guarded at 6 blocks")
    start = _freeze(initial, None)
    target = _freeze(goal, None)
    if start == target:
        return []
    frontier = deque([(initial, None)])
    parents: dict = {start: None}
    while frontier:
        on, holding = frontier.popleft()
        for action, (non, nholding) in _blocks_successors(on, holding):
            key = _freeze(non, nholding)
            if key in parents:
                continue
            parents[key] = (_freeze(on, holding), action)
            if key == target:
                plan = [action]
                back = _freeze(on, holding)
                while parents[back] is not None:
                    prev, act = parents[back]
                    plan.append(act)
                    back = prev
                plan.reverse()
                return plan
            frontier.append((non, nholding))
    return None


# --- BoxLift ----------------------------------------------------------------


def solve_boxlift_greedy(
    weights: Sequence[int], capacities: Sequence[int]
) -> list[list[tuple[int, list[int]]]]:
    """Largest-box-first reference schedule.

    Per step, boxes are taken heaviest first and assigned the largest still
    free lifters until their combined capacity covers the weight. Every box
    must be liftable by the full crew, otherwise scheduling cannot finish.
    """
    if any(w > sum(capacities) for w in weights):
        raise ValueError("a box exceeds the combined lifter capacity")
    remaining = sorted(weights, reverse=True)
    order = sorted(range(len(capacities)), key=lambda i: capacities[i], reverse=True)
    steps: list[list[tuple[int, list[int]]]] = []
    while remaining:
        free = list(order)
        step: list[tuple[int, list[int]]] = []
        still: list[int] = []
        for w in remaining:
            crew: list[int] = []
            total = 0
            for idx in free:
                if total >= w:
                    break
                crew.append(idx)
                total += capacities[idx]
            if total >= w:
                for idx in crew:
                    free.remove(idx)
                step.append((w, crew))
            else:
                still.append(w)
        remaining = still
        steps.append(step)
    return steps


def format_boxlift_plan(steps: Iterable[list[tuple[int, list[int]]]]) -> str:
    lines = []
    for k, step in enumerate(steps, start=1):
        inner = ", ".join(f"({w}, {idxs})" for w, idxs in step)
        lines.append(f"Step {k}: [{inner}]")
    return "\n".join(lines)


# --- Path planning ----------------------------------------------------------


def solve_pathplan_bfs(
    grid_side: int,
    start: tuple[int, int],
    goal: tuple[int, int],
    obstacles: Iterable[tuple[int, int]],
) -> Optional[list[tuple[int, int]]]:
    """Shortest 4-connected path avoiding obstacles, or None if unreachable."""
    blocked = set(map(tuple, obstacles))
    if start in blocked or goal in blocked:
        return None
    if start == goal:
        return [start]
    frontier = deque([start])
    parents: dict = {tuple(start): None}
    while frontier:
        r, c = frontier.popleft()
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if not (0 <= nr < grid_side and 0 <= nc < grid_side):
                continue
            nxt = (nr, nc)
            if nxt in blocked or nxt in parents:
                continue
            parents[nxt] = (r, c)
            if nxt == tuple(goal):
                path = [nxt]
                while parents[path[-1]] is not None:
                    path.append(parents[path[-1]])
                path.reverse()
                return path
            frontier.append(nxt)
    return None
