from fractions import Fraction

import pytest

from steerbench import expr, tasks
from steerbench.tasks.types import TaskInstance, TaskKind


def _game24_instance(values):
    return TaskInstance(
        id="t", kind=TaskKind.GAME24, complexity=None, seed=0, prompt="",
        payload={"values": list(values)},
    )


def test_game24_two_values():
    witness = tasks.solve_game24_bruteforce([3, 8])
    assert witness is not None
    assert expr.eval_exact(expr.parse(witness)) == Fraction(24)


def test_game24_unsolvable_pair():
    assert tasks.solve_game24_bruteforce([1, 1]) is None


def test_game24_witness_passes_verifier():
    witness = tasks.solve_game24_bruteforce([4, 4, 10, 10])
    assert witness is not None
    verdict = tasks.verify_game24(_game24_instance([4, 4, 10, 10]), witness)
    assert verdict.success


def test_game24_size_guard():
    with pytest.raises(ValueError):
        tasks.solve_game24_bruteforce([24])
    with pytest.raises(ValueError):
        tasks.solve_game24_bruteforce(list(range(1, 10)))


def _blocks_instance(initial, goal):
    return TaskInstance(
        id="b", kind=TaskKind.BLOCKSWORLD, complexity=None, seed=0, prompt="",
        payload={"initial": initial, "goal": goal},
    )


def test_blocksworld_trivial_plan_empty():
    instance = _blocks_instance({"A": "table"}, {"A": "table"})
    assert tasks.solve_blocksworld_bfs(instance) == []


def test_blocksworld_swap_two_blocks_takes_four_actions():
    instance = _blocks_instance({"A": "B", "B": "table"}, {"B": "A", "A": "table"})
    plan = tasks.solve_blocksworld_bfs(instance)
    assert plan == ["unstack A from B", "put down A", "pick up B", "stack B on A"]


def test_blocksworld_state_space_guard():
    blocks = {name: "table" for name in "ABCDEFG"}
    goal = dict(blocks)
    goal["A"] = "B"
    with pytest.raises(tasks.StateSpaceTooLarge):
        tasks.solve_blocksworld_bfs(_blocks_instance(blocks, goal))


def test_boxlift_greedy_schedule_is_valid():
    weights = [55, 240, 196, 216, 247, 206, 263, 296, 288, 136]
    capacities = [124, 144, 40, 155, 130]
    steps = tasks.solve_boxlift_greedy(weights, capacities)
    lifted = []
    for step in steps:
        used = set()
        for weight, crew in step:
            assert not (set(crew) & used)
            used.update(crew)
            assert sum(capacities[i] for i in crew) >= weight
            lifted.append(weight)
    assert sorted(lifted) == sorted(weights)


def test_boxlift_greedy_rejects_unliftable_box():
    with pytest.raises(ValueError):
        tasks.solve_boxlift_greedy([1000], [100, 100])


def test_pathplan_bfs_shortest_and_blocked():
    path = tasks.solve_pathplan_bfs(3, (0, 0), (2, 2), [])
    assert path[0] == (0, 0) and path[-1] == (2, 2) and len(path) == 5
    wall = [(0, 1), (1, 1), (2, 1)]
    assert tasks.solve_pathplan_bfs(3, (0, 0), (0, 2), wall) is None
    assert tasks.solve_pathplan_bfs(3, (1, 1), (1, 1), []) == [(1, 1)]
