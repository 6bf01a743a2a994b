"""Deterministic scripted model and replay-store builder.

The ScriptedModel answers like a competent-but-imperfect assistant whose
behavior is a pure function of the request: text answers are right or wrong
depending on instance parity, some code responses raise, reflection turns
repair earlier errors, and the summarizer leans on the code branch. Running
the demo grid through it in record mode produces a replay store covering
all ten steering methods, a two-turn refinement trace, and the three-stage
code+text+summary trace, all fully offline.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Optional

from .cli import RunConfig, TaskSpec, cmd_run
from .gateway import ChatRequest, ChatResponse, Record, Replay
from .sandbox import SandboxLimits
from .steering import MethodId
from .tasks import (
    Game24Complexity,
    LettersComplexity,
    MultiplyComplexity,
    TaskInstance,
    TaskKind,
    generate,
    solve_game24_bruteforce,
    verify_game24,
)

_MULTIPLY_RE = re.compile(r"result of (\d+) multiplied by (\d+)")
_GAME24_RE = re.compile(r"Input: ([\d ]+)")
_LETTERS_RE = re.compile(r"How many (\w)'s in the word (\w+)")
_PREV_ANSWER_RE = re.compile(
    r"Here is your previous answer to the question:\n(.*?)\n\n", re.DOTALL
)
_STDOUT_SLICE_RE = re.compile(r"stdout:\n(.*?)\nstderr:", re.DOTALL)

_AUTOGEN_MARK = "You are a helpful AI assistant.\nSolve tasks using your coding"
_SUMMARIZER_MARK = "there are two different agents respond to the same problem"
_SELF_ESTIMATE_MARK = "Estimate your confidence level"
_REFLECTION_MARK = "Reflect on whether this answer is correct"
_CODE_HINT = "Use code to answer the following question"
_TEXT_HINT = "Use text to answer the following question"
_COT_MARK = "Chain-of-Thought"


class ScriptedModel:
    """Callable transport: ChatRequest -> ChatResponse, fully deterministic."""

    def __call__(self, request: ChatRequest) -> ChatResponse:
        text = self._respond(request)
        prompt_chars = len(request.system_prompt) + sum(
            len(m.content) for m in request.messages
        )
        return ChatResponse(
            text=text,
            prompt_tokens=prompt_chars // 4,
            completion_tokens=max(1, len(text) // 4),
            latency_ms=100 + len(text) % 400,
        )

    # -- dispatch -------------------------------------------------------------

    def _respond(self, request: ChatRequest) -> str:
        messages = request.messages
        last = messages[-1]
        first_user = next(m.content for m in messages if m.role == "user")
        if last.role == "tool":
            return self._after_execution(first_user, last.content)
        content = last.content
        if _REFLECTION_MARK in content:
            return self._reflection(first_user, content)
        if _SUMMARIZER_MARK in content:
            return self._summarize(content)
        if _SELF_ESTIMATE_MARK in content:
            return self._self_estimate(content)
        if request.system_prompt.startswith(_AUTOGEN_MARK):
            return self._text_answer(content) + "\n\nTERMINATE"
        if content.startswith(_AUTOGEN_MARK):
            return (
                "I will solve this with code.\n"
                + self._code_answer(content, force_good=True)
                + "\n\nTERMINATE"
            )
        if content.startswith(_CODE_HINT):
            if _COT_MARK in content:
                return (
                    "Step by step: the task is mechanical, so a short program is "
                    "the reliable route.\n" + self._code_answer(content, force_good=True)
                )
            return self._code_answer(content)
        if content.startswith(_TEXT_HINT):
            return self._text_answer(content)
        # Bare question (Only Question / emulated interpreter opening turn).
        numbers = _MULTIPLY_RE.search(content)
        if numbers and int(numbers.group(1)) % 10 == 0:
            return "This is large enough that I'd rather compute it.\n" + self._code_answer(
                content, force_good=True
            )
        return self._text_answer(content)

    # -- per-kind answers -----------------------------------------------------

    def _text_answer(self, content: str) -> str:
        m = _MULTIPLY_RE.search(content)
        if m:
            a, b = int(m.group(1)), int(m.group(2))
            value = a * b if a % 2 == 0 else a * b + 3
            return (
                f"Multiplying digit by digit: {a} times {b} comes out to {value}. "
                f"The final answer is {value}."
            )
        m = _GAME24_RE.search(content)
        if m:
            values = [int(v) for v in m.group(1).split()]
            if sum(values) % 2 == 0:
                witness = solve_game24_bruteforce(values)
                return f"Combining the numbers: {witness} = 24."
            return "The combination 1 + 23 = 24 works."
        m = _LETTERS_RE.search(content)
        if m:
            letter, word = m.group(1), m.group(2)
            positions = [i + 1 for i, ch in enumerate(word) if ch == letter]
            if len(word) % 2 == 1:
                positions = [p + 1 for p in positions]
            ps = ", ".join(str(p) for p in positions)
            return (
                f"Scanning {word}: the letter {letter} appears {len(positions)} "
                f"times, at positions {ps}."
            )
        return "I cannot identify the task."

    def _code_answer(self, content: str, force_good: bool = False) -> str:
        m = _MULTIPLY_RE.search(content)
        if m:
            a, b = int(m.group(1)), int(m.group(2))
            if not force_good and b % 3 == 0:
                return (
                    "```python\n"
                    f"result = {a} * {b}\n"
                    "print(resutl)\n"
                    "```"
                )
            return f"```python\nprint({a} * {b})\n```"
        m = _GAME24_RE.search(content)
        if m:
            values = [int(v) for v in m.group(1).split()]
            witness = solve_game24_bruteforce(values)
            return f'```python\nprint("{witness} = 24")\n```'
        m = _LETTERS_RE.search(content)
        if m:
            letter, word = m.group(1), m.group(2)
            return (
                "```python\n"
                f"word = {word!r}\n"
                f"positions = [i + 1 for i, ch in enumerate(word) if ch == {letter!r}]\n"
                'print(len(positions), ", ".join(str(p) for p in positions))\n'
                "```"
            )
        return "```python\nprint('unknown task')\n```"

    # -- multi-turn behaviors ---------------------------------------------------

    def _after_execution(self, first_user: str, tool_content: str) -> str:
        if "Traceback" in tool_content or "Error" in tool_content:
            return "The code raised an error; here is a fixed version.\n" + self._code_answer(
                first_user, force_good=True
            )
        stdout = self._stdout_slice(tool_content)
        if _MULTIPLY_RE.search(first_user):
            return "TERMINATE"
        if _GAME24_RE.search(first_user):
            line = stdout.strip().splitlines()[0] if stdout.strip() else ""
            return f"The execution confirms it: {line}. TERMINATE"
        if _LETTERS_RE.search(first_user):
            ints = re.findall(r"\d+", stdout)
            if ints:
                count, positions = ints[0], ", ".join(ints[1:])
                return (
                    f"The program found {count} occurrences, at positions "
                    f"{positions}. TERMINATE"
                )
        return "Done. TERMINATE"

    def _reflection(self, first_user: str, content: str) -> str:
        if "Execution result of your code" in content and (
            "Traceback" in content or "Error" in content
        ):
            return (
                "The previous code had a typo; corrected below.\n"
                + self._code_answer(first_user, force_good=True)
                + "\nTERMINATE"
            )
        prev_match = _PREV_ANSWER_RE.search(content)
        previous = prev_match.group(1) if prev_match else ""
        if self._is_correct(first_user, previous):
            return "TERMINATE"
        return "On reflection the earlier answer was off. " + self._text_correct(first_user)

    def _summarize(self, content: str) -> str:
        stdout = self._stdout_slice(content)
        if _MULTIPLY_RE.search(content):
            ints = re.findall(r"-?\d+", stdout)
            if ints:
                return (
                    "The code agent's execution is authoritative here. "
                    f"The final answer is {ints[-1]}."
                )
            return (
                "Neither agent produced a reliable result, so I recompute:\n"
                + self._code_answer(content, force_good=True)
            )
        if _GAME24_RE.search(content):
            line = stdout.strip().splitlines()[0] if stdout.strip() else ""
            if "= 24" in line:
                return f"The executed equation checks out. Final answer: {line}"
            values = [int(v) for v in _GAME24_RE.search(content).group(1).split()]
            witness = solve_game24_bruteforce(values)
            return f"Final answer: {witness} = 24."
        if _LETTERS_RE.search(content):
            ints = re.findall(r"\d+", stdout)
            if ints:
                return (
                    f"Both agents agree with the execution: {ints[0]} occurrences, "
                    f"at positions {', '.join(ints[1:])}."
                )
            return self._text_correct(content)
        return "No final answer."

    def _self_estimate(self, content: str) -> str:
        if _MULTIPLY_RE.search(content):
            return (
                "Coding score: 9 - exact arithmetic is trivial in code.\n"
                "Text score: 4 - long multiplication by hand is error prone.\n"
                "Coding wins, so:\n" + self._code_answer(content, force_good=True)
            )
        if _GAME24_RE.search(content):
            return (
                "Coding score: 5 - a search is possible but fiddly.\n"
                "Text score: 7 - the numbers look combinable directly.\n"
                + self._text_answer(content)
            )
        return (
            "Coding score: 6 - a scan over the word is easy.\n"
            "Text score: 6 - counting by eye is feasible.\n"
            "Both scores are close, so I start with textual reasoning.\n"
            + self._text_answer(content)
        )

    # -- helpers ---------------------------------------------------------------

    @staticmethod
    def _stdout_slice(content: str) -> str:
        m = _STDOUT_SLICE_RE.search(content)
        return m.group(1) if m else ""

    def _text_correct(self, content: str) -> str:
        m = _MULTIPLY_RE.search(content)
        if m:
            a, b = int(m.group(1)), int(m.group(2))
            return f"The final answer is {a * b}."
        m = _GAME24_RE.search(content)
        if m:
            values = [int(v) for v in m.group(1).split()]
            witness = solve_game24_bruteforce(values)
            return f"The equation {witness} = 24 works."
        m = _LETTERS_RE.search(content)
        if m:
            letter, word = m.group(1), m.group(2)
            positions = [i + 1 for i, ch in enumerate(word) if ch == letter]
            ps = ", ".join(str(p) for p in positions)
            return f"The letter {letter} appears {len(positions)} times, at positions {ps}."
        return "No answer."

    def _is_correct(self, first_user: str, answer: str) -> bool:
        m = _MULTIPLY_RE.search(first_user)
        if m:
            ints = re.findall(r"-?\d+", answer.replace(",", ""))
            return bool(ints) and int(ints[-1]) == int(m.group(1)) * int(m.group(2))
        m = _GAME24_RE.search(first_user)
        if m:
            values = [int(v) for v in m.group(1).split()]
            probe = TaskInstance(
                id="probe",
                kind=TaskKind.GAME24,
                complexity=None,
                seed=0,
                prompt="",
                payload={"values": values},
            )
            return verify_game24(probe, answer).success
        m = _LETTERS_RE.search(first_user)
        if m:
            letter, word = m.group(1), m.group(2)
            positions = [i + 1 for i, ch in enumerate(word) if ch == letter]
            ints = [int(t) for t in re.findall(r"\d+", answer)]
            want = [len(positions)] + positions
            return len(ints) >= len(want) and ints[-len(want):] == want
        return False


def _find_seed(kind: TaskKind, complexity, predicate, start: int = 0) -> int:
    for seed in range(start, start + 5000):
        if predicate(generate(kind, complexity, seed).payload):
            return seed
    raise RuntimeError("no seed satisfies the fixture predicate")


def demo_task_specs() -> list:
    """Four instances spanning three kinds, chosen so the scripted model hits
    its interesting branches (an erroring code turn, a clean code path, a
    wrong text branch, and a correct one)."""
    mc = MultiplyComplexity(3, 3)
    # Odd a: text branch wrong; b divisible by 3: first code attempt raises.
    messy = _find_seed(
        TaskKind.NUMBER_MULTIPLY,
        mc,
        lambda p: p["a"] % 2 == 1 and p["b"] % 3 == 0 and p["a"] % 10 != 0,
    )
    # a ends in 0: the bare-question path reaches for code; clean run.
    clean = _find_seed(
        TaskKind.NUMBER_MULTIPLY,
        mc,
        lambda p: p["a"] % 10 == 0 and p["b"] % 3 != 0,
    )
    g24 = Game24Complexity(4)
    odd_sum = _find_seed(TaskKind.GAME24, g24, lambda p: sum(p["values"]) % 2 == 1)
    letters = LettersComplexity(10)
    even_word = _find_seed(TaskKind.LETTERS, letters, lambda p: True)
    return [
        TaskSpec(kind=TaskKind.NUMBER_MULTIPLY, complexity=mc, trials=1, seed_offset=messy),
        TaskSpec(kind=TaskKind.NUMBER_MULTIPLY, complexity=mc, trials=1, seed_offset=clean),
        TaskSpec(kind=TaskKind.GAME24, complexity=g24, trials=1, seed_offset=odd_sum),
        TaskSpec(kind=TaskKind.LETTERS, complexity=letters, trials=1, seed_offset=even_word),
    ]


def demo_config(
    workdir: Path,
    store_path: Path,
    record: bool,
    parallelism: int = 1,
    output_name: str = "records",
) -> RunConfig:
    """Run configuration for the offline demo grid (all ten methods, two
    refinement turns, scaled-down sandbox timeout)."""
    mode = Record(store_path) if record else Replay(store_path)
    return RunConfig(
        model_id="scripted-demo",
        task_specs=demo_task_specs(),
        methods=list(MethodId),
        seed=0,
        turns=2,
        parallelism=parallelism,
        mode=mode,
        output_dir=Path(workdir) / output_name,
        limits=SandboxLimits(timeout_s=10.0),
        normalize_exec_timing=True,
    )


def build_demo_store(workdir: Path, parallelism: int = 1) -> tuple:
    """Record the demo grid against the scripted model.

    Returns (store_path, records_dir, summary). Replaying the same config
    against the produced store reproduces the records and metrics.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    store_path = workdir / "replay_store.jsonl"
    config = demo_config(workdir, store_path, record=True, parallelism=parallelism)
    summary = cmd_run(config, transport=ScriptedModel())
    return store_path, config.output_dir, summary


def main(argv: Optional[list] = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        description="Build the offline demo replay store and records."
    )
    parser.add_argument("--out", default="demo", help="output directory")
    args = parser.parse_args(argv)
    store_path, records_dir, summary = build_demo_store(Path(args.out))
    print(f"store: {store_path}")
    print(f"records: {records_dir}")
    counters = summary["counters"]
    print(f"attempts: {counters['attempts']} successes: {counters['successes']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
