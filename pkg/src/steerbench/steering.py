"""The ten code/text steering methods and the multi-turn refinement loop.

Methods 1-6 are single-shot prompt variants, 7/8 emulate a code-interpreter
tool loop (plain and code-encouraged), 9 merges an All Text and an All Code
branch through a summarizer agent, and 10 asks the model to score its own
coding/text confidence before answering.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import IntEnum
from importlib import resources
from pathlib import Path
from typing import Any, Optional

from .gateway import ChatMessage, ChatRequest, ChatResponse, Gateway, accumulate_cost
from .sandbox import CodeBlock, ExecutionResult, Modality, Sandbox, strip_code_blocks
from .tasks import FailureReason, TaskInstance, Verdict, verify

log = logging.getLogger(__name__)

_TERMINATE_RE = re.compile(r"\bTERMINATE\b", re.IGNORECASE)

DEFAULT_MAX_TOOL_TURNS = 5
DEFAULT_MAX_REFINE_TURNS = 4


class MethodId(IntEnum):
    """Steering strategies, numbered as in the benchmark's method list."""

    ONLY_QUESTION = 1
    ALL_TEXT = 2
    ALL_CODE = 3
    ALL_CODE_COT = 4
    AUTOGEN_CONCAT = 5
    AUTOGEN_SYSTEM = 6
    CODE_INTERPRETER = 7
    CODE_INTERPRETER_PLUS = 8
    CODE_TEXT_SUM = 9
    SELF_ESTIMATE_SCORE = 10

    @property
    def label(self) -> str:
        return _METHOD_LABELS[self]

    @classmethod
    def parse(cls, value) -> "MethodId":
        if isinstance(value, cls):
            return value
        if isinstance(value, int) or (isinstance(value, str) and value.isdigit()):
            return cls(int(value))
        name = str(value).strip().upper().replace("-", "_").replace(" ", "_")
        return cls[name]


_METHOD_LABELS = {
    MethodId.ONLY_QUESTION: "only_question",
    MethodId.ALL_TEXT: "all_text",
    MethodId.ALL_CODE: "all_code",
    MethodId.ALL_CODE_COT: "all_code_cot",
    MethodId.AUTOGEN_CONCAT: "autogen_concat",
    MethodId.AUTOGEN_SYSTEM: "autogen_system",
    MethodId.CODE_INTERPRETER: "code_interpreter",
    MethodId.CODE_INTERPRETER_PLUS: "code_interpreter_plus",
    MethodId.CODE_TEXT_SUM: "code_text_sum",
    MethodId.SELF_ESTIMATE_SCORE: "self_estimate_score",
}

SINGLE_SHOT_METHODS = (
    MethodId.ONLY_QUESTION,
    MethodId.ALL_TEXT,
    MethodId.ALL_CODE,
    MethodId.ALL_CODE_COT,
    MethodId.AUTOGEN_CONCAT,
    MethodId.AUTOGEN_SYSTEM,
)


class AssetMissing(FileNotFoundError):
    pass


_ASSET_NAMES = (
    "code_hint",
    "text_hint",
    "cot_instruction",
    "autogen_system",
    "camel_system",
    "autogen_paraphrase",
    "summarizer",
    "self_estimate",
    "reflection",
)


@dataclass(frozen=True)
class PromptAssets:
    """Named prompt templates, loaded verbatim from text files. The harness
    never edits them beyond filling {{slot}} placeholders."""

    code_hint: str
    text_hint: str
    cot_instruction: str
    autogen_system: str
    camel_system: str
    autogen_paraphrase: str
    summarizer: str
    self_estimate: str
    reflection: str

    @classmethod
    def load(cls, directory: Optional[Path] = None) -> "PromptAssets":
        texts = {}
        for name in _ASSET_NAMES:
            if directory is not None:
                path = Path(directory) / f"{name}.txt"
                if not path.exists():
                    raise AssetMissing(str(path))
                texts[name] = path.read_text(encoding="utf-8").rstrip("\n")
            else:
                ref = resources.files("steerbench").joinpath(f"assets/prompts/{name}.txt")
                try:
                    texts[name] = ref.read_text(encoding="utf-8").rstrip("\n")
                except FileNotFoundError as exc:
                    raise AssetMissing(name) from exc
        return cls(**texts)


def fill(template: str, **slots: str) -> str:
    out = template
    for name, value in slots.items():
        out = out.replace("{{" + name + "}}", value)
    return out


@dataclass(frozen=True)
class ModelCapabilities:
    supports_system_prompt: bool = True
    # Hosted code interpreter is emulated for every model here; the flag is
    # kept so runs can record which models would have had the native tool.
    has_hosted_interpreter: bool = False


@dataclass
class SteeringDeps:
    """Shared services and model settings for one run."""

    gateway: Gateway
    sandbox: Sandbox
    assets: PromptAssets
    model_id: str
    capabilities: ModelCapabilities = field(default_factory=ModelCapabilities)
    temperature: float = 0.0
    max_output_tokens: int = 4096

    def request(self, system_prompt: str, messages: tuple) -> ChatRequest:
        return ChatRequest(
            model_id=self.model_id,
            system_prompt=system_prompt,
            messages=messages,
            temperature=self.temperature,
            max_output_tokens=self.max_output_tokens,
        )


@dataclass
class Attempt:
    instance_id: str
    method: MethodId
    turn: int
    transcript: list  # (ChatRequest, ChatResponse) pairs
    executed_blocks: list  # (CodeBlock, ExecutionResult) pairs
    modality: Modality
    final_answer: str
    verdict: Verdict
    cost: dict  # tokens, latency_ms, exec_ms
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "method": int(self.method),
            "turn": self.turn,
            "transcript": [
                {"request": req.to_dict(), "response": resp.to_dict()}
                for req, resp in self.transcript
            ],
            "executed_blocks": [
                {
                    "block": {
                        "language_tag": block.language_tag,
                        "body": block.body,
                        "index": block.index,
                    },
                    "result": result.to_dict(),
                }
                for block, result in self.executed_blocks
            ],
            "modality": self.modality.value,
            "final_answer": self.final_answer,
            "verdict": self.verdict.to_dict(),
            "cost": self.cost,
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Attempt":
        return cls(
            instance_id=d["instance_id"],
            method=MethodId(d["method"]),
            turn=d["turn"],
            transcript=[
                (
                    ChatRequest.from_dict(pair["request"]),
                    ChatResponse.from_dict(pair["response"]),
                )
                for pair in d["transcript"]
            ],
            executed_blocks=[
                (
                    CodeBlock(
                        pair["block"]["language_tag"],
                        pair["block"]["body"],
                        pair["block"]["index"],
                    ),
                    ExecutionResult.from_dict(pair["result"]),
                )
                for pair in d["executed_blocks"]
            ],
            modality=Modality(d["modality"]),
            final_answer=d["final_answer"],
            verdict=Verdict.from_dict(d["verdict"]),
            cost=d["cost"],
            extra=d.get("extra", {}),
        )


def contains_terminate(text: str) -> bool:
    """Case-insensitive whole-word TERMINATE, never matched inside code."""
    return bool(_TERMINATE_RE.search(strip_code_blocks(text)))


def _terminate_only(text: str) -> bool:
    """True when the code-stripped text carries nothing but the TERMINATE
    signal (a confirmation of the previous answer, not a new one)."""
    prose = strip_code_blocks(text)
    if not _TERMINATE_RE.search(prose):
        return False
    remainder = _TERMINATE_RE.sub("", prose)
    return not re.search(r"\w", remainder)


def _system_prompt_rerouted(method: MethodId, capabilities: ModelCapabilities) -> bool:
    return method == MethodId.AUTOGEN_SYSTEM and not capabilities.supports_system_prompt


def assemble_prompt(
    method: MethodId, instance: TaskInstance, deps: SteeringDeps
) -> ChatRequest:
    """First-turn request for a method. Iterating methods (7/8) still get
    their opening request here."""
    assets = deps.assets
    question = instance.prompt
    system = ""
    if method == MethodId.ONLY_QUESTION or method == MethodId.CODE_INTERPRETER:
        user = question
    elif method == MethodId.ALL_TEXT:
        user = f"{assets.text_hint}\n{question}"
    elif method in (MethodId.ALL_CODE, MethodId.CODE_INTERPRETER_PLUS):
        user = f"{assets.code_hint}\n{question}"
    elif method == MethodId.ALL_CODE_COT:
        user = f"{assets.code_hint}\n{assets.cot_instruction}\n{question}"
    elif method == MethodId.AUTOGEN_CONCAT:
        user = f"{assets.autogen_system}\n\n{question}"
    elif method == MethodId.AUTOGEN_SYSTEM:
        if _system_prompt_rerouted(method, deps.capabilities):
            log.warning(
                "model %s does not accept system prompts; routing the AutoGen "
                "prompt into the user turn",
                deps.model_id,
            )
            user = f"{assets.autogen_system}\n\n{question}"
        else:
            system = assets.autogen_system
            user = question
    elif method == MethodId.CODE_TEXT_SUM:
        user = f"{assets.text_hint}\n{question}"
    elif method == MethodId.SELF_ESTIMATE_SCORE:
        user = fill(assets.self_estimate, question=question)
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(method)
    return deps.request(system, (ChatMessage("user", user),))


def _exec_feedback(result: ExecutionResult, limit_s: float) -> str:
    parts = [f"stdout:\n{result.stdout}", f"stderr:\n{result.stderr}"]
    if result.timed_out:
        parts.append(f"execution timed out after {limit_s:g} seconds")
    else:
        parts.append(f"exit status: {result.exit_status}")
    return "\n".join(parts)


def _resolve_answer(
    deps: SteeringDeps, response_text: str
) -> tuple[Modality, str, Optional[tuple]]:
    """Apply the modality rule to one response: run the first executable
    block and answer with its stdout, else answer with the text."""
    block = deps.sandbox.first_executable_block(response_text)
    if block is None:
        return Modality.TEXT, response_text, None
    result = deps.sandbox.execute(block)
    return Modality.CODE, result.stdout, (block, result)


def _verdict_for(
    instance: TaskInstance, final_answer: str, executed: Optional[tuple]
) -> Verdict:
    # A timed-out execution is always a task failure, never a success path.
    if executed is not None and executed[1].timed_out:
        return Verdict.failed(FailureReason.TIMEOUT)
    return verify(instance, final_answer)


def _cost(transcript: list, executed_blocks: list) -> dict:
    totals = accumulate_cost([resp for _, resp in transcript])
    return {
        "tokens": totals["total_tokens"],
        "latency_ms": totals["total_latency_ms"],
        "exec_ms": sum(result.duration_ms for _, result in executed_blocks),
    }


def run_single_shot(
    method: MethodId, instance: TaskInstance, deps: SteeringDeps
) -> Attempt:
    """One completion; execute the first code block when present, and judge
    the resulting answer with the task verifier."""
    if method not in SINGLE_SHOT_METHODS:
        raise ValueError(f"{method!r} is not a single-shot method")
    request = assemble_prompt(method, instance, deps)
    response = deps.gateway.complete(request)
    modality, final_answer, executed = _resolve_answer(deps, response.text)
    executed_blocks = [executed] if executed else []
    attempt = Attempt(
        instance_id=instance.id,
        method=method,
        turn=1,
        transcript=[(request, response)],
        executed_blocks=executed_blocks,
        modality=modality,
        final_answer=final_answer,
        verdict=_verdict_for(instance, final_answer, executed),
        cost=_cost([(request, response)], executed_blocks),
    )
    if _system_prompt_rerouted(method, deps.capabilities):
        attempt.extra["warnings"] = ["system prompt rerouted into user turn"]
    return attempt


def run_emulated_interpreter(
    instance: TaskInstance,
    deps: SteeringDeps,
    max_tool_turns: int = DEFAULT_MAX_TOOL_TURNS,
    encourage_code: bool = False,
) -> Attempt:
    """Code-interpreter tool loop: execute emitted code, feed both streams
    back, and continue until the model answers without code, says TERMINATE,
    or the turn budget runs out."""
    method = (
        MethodId.CODE_INTERPRETER_PLUS if encourage_code else MethodId.CODE_INTERPRETER
    )
    question = instance.prompt
    first = f"{deps.assets.code_hint}\n{question}" if encourage_code else question
    messages: list[ChatMessage] = [ChatMessage("user", first)]
    transcript: list = []
    executed_blocks: list = []
    modality = Modality.TEXT
    final_answer = ""
    final_exec: Optional[tuple] = None
    for turn in range(max_tool_turns):
        request = deps.request("", tuple(messages))
        response = deps.gateway.complete(request)
        transcript.append((request, response))
        messages.append(ChatMessage("assistant", response.text))
        block = deps.sandbox.first_executable_block(response.text)
        if block is None:
            if _terminate_only(response.text) and executed_blocks:
                # A bare TERMINATE confirms the last execution result.
                modality = Modality.CODE
                final_exec = executed_blocks[-1]
                final_answer = final_exec[1].stdout
            else:
                modality, final_answer, final_exec = Modality.TEXT, response.text, None
            break
        result = deps.sandbox.execute(block)
        executed_blocks.append((block, result))
        if contains_terminate(response.text) or turn == max_tool_turns - 1:
            modality, final_answer = Modality.CODE, result.stdout
            final_exec = (block, result)
            break
        messages.append(
            ChatMessage(
                "tool",
                f"Execution result:\n{_exec_feedback(result, deps.sandbox.limits.timeout_s)}",
            )
        )
    return Attempt(
        instance_id=instance.id,
        method=method,
        turn=1,
        transcript=transcript,
        executed_blocks=executed_blocks,
        modality=modality,
        final_answer=final_answer,
        verdict=_verdict_for(instance, final_answer, final_exec),
        cost=_cost(transcript, executed_blocks),
        extra={"tool_turns": len(transcript)},
    )


def run_code_text_sum(instance: TaskInstance, deps: SteeringDeps) -> Attempt:
    """Three stages: an All Text branch, an All Code branch (executed), and
    a summarizer that sees both answers plus the execution results and may
    itself emit code."""
    assets = deps.assets
    question = instance.prompt

    text_request = deps.request(
        "", (ChatMessage("user", f"{assets.text_hint}\n{question}"),)
    )
    text_response = deps.gateway.complete(text_request)

    code_request = deps.request(
        "", (ChatMessage("user", f"{assets.code_hint}\n{question}"),)
    )
    code_response = deps.gateway.complete(code_request)
    executed_blocks: list = []
    code_block = deps.sandbox.first_executable_block(code_response.text)
    if code_block is not None:
        code_result = deps.sandbox.execute(code_block)
        executed_blocks.append((code_block, code_result))
        exec_text = _exec_feedback(code_result, deps.sandbox.limits.timeout_s)
    else:
        exec_text = "No code was produced."

    summarizer_request = deps.request(
        "",
        (
            ChatMessage(
                "user",
                fill(
                    assets.summarizer,
                    question=question,
                    text_answer=text_response.text,
                    code_answer=code_response.text,
                    exec_result=exec_text,
                ),
            ),
        ),
    )
    summarizer_response = deps.gateway.complete(summarizer_request)
    modality, final_answer, final_exec = _resolve_answer(deps, summarizer_response.text)
    if final_exec is not None:
        executed_blocks.append(final_exec)

    transcript = [
        (text_request, text_response),
        (code_request, code_response),
        (summarizer_request, summarizer_response),
    ]
    return Attempt(
        instance_id=instance.id,
        method=MethodId.CODE_TEXT_SUM,
        turn=1,
        transcript=transcript,
        executed_blocks=executed_blocks,
        modality=modality,
        final_answer=final_answer,
        verdict=_verdict_for(instance, final_answer, final_exec),
        cost=_cost(transcript, executed_blocks),
    )


_CODING_SCORE_RE = re.compile(r"coding\s*score[^\d]{0,24}(\d{1,2})", re.IGNORECASE)
_TEXT_SCORE_RE = re.compile(r"text\s*score[^\d]{0,24}(\d{1,2})", re.IGNORECASE)


def run_self_estimate(instance: TaskInstance, deps: SteeringDeps) -> Attempt:
    """One completion with the confidence-scoring template; the stated
    coding/text scores are recorded, and the answer is judged as usual."""
    request = assemble_prompt(MethodId.SELF_ESTIMATE_SCORE, instance, deps)
    response = deps.gateway.complete(request)
    prose = strip_code_blocks(response.text)
    coding = _CODING_SCORE_RE.search(prose)
    text = _TEXT_SCORE_RE.search(prose)
    modality, final_answer, executed = _resolve_answer(deps, response.text)
    executed_blocks = [executed] if executed else []
    return Attempt(
        instance_id=instance.id,
        method=MethodId.SELF_ESTIMATE_SCORE,
        turn=1,
        transcript=[(request, response)],
        executed_blocks=executed_blocks,
        modality=modality,
        final_answer=final_answer,
        verdict=_verdict_for(instance, final_answer, executed),
        cost=_cost([(request, response)], executed_blocks),
        extra={
            "coding_score": int(coding.group(1)) if coding else None,
            "text_score": int(text.group(1)) if text else None,
        },
    )


def refine_loop(
    first: Attempt,
    instance: TaskInstance,
    deps: SteeringDeps,
    max_turns: int = DEFAULT_MAX_REFINE_TURNS,
) -> list[Attempt]:
    """Generation/refinement turns after a single-shot attempt.

    Each turn feeds back the previous execution result (or the previous
    answer when no code was present) and is verified independently; the
    loop stops on TERMINATE, on two identical consecutive answers, or at
    max_turns. Returns attempts for turns 1..k.
    """
    if first.method not in SINGLE_SHOT_METHODS:
        raise ValueError("refinement applies to single-shot methods only")
    attempts = [first]
    base_request = first.transcript[0][0]
    messages = list(base_request.messages)
    messages.append(ChatMessage("assistant", first.transcript[0][1].text))
    prev_answer = first.final_answer
    prev_exec = first.executed_blocks[-1][1] if first.executed_blocks else None
    for turn in range(2, max_turns + 1):
        if prev_exec is not None:
            exec_text = (
                "Execution result of your code:\n"
                f"{_exec_feedback(prev_exec, deps.sandbox.limits.timeout_s)}"
            )
        else:
            exec_text = "No code was executed in the previous turn."
        reflection = fill(
            deps.assets.reflection, previous_answer=prev_answer, exec_result=exec_text
        )
        messages.append(ChatMessage("user", reflection))
        request = deps.request(base_request.system_prompt, tuple(messages))
        response = deps.gateway.complete(request)
        messages.append(ChatMessage("assistant", response.text))
        if _terminate_only(response.text):
            # Pure TERMINATE keeps the previous answer rather than replacing
            # it with the literal signal.
            modality, final_answer, executed = attempts[-1].modality, prev_answer, None
        else:
            modality, final_answer, executed = _resolve_answer(deps, response.text)
        transcript = attempts[-1].transcript + [(request, response)]
        executed_blocks = attempts[-1].executed_blocks + ([executed] if executed else [])
        attempts.append(
            Attempt(
                instance_id=instance.id,
                method=first.method,
                turn=turn,
                transcript=transcript,
                executed_blocks=executed_blocks,
                modality=modality,
                final_answer=final_answer,
                verdict=_verdict_for(instance, final_answer, executed),
                cost=_cost(transcript, executed_blocks),
            )
        )
        if contains_terminate(response.text):
            break
        if final_answer == prev_answer:
            break
        prev_answer = final_answer
        prev_exec = executed[1] if executed else None
    return attempts


def run_method(
    method: MethodId,
    instance: TaskInstance,
    deps: SteeringDeps,
    max_turns: int = 1,
    max_tool_turns: int = DEFAULT_MAX_TOOL_TURNS,
) -> list[Attempt]:
    """Run one method on one instance, returning one Attempt per turn.

    Refinement turns apply to the single-shot methods when max_turns > 1;
    the interpreter, summarizer, and self-estimate methods produce a single
    turn-1 attempt.
    """
    method = MethodId.parse(method)
    if method in SINGLE_SHOT_METHODS:
        first = run_single_shot(method, instance, deps)
        if max_turns > 1:
            return refine_loop(first, instance, deps, max_turns=max_turns)
        return [first]
    if method == MethodId.CODE_INTERPRETER:
        return [run_emulated_interpreter(instance, deps, max_tool_turns, False)]
    if method == MethodId.CODE_INTERPRETER_PLUS:
        return [run_emulated_interpreter(instance, deps, max_tool_turns, True)]
    if method == MethodId.CODE_TEXT_SUM:
        return [run_code_text_sum(instance, deps)]
    return [run_self_estimate(instance, deps)]


@dataclass
class RunRecord:
    """One persisted Attempt plus run metadata."""

    attempt: Attempt
    model_id: str
    config_hash: str
    timestamp: str
    task: str
    complexity_label: Optional[str] = None

    @property
    def key(self) -> tuple:
        return (
            self.attempt.instance_id,
            int(self.attempt.method),
            self.attempt.turn,
            self.config_hash,
        )

    def to_dict(self) -> dict:
        d = self.attempt.to_dict()
        d.update(
            {
                "model_id": self.model_id,
                "config_hash": self.config_hash,
                "timestamp": self.timestamp,
                "task": self.task,
                "complexity_label": self.complexity_label,
            }
        )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(
            attempt=Attempt.from_dict(d),
            model_id=d["model_id"],
            config_hash=d["config_hash"],
            timestamp=d["timestamp"],
            task=d["task"],
            complexity_label=d.get("complexity_label"),
        )
