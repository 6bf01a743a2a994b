"""Code-block extraction, response modality classification, and isolated
execution of candidate programs under the 30-second default time limit.

Execution spawns either the guest interpreter directly or, when a shim
command is configured, the external guest-runner shim that reports a single
JSON object on stdout.
"""

from __future__ import annotations

import json
import os
import signal
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

DEFAULT_TIMEOUT_S = 30.0
DEFAULT_OUTPUT_CAP = 64 * 1024
DEFAULT_MEMORY_CAP = 512 * 1024 * 1024
# Hard kill this long after the timeout so streams can flush.
GRACE_S = 3.0

# Fence tags treated as runnable candidate code. Untagged fences count:
# models frequently omit the tag.
EXECUTABLE_TAGS = frozenset({"", "python", "python3", "py"})


class GuestUnavailable(RuntimeError):
    """The guest interpreter or shim could not be spawned (infrastructure
    failure, distinct from a failing candidate)."""


class Modality(str, Enum):
    CODE = "code"
    TEXT = "text"


@dataclass(frozen=True)
class CodeBlock:
    language_tag: str
    body: str
    index: int


@dataclass(frozen=True)
class ExecutionResult:
    stdout: str
    stderr: str
    exit_status: int
    duration_ms: int
    timed_out: bool

    def to_dict(self) -> dict:
        return {
            "stdout": self.stdout,
            "stderr": self.stderr,
            "exit_status": self.exit_status,
            "duration_ms": self.duration_ms,
            "timed_out": self.timed_out,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExecutionResult":
        return cls(
            stdout=d["stdout"],
            stderr=d["stderr"],
            exit_status=int(d["exit_status"]),
            duration_ms=int(d["duration_ms"]),
            timed_out=bool(d["timed_out"]),
        )


@dataclass(frozen=True)
class SandboxLimits:
    timeout_s: float = DEFAULT_TIMEOUT_S
    output_cap: int = DEFAULT_OUTPUT_CAP
    memory_cap: int = DEFAULT_MEMORY_CAP


_FENCE = "```"


def extract_code_blocks(response: str) -> list[CodeBlock]:
    """All triple-backtick fenced regions, in order. The language tag is the
    token following the opening fence; an unterminated final fence runs to
    the end of the text."""
    blocks: list[CodeBlock] = []
    tag: Optional[str] = None
    body_lines: list[str] = []
    for line in response.splitlines():
        stripped = line.strip()
        if stripped.startswith(_FENCE):
            if tag is None:
                rest = stripped[len(_FENCE):].strip()
                tag = rest.split()[0] if rest else ""
                body_lines = []
            else:
                blocks.append(CodeBlock(tag, "\n".join(body_lines), len(blocks)))
                tag = None
        elif tag is not None:
            body_lines.append(line)
    if tag is not None:
        blocks.append(CodeBlock(tag, "\n".join(body_lines), len(blocks)))
    return blocks


def strip_code_blocks(response: str) -> str:
    """The response text with all fenced regions removed (fences included)."""
    kept: list[str] = []
    inside = False
    for line in response.splitlines():
        if line.strip().startswith(_FENCE):
            inside = not inside
            continue
        if not inside:
            kept.append(line)
    return "\n".join(kept)


def is_executable(block: CodeBlock, executable_tags: frozenset = EXECUTABLE_TAGS) -> bool:
    return block.language_tag.lower() in executable_tags


def first_executable_block(
    response: str, executable_tags: frozenset = EXECUTABLE_TAGS
) -> Optional[CodeBlock]:
    """The first runnable block; later blocks are recorded but never run
    (the AutoGen prompt mandates a single code block per response)."""
    for block in extract_code_blocks(response):
        if is_executable(block, executable_tags):
            return block
    return None


def classify_modality(
    response: str, executable_tags: frozenset = EXECUTABLE_TAGS
) -> Modality:
    block = first_executable_block(response, executable_tags)
    return Modality.CODE if block is not None else Modality.TEXT


def _cap_decode(raw: bytes, cap: int, workdir: str) -> str:
    # The throwaway working directory appears in tracebacks; rewrite it so
    # captured streams are stable across runs (replay hashes depend on them).
    return raw[:cap].decode("utf-8", errors="replace").replace(workdir, "<workdir>")


def _make_preexec(memory_cap: int):
    if os.name != "posix":  # pragma: no cover - POSIX-only guard
        return None

    def apply_limits():
        try:
            import resource

            resource.setrlimit(resource.RLIMIT_AS, (memory_cap, memory_cap))
        except Exception:
            pass

    return apply_limits


def _run_direct(body: str, limits: SandboxLimits, interpreter: str) -> ExecutionResult:
    with tempfile.TemporaryDirectory(prefix="steerbench-exec-") as workdir:
        source = Path(workdir) / "candidate.py"
        source.write_text(body, encoding="utf-8")
        start = time.monotonic()
        try:
            proc = subprocess.Popen(
                [interpreter, str(source)],
                cwd=workdir,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                start_new_session=True,
                preexec_fn=_make_preexec(limits.memory_cap),
            )
        except OSError as exc:
            raise GuestUnavailable(f"cannot spawn {interpreter}: {exc}") from exc
        timed_out = False
        try:
            out, err = proc.communicate(timeout=limits.timeout_s)
        except subprocess.TimeoutExpired:
            timed_out = True
            _kill_tree(proc, signal.SIGTERM)
            try:
                out, err = proc.communicate(timeout=GRACE_S)
            except subprocess.TimeoutExpired:
                _kill_tree(proc, signal.SIGKILL)
                out, err = proc.communicate()
        duration_ms = int((time.monotonic() - start) * 1000)
        return ExecutionResult(
            stdout=_cap_decode(out, limits.output_cap, workdir),
            stderr=_cap_decode(err, limits.output_cap, workdir),
            exit_status=proc.returncode,
            duration_ms=duration_ms,
            timed_out=timed_out,
        )


def _kill_tree(proc: subprocess.Popen, sig: int) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), sig)
    except (ProcessLookupError, PermissionError, OSError):
        try:
            proc.kill()
        except OSError:
            pass


def _run_via_shim(
    body: str, limits: SandboxLimits, shim_cmd: Sequence[str]
) -> ExecutionResult:
    with tempfile.TemporaryDirectory(prefix="steerbench-exec-") as workdir:
        source = Path(workdir) / "candidate.py"
        source.write_text(body, encoding="utf-8")
        argv = [
            *shim_cmd,
            str(source),
            str(limits.timeout_s),
            str(limits.output_cap),
            str(limits.memory_cap),
        ]
        try:
            proc = subprocess.run(
                argv,
                cwd=workdir,
                capture_output=True,
                timeout=limits.timeout_s + GRACE_S + 10,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise GuestUnavailable(f"shim failed: {exc}") from exc
        try:
            report = json.loads(proc.stdout.decode("utf-8", errors="replace"))
            return ExecutionResult(
                stdout=str(report["stdout"]).replace(workdir, "<workdir>"),
                stderr=str(report["stderr"]).replace(workdir, "<workdir>"),
                exit_status=int(report["exit_code"]),
                duration_ms=int(report["duration_ms"]),
                timed_out=bool(report["timed_out"]),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise GuestUnavailable(
                f"shim produced no valid report (exit {proc.returncode})"
            ) from exc


def execute(
    block: CodeBlock,
    limits: SandboxLimits = SandboxLimits(),
    *,
    interpreter: Optional[str] = None,
    shim_cmd: Optional[Sequence[str]] = None,
) -> ExecutionResult:
    """Run one candidate block in a fresh working directory, killing the
    process tree at the timeout and capping captured streams."""
    if shim_cmd:
        return _run_via_shim(block.body, limits, shim_cmd)
    return _run_direct(block.body, limits, interpreter or sys.executable)


@dataclass
class Sandbox:
    """Execution service with fixed limits; safe for concurrent use (each
    call owns its process and working directory)."""

    limits: SandboxLimits = field(default_factory=SandboxLimits)
    interpreter: Optional[str] = None
    shim_cmd: Optional[Sequence[str]] = None
    executable_tags: frozenset = EXECUTABLE_TAGS
    # Replace measured wall time with a fixed value (limit when timed out,
    # zero otherwise). Replay runs use this so records and cost tables are
    # byte-stable.
    normalize_timing: bool = False

    def execute(self, block: CodeBlock) -> ExecutionResult:
        result = execute(
            block, self.limits, interpreter=self.interpreter, shim_cmd=self.shim_cmd
        )
        if self.normalize_timing:
            fixed = int(self.limits.timeout_s * 1000) if result.timed_out else 0
            result = ExecutionResult(
                stdout=result.stdout,
                stderr=result.stderr,
                exit_status=result.exit_status,
                duration_ms=fixed,
                timed_out=result.timed_out,
            )
        return result

    def first_executable_block(self, response: str) -> Optional[CodeBlock]:
        return first_executable_block(response, self.executable_tags)

    def classify_modality(self, response: str) -> Modality:
        return classify_modality(response, self.executable_tags)
