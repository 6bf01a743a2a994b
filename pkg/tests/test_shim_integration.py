"""Primary sandbox driving the external shim through the guest-runner
protocol. Skipped when the shim has not been built (the primary suite never
requires it; the direct-spawn executor is the default)."""

from pathlib import Path

import pytest

from conftest import make_deps, scripted_response

from steerbench import steering, tasks
from steerbench.sandbox import CodeBlock, Sandbox, SandboxLimits, execute
from steerbench.steering import MethodId

SHIM_JS = Path(__file__).resolve().parent.parent / "shim" / "dist" / "shim.js"

pytestmark = pytest.mark.skipif(
    not SHIM_JS.exists(), reason="shim not built (cd shim && npm run build)"
)

SHIM_CMD = ["node", str(SHIM_JS)]


def test_shim_runs_trivial_candidate():
    result = execute(CodeBlock("python", "print(1+1)", 0), shim_cmd=SHIM_CMD)
    assert result.stdout == "2\n"
    assert result.exit_status == 0
    assert not result.timed_out


def test_shim_timeout_contract():
    result = execute(
        CodeBlock("python", "while True: pass", 0),
        SandboxLimits(timeout_s=2.0),
        shim_cmd=SHIM_CMD,
    )
    assert result.timed_out
    assert 2000 <= result.duration_ms <= 2500


def test_shim_output_cap():
    result = execute(
        CodeBlock("python", "print('x' * 1000000)", 0),
        SandboxLimits(output_cap=1024),
        shim_cmd=SHIM_CMD,
    )
    assert len(result.stdout.encode()) <= 1024


def test_attempt_through_shim_backed_sandbox():
    instance = tasks.generate(
        tasks.TaskKind.NUMBER_MULTIPLY, tasks.MultiplyComplexity(2, 2), 5
    )
    product = instance.payload["a"] * instance.payload["b"]
    deps = make_deps(
        lambda req: scripted_response(f"```python\nprint({product})\n```")
    )
    deps.sandbox = Sandbox(shim_cmd=SHIM_CMD)
    attempt = steering.run_single_shot(MethodId.ALL_CODE, instance, deps)
    assert attempt.verdict.success
    assert attempt.final_answer.strip() == str(product)
