import pytest

from conftest import make_deps, scripted_response

from steerbench import steering, tasks
from steerbench.sandbox import Modality
from steerbench.steering import MethodId, PromptAssets
from steerbench.tasks import FailureReason, TaskKind


MULT = tasks.generate(TaskKind.NUMBER_MULTIPLY, tasks.MultiplyComplexity(3, 3), 7)
PRODUCT = MULT.payload["a"] * MULT.payload["b"]


def _code_response(body):
    return scripted_response(f"Here is the program:\n```python\n{body}\n```")


# --- assets and prompt assembly ------------------------------------------------


def test_assets_load_verbatim_markers():
    assets = PromptAssets.load()
    assert assets.code_hint == "Use code to answer the following question"
    assert assets.text_hint == "Use text to answer the following question"
    assert assets.autogen_system.startswith("You are a helpful AI assistant.")
    assert 'Reply "TERMINATE" in the end when everything is done.' in assets.autogen_system
    assert "Estimate your confidence level" in assets.self_estimate
    assert "Coding score (0-10)" in assets.self_estimate
    assert "two different agents" in assets.summarizer
    assert "{{question}}" in assets.summarizer
    assert "physical embodiment" in assets.camel_system


def test_assets_missing_directory(tmp_path):
    with pytest.raises(steering.AssetMissing):
        PromptAssets.load(tmp_path)


def _assembled(method, capabilities=None):
    deps = make_deps(lambda req: scripted_response("unused"), capabilities=capabilities)
    return steering.assemble_prompt(method, MULT, deps)


def test_assemble_only_question_empty_system():
    request = _assembled(MethodId.ONLY_QUESTION)
    assert request.system_prompt == ""
    assert request.messages[0].content == MULT.prompt


def test_assemble_all_code_prefix():
    request = _assembled(MethodId.ALL_CODE)
    assert request.messages[0].content.startswith(
        "Use code to answer the following question"
    )
    assert MULT.prompt in request.messages[0].content


def test_assemble_all_text_prefix():
    request = _assembled(MethodId.ALL_TEXT)
    assert request.messages[0].content.startswith(
        "Use text to answer the following question"
    )


def test_assemble_cot_mentions_chain_of_thought():
    request = _assembled(MethodId.ALL_CODE_COT)
    assert "Chain-of-Thought" in request.messages[0].content


def test_assemble_autogen_system_goes_to_system_slot():
    request = _assembled(MethodId.AUTOGEN_SYSTEM)
    assert request.system_prompt.startswith("You are a helpful AI assistant")
    assert request.messages[0].content == MULT.prompt


def test_assemble_autogen_concat_prepends_to_user():
    request = _assembled(MethodId.AUTOGEN_CONCAT)
    assert request.system_prompt == ""
    assert request.messages[0].content.startswith("You are a helpful AI assistant")
    assert request.messages[0].content.endswith(MULT.prompt)


def test_autogen_system_rerouted_without_system_support():
    caps = steering.ModelCapabilities(supports_system_prompt=False)
    request = _assembled(MethodId.AUTOGEN_SYSTEM, capabilities=caps)
    assert request.system_prompt == ""
    assert request.messages[0].content.startswith("You are a helpful AI assistant")


# --- TERMINATE detection --------------------------------------------------------


def test_terminate_whole_word_case_insensitive():
    assert steering.contains_terminate("all done. terminate")
    assert steering.contains_terminate("TERMINATE")
    assert not steering.contains_terminate("the terminator rises")


def test_terminate_inside_code_not_counted():
    text = "```python\nprint('TERMINATE')\n```\nstill working"
    assert not steering.contains_terminate(text)


# --- single shot ----------------------------------------------------------------


def test_single_shot_code_path():
    deps = make_deps(lambda req: _code_response(f"print({MULT.payload['a']} * {MULT.payload['b']})"))
    attempt = steering.run_single_shot(MethodId.ALL_CODE, MULT, deps)
    assert attempt.modality == Modality.CODE
    assert attempt.final_answer.strip() == str(PRODUCT)
    assert attempt.verdict.success
    assert len(attempt.executed_blocks) == 1
    assert attempt.cost["tokens"] > 0


def test_single_shot_text_path():
    deps = make_deps(lambda req: scripted_response(f"The answer is {PRODUCT}."))
    attempt = steering.run_single_shot(MethodId.ALL_TEXT, MULT, deps)
    assert attempt.modality == Modality.TEXT
    assert attempt.verdict.success
    assert attempt.executed_blocks == []


def test_single_shot_wrong_text_fails():
    deps = make_deps(lambda req: scripted_response("The answer is 1."))
    attempt = steering.run_single_shot(MethodId.ONLY_QUESTION, MULT, deps)
    assert not attempt.verdict.success


def test_timed_out_code_is_task_failure():
    deps = make_deps(lambda req: _code_response("while True: pass"), timeout_s=1.0)
    attempt = steering.run_single_shot(MethodId.ALL_CODE, MULT, deps)
    assert not attempt.verdict.success
    assert attempt.verdict.failure_reason == FailureReason.TIMEOUT


def test_cost_matches_accumulation_over_transcript():
    deps = make_deps(lambda req: scripted_response("answer 1"))
    attempt = steering.run_single_shot(MethodId.ALL_TEXT, MULT, deps)
    response = attempt.transcript[0][1]
    assert attempt.cost["tokens"] == response.prompt_tokens + response.completion_tokens
    assert attempt.cost["latency_ms"] == response.latency_ms


# --- emulated interpreter --------------------------------------------------------


def test_interpreter_direct_text_ends_turn_one():
    deps = make_deps(lambda req: scripted_response(f"It equals {PRODUCT}."))
    attempt = steering.run_emulated_interpreter(MULT, deps)
    assert attempt.method == MethodId.CODE_INTERPRETER
    assert attempt.modality == Modality.TEXT
    assert len(attempt.transcript) == 1
    assert attempt.verdict.success


def test_interpreter_code_then_answer():
    def transport(request):
        if request.messages[-1].role == "tool":
            assert "stdout" in request.messages[-1].content
            return scripted_response(f"The result is {PRODUCT}. TERMINATE")
        return _code_response(f"print({MULT.payload['a']} * {MULT.payload['b']})")

    attempt = steering.run_emulated_interpreter(MULT, deps := make_deps(transport))
    assert len(attempt.transcript) == 2
    assert len(attempt.executed_blocks) == 1
    assert attempt.verdict.success
    assert attempt.modality == Modality.TEXT


def test_interpreter_bare_terminate_inherits_stdout():
    def transport(request):
        if request.messages[-1].role == "tool":
            return scripted_response("TERMINATE")
        return _code_response(f"print({MULT.payload['a']} * {MULT.payload['b']})")

    attempt = steering.run_emulated_interpreter(MULT, make_deps(transport))
    assert attempt.modality == Modality.CODE
    assert attempt.verdict.success


def test_interpreter_loop_cut_at_max_turns():
    calls = []

    def transport(request):
        calls.append(request)
        return _code_response(f"print({MULT.payload['a']} * {MULT.payload['b']})")

    attempt = steering.run_emulated_interpreter(MULT, make_deps(transport), max_tool_turns=3)
    assert len(calls) == 3
    assert attempt.modality == Modality.CODE
    assert attempt.verdict.success  # last stdout used


def test_interpreter_plus_prepends_code_hint():
    seen = []

    def transport(request):
        seen.append(request.messages[0].content)
        return scripted_response(f"answer {PRODUCT}")

    steering.run_emulated_interpreter(MULT, make_deps(transport), encourage_code=True)
    assert seen[0].startswith("Use code to answer the following question")


def test_interpreter_terminate_with_code_executes_and_uses_stdout():
    def transport(request):
        return scripted_response(
            f"```python\nprint({PRODUCT})\n```\nTERMINATE"
        )

    attempt = steering.run_emulated_interpreter(MULT, make_deps(transport))
    assert len(attempt.transcript) == 1
    assert attempt.modality == Modality.CODE
    assert attempt.verdict.success


# --- code + text + summarizer ------------------------------------------------------


def _sum_transport(summary_behavior):
    def transport(request):
        content = request.messages[0].content
        if "two different agents" in content:
            return summary_behavior(content)
        if content.startswith("Use text"):
            return scripted_response("My textual answer is 999999.")
        return _code_response(f"print({MULT.payload['a']} * {MULT.payload['b']})")

    return transport


def test_code_text_sum_picks_code_branch():
    def summarize(content):
        assert "My textual answer" in content
        assert "stdout" in content
        return scripted_response(f"The code result {PRODUCT} is correct.")

    attempt = steering.run_code_text_sum(MULT, make_deps(_sum_transport(summarize)))
    assert attempt.method == MethodId.CODE_TEXT_SUM
    assert len(attempt.transcript) == 3
    assert attempt.verdict.success
    assert attempt.modality == Modality.TEXT


def test_code_text_sum_cost_is_sum_of_stages():
    def summarize(content):
        return scripted_response("fine")

    attempt = steering.run_code_text_sum(MULT, make_deps(_sum_transport(summarize)))
    expected_tokens = sum(
        resp.prompt_tokens + resp.completion_tokens for _, resp in attempt.transcript
    )
    assert attempt.cost["tokens"] == expected_tokens


def test_code_text_sum_summarizer_may_emit_new_code():
    def summarize(content):
        return _code_response(f"print({PRODUCT})")

    attempt = steering.run_code_text_sum(MULT, make_deps(_sum_transport(summarize)))
    assert attempt.modality == Modality.CODE
    assert attempt.verdict.success
    assert len(attempt.executed_blocks) == 2


# --- self estimate ------------------------------------------------------------------


def test_self_estimate_scores_recorded():
    def transport(request):
        assert "Estimate your confidence level" in request.messages[0].content
        return scripted_response(
            f"Coding score: 9 because it's mechanical.\nText score: 4.\n"
            f"```python\nprint({PRODUCT})\n```"
        )

    attempt = steering.run_self_estimate(MULT, make_deps(transport))
    assert attempt.extra["coding_score"] == 9
    assert attempt.extra["text_score"] == 4
    assert attempt.modality == Modality.CODE
    assert attempt.verdict.success


def test_self_estimate_absent_scores_still_verified():
    deps = make_deps(lambda req: scripted_response(f"I think it is {PRODUCT}."))
    attempt = steering.run_self_estimate(MULT, deps)
    assert attempt.extra["coding_score"] is None
    assert attempt.extra["text_score"] is None
    assert attempt.verdict.success


# --- refinement loop -----------------------------------------------------------------


def test_refine_loop_fixes_broken_code():
    def transport(request):
        reflection = request.messages[-1].content
        if "Reflect on whether this answer is correct" in reflection:
            if "Error" in reflection:
                return _code_response(
                    f"print({MULT.payload['a']} * {MULT.payload['b']})"
                )
            return scripted_response("TERMINATE")
        return _code_response("print(undefined_variable)")

    deps = make_deps(transport)
    first = steering.run_single_shot(MethodId.ALL_CODE, MULT, deps)
    assert not first.verdict.success
    attempts = steering.refine_loop(first, MULT, deps, max_turns=3)
    assert [a.turn for a in attempts][:2] == [1, 2]
    assert attempts[1].verdict.success


def test_refine_loop_stops_on_terminate_and_keeps_answer():
    def transport(request):
        if "Reflect on whether" in request.messages[-1].content:
            return scripted_response("TERMINATE")
        return scripted_response(f"The answer is {PRODUCT}.")

    deps = make_deps(transport)
    first = steering.run_single_shot(MethodId.ALL_TEXT, MULT, deps)
    attempts = steering.refine_loop(first, MULT, deps, max_turns=4)
    assert len(attempts) == 2
    assert attempts[1].verdict.success
    assert attempts[1].final_answer == first.final_answer


def test_refine_loop_stops_on_identical_answers():
    def transport(request):
        if "Reflect on whether" in request.messages[-1].content:
            return scripted_response("Same as before: the answer is 7.")
        return scripted_response("Same as before: the answer is 7.")

    deps = make_deps(transport)
    first = steering.run_single_shot(MethodId.ONLY_QUESTION, MULT, deps)
    attempts = steering.refine_loop(first, MULT, deps, max_turns=4)
    assert len(attempts) == 2  # converged: turn 2 repeated turn 1's answer


def test_refine_loop_bounded_by_max_turns():
    counter = {"n": 0}

    def transport(request):
        counter["n"] += 1
        return scripted_response(f"attempt {counter['n']}: answer is {counter['n']}")

    deps = make_deps(transport)
    first = steering.run_single_shot(MethodId.ALL_TEXT, MULT, deps)
    attempts = steering.refine_loop(first, MULT, deps, max_turns=3)
    assert [a.turn for a in attempts] == [1, 2, 3]


def test_refine_loop_prefix_stability():
    def transport(request):
        if "Reflect on whether" in request.messages[-1].content:
            return scripted_response("revised: 42")
        return scripted_response("initial: 41")

    deps = make_deps(transport)
    first = steering.run_single_shot(MethodId.ALL_TEXT, MULT, deps)
    short = steering.refine_loop(first, MULT, deps, max_turns=2)
    longer = steering.refine_loop(first, MULT, deps, max_turns=4)
    assert short[0].to_dict() == longer[0].to_dict()
    assert short[1].final_answer == longer[1].final_answer


def test_refine_loop_rejects_iterating_methods():
    deps = make_deps(lambda req: scripted_response("x"))
    attempt = steering.run_self_estimate(MULT, deps)
    with pytest.raises(ValueError):
        steering.refine_loop(attempt, MULT, deps)


# --- dispatcher -----------------------------------------------------------------------


def test_run_method_returns_turns():
    def transport(request):
        if "Reflect on whether" in request.messages[-1].content:
            return scripted_response("TERMINATE")
        return scripted_response(f"answer {PRODUCT}")

    deps = make_deps(transport)
    attempts = steering.run_method(MethodId.ALL_TEXT, MULT, deps, max_turns=2)
    assert [a.turn for a in attempts] == [1, 2]
    single = steering.run_method(MethodId.SELF_ESTIMATE_SCORE, MULT, deps, max_turns=2)
    assert len(single) == 1


def test_attempt_round_trips_through_dict():
    deps = make_deps(lambda req: _code_response(f"print({PRODUCT})"))
    attempt = steering.run_single_shot(MethodId.ALL_CODE, MULT, deps)
    clone = steering.Attempt.from_dict(attempt.to_dict())
    assert clone.to_dict() == attempt.to_dict()
