import pytest

from steerbench import metrics
from steerbench.gateway import ChatMessage, ChatRequest, ChatResponse
from steerbench.metrics import Decomposition, ScoreTable, ave_norm
from steerbench.sandbox import Modality
from steerbench.steering import Attempt, MethodId, RunRecord
from steerbench.tasks import FailureReason, Verdict


def make_record(
    task="game24",
    method=MethodId.ALL_CODE,
    turn=1,
    success=True,
    partial=None,
    modality=Modality.CODE,
    model="m1",
    complexity="n4",
    tokens=100,
    latency=1000,
    exec_ms=50,
    instance="i-0",
):
    verdict = (
        Verdict.passed()
        if success
        else Verdict.failed(FailureReason.WRONG_VALUE, partial_score=partial or 0.0)
    )
    request = ChatRequest(model_id=model, messages=(ChatMessage("user", "q"),))
    response = ChatResponse("a", tokens // 2, tokens - tokens // 2, latency)
    attempt = Attempt(
        instance_id=instance,
        method=method,
        turn=turn,
        transcript=[(request, response)],
        executed_blocks=[],
        modality=modality,
        final_answer="a",
        verdict=verdict,
        cost={"tokens": tokens, "latency_ms": latency, "exec_ms": exec_ms},
    )
    return RunRecord(
        attempt=attempt,
        model_id=model,
        config_hash="c",
        timestamp="t",
        task=task,
        complexity_label=complexity,
    )


# --- success rate ----------------------------------------------------------------


def test_success_rate_simple_fraction():
    records = [make_record(success=True)] * 3 + [make_record(success=False)]
    rates = metrics.success_rate(records)
    assert rates[("game24", "all_code", 1)] == pytest.approx(75.0)


def test_success_rate_uses_partial_scores():
    records = [
        make_record(task="box_lift", success=True),
        make_record(task="box_lift", success=False, partial=0.5),
    ]
    rates = metrics.success_rate(records)
    assert rates[("box_lift", "all_code", 1)] == pytest.approx(75.0)


def test_success_rate_empty_raises():
    with pytest.raises(metrics.EmptyGroup):
        metrics.success_rate([])


# --- ave_norm ----------------------------------------------------------------------


def test_ave_norm_single_method_is_100():
    table = ScoreTable(tasks=["a", "b"], methods=["m"], values=[[40.0], [90.0]])
    assert ave_norm(table) == {"m": 100.0}


def test_ave_norm_scaling_invariance():
    base = ScoreTable(
        tasks=["a", "b"], methods=["x", "y"], values=[[50.0, 100.0], [30.0, 60.0]]
    )
    # Scaling cannot push entries above 100, so scale a row down instead.
    scaled = ScoreTable(
        tasks=["a", "b"], methods=["x", "y"], values=[[50.0, 100.0], [15.0, 30.0]]
    )
    assert ave_norm(base) == ave_norm(scaled)


def test_ave_norm_degenerate_row_excluded_with_warning():
    table = ScoreTable(
        tasks=["a", "dead"], methods=["x", "y"], values=[[50.0, 100.0], [0.0, 0.0]]
    )
    with pytest.warns(metrics.DegenerateTaskWarning):
        norms = ave_norm(table)
    assert norms == {"x": 50.0, "y": 100.0}


def test_ave_norm_handles_na_entries():
    table = ScoreTable(
        tasks=["a", "b"], methods=["x", "y"], values=[[50.0, None], [30.0, 60.0]]
    )
    norms = ave_norm(table)
    assert norms["x"] == pytest.approx(75.0)
    assert norms["y"] == pytest.approx(100.0)


def test_ave_norm_best_method_everywhere_scores_100():
    table = ScoreTable(
        tasks=["a", "b", "c"],
        methods=["weak", "best"],
        values=[[10.0, 90.0], [20.0, 40.0], [5.0, 99.0]],
    )
    assert ave_norm(table)["best"] == 100.0


# --- decomposition --------------------------------------------------------------------


def test_decomposition_known_ratio_cell():
    records = [
        make_record(task="date_understanding", modality=Modality.CODE, success=True)
        for _ in range(64)
    ] + [
        make_record(task="date_understanding", modality=Modality.CODE, success=False)
        for _ in range(36)
    ]
    decomp = metrics.decompose_modality(records)
    assert decomp[("date_understanding", "all_code")].as_tuple() == (64.0, 36.0, 0.0, 0.0)


def test_decomposition_all_text_correct():
    records = [make_record(modality=Modality.TEXT, success=True) for _ in range(5)]
    decomp = metrics.decompose_modality(records)
    assert decomp[("game24", "all_code")].as_tuple() == (0.0, 0.0, 100.0, 0.0)


def test_decomposition_partitions_hand_counted_fixture():
    records = [
        make_record(modality=Modality.CODE, success=True),
        make_record(modality=Modality.CODE, success=False),
        make_record(modality=Modality.TEXT, success=True),
        make_record(modality=Modality.TEXT, success=False),
    ]
    decomp = metrics.decompose_modality(records)
    ratios = decomp[("game24", "all_code")].as_tuple()
    assert ratios == (25.0, 25.0, 25.0, 25.0)
    assert sum(ratios) == pytest.approx(100.0)


# --- code usage -----------------------------------------------------------------------


def test_code_usage_zero_for_all_text():
    records = [
        make_record(method=MethodId.ALL_TEXT, modality=Modality.TEXT) for _ in range(4)
    ]
    usage = metrics.code_usage_ratio(records, turn=1)
    assert usage[("m1", "all_text")] == 0.0


def test_code_usage_mixture():
    records = [make_record(modality=Modality.CODE)] * 3 + [
        make_record(modality=Modality.TEXT)
    ]
    usage = metrics.code_usage_ratio(records, turn=1)
    assert usage[("m1", "all_code")] == pytest.approx(75.0)


def test_code_usage_filters_turn():
    records = [
        make_record(modality=Modality.CODE, turn=1),
        make_record(modality=Modality.TEXT, turn=2),
    ]
    usage = metrics.code_usage_ratio(records, turn=1)
    assert usage[("m1", "all_code")] == 100.0


# --- complexity breakdown ---------------------------------------------------------------


def test_complexity_levels_ordered_numerically():
    records = []
    for label in ["10_1", "2_2", "1_1", "1_2"]:
        records.append(make_record(task="number_multiply", complexity=label))
    rows = metrics.complexity_breakdown(records)
    assert [r["level"] for r in rows] == ["1_1", "1_2", "2_2", "10_1"]


def test_complexity_success_and_usage_per_level():
    records = [
        make_record(task="number_multiply", complexity="1_1", success=True,
                    modality=Modality.TEXT),
        make_record(task="number_multiply", complexity="2_2", success=False,
                    modality=Modality.CODE),
        make_record(task="number_multiply", complexity="2_2", success=True,
                    modality=Modality.CODE),
    ]
    rows = metrics.complexity_breakdown(records)
    assert rows[0] == {"level": "1_1", "success": 100.0, "code_usage": 0.0, "n": 1}
    assert rows[1]["success"] == pytest.approx(50.0)
    assert rows[1]["code_usage"] == 100.0


def test_complexity_rejects_mixed_kinds():
    records = [make_record(task="game24"), make_record(task="letters")]
    with pytest.raises(ValueError):
        metrics.complexity_breakdown(records)


# --- cost table -------------------------------------------------------------------------


def test_cost_table_single_attempt():
    records = [make_record(tokens=500, latency=7000, exec_ms=600)]
    rows = metrics.cost_table(records)
    assert rows[0]["avg_tokens"] == 500
    assert rows[0]["avg_runtime_ms"] == 7600


def test_cost_table_averages_tokens():
    records = [make_record(tokens=400), make_record(tokens=800)]
    rows = metrics.cost_table(records)
    assert rows[0]["avg_tokens"] == 600


def test_cost_table_turn_labels():
    records = [
        make_record(method=MethodId.ALL_CODE, turn=1),
        make_record(method=MethodId.ALL_CODE, turn=2),
    ]
    rows = metrics.cost_table(records)
    assert [r["label"] for r in rows] == ["M3_T1", "M3_T2"]


# --- rendering --------------------------------------------------------------------------


def test_csv_and_text_rendering(tmp_path):
    records = [make_record(), make_record(success=False)]
    path = metrics.write_report("avenorm", records, tmp_path, text=True)
    assert path.read_text().splitlines()[0] == "method,ave_norm"
    text = (tmp_path / "avenorm.txt").read_text()
    assert "method" in text and "all_code" in text


def test_unknown_report_name_lists_valid():
    with pytest.raises(KeyError) as err:
        metrics.write_report("nope", [], "/tmp")
    assert "avenorm" in str(err.value)


def test_reports_are_bit_stable(tmp_path):
    records = [make_record(success=i % 3 != 0, instance=f"i-{i}") for i in range(9)]
    a = metrics.write_report("decomposition", records, tmp_path / "a").read_bytes()
    b = metrics.write_report("decomposition", list(reversed(records)), tmp_path / "b").read_bytes()
    assert a == b
