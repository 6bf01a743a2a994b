import pytest

from steerbench import gateway as gw


def _request(text="hello", temperature=0.0):
    return gw.ChatRequest(
        model_id="test-model",
        system_prompt="",
        messages=(gw.ChatMessage("user", text),),
        temperature=temperature,
    )


def _response(text="world"):
    return gw.ChatResponse(
        text=text, prompt_tokens=10, completion_tokens=20, latency_ms=1234
    )


def test_messages_must_be_nonempty():
    with pytest.raises(ValueError):
        gw.ChatRequest(model_id="m", messages=())


def test_replay_returns_stored_response_exactly(tmp_path):
    store = gw.ReplayStore(tmp_path / "store.jsonl")
    request, response = _request(), _response()
    store.put(request, response)
    client = gw.Gateway(gw.Replay(tmp_path / "store.jsonl"))
    assert client.complete(request) == response


def test_replay_miss_raises(tmp_path):
    (tmp_path / "store.jsonl").write_text("")
    client = gw.Gateway(gw.Replay(tmp_path / "store.jsonl"))
    with pytest.raises(gw.ReplayMiss):
        client.complete(_request("never seen"))


def test_record_then_replay_round_trip(tmp_path):
    calls = []

    def transport(request):
        calls.append(request)
        return _response(f"echo: {request.messages[-1].content}")

    recorder = gw.Gateway(gw.Record(tmp_path / "s.jsonl"), transport=transport)
    first = recorder.complete(_request("ping"))
    assert len(calls) == 1
    replayer = gw.Gateway(gw.Replay(tmp_path / "s.jsonl"))
    assert replayer.complete(_request("ping")) == first


def test_record_dedup_skips_second_live_call(tmp_path):
    calls = []

    def transport(request):
        calls.append(request)
        return _response()

    recorder = gw.Gateway(gw.Record(tmp_path / "s.jsonl", dedup=True), transport=transport)
    recorder.complete(_request("same"))
    recorder.complete(_request("same"))
    assert len(calls) == 1


def test_hash_covers_temperature():
    assert gw.request_hash(_request(temperature=0.0)) != gw.request_hash(
        _request(temperature=0.7)
    )


def test_hash_insensitive_to_max_tokens():
    a = gw.ChatRequest(model_id="m", messages=(gw.ChatMessage("user", "x"),),
                       max_output_tokens=100)
    b = gw.ChatRequest(model_id="m", messages=(gw.ChatMessage("user", "x"),),
                       max_output_tokens=200)
    assert gw.request_hash(a) == gw.request_hash(b)


def test_accumulate_cost_empty():
    assert gw.accumulate_cost([]) == {"total_tokens": 0, "total_latency_ms": 0}


def test_accumulate_cost_sums_both_sides():
    responses = [
        gw.ChatResponse("a", 10, 20, 500),
        gw.ChatResponse("b", 5, 5, 700),
    ]
    assert gw.accumulate_cost(responses) == {
        "total_tokens": 40,
        "total_latency_ms": 1200,
    }


def test_single_response_latency_passthrough():
    out = gw.accumulate_cost([_response()])
    assert out["total_latency_ms"] == 1234


def test_store_survives_reload(tmp_path):
    path = tmp_path / "s.jsonl"
    gw.ReplayStore(path).put(_request(), _response())
    fresh = gw.ReplayStore(path)
    assert fresh.get(gw.request_hash(_request())) == _response()
