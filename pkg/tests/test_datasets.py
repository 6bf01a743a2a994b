import json

import pytest

from steerbench import tasks


def _write(tmp_path, lines, name="data.jsonl"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path


def test_load_basic_records(tmp_path):
    path = _write(
        tmp_path,
        [
            json.dumps({"question": "Is it Monday?", "answer": "Yes"}),
            json.dumps({"question": "Truth value?", "answer": "No"}),
        ],
    )
    instances = tasks.load_dataset(path, tasks.TaskKind.WEB_OF_LIES)
    assert len(instances) == 2
    assert instances[0].prompt == "Is it Monday?"
    assert instances[0].payload["gold"] == "Yes"
    assert instances[0].id != instances[1].id


def test_options_appended_in_lettered_list(tmp_path):
    record = {
        "question": "What is the date one year ago?",
        "answer": "(E)",
        "options": ["09/20/2019", "10/01/2019", "10/24/2019", "09/12/1970", "09/12/2019"],
    }
    path = _write(tmp_path, [json.dumps(record)])
    instance = tasks.load_dataset(path, tasks.TaskKind.DATE_UNDERSTANDING)[0]
    assert instance.prompt.endswith(
        "Options:\n(A) 09/20/2019\n(B) 10/01/2019\n(C) 10/24/2019\n"
        "(D) 09/12/1970\n(E) 09/12/2019"
    )


def test_prelabelled_options_kept_verbatim(tmp_path):
    record = {"question": "Pick one.", "answer": "(A)", "options": ["(A) yes", "(B) no"]}
    path = _write(tmp_path, [json.dumps(record)])
    instance = tasks.load_dataset(path, tasks.TaskKind.LOGICAL_DEDUCTION)[0]
    assert "Options:\n(A) yes\n(B) no" in instance.prompt


def test_empty_file_yields_empty_list(tmp_path):
    path = _write(tmp_path, [])
    assert tasks.load_dataset(path, tasks.TaskKind.GSM_HARD) == []


def test_missing_answer_reports_line_number(tmp_path):
    path = _write(
        tmp_path,
        [json.dumps({"question": "q", "answer": "a"}), json.dumps({"question": "q2"})],
    )
    with pytest.raises(tasks.MalformedRecord) as err:
        tasks.load_dataset(path, tasks.TaskKind.GSM_HARD)
    assert err.value.line_no == 2


def test_invalid_json_reports_line_number(tmp_path):
    path = _write(tmp_path, ["{not json"])
    with pytest.raises(tasks.MalformedRecord) as err:
        tasks.load_dataset(path, tasks.TaskKind.NAVIGATE)
    assert err.value.line_no == 1


def test_missing_file(tmp_path):
    with pytest.raises(tasks.MissingFile):
        tasks.load_dataset(tmp_path / "nope.jsonl", tasks.TaskKind.GSM_HARD)


def test_procedural_kind_rejected(tmp_path):
    path = _write(tmp_path, [json.dumps({"question": "q", "answer": "a"})])
    with pytest.raises(tasks.UnsupportedKind):
        tasks.load_dataset(path, tasks.TaskKind.GAME24)


def test_dump_round_trips_fields(tmp_path):
    instance = tasks.generate(tasks.TaskKind.GAME24, tasks.Game24Complexity(4), 3)
    out = tmp_path / "dump.jsonl"
    tasks.dump_instances(out, [instance])
    record = json.loads(out.read_text())
    assert record["kind"] == "game24"
    assert record["seed"] == 3
    assert record["payload"]["values"] == instance.payload["values"]
    assert record["question"] == instance.prompt
