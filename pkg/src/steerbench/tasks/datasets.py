"""Line-delimited JSON dataset loading for the seven dataset-backed kinds."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from .types import DATASET_KINDS, TaskInstance, TaskKind, UnsupportedKind


class MissingFile(FileNotFoundError):
    pass


class MalformedRecord(ValueError):
    def __init__(self, path, line_no: int, detail: str):
        super().__init__(f"{path}:{line_no}: {detail}")
        self.line_no = line_no


def _format_options(options: list) -> str:
    lines = []
    for i, option in enumerate(options):
        text = str(option).strip()
        if text.startswith("("):
            lines.append(text)
        else:
            lines.append(f"({chr(65 + i)}) {text}")
    return "Options:\n" + "\n".join(lines)


def load_dataset(path: Union[str, Path], kind: TaskKind) -> list[TaskInstance]:
    """Load one TaskInstance per line from a {"question", "answer", "options"?}
    JSONL file. The question is kept verbatim; options, when present, are
    appended as an (A)/(B)/... list."""
    if kind not in DATASET_KINDS:
        raise UnsupportedKind(f"{kind.value} is procedurally generated, not loaded")
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    instances = []
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(path, line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise MalformedRecord(path, line_no, "record is not an object")
            if "question" not in record:
                raise MalformedRecord(path, line_no, 'missing "question"')
            if "answer" not in record:
                raise MalformedRecord(path, line_no, 'missing "answer"')
            prompt = str(record["question"])
            options = record.get("options")
            if options:
                if not isinstance(options, list):
                    raise MalformedRecord(path, line_no, '"options" is not a list')
                prompt = f"{prompt}\n{_format_options(options)}"
            instances.append(
                TaskInstance(
                    id=f"{kind.value}-{path.stem}-{line_no:05d}",
                    kind=kind,
                    complexity=None,
                    seed=0,
                    prompt=prompt,
                    payload={"gold": record["answer"], "options": options},
                )
            )
    return instances


def dump_instances(path: Union[str, Path], instances: list[TaskInstance]) -> None:
    """Write instances in the dataset format plus generation metadata."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for instance in instances:
            handle.write(instance.to_json() + "\n")
