"""Aggregation of run records into the reporting artifacts: success rates,
Average Normalized Scores, the four-way modality decomposition, code-usage
ratios, per-complexity breakdowns, and score-cost tables.

All functions are pure over immutable records; recomputing from persisted
records is bit-stable. Reports are written as UTF-8 CSV, with an aligned
plain-text rendering available on request.
"""

from __future__ import annotations

import csv
import io
import warnings
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .sandbox import Modality
from .steering import MethodId, RunRecord


class EmptyGroup(ValueError):
    pass


class DegenerateTaskWarning(UserWarning):
    pass


@dataclass
class ScoreTable:
    """Per-task per-method scores in [0, 100]; None marks untested cells."""

    tasks: list
    methods: list
    values: list  # rows aligned with tasks; each row aligned with methods

    def row(self, task) -> list:
        return self.values[self.tasks.index(task)]


def ave_norm(table: ScoreTable) -> dict:
    """Average Normalized Score per method: each task row is divided by its
    best method score, then averaged over tasks, reported x100 to one
    decimal (round-half-even).

    All-zero rows cannot be normalized; they are excluded with a warning
    and the task count is decremented.
    """
    if not table.tasks or not table.methods:
        raise EmptyGroup("empty score table")
    sums = {m: 0.0 for m in table.methods}
    counts = {m: 0 for m in table.methods}
    for task, row in zip(table.tasks, table.values):
        present = [v for v in row if v is not None]
        if not present:
            continue
        best = max(present)
        if best <= 0:
            warnings.warn(
                f"task {task!r} scored zero for every method; excluded from "
                "normalization",
                DegenerateTaskWarning,
            )
            continue
        for method, value in zip(table.methods, row):
            if value is None:
                continue
            if not 0 <= value <= 100:
                raise ValueError(f"score out of range for {task!r}/{method!r}: {value}")
            sums[method] += value / best
            counts[method] += 1
    return {
        m: round(100.0 * sums[m] / counts[m], 1) if counts[m] else None
        for m in table.methods
    }


def _method_label(record: RunRecord) -> str:
    return MethodId(record.attempt.method).label


def success_rate(
    records: Iterable[RunRecord],
    by: Sequence[str] = ("task", "method", "turn"),
) -> dict:
    """Mean partial score x100 per grouped cell (the plain success fraction
    for binary tasks). Keys follow the ``by`` field order."""
    fields = {
        "task": lambda r: r.task,
        "method": _method_label,
        "turn": lambda r: r.attempt.turn,
        "model": lambda r: r.model_id,
        "complexity": lambda r: r.complexity_label,
    }
    getters = [fields[name] for name in by]
    cells = defaultdict(list)
    for record in records:
        cells[tuple(g(record) for g in getters)].append(
            record.attempt.verdict.partial_score
        )
    if not cells:
        raise EmptyGroup("no records to aggregate")
    return {key: 100.0 * sum(vals) / len(vals) for key, vals in sorted(cells.items())}


def score_table(records: Iterable[RunRecord], turn: int = 1) -> ScoreTable:
    """ScoreTable over (task, method) success rates at one generation turn."""
    rates = success_rate(
        [r for r in records if r.attempt.turn == turn], by=("task", "method")
    )
    tasks = sorted({task for task, _ in rates})
    methods = sorted(
        {method for _, method in rates},
        key=lambda label: MethodId.parse(label),
    )
    values = [[rates.get((task, method)) for method in methods] for task in tasks]
    return ScoreTable(tasks=tasks, methods=methods, values=values)


@dataclass(frozen=True)
class Decomposition:
    code_correct: float
    code_wrong: float
    text_correct: float
    text_wrong: float

    def as_tuple(self) -> tuple:
        return (self.code_correct, self.code_wrong, self.text_correct, self.text_wrong)


def decompose_modality(records: Iterable[RunRecord]) -> dict:
    """Per (task, method): percentage of attempts in each of the four
    exhaustive, disjoint bins (code/text x correct/wrong)."""
    bins = defaultdict(lambda: [0, 0, 0, 0])
    totals = defaultdict(int)
    for record in records:
        key = (record.task, _method_label(record))
        is_code = record.attempt.modality == Modality.CODE
        is_right = record.attempt.verdict.success
        index = (0 if is_right else 1) if is_code else (2 if is_right else 3)
        bins[key][index] += 1
        totals[key] += 1
    return {
        key: Decomposition(*(100.0 * n / totals[key] for n in counts))
        for key, counts in sorted(bins.items())
    }


def code_usage_ratio(records: Iterable[RunRecord], turn: int = 1) -> dict:
    """Per (model, method): percentage of attempts at ``turn`` whose answer
    came through the code channel."""
    counts = defaultdict(lambda: [0, 0])
    for record in records:
        if record.attempt.turn != turn:
            continue
        key = (record.model_id, _method_label(record))
        counts[key][1] += 1
        if record.attempt.modality == Modality.CODE:
            counts[key][0] += 1
    return {
        key: 100.0 * used / total for key, (used, total) in sorted(counts.items())
    }


def _level_sort_key(label: str):
    parts = [p for chunk in label.split("_") for p in chunk.split("x")]
    key = []
    for part in parts:
        digits = "".join(ch for ch in part if ch.isdigit())
        key.append(int(digits) if digits else 0)
    return tuple(key)


def complexity_breakdown(records: Iterable[RunRecord]) -> list:
    """Per complexity level of a single procedural kind: success rate and
    code-usage rate, ordered by increasing complexity."""
    records = list(records)
    kinds = {r.task for r in records}
    if len(kinds) > 1:
        raise ValueError(f"records span multiple kinds: {sorted(kinds)}")
    levels = defaultdict(lambda: {"scores": [], "code": 0})
    for record in records:
        cell = levels[record.complexity_label or ""]
        cell["scores"].append(record.attempt.verdict.partial_score)
        if record.attempt.modality == Modality.CODE:
            cell["code"] += 1
    rows = []
    for label in sorted(levels, key=_level_sort_key):
        cell = levels[label]
        n = len(cell["scores"])
        rows.append(
            {
                "level": label,
                "success": 100.0 * sum(cell["scores"]) / n,
                "code_usage": 100.0 * cell["code"] / n,
                "n": n,
            }
        )
    return rows


def cost_table(records: Iterable[RunRecord]) -> list:
    """Per (method, turn): average tokens, average runtime (gateway latency
    plus execution time), and the Average Normalized Score at that turn.
    Rows are labelled M<method>_T<turn> for score-cost plots."""
    records = list(records)
    groups = defaultdict(list)
    for record in records:
        groups[(int(record.attempt.method), record.attempt.turn)].append(record)
    turn_norms = {}
    for turn in sorted({t for _, t in groups}):
        turn_records = [r for r in records if r.attempt.turn == turn]
        try:
            turn_norms[turn] = ave_norm(score_table(turn_records, turn=turn))
        except EmptyGroup:
            turn_norms[turn] = {}
    rows = []
    for (method, turn), group in sorted(groups.items()):
        label = MethodId(method).label
        tokens = [r.attempt.cost["tokens"] for r in group]
        runtimes = [
            r.attempt.cost["latency_ms"] + r.attempt.cost["exec_ms"] for r in group
        ]
        rows.append(
            {
                "label": f"M{method}_T{turn}",
                "method": label,
                "turn": turn,
                "ave_norm": turn_norms.get(turn, {}).get(label),
                "avg_tokens": sum(tokens) / len(tokens),
                "avg_runtime_ms": sum(runtimes) / len(runtimes),
            }
        )
    return rows


# --- report rendering --------------------------------------------------------


def _fmt(value, decimals: int = 2) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return f"{value:.{decimals}f}"
    return str(value)


def render_rows_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return out.getvalue()


def render_rows_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Aligned plain-text table."""
    rows = [list(map(str, row)) for row in rows]
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def scores_report(records: Iterable[RunRecord], turn: int = 1) -> tuple:
    table = score_table(records, turn=turn)
    header = ["task"] + list(table.methods)
    rows = [
        [task] + [_fmt(v) for v in row] for task, row in zip(table.tasks, table.values)
    ]
    return header, rows


def avenorm_report(records: Iterable[RunRecord], turn: int = 1) -> tuple:
    table = score_table(records, turn=turn)
    norms = ave_norm(table)
    header = ["method", "ave_norm"]
    rows = [[m, _fmt(norms[m], 1)] for m in table.methods]
    return header, rows


def decomposition_report(records: Iterable[RunRecord]) -> tuple:
    decomp = decompose_modality(records)
    header = ["task", "method", "code_correct", "code_wrong", "text_correct", "text_wrong"]
    rows = [
        [task, method] + [_fmt(v) for v in d.as_tuple()]
        for (task, method), d in decomp.items()
    ]
    return header, rows


def usage_report(records: Iterable[RunRecord], turn: int = 1) -> tuple:
    usage = code_usage_ratio(records, turn=turn)
    header = ["model", "method", "code_usage"]
    rows = [[model, method, _fmt(pct)] for (model, method), pct in usage.items()]
    return header, rows


def cost_report(records: Iterable[RunRecord]) -> tuple:
    rows = cost_table(records)
    header = ["label", "method", "turn", "ave_norm", "avg_tokens", "avg_runtime_ms"]
    return header, [
        [
            r["label"],
            r["method"],
            r["turn"],
            _fmt(r["ave_norm"], 1),
            _fmt(r["avg_tokens"], 1),
            _fmt(r["avg_runtime_ms"], 1),
        ]
        for r in rows
    ]


def complexity_report(records: Iterable[RunRecord]) -> tuple:
    rows = complexity_breakdown(records)
    header = ["level", "success", "code_usage", "n"]
    return header, [
        [r["level"], _fmt(r["success"]), _fmt(r["code_usage"]), r["n"]] for r in rows
    ]


REPORTS = {
    "scores": scores_report,
    "avenorm": avenorm_report,
    "decomposition": decomposition_report,
    "usage": usage_report,
    "cost": cost_report,
    "complexity": complexity_report,
}


def write_report(
    name: str,
    records: Iterable[RunRecord],
    out_dir: Union[str, Path],
    text: bool = False,
) -> Path:
    """Write one named report as CSV under ``out_dir``; optionally return the
    aligned text rendering alongside."""
    if name not in REPORTS:
        raise KeyError(f"unknown report {name!r}; valid: {', '.join(sorted(REPORTS))}")
    header, rows = REPORTS[name](list(records))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.csv"
    path.write_text(render_rows_csv(header, rows), encoding="utf-8")
    if text:
        (out_dir / f"{name}.txt").write_text(
            render_rows_text(header, rows), encoding="utf-8"
        )
    return path
