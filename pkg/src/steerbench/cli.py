"""Command-line entry point: configure runs, schedule attempts with bounded
parallelism, persist run records as line-delimited JSON, and emit reports.

Exit codes: 0 all attempts succeeded, 1 task-level failures present,
2 infrastructure error (provider, replay store, sandbox, or config).
"""

from __future__ import annotations

import hashlib
import json
import sys
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import click

from . import gateway as gw
from . import metrics, tasks
from .sandbox import Sandbox, SandboxLimits
from .steering import (
    DEFAULT_MAX_TOOL_TURNS,
    MethodId,
    ModelCapabilities,
    PromptAssets,
    RunRecord,
    SteeringDeps,
    run_method,
)

RECORDS_FILENAME = "records.jsonl"
# Fixed timestamp for replay runs so records are deterministic.
REPLAY_TIMESTAMP = "1970-01-01T00:00:00+00:00"


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class NoRecords(FileNotFoundError):
    pass


@dataclass
class TaskSpec:
    kind: tasks.TaskKind
    complexity: Optional[tasks.Complexity] = None
    trials: int = 1
    dataset: Optional[Path] = None
    # Added to the run seed; lets multiple specs of one kind use disjoint seeds.
    seed_offset: int = 0


@dataclass
class RunConfig:
    model_id: str
    task_specs: list
    methods: list
    seed: int = 0
    turns: int = 1
    max_tool_turns: int = DEFAULT_MAX_TOOL_TURNS
    parallelism: int = 1
    mode: gw.SessionMode = field(default_factory=gw.Live)
    output_dir: Path = Path("runs/out")
    provider: gw.ProviderConfig = field(default_factory=gw.ProviderConfig)
    limits: SandboxLimits = field(default_factory=SandboxLimits)
    capabilities: ModelCapabilities = field(default_factory=ModelCapabilities)
    temperature: float = 0.0
    max_output_tokens: int = 4096
    # Force normalized execution timing even outside replay mode (used when
    # recording stores that must replay to identical cost tables).
    normalize_exec_timing: bool = False
    # Alternate prompt-asset directory for ablation runs (CAMEL prompt,
    # paraphrased AutoGen prompt, ...); None uses the packaged assets.
    prompt_assets_dir: Optional[Path] = None

    @property
    def config_hash(self) -> str:
        """Digest of the semantically relevant settings. Scheduling and
        storage knobs (parallelism, output_dir, mode) are excluded so they
        never fork attempt keys."""
        payload = {
            "model_id": self.model_id,
            "methods": [int(m) for m in self.methods],
            "tasks": [
                {
                    "kind": spec.kind.value,
                    "complexity": spec.complexity.label if spec.complexity else None,
                    "trials": spec.trials,
                    "dataset": str(spec.dataset) if spec.dataset else None,
                    "seed_offset": spec.seed_offset,
                }
                for spec in self.task_specs
            ],
            "seed": self.seed,
            "turns": self.turns,
            "max_tool_turns": self.max_tool_turns,
            "limits": [self.limits.timeout_s, self.limits.output_cap, self.limits.memory_cap],
            "temperature": self.temperature,
            "prompt_assets": str(self.prompt_assets_dir) if self.prompt_assets_dir else None,
        }
        canonical = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _parse_mode(raw, base: Path) -> gw.SessionMode:
    if raw is None:
        return gw.Live()
    kind = raw.get("kind", "live")
    if kind == "live":
        return gw.Live()
    store = raw.get("store")
    if not store:
        raise ConfigError("mode.store", f"{kind} mode requires a store path")
    store_path = Path(store)
    if not store_path.is_absolute():
        store_path = base / store_path
    if kind == "record":
        return gw.Record(store_path, dedup=raw.get("dedup", True))
    if kind == "replay":
        return gw.Replay(store_path)
    raise ConfigError("mode.kind", f"unknown mode {kind!r}")


def load_config(path: Path) -> RunConfig:
    """Parse the JSON run-configuration file (schema documented in README)."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(str(path), "config file not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc.msg}") from exc
    base = Path(path).resolve().parent
    if "model_id" not in raw:
        raise ConfigError("model_id", "required")
    try:
        methods = [MethodId.parse(m) for m in raw.get("methods", list(MethodId))]
    except (KeyError, ValueError) as exc:
        raise ConfigError("methods", f"unknown method: {exc}") from exc
    specs = []
    for i, entry in enumerate(raw.get("tasks", [])):
        path_name = f"tasks[{i}]"
        try:
            kind = tasks.TaskKind(entry["kind"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(path_name + ".kind", str(exc)) from exc
        if "dataset" in entry:
            dataset = Path(entry["dataset"])
            if not dataset.is_absolute():
                dataset = base / dataset
            specs.append(TaskSpec(kind=kind, dataset=dataset))
            continue
        trials = int(entry.get("trials", 1))
        if trials < 1:
            raise ConfigError(path_name + ".trials", "must be >= 1")
        try:
            complexity = tasks.parse_complexity(kind, entry.get("complexity"))
        except (tasks.InvalidComplexity, tasks.UnsupportedKind) as exc:
            raise ConfigError(path_name + ".complexity", str(exc)) from exc
        specs.append(
            TaskSpec(
                kind=kind,
                complexity=complexity,
                trials=trials,
                seed_offset=int(entry.get("seed_offset", 0)),
            )
        )
    if not specs:
        raise ConfigError("tasks", "at least one task entry is required")
    limits_raw = raw.get("limits", {})
    limits = SandboxLimits(
        timeout_s=float(limits_raw.get("timeout_s", 30.0)),
        output_cap=int(limits_raw.get("output_cap", 64 * 1024)),
        memory_cap=int(limits_raw.get("memory_cap", 512 * 1024 * 1024)),
    )
    provider_raw = raw.get("provider", {})
    provider = gw.ProviderConfig(
        name=provider_raw.get("name", "openai"),
        base_url=provider_raw.get("base_url", "https://api.openai.com/v1"),
        min_interval_s=float(provider_raw.get("min_interval_s", 0.0)),
    )
    caps_raw = raw.get("capabilities", {})
    capabilities = ModelCapabilities(
        supports_system_prompt=bool(caps_raw.get("supports_system_prompt", True)),
        has_hosted_interpreter=bool(caps_raw.get("has_hosted_interpreter", False)),
    )
    parallelism = int(raw.get("parallelism", 1))
    if parallelism < 1:
        raise ConfigError("parallelism", "must be >= 1")
    output_dir = Path(raw.get("output_dir", "runs/out"))
    if not output_dir.is_absolute():
        output_dir = base / output_dir
    assets_dir = raw.get("prompt_assets")
    if assets_dir is not None:
        assets_dir = Path(assets_dir)
        if not assets_dir.is_absolute():
            assets_dir = base / assets_dir
    return RunConfig(
        model_id=raw["model_id"],
        task_specs=specs,
        methods=methods,
        seed=int(raw.get("seed", 0)),
        turns=int(raw.get("turns", 1)),
        max_tool_turns=int(raw.get("max_tool_turns", DEFAULT_MAX_TOOL_TURNS)),
        parallelism=parallelism,
        mode=_parse_mode(raw.get("mode"), base),
        output_dir=output_dir,
        provider=provider,
        limits=limits,
        capabilities=capabilities,
        temperature=float(raw.get("temperature", 0.0)),
        max_output_tokens=int(raw.get("max_output_tokens", 4096)),
        prompt_assets_dir=assets_dir,
    )


def build_instances(config: RunConfig) -> list:
    """(spec, instance) pairs: seeded generation for procedural specs,
    dataset loading otherwise."""
    out = []
    for spec in config.task_specs:
        if spec.dataset is not None:
            for instance in tasks.load_dataset(spec.dataset, spec.kind):
                out.append((spec, instance))
        else:
            for trial in range(spec.trials):
                seed = config.seed + spec.seed_offset + trial
                instance = tasks.generate(spec.kind, spec.complexity, seed)
                out.append((spec, instance))
    return out


class RecordAppender:
    """Serialized JSONL writer that skips already-present attempt keys."""

    def __init__(self, path: Path, existing_keys: set):
        self.path = path
        self._keys = set(existing_keys)
        self._lock = threading.Lock()

    def append(self, record: RunRecord) -> bool:
        with self._lock:
            if record.key in self._keys:
                return False
            self._keys.add(record.key)
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(
                    json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=True) + "\n"
                )
            return True


def read_records(where: Path) -> list:
    """Load RunRecords from a records file or a directory containing one."""
    path = Path(where)
    if path.is_dir():
        path = path / RECORDS_FILENAME
    if not path.exists():
        raise NoRecords(str(path))
    records = []
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(RunRecord.from_dict(json.loads(line)))
    return records


_INFRA_ERRORS = (
    gw.ReplayMiss,
    gw.RateLimited,
    gw.ProviderError,
    tasks.MissingFile,
)


def cmd_run(config: RunConfig, transport=None) -> dict:
    """Execute the configured (instance x method) grid and stream records.

    Existing records under the same config hash are skipped, so interrupted
    runs resume where they stopped.
    """
    from .sandbox import GuestUnavailable

    config.output_dir.mkdir(parents=True, exist_ok=True)
    records_path = config.output_dir / RECORDS_FILENAME
    existing: set = set()
    if records_path.exists():
        for record in read_records(records_path):
            existing.add(record.key)
    appender = RecordAppender(records_path, existing)
    config_hash = config.config_hash
    replaying = isinstance(config.mode, gw.Replay)
    deps = SteeringDeps(
        gateway=gw.Gateway(config.mode, provider=config.provider, transport=transport),
        sandbox=Sandbox(
            limits=config.limits,
            normalize_timing=replaying or config.normalize_exec_timing,
        ),
        assets=PromptAssets.load(config.prompt_assets_dir),
        model_id=config.model_id,
        capabilities=config.capabilities,
        temperature=config.temperature,
        max_output_tokens=config.max_output_tokens,
    )

    units = []
    for spec, instance in build_instances(config):
        for method in config.methods:
            # Resume granularity is the (instance, method) pair: the turn
            # sequence of a refinement loop cannot be re-created piecemeal.
            if (instance.id, int(method), 1, config_hash) in existing:
                continue
            units.append((spec, instance, method))

    counters = {"attempts": 0, "successes": 0, "skipped_units": 0, "infra_errors": 0}
    failures: dict = {}
    lock = threading.Lock()

    def work(unit):
        spec, instance, method = unit
        attempts = run_method(
            method,
            instance,
            deps,
            max_turns=config.turns,
            max_tool_turns=config.max_tool_turns,
        )
        timestamp = (
            REPLAY_TIMESTAMP
            if replaying
            else datetime.now(timezone.utc).isoformat(timespec="seconds")
        )
        for attempt in attempts:
            record = RunRecord(
                attempt=attempt,
                model_id=config.model_id,
                config_hash=config_hash,
                timestamp=timestamp,
                task=spec.kind.value,
                complexity_label=instance.complexity.label if instance.complexity else None,
            )
            appender.append(record)
            with lock:
                counters["attempts"] += 1
                if attempt.verdict.success:
                    counters["successes"] += 1
                else:
                    reason = (
                        attempt.verdict.failure_reason.value
                        if attempt.verdict.failure_reason
                        else "unknown"
                    )
                    failures[reason] = failures.get(reason, 0) + 1

    infra_messages = []
    if units:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            futures = {pool.submit(work, unit): unit for unit in units}
            for future in as_completed(futures):
                try:
                    future.result()
                except (_INFRA_ERRORS + (GuestUnavailable,)) as exc:
                    with lock:
                        counters["infra_errors"] += 1
                        infra_messages.append(str(exc))

    counters["skipped_units"] = (
        len(build_instances(config)) * len(config.methods) - len(units)
    )
    return {
        "records_path": str(records_path),
        "config_hash": config_hash,
        "counters": counters,
        "failures_by_reason": dict(sorted(failures.items())),
        "infra_messages": infra_messages[:10],
    }


def _summary_exit_code(summary: dict) -> int:
    if summary["counters"]["infra_errors"]:
        return 2
    if summary["failures_by_reason"]:
        return 1
    return 0


def _print_summary(summary: dict) -> None:
    counters = summary["counters"]
    click.echo(f"records: {summary['records_path']}")
    click.echo(f"config hash: {summary['config_hash']}")
    click.echo(
        f"attempts: {counters['attempts']}  successes: {counters['successes']}  "
        f"skipped units: {counters['skipped_units']}  infra errors: {counters['infra_errors']}"
    )
    if summary["failures_by_reason"]:
        parts = ", ".join(f"{k}={v}" for k, v in summary["failures_by_reason"].items())
        click.echo(f"failures by reason: {parts}")
    for message in summary["infra_messages"]:
        click.echo(f"infra: {message}", err=True)


@click.group()
def main():
    """Steering benchmark harness."""


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path))
@click.option("--parallelism", type=int, default=None, help="Override worker count.")
@click.option("--output-dir", type=click.Path(path_type=Path), default=None)
def run_command(config_path: Path, parallelism: Optional[int], output_dir: Optional[Path]):
    """Run the configured benchmark grid."""
    try:
        config = load_config(config_path)
        if parallelism is not None:
            config.parallelism = parallelism
        if output_dir is not None:
            config.output_dir = output_dir
        summary = cmd_run(config)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    _print_summary(summary)
    sys.exit(_summary_exit_code(summary))


@main.command("report")
@click.option("--records", "records_dir", required=True, type=click.Path(path_type=Path))
@click.option(
    "--which",
    required=True,
    type=click.Choice(sorted(metrics.REPORTS)),
    help="Which table to emit.",
)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None)
@click.option("--text", is_flag=True, help="Also write an aligned text table.")
@click.option("--turn", type=int, default=1)
def report_command(records_dir: Path, which: str, out_dir: Optional[Path], text: bool, turn: int):
    """Aggregate records into CSV report files."""
    try:
        records = read_records(records_dir)
    except NoRecords as exc:
        click.echo(f"no records found: {exc}", err=True)
        sys.exit(2)
    destination = out_dir or (Path(records_dir) if Path(records_dir).is_dir() else Path(records_dir).parent)
    path = metrics.write_report(which, records, destination, text=text)
    click.echo(str(path))


def parse_axis(kind: tasks.TaskKind, axis: str) -> list:
    """Complexity levels from an axis spec: a comma list of labels, or an
    inclusive "lo..hi" range. Pair-label ranges (e.g. 1_1..4_4) grow one
    component at a time: 1_1, 1_2, 2_2, 2_3, ..."""
    axis = axis.strip()
    if ".." not in axis:
        return [tasks.parse_complexity(kind, label.strip()) for label in axis.split(",")]
    lo, hi = axis.split("..", 1)
    if "_" in lo and kind in (tasks.TaskKind.NUMBER_MULTIPLY, tasks.TaskKind.BOX_LIFT,
                              tasks.TaskKind.PATH_PLAN):
        a, b = (int(x) for x in lo.split("_"))
        c, d = (int(x) for x in hi.split("_"))
        labels = [f"{a}_{b}"]
        while (a, b) < (c, d):
            if b <= a:
                b += 1
            else:
                a += 1
            labels.append(f"{a}_{b}")
        return [tasks.parse_complexity(kind, label) for label in labels]
    start = int("".join(ch for ch in lo if ch.isdigit()))
    stop = int("".join(ch for ch in hi if ch.isdigit()))
    prefix = "".join(ch for ch in lo if not ch.isdigit())
    return [
        tasks.parse_complexity(kind, f"{prefix}{value}")
        for value in range(start, stop + 1)
    ]


@main.command("sweep")
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path))
@click.option("--kind", required=True)
@click.option("--axis", required=True, help='e.g. "1_1..4_4" or "2..8" or "n2,n3,n4"')
@click.option("--trials", type=int, default=10)
@click.option("--method", default="all_code")
def sweep_command(config_path: Path, kind: str, axis: str, trials: int, method: str):
    """Run a complexity grid and emit the per-level breakdown."""
    try:
        config = load_config(config_path)
        task_kind = tasks.TaskKind(kind)
        levels = parse_axis(task_kind, axis)
        config.task_specs = [
            TaskSpec(kind=task_kind, complexity=level, trials=trials) for level in levels
        ]
        config.methods = [MethodId.parse(method)]
        summary = cmd_run(config)
    except (ConfigError, tasks.InvalidComplexity, tasks.UnsupportedKind, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    _print_summary(summary)
    records = read_records(Path(summary["records_path"]))
    path = metrics.write_report("complexity", records, config.output_dir, text=True)
    click.echo(str(path))
    sys.exit(_summary_exit_code(summary))


@main.command("gen")
@click.option("--kind", required=True)
@click.option("--seed", type=int, default=0)
@click.option("--complexity", default=None)
def gen_command(kind: str, seed: int, complexity: Optional[str]):
    """Generate and print one task instance (inspection helper)."""
    try:
        task_kind = tasks.TaskKind(kind)
        level = tasks.parse_complexity(task_kind, complexity)
        instance = tasks.generate(task_kind, level, seed)
    except (tasks.InvalidComplexity, tasks.UnsupportedKind, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(instance.to_json())


if __name__ == "__main__":
    main()
