"""Experiment orchestration: seed batches, parameter sweeps, CSV emission.

Rows are fully deterministic functions of (config, seed): float columns are
quantized to 9 significant digits at row construction and the runtime column
reports the processed-event count, so identical inputs produce byte-identical
CSV output.
"""

from __future__ import annotations

import csv
import hashlib
import io
import os
from dataclasses import dataclass, fields, replace

from .config import ConfigError, ScenarioConfig, validate
from .simulation import RunResult, simulate

CSV_COLUMNS = (
    "scenario_id", "protocol", "balanced", "lambda", "nodes", "streams", "seed",
    "overall_pdr", "mean_current_pdr",
    "drop_collision", "drop_queue", "drop_no_route", "drop_ttl", "drop_link",
    "control_messages", "runtime_events",
)

SWEEP_PARAMETERS = ("lambda", "nodes", "streams")


@dataclass(frozen=True)
class ResultRow:
    scenario_id: str
    protocol: str
    balanced: bool
    lambda_factor: float
    nodes: int
    streams: int
    seed: int
    overall_pdr: float
    mean_current_pdr: float
    drop_collision: int
    drop_queue: int
    drop_no_route: int
    drop_ttl: int
    drop_link: int
    control_messages: int
    runtime_events: int


def quantize(value: float) -> float:
    """Round-trip through the 9-significant-digit CSV representation."""
    return float(f"{value:.9g}")


def scenario_id(config: ScenarioConfig) -> str:
    blob = ";".join(f"{k}={v}" for k, v in config.canonical_items())
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def result_row(config: ScenarioConfig, result: RunResult) -> ResultRow:
    drops = result.drops
    return ResultRow(
        scenario_id=scenario_id(config),
        protocol=config.protocol,
        balanced=config.balancing,
        lambda_factor=quantize(config.lambda_factor),
        nodes=config.nodes,
        streams=config.streams,
        seed=result.seed,
        overall_pdr=quantize(result.overall_pdr),
        mean_current_pdr=quantize(result.mean_current_pdr),
        drop_collision=drops.get("collision", 0),
        drop_queue=drops.get("queue", 0),
        drop_no_route=drops.get("no_route", 0),
        drop_ttl=drops.get("ttl", 0),
        drop_link=drops.get("link", 0),
        control_messages=result.control_tx,
        runtime_events=result.events_processed,
    )


def default_seeds(config: ScenarioConfig) -> list[int]:
    return [config.seed + i for i in range(config.runs)]


def run_experiment(
    config: ScenarioConfig,
    seeds: list[int],
    trace_dir: str | None = None,
) -> list[ResultRow]:
    """One complete simulation per seed, rows in seed order."""
    validate(config)
    rows = []
    for seed in seeds:
        result = simulate(config, seed)
        rows.append(result_row(config, result))
        if trace_dir is not None:
            write_pdr_trace(
                result,
                os.path.join(trace_dir, f"trace_{scenario_id(config)}_{seed}.csv"),
            )
    return rows


def _sweep_config(config: ScenarioConfig, parameter: str, value: float) -> ScenarioConfig:
    if parameter == "lambda":
        if value < 0:
            raise ConfigError(f"lambda sweep value must be >= 0, got {value}")
        return replace(config, lambda_factor=float(value))
    if parameter in ("nodes", "streams"):
        if value != int(value):
            raise ConfigError(f"{parameter} sweep value must be an integer, got {value}")
        return replace(config, **{parameter: int(value)})
    raise ConfigError(f"unknown sweep parameter {parameter!r}; expected one of {SWEEP_PARAMETERS}")


def sweep(
    config: ScenarioConfig,
    parameter: str,
    values: list[float],
    seeds: list[int],
    trace_dir: str | None = None,
) -> list[ResultRow]:
    """Cartesian product of values x seeds; every config is validated before
    any simulation starts."""
    if not values:
        raise ConfigError("sweep needs at least one value")
    configs = []
    for value in values:
        swept = _sweep_config(config, parameter, value)
        validate(swept)
        configs.append(swept)
    rows = []
    for swept in configs:
        rows.extend(run_experiment(swept, seeds, trace_dir))
    return rows


def compare(config: ScenarioConfig, seeds: list[int]) -> list[ResultRow]:
    """Plain vs balanced on identical seeds, paired per seed."""
    plain = replace(config, balancing=False)
    balanced = replace(config, balancing=True)
    validate(plain)
    rows = []
    for seed in seeds:
        rows.append(result_row(plain, simulate(plain, seed)))
        rows.append(result_row(balanced, simulate(balanced, seed)))
    return rows


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def rows_to_csv_text(rows: list[ResultRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_format_cell(getattr(row, f.name)) for f in fields(ResultRow)])
    return buffer.getvalue()


def write_csv(rows: list[ResultRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv_text(rows))


def parse_csv(path: str) -> list[ResultRow]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        rows = []
        for record in reader:
            named = dict(zip(CSV_COLUMNS, record))
            rows.append(ResultRow(
                scenario_id=named["scenario_id"],
                protocol=named["protocol"],
                balanced=named["balanced"] == "true",
                lambda_factor=float(named["lambda"]),
                nodes=int(named["nodes"]),
                streams=int(named["streams"]),
                seed=int(named["seed"]),
                overall_pdr=float(named["overall_pdr"]),
                mean_current_pdr=float(named["mean_current_pdr"]),
                drop_collision=int(named["drop_collision"]),
                drop_queue=int(named["drop_queue"]),
                drop_no_route=int(named["drop_no_route"]),
                drop_ttl=int(named["drop_ttl"]),
                drop_link=int(named["drop_link"]),
                control_messages=int(named["control_messages"]),
                runtime_events=int(named["runtime_events"]),
            ))
    return rows


def write_pdr_trace(result: RunResult, path: str) -> None:
    """Per-run windowed PDR trace: (window_end_s, sent, received, current_pdr)."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("window_end_s", "sent", "received", "current_pdr"))
        for window_end, sent, received, pdr in result.pdr_trace:
            writer.writerow((
                f"{window_end:.9g}", sent, received,
                "" if pdr is None else f"{pdr:.9g}",
            ))
