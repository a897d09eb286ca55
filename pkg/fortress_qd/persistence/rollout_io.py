"""
Rollout log (.roll) and population table (.tsv) files.

A rollout log is a versioned header, one JSON metadata line, one
tab-separated record per logged event and an `end <count>` trailer:

    fortress-rollout v1
    {"config": {...}, "final_count": 3, "horizon": 100, "seed": 7, ...}
    tick	instance_id	glyph	x	y	node	action	edge
    0	0	A	3	4	0	init	-
    ...
    end 812
"""

from pathlib import Path
from typing import Any, Optional, Union

import orjson

import constants
from fortress_qd.core.simulation import (
    RolloutLog,
    RolloutRecord,
    SimulationState,
    Termination,
)
from fortress_qd.exceptions import RolloutFormatError

HEADER = "fortress-rollout"
RECORD_COLUMNS = ("tick", "instance_id", "glyph", "x", "y", "node", "action", "edge")
_DASH = constants.FIELD_PLACEHOLDER


def serialize_rollout(log: RolloutLog, config: Optional[dict[str, Any]] = None) -> str:
    meta = {
        "config": config or {},
        "seed": log.seed,
        "horizon": log.horizon,
        "termination": log.termination.value,
        "final_count": log.final_count,
        "ticks": log.ticks,
    }
    lines = [
        f"{HEADER} v{constants.ROLLOUT_SCHEMA_VERSION}",
        orjson.dumps(meta, option=orjson.OPT_SORT_KEYS).decode("utf-8"),
        "\t".join(RECORD_COLUMNS),
    ]
    for r in log.records:
        edge = _DASH if r.edge is None else str(r.edge)
        lines.append(
            f"{r.tick}\t{r.instance_id}\t{r.glyph}\t{r.x}\t{r.y}\t{r.node}\t{r.action}\t{edge}"
        )
    lines.append(f"end {len(log.records)}")
    return "\n".join(lines) + "\n"


def parse_rollout(text: str) -> tuple[RolloutLog, dict[str, Any]]:
    """Decode a rollout log; returns the log and its echoed configuration."""
    lines = text.splitlines()
    if not lines or lines[0] != f"{HEADER} v{constants.ROLLOUT_SCHEMA_VERSION}":
        raise RolloutFormatError("Not a supported rollout log")
    if len(lines) < 4 or not lines[-1].startswith("end "):
        raise RolloutFormatError("Rollout log is truncated")

    try:
        meta = orjson.loads(lines[1])
    except orjson.JSONDecodeError as e:
        raise RolloutFormatError(f"Invalid rollout metadata: {e}")

    records = []
    for number, line in enumerate(lines[3:-1], start=4):
        fields = line.split("\t")
        if len(fields) != len(RECORD_COLUMNS):
            raise RolloutFormatError(f"line {number}: expected {len(RECORD_COLUMNS)} fields")
        try:
            records.append(
                RolloutRecord(
                    tick=int(fields[0]),
                    instance_id=int(fields[1]),
                    glyph=fields[2],
                    x=int(fields[3]),
                    y=int(fields[4]),
                    node=int(fields[5]),
                    action=fields[6],
                    edge=None if fields[7] == _DASH else int(fields[7]),
                )
            )
        except ValueError as e:
            raise RolloutFormatError(f"line {number}: {e}")

    if lines[-1] != f"end {len(records)}":
        raise RolloutFormatError("Rollout log record count does not match its trailer")

    log = RolloutLog(
        seed=int(meta["seed"]),
        horizon=int(meta["horizon"]),
        records=records,
        termination=Termination(meta["termination"]),
        final_count=int(meta["final_count"]),
        ticks=int(meta["ticks"]),
    )
    return log, dict(meta.get("config") or {})


def save_rollout(
    path: Union[str, Path], log: RolloutLog, config: Optional[dict[str, Any]] = None
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_rollout(log, config), encoding="utf-8")
    return path


def load_rollout(path: Union[str, Path]) -> tuple[RolloutLog, dict[str, Any]]:
    return parse_rollout(Path(path).read_text(encoding="utf-8"))


def population_table(state: SimulationState) -> list[list[int]]:
    """Rows of (tick, count per class in glyph order, total)."""
    return [
        [tick, *row, sum(row)] for tick, row in enumerate(state.population_log)
    ]


def format_population_table(
    alphabet: tuple[str, ...], rows: list[list[int]], config: Optional[dict[str, Any]] = None
) -> str:
    lines = []
    if config is not None:
        lines.append("# " + orjson.dumps(config, option=orjson.OPT_SORT_KEYS).decode("utf-8"))
    lines.append("\t".join(["tick", *alphabet, "total"]))
    lines.extend("\t".join(str(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def save_population_table(
    path: Union[str, Path],
    alphabet: tuple[str, ...],
    rows: list[list[int]],
    config: Optional[dict[str, Any]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_population_table(alphabet, rows, config), encoding="utf-8")
    return path
