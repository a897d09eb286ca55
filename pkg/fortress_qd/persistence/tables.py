"""
Tabular run outputs: telemetry, heatmap exports and re-evaluation reports.
"""

from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import orjson
import pandas as pd

from fortress_qd.core.archive import Archive
from fortress_qd.models.results import ArchiveRecord, ReevaluationRow, TelemetryRecord

TELEMETRY_COLUMNS = ("generation", "qd_score", "best_score", "occupied_cells", "evaluations")
HEATMAP_COLUMNS = ("bin_x", "bin_y", "bc0", "bc1", "fitness", "entropy", "n_nodes")
REPORT_COLUMNS = (
    "new_seeds",
    "horizon",
    "best_before",
    "best_after",
    "qd_before",
    "qd_after",
    "size_before",
    "size_after",
)


def _config_comment(config: dict[str, Any]) -> str:
    return "# " + orjson.dumps(config, option=orjson.OPT_SORT_KEYS).decode("utf-8")


def _telemetry_line(record: TelemetryRecord) -> str:
    return "\t".join(
        [
            str(record.generation),
            repr(record.qd_score),
            repr(record.best_score),
            str(record.occupied_cells),
            str(record.evaluations),
        ]
    )


def write_telemetry(
    path: Union[str, Path],
    records: Iterable[TelemetryRecord],
    config: Optional[dict[str, Any]] = None,
    append: bool = False,
) -> Path:
    """Write telemetry rows; with `append`, continue an existing file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fresh = not (append and path.exists())
    with path.open("w" if fresh else "a", encoding="utf-8") as handle:
        if fresh:
            if config is not None:
                handle.write(_config_comment(config) + "\n")
            handle.write("\t".join(TELEMETRY_COLUMNS) + "\n")
        for record in records:
            handle.write(_telemetry_line(record) + "\n")
    return path


def read_telemetry(path: Union[str, Path]) -> list[TelemetryRecord]:
    frame = pd.read_csv(path, sep="\t", comment="#", float_precision="round_trip")
    return [TelemetryRecord(**row) for row in frame.to_dict(orient="records")]


def heatmap_frame(records: Sequence[ArchiveRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [r.model_dump() for r in records], columns=list(HEATMAP_COLUMNS)
    )


def write_heatmap(path: Union[str, Path], archive: Archive) -> Path:
    """One row per occupied cell with the fixed header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    heatmap_frame(archive.export()).to_csv(path, index=False)
    return path


def read_heatmap(path: Union[str, Path]) -> list[ArchiveRecord]:
    frame = pd.read_csv(path, float_precision="round_trip")
    if tuple(frame.columns) != HEATMAP_COLUMNS:
        raise ValueError(f"Unexpected heatmap header: {','.join(frame.columns)}")
    return [ArchiveRecord(**row) for row in frame.to_dict(orient="records")]


def write_grid(path: Union[str, Path], archive: Archive, column: str = "fitness") -> Path:
    """Dense bins_y x bins_x matrix; empty cells are written as nan."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, archive.heat_grid(column), delimiter=",", fmt="%.17g")
    return path


def write_trajectories(
    path: Union[str, Path],
    alphabet: Sequence[str],
    populations: Sequence[Sequence[Sequence[int]]],
    seeds: Sequence[int],
) -> Path:
    """Per-seed population trajectories of one elite as a long TSV."""
    rows = []
    for seed, trajectory in zip(seeds, populations):
        for tick, counts in enumerate(trajectory):
            rows.append([seed, tick, *counts, sum(counts)])
    frame = pd.DataFrame(rows, columns=["seed", "tick", *alphabet, "total"])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, sep="\t", index=False)
    return path


def format_report(rows: Sequence[ReevaluationRow]) -> str:
    """Before/after table of best score, QD score and archive size."""
    lines = ["\t".join(REPORT_COLUMNS)]
    for row in rows:
        lines.append(
            "\t".join(
                [
                    "yes" if row.new_seeds else "no",
                    str(row.horizon),
                    f"{row.before.best_score:.3f}",
                    f"{row.after.best_score:.3f}",
                    f"{row.before.qd_score:.3f}",
                    f"{row.after.qd_score:.3f}",
                    str(row.before.archive_size),
                    str(row.after.archive_size),
                ]
            )
        )
    return "\n".join(lines) + "\n"
