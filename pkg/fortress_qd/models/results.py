"""
Result models for evaluations, archive exports and run telemetry.
"""

from typing import Any

import orjson
from pydantic import BaseModel, ConfigDict, Field


class EvalResult(BaseModel):
    """Outcome of evaluating one genotype over a set of seeds."""

    model_config = ConfigDict(frozen=True)

    fitness: float = Field(..., ge=0.0, le=1.0, description="Explored share e / t")
    explored: int = Field(..., ge=0, description="Explored nodes + edges (e)")
    total: int = Field(..., ge=0, description="All nodes + edges (t)")
    bc_instances: float = Field(..., ge=0.0, description="Mean final instance count")
    bc_nodes: int = Field(..., ge=0, description="Total nodes over all classes")
    entropy: float = Field(..., ge=0.0, le=1.0, description="FSM-size entropy")
    seeds: list[int] = Field(..., description="Evaluation seeds")
    horizon: int = Field(..., ge=1, description="Episode length in ticks")
    final_counts: list[int] = Field(..., description="Final instance count per seed")
    terminations: list[str] = Field(..., description="Termination cause per seed")
    populations: list[list[list[int]]] = Field(
        ..., description="Per seed, per tick, per class instance counts"
    )

    def to_dict(self) -> dict[str, Any]:
        return self.model_dump(mode="json")

    def to_json(self) -> str:
        return orjson.dumps(self.to_dict(), option=orjson.OPT_SORT_KEYS).decode("utf-8")


class ArchiveRecord(BaseModel):
    """One occupied archive cell, as exported for heatmaps."""

    model_config = ConfigDict(frozen=True)

    bin_x: int
    bin_y: int
    bc0: float
    bc1: float
    fitness: float
    entropy: float
    n_nodes: int


class TelemetryRecord(BaseModel):
    """Archive statistics after one generation."""

    model_config = ConfigDict(frozen=True)

    generation: int
    qd_score: float
    best_score: float
    occupied_cells: int
    evaluations: int


class ArchiveSummary(BaseModel):
    """Best score, QD score and size of one archive."""

    model_config = ConfigDict(frozen=True)

    best_score: float
    qd_score: float
    archive_size: int


class ReevaluationRow(BaseModel):
    """Before/after comparison for one re-evaluation setting."""

    model_config = ConfigDict(frozen=True)

    new_seeds: bool
    horizon: int
    before: ArchiveSummary
    after: ArchiveSummary
