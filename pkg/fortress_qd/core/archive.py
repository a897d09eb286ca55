"""
MAP-Elites archive of fortresses.

A 2-D grid keyed by discretised behavior characteristics. The first axis is
always the mean final instance count; the second is either the total node
count or the FSM-size entropy, depending on the archive mode. A cell's
occupant is only replaced by a strictly fitter candidate.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Optional

import numpy as np

import constants
from fortress_qd.core.fsm import FortressGenotype, max_nodes_per_class
from fortress_qd.models.config import ArchiveMode
from fortress_qd.models.results import ArchiveRecord, ArchiveSummary, EvalResult

Cell = tuple[int, int]
Range = tuple[float, float]

HEAT_COLUMNS = ("fitness", "entropy", "n_nodes")


@dataclass(frozen=True)
class Elite:
    genotype: FortressGenotype
    result: EvalResult


def bin_index(value: float, low: float, high: float, bins: int) -> int:
    """Bin of `value` in `bins` half-open intervals over [low, high].

    Out-of-range values clamp; `high` itself joins the last bin.
    """
    if high <= low:
        return 0
    index = math.floor((value - low) / (high - low) * bins)
    return min(max(index, 0), bins - 1)


def default_ranges(
    mode: ArchiveMode,
    n_classes: int = constants.N_CLASSES,
    overpopulation_cap: int = constants.OVERPOPULATION_CAP,
) -> tuple[Range, Range]:
    instances = (0.0, float(overpopulation_cap))
    if mode is ArchiveMode.INSTANCES_ENTROPY:
        return instances, (0.0, 1.0)
    return instances, (
        float(n_classes),
        float(max_nodes_per_class(n_classes) * n_classes),
    )


class Archive:
    """Grid of elites with strict-improvement replacement."""

    def __init__(
        self,
        mode: ArchiveMode = ArchiveMode.INSTANCES_NODES,
        resolution: tuple[int, int] = (
            constants.ARCHIVE_BINS_X,
            constants.ARCHIVE_BINS_Y,
        ),
        ranges: Optional[tuple[Range, Range]] = None,
        n_classes: int = constants.N_CLASSES,
        overpopulation_cap: int = constants.OVERPOPULATION_CAP,
    ) -> None:
        self.mode = ArchiveMode(mode)
        self.resolution = (int(resolution[0]), int(resolution[1]))
        self.n_classes = n_classes
        self.overpopulation_cap = overpopulation_cap
        self.ranges = ranges or default_ranges(self.mode, n_classes, overpopulation_cap)
        self.cells: dict[Cell, Elite] = {}

    def __len__(self) -> int:
        return len(self.cells)

    def __contains__(self, cell: object) -> bool:
        return cell in self.cells

    def get(self, cell: Cell) -> Optional[Elite]:
        return self.cells.get(cell)

    def empty_copy(self) -> Archive:
        return Archive(
            self.mode, self.resolution, self.ranges, self.n_classes, self.overpopulation_cap
        )

    def descriptor(self, result: EvalResult) -> tuple[float, float]:
        if self.mode is ArchiveMode.INSTANCES_ENTROPY:
            return result.bc_instances, result.entropy
        return result.bc_instances, float(result.bc_nodes)

    def cell_for(self, result: EvalResult) -> Cell:
        bc0, bc1 = self.descriptor(result)
        (x_low, x_high), (y_low, y_high) = self.ranges
        return (
            bin_index(bc0, x_low, x_high, self.resolution[0]),
            bin_index(bc1, y_low, y_high, self.resolution[1]),
        )

    def insert(self, genotype: FortressGenotype, result: EvalResult) -> bool:
        """Place a candidate; True when it became the cell's elite."""
        cell = self.cell_for(result)
        current = self.cells.get(cell)
        if current is None or result.fitness > current.result.fitness:
            self.cells[cell] = Elite(genotype, result)
            return True
        return False

    def occupied(self) -> list[Cell]:
        """Occupied cells in canonical (bin_x, bin_y) order."""
        return sorted(self.cells)

    def elites(self) -> list[tuple[Cell, Elite]]:
        return [(cell, self.cells[cell]) for cell in self.occupied()]

    def qd_score(self) -> float:
        return math.fsum(self.cells[c].result.fitness for c in self.occupied())

    def best_score(self) -> float:
        return max((e.result.fitness for e in self.cells.values()), default=0.0)

    def coverage(self) -> float:
        return len(self.cells) / (self.resolution[0] * self.resolution[1])

    def summary(self) -> ArchiveSummary:
        return ArchiveSummary(
            best_score=self.best_score(),
            qd_score=self.qd_score(),
            archive_size=len(self),
        )

    def sample_parent(self, rng: np.random.Generator) -> Elite:
        """Uniform choice over occupied cells."""
        cells = self.occupied()
        if not cells:
            raise RuntimeError("Archive is empty.")
        return self.cells[cells[int(rng.integers(len(cells)))]]

    def export(self) -> list[ArchiveRecord]:
        records = []
        for cell, elite in self.elites():
            bc0, bc1 = self.descriptor(elite.result)
            records.append(
                ArchiveRecord(
                    bin_x=cell[0],
                    bin_y=cell[1],
                    bc0=bc0,
                    bc1=bc1,
                    fitness=elite.result.fitness,
                    entropy=elite.result.entropy,
                    n_nodes=elite.result.bc_nodes,
                )
            )
        return records

    def heat_grid(self, column: str = "fitness") -> np.ndarray:
        """Dense bins_y x bins_x matrix of `column`; empty cells are NaN."""
        if column not in HEAT_COLUMNS:
            raise ValueError(f"heat column must be one of {HEAT_COLUMNS}, got {column}")
        grid = np.full((self.resolution[1], self.resolution[0]), np.nan)
        for record in self.export():
            grid[record.bin_y, record.bin_x] = getattr(record, column)
        return grid


def archive_export(archive: Archive) -> list[ArchiveRecord]:
    """One record per occupied cell, in canonical cell order."""
    return archive.export()


def records_qd_score(records: Iterable[ArchiveRecord]) -> float:
    return math.fsum(r.fitness for r in records)


def merge_archives(archives: Sequence[Archive]) -> Archive:
    """Aggregate the best elites of several archives into one.

    All archives must share mode, resolution and ranges; on equal fitness the
    archive listed first keeps the cell.
    """
    if not archives:
        raise ValueError("Nothing to merge.")
    merged = archives[0].empty_copy()
    for archive in archives:
        if (archive.mode, archive.resolution, archive.ranges) != (
            merged.mode,
            merged.resolution,
            merged.ranges,
        ):
            raise ValueError("Archives differ in mode, resolution or ranges.")
        for _, elite in archive.elites():
            merged.insert(elite.genotype, elite.result)
    return merged
