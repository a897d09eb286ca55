"""
Unit tests for the MAP-Elites archive.
"""

import math

import numpy as np
import pytest

from fortress_qd.core.archive import (
    Archive,
    archive_export,
    bin_index,
    default_ranges,
    merge_archives,
    records_qd_score,
)
from fortress_qd.core.fsm import FortressGenotype
from fortress_qd.models.config import ArchiveMode
from fortress_qd.models.results import EvalResult


def result(
    fitness: float, instances: float = 10.0, nodes: int = 100, entropy: float = 0.5
) -> EvalResult:
    return EvalResult(
        fitness=fitness,
        explored=0,
        total=0,
        bc_instances=instances,
        bc_nodes=nodes,
        entropy=entropy,
        seeds=[1],
        horizon=100,
        final_counts=[int(instances)],
        terminations=["step_limit"],
        populations=[[[1]]],
    )


@pytest.mark.unit
class TestBinning:
    """Half-open bins with clamping."""

    @pytest.mark.parametrize(
        "value,expected",
        [(0.0, 0), (0.999, 0), (1.0, 1), (9.5, 9), (10.0, 9), (-3.0, 0), (42.0, 9)],
    )
    def test_bin_index(self, value: float, expected: int) -> None:
        assert bin_index(value, 0.0, 10.0, 10) == expected

    def test_degenerate_range(self) -> None:
        assert bin_index(5.0, 1.0, 1.0, 10) == 0

    def test_default_ranges(self) -> None:
        assert default_ranges(ArchiveMode.INSTANCES_NODES) == ((0.0, 156.0), (15.0, 1410.0))
        assert default_ranges(ArchiveMode.INSTANCES_ENTROPY) == ((0.0, 156.0), (0.0, 1.0))

    def test_entropy_mode_uses_entropy_axis(self) -> None:
        archive = Archive(ArchiveMode.INSTANCES_ENTROPY, (10, 10))
        assert archive.cell_for(result(0.5, 0.0, 1410, 1.0)) == (0, 9)
        assert archive.cell_for(result(0.5, 156.0, 15, 0.0)) == (9, 0)


@pytest.mark.unit
class TestArchive:
    """Insertion, statistics and export."""

    def test_strict_improvement(self, minimal_genotype: FortressGenotype) -> None:
        archive = Archive(resolution=(10, 10))
        assert archive.insert(minimal_genotype, result(0.4))
        assert not archive.insert(minimal_genotype, result(0.4))
        assert not archive.insert(minimal_genotype, result(0.3))
        assert archive.insert(minimal_genotype, result(0.6))
        assert len(archive) == 1
        (cell,) = archive.occupied()
        assert archive.get(cell).result.fitness == 0.6

    def test_statistics(self, minimal_genotype: FortressGenotype) -> None:
        archive = Archive(resolution=(10, 10))
        for fitness, instances in ((0.2, 1.0), (0.5, 50.0), (0.9, 120.0)):
            archive.insert(minimal_genotype, result(fitness, instances))
        assert archive.qd_score() == pytest.approx(1.6)
        assert archive.best_score() == 0.9
        assert archive.coverage() == pytest.approx(0.03)
        summary = archive.summary()
        assert summary.archive_size == 3
        assert summary.best_score == 0.9

    def test_empty_archive(self) -> None:
        archive = Archive()
        assert archive.qd_score() == 0.0
        assert archive.best_score() == 0.0
        with pytest.raises(RuntimeError):
            archive.sample_parent(np.random.default_rng(0))

    def test_sample_parent_is_an_elite(self, minimal_genotype: FortressGenotype) -> None:
        archive = Archive(resolution=(10, 10))
        for instances in (1.0, 40.0, 90.0):
            archive.insert(minimal_genotype, result(0.5, instances))
        gen = np.random.default_rng(3)
        elites = {id(e) for _, e in archive.elites()}
        for _ in range(20):
            assert id(archive.sample_parent(gen)) in elites

    def test_export_is_canonical(self, minimal_genotype: FortressGenotype) -> None:
        archive = Archive(resolution=(10, 10))
        for fitness, instances in ((0.3, 150.0), (0.1, 2.0), (0.7, 70.0)):
            archive.insert(minimal_genotype, result(fitness, instances, nodes=15))
        records = archive_export(archive)
        assert [(r.bin_x, r.bin_y) for r in records] == [(0, 0), (4, 0), (9, 0)]
        assert records_qd_score(records) == archive.qd_score()
        assert records[0].bc0 == 2.0 and records[0].n_nodes == 15

    def test_heat_grid(self, minimal_genotype: FortressGenotype) -> None:
        archive = Archive(resolution=(4, 3))
        archive.insert(minimal_genotype, result(0.8, 156.0, 1410))
        grid = archive.heat_grid("fitness")
        assert grid.shape == (3, 4)
        assert grid[2, 3] == 0.8
        assert int(np.isnan(grid).sum()) == 11
        with pytest.raises(ValueError):
            archive.heat_grid("bogus")


@pytest.mark.unit
class TestMerge:
    """Aggregating several archives."""

    def test_best_elite_wins_and_ties_keep_first(
        self, minimal_genotype: FortressGenotype
    ) -> None:
        first = Archive(resolution=(10, 10))
        second = Archive(resolution=(10, 10))
        first.insert(minimal_genotype, result(0.5, 5.0))
        second.insert(minimal_genotype, result(0.7, 5.0))
        first.insert(minimal_genotype, result(0.4, 100.0, entropy=0.1))
        second.insert(minimal_genotype, result(0.4, 100.0, entropy=0.2))
        second.insert(minimal_genotype, result(0.2, 60.0))

        merged = merge_archives([first, second])
        assert len(merged) == 3
        assert merged.qd_score() == pytest.approx(0.7 + 0.4 + 0.2)
        tie = merged.get(merged.cell_for(result(0.4, 100.0)))
        assert tie is not None and tie.result.entropy == 0.1

    def test_rejects_mismatched_archives(self) -> None:
        with pytest.raises(ValueError):
            merge_archives([Archive(resolution=(10, 10)), Archive(resolution=(5, 5))])
        with pytest.raises(ValueError):
            merge_archives([])

    def test_qd_score_uses_exact_summation(
        self, minimal_genotype: FortressGenotype
    ) -> None:
        archive = Archive(resolution=(100, 1))
        for i in range(10):
            archive.insert(minimal_genotype, result(0.1, float(i * 15)))
        assert archive.qd_score() == math.fsum([0.1] * 10)
