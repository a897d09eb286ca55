"""
Unit tests for file formats: genotypes, snapshots, rollout logs and tables.
"""

from pathlib import Path

import numpy as np
import pytest

from fortress_qd.core.archive import Archive
from fortress_qd.core.fsm import ActionKind, ConditionKind, FortressGenotype
from fortress_qd.core.search import Evolver, mutate, random_genotype
from fortress_qd.core.simulation import simulate
from fortress_qd.exceptions import (
    GenotypeError,
    GenotypeParseError,
    RolloutFormatError,
    SnapshotCellError,
    SnapshotChecksumError,
    SnapshotTruncatedError,
    SnapshotVersionError,
)
from fortress_qd.models.config import MutationConfig, RunConfig
from fortress_qd.models.results import ArchiveSummary, ReevaluationRow, TelemetryRecord
from fortress_qd.persistence.genotype_io import (
    load_genotype,
    parse_genotype,
    save_genotype,
    serialize_genotype,
)
from fortress_qd.persistence.rollout_io import (
    format_population_table,
    load_rollout,
    parse_rollout,
    population_table,
    save_rollout,
    serialize_rollout,
)
from fortress_qd.persistence.snapshot import (
    ArchiveSnapshot,
    load_snapshot,
    parse_snapshot,
    save_snapshot,
    serialize_snapshot,
)
from fortress_qd.persistence.tables import (
    format_report,
    read_heatmap,
    read_telemetry,
    write_grid,
    write_heatmap,
    write_telemetry,
)
from tests.factories import build_genotype, edge, node

DANGLING = """fortress-genotype v1
size 15 8
alphabet A
class A 0
node idle
node idle
node idle
edge 0 99 none - -
end
"""


@pytest.fixture
def snapshot(desk_config: RunConfig) -> ArchiveSnapshot:
    with Evolver(desk_config) as evolver:
        evolver.run(1)
    return ArchiveSnapshot(
        archive=evolver.archive,
        config=desk_config,
        eval_seeds=evolver.eval_seeds,
        generation=evolver.generation or 0,
        evaluations=evolver.evaluations,
    )


@pytest.mark.unit
class TestGenotypeDocument:
    """Genotype text format."""

    def test_minimal_round_trip(self, minimal_genotype: FortressGenotype) -> None:
        text = serialize_genotype(minimal_genotype)
        assert text.splitlines()[0] == "fortress-genotype v1"
        assert parse_genotype(text) == minimal_genotype
        assert serialize_genotype(parse_genotype(text)) == text

    def test_condition_fields(self) -> None:
        genotype = build_genotype(
            {
                "A": (
                    [node(ActionKind.IDLE), node(ActionKind.CHASE, "B")],
                    [
                        edge(0, 1, ConditionKind.WITHIN, "B", 3),
                        edge(1, 0, ConditionKind.STEP, value=5),
                        edge(1, 1, ConditionKind.NEXT_TO, "A"),
                    ],
                ),
                "B": ([node(ActionKind.MOVE)], []),
            },
            (("A", 3, 4), ("B", 5, 2)),
        )
        lines = serialize_genotype(genotype).splitlines()
        assert "node chase B" in lines
        assert "edge 0 1 within B 3" in lines
        assert "edge 1 0 step - 5" in lines
        assert "edge 1 1 nextTo A -" in lines
        assert lines[-2:] == ["instance A 3 4", "instance B 5 2"]

    def test_random_round_trips(self) -> None:
        gen = np.random.default_rng(11)
        config = MutationConfig()
        for _ in range(100):
            genotype = mutate(random_genotype(gen), config, gen)
            assert parse_genotype(serialize_genotype(genotype)) == genotype

    def test_dangling_edge_diagnostic(self) -> None:
        with pytest.raises(GenotypeParseError) as exc:
            parse_genotype(DANGLING)
        assert exc.value.line == 8
        assert "dangling edge" in str(exc.value)

    def test_unknown_version(self, minimal_genotype: FortressGenotype) -> None:
        text = serialize_genotype(minimal_genotype).replace("v1", "v2", 1)
        with pytest.raises(GenotypeParseError) as exc:
            parse_genotype(text)
        assert exc.value.field == "version"

    def test_unknown_action_kind(self) -> None:
        with pytest.raises(GenotypeParseError) as exc:
            parse_genotype(DANGLING.replace("node idle\nnode idle\nnode idle", "node fly"))
        assert exc.value.line == 5
        assert exc.value.field == "kind"

    def test_out_of_bounds_placement(self, minimal_genotype: FortressGenotype) -> None:
        text = serialize_genotype(minimal_genotype) + "instance A 0 0\n"
        with pytest.raises(GenotypeParseError, match="outside the walls"):
            parse_genotype(text)

    def test_missing_end(self) -> None:
        with pytest.raises(GenotypeParseError, match="missing its 'end'"):
            parse_genotype(DANGLING.replace("end\n", ""))

    def test_serialize_rejects_invalid(self) -> None:
        genotype = build_genotype({"A": ([node(ActionKind.TAKE, "Z")], [])})
        with pytest.raises(GenotypeError):
            serialize_genotype(genotype)

    def test_file_round_trip(self, tmp_path: Path, minimal_genotype: FortressGenotype) -> None:
        path = save_genotype(tmp_path / "g.fort", minimal_genotype)
        assert load_genotype(path) == minimal_genotype


@pytest.mark.unit
class TestSnapshot:
    """Archive snapshot format."""

    def test_save_load_save_is_byte_identical(
        self, tmp_path: Path, snapshot: ArchiveSnapshot
    ) -> None:
        first = save_snapshot(tmp_path / "a.arch", snapshot)
        loaded = load_snapshot(first)
        second = save_snapshot(tmp_path / "b.arch", loaded)
        assert first.read_bytes() == second.read_bytes()
        assert loaded.generation == snapshot.generation
        assert loaded.eval_seeds == snapshot.eval_seeds
        assert loaded.evaluations == snapshot.evaluations
        assert loaded.archive.qd_score() == snapshot.archive.qd_score()
        assert loaded.archive.occupied() == snapshot.archive.occupied()

    def test_no_temp_files_left(self, tmp_path: Path, snapshot: ArchiveSnapshot) -> None:
        save_snapshot(tmp_path / "a.arch", snapshot)
        assert [p.name for p in tmp_path.iterdir()] == ["a.arch"]

    def test_version_mismatch(self, snapshot: ArchiveSnapshot) -> None:
        data = serialize_snapshot(snapshot).replace(b"fortress-archive v1", b"fortress-archive v7", 1)
        with pytest.raises(SnapshotVersionError):
            parse_snapshot(data)

    def test_truncated(self, snapshot: ArchiveSnapshot) -> None:
        data = serialize_snapshot(snapshot)
        with pytest.raises(SnapshotTruncatedError):
            parse_snapshot(data[: len(data) // 2])
        with pytest.raises(SnapshotTruncatedError):
            parse_snapshot(b"")

    def test_checksum_failure(self, snapshot: ArchiveSnapshot) -> None:
        data = serialize_snapshot(snapshot)
        tampered = data.replace(b'"generation":1', b'"generation":2', 1)
        assert tampered != data
        with pytest.raises(SnapshotChecksumError):
            parse_snapshot(tampered)

    def test_corrupted_cell_reports_coordinates(self, snapshot: ArchiveSnapshot) -> None:
        (bin_x, bin_y), _ = snapshot.archive.elites()[0]
        marker = f"cell {bin_x} {bin_y} {{".encode()
        data = serialize_snapshot(snapshot).replace(marker, marker + b"garbage", 1)
        with pytest.raises(SnapshotCellError) as exc:
            parse_snapshot(data)
        assert exc.value.cell == (bin_x, bin_y)
        assert f"({bin_x}, {bin_y})" in str(exc.value)

    def test_empty_archive_round_trip(self, desk_config: RunConfig) -> None:
        empty = ArchiveSnapshot(Archive(resolution=(10, 10)), desk_config, [1, 2], 0)
        data = serialize_snapshot(empty)
        assert serialize_snapshot(parse_snapshot(data)) == data


@pytest.mark.unit
class TestRolloutLog:
    """Rollout log and population table."""

    def test_round_trip(self, random_genotypes: list[FortressGenotype], tmp_path: Path) -> None:
        log, _ = simulate(random_genotypes[0], 3, horizon=30)
        path = save_rollout(tmp_path / "r.roll", log, {"seed": 3})
        loaded, config = load_rollout(path)
        assert loaded == log
        assert config == {"seed": 3}
        assert serialize_rollout(loaded, config) == path.read_text()

    def test_truncated(self, random_genotypes: list[FortressGenotype]) -> None:
        log, _ = simulate(random_genotypes[0], 3, horizon=10)
        text = serialize_rollout(log)
        with pytest.raises(RolloutFormatError):
            parse_rollout(text.rsplit("end", 1)[0])

    def test_population_table(self) -> None:
        genotype = build_genotype(
            {"A": ([node(ActionKind.CLONE)], []), "B": ([node(ActionKind.IDLE)], [])},
            (("A", 1, 1), ("B", 4, 4)),
            width=6,
            height=6,
        )
        _, state = simulate(genotype, 0, horizon=3)
        rows = population_table(state)
        assert rows == [[0, 1, 1, 2], [1, 2, 1, 3], [2, 4, 1, 5], [3, 8, 1, 9]]
        text = format_population_table(genotype.alphabet, rows)
        assert text.splitlines()[0] == "tick\tA\tB\ttotal"
        assert len(text.splitlines()) == 5


@pytest.mark.unit
class TestTables:
    """Telemetry, heatmap and report tables."""

    def test_heatmap_header_and_reimport(
        self, tmp_path: Path, snapshot: ArchiveSnapshot
    ) -> None:
        path = write_heatmap(tmp_path / "h.csv", snapshot.archive)
        assert path.read_text().splitlines()[0] == "bin_x,bin_y,bc0,bc1,fitness,entropy,n_nodes"
        records = read_heatmap(path)
        assert len(records) == len(snapshot.archive)
        assert records == snapshot.archive.export()

    def test_grid(self, tmp_path: Path, snapshot: ArchiveSnapshot) -> None:
        path = write_grid(tmp_path / "g.csv", snapshot.archive, "entropy")
        grid = np.loadtxt(path, delimiter=",")
        assert grid.shape == (10, 10)
        assert int((~np.isnan(grid)).sum()) == len(snapshot.archive)

    def test_telemetry_append(self, tmp_path: Path) -> None:
        path = tmp_path / "t.tsv"
        first = TelemetryRecord(
            generation=0, qd_score=0.5, best_score=0.25, occupied_cells=3, evaluations=10
        )
        second = TelemetryRecord(
            generation=1, qd_score=0.75, best_score=0.5, occupied_cells=4, evaluations=20
        )
        write_telemetry(path, [first], {"master_seed": 1})
        write_telemetry(path, [second], append=True)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# ")
        assert lines[1] == "generation\tqd_score\tbest_score\toccupied_cells\tevaluations"
        assert read_telemetry(path) == [first, second]

    def test_report(self) -> None:
        before = ArchiveSummary(best_score=0.9, qd_score=20.0, archive_size=40)
        after = ArchiveSummary(best_score=0.8, qd_score=18.5, archive_size=37)
        text = format_report(
            [ReevaluationRow(new_seeds=True, horizon=500, before=before, after=after)]
        )
        header, row = text.splitlines()
        assert header.split("\t")[:2] == ["new_seeds", "horizon"]
        assert row.split("\t") == ["yes", "500", "0.900", "0.800", "20.000", "18.500", "40", "37"]
