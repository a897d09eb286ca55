#!/usr/bin/env python3
"""
Command-line entry point for Fortress QD.

Subcommands evolve archives, simulate and render single fortresses,
re-evaluate elites and export archive tables. Results go to files or stdout;
logs go to stderr.
"""

from collections.abc import Iterator
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Optional

import typer

import constants
from fortress_qd import __version__
from fortress_qd.core.archive import Archive, merge_archives
from fortress_qd.core.render import render_frame
from fortress_qd.core.search import Evolver, random_genotype, reevaluate_archive
from fortress_qd.core.simulation import SimulationState, replay_population, simulate
from fortress_qd.exceptions import (
    ConfigError,
    FortressError,
    GenotypeError,
    GenotypeParseError,
    RolloutFormatError,
    SimulationError,
    SnapshotError,
)
from fortress_qd.models.config import ArchiveMode, RunConfig
from fortress_qd.models.results import ReevaluationRow, TelemetryRecord
from fortress_qd.persistence.genotype_io import load_genotype, save_genotype
from fortress_qd.persistence.rollout_io import (
    population_table,
    save_population_table,
    save_rollout,
)
from fortress_qd.persistence.snapshot import (
    ArchiveSnapshot,
    load_snapshot,
    save_snapshot,
)
from fortress_qd.persistence.tables import (
    format_report,
    write_grid,
    write_heatmap,
    write_telemetry,
    write_trajectories,
)
from fortress_qd.services.config_manager import ConfigManager, set_config_manager
from fortress_qd.utils.logger import get_logger, setup_logging
from fortress_qd.utils.seeding import derive_rng, reevaluation_seeds

app = typer.Typer(help="Fortress QD - FSM artificial-life fortresses with MAP-Elites")
logger = get_logger(__name__)


class HeatColumn(str, Enum):
    FITNESS = "fitness"
    ENTROPY = "entropy"
    N_NODES = "n_nodes"


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Map toolkit failures to the documented exit codes."""
    try:
        yield
    except ConfigError as e:
        typer.echo(str(e), err=True)
        raise typer.Exit(constants.EXIT_CONFIG_ERROR)
    except (
        GenotypeError,
        GenotypeParseError,
        SnapshotError,
        RolloutFormatError,
    ) as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(constants.EXIT_PARSE_ERROR)
    except OSError as e:
        typer.echo(f"I/O error: {e}", err=True)
        raise typer.Exit(constants.EXIT_IO_ERROR)
    except FortressError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(1)


@app.callback()
def main(
    log_level: str = typer.Option(constants.LOG_LEVEL, "--log-level", help="Log level"),
    log_format: str = typer.Option(
        constants.LOG_FORMAT, "--log-format", help="Log format: json or text"
    ),
) -> None:
    """Configure logging before any subcommand runs."""
    setup_logging(level=log_level, format_type=log_format)


def _checkpoint_path(out_dir: Path, generation: int) -> Path:
    return out_dir / "checkpoints" / f"generation_{generation:06d}.arch"


def _snapshot(evolver: Evolver) -> ArchiveSnapshot:
    return ArchiveSnapshot(
        archive=evolver.archive,
        config=evolver.config,
        eval_seeds=evolver.eval_seeds,
        generation=evolver.generation or 0,
        evaluations=evolver.evaluations,
    )


def _check_resumable(config: RunConfig, archive: Archive) -> None:
    mismatches = []
    if config.archive_mode is not archive.mode:
        mismatches.append(f"archive_mode: snapshot uses {archive.mode.value}")
    if config.resolution != archive.resolution:
        mismatches.append(f"bins_x, bins_y: snapshot uses {archive.resolution}")
    if config.n_classes != archive.n_classes:
        mismatches.append(f"n_classes: snapshot uses {archive.n_classes}")
    if config.overpopulation_cap != archive.overpopulation_cap:
        mismatches.append(
            f"overpopulation_cap: snapshot uses {archive.overpopulation_cap}"
        )
    if mismatches:
        raise ConfigError(mismatches)


@app.command()
def evolve(
    config_file: Optional[Path] = typer.Option(
        None, "--config", help="YAML run configuration"
    ),
    resume: Optional[Path] = typer.Option(
        None, "--resume", help="Snapshot to continue from"
    ),
    out_dir: Path = typer.Option(
        Path(constants.OUTPUT_DIR), "--out-dir", help="Directory for run artifacts"
    ),
    master_seed: Optional[int] = typer.Option(None, "--master-seed"),
    generations: Optional[int] = typer.Option(None, "--generations"),
    n_classes: Optional[int] = typer.Option(None, "--n-classes"),
    width: Optional[int] = typer.Option(None, "--width"),
    height: Optional[int] = typer.Option(None, "--height"),
    horizon: Optional[int] = typer.Option(None, "--horizon"),
    overpopulation_cap: Optional[int] = typer.Option(None, "--overpopulation-cap"),
    n_seeds: Optional[int] = typer.Option(None, "--n-seeds"),
    init_batch: Optional[int] = typer.Option(None, "--init-batch"),
    archive_mode: Optional[ArchiveMode] = typer.Option(None, "--archive-mode"),
    bins_x: Optional[int] = typer.Option(None, "--bins-x"),
    bins_y: Optional[int] = typer.Option(None, "--bins-y"),
    jobs: Optional[int] = typer.Option(None, "--jobs", help="Parallel evaluations"),
    checkpoint_every: Optional[int] = typer.Option(None, "--checkpoint-every"),
    batch_size: Optional[int] = typer.Option(None, "--batch-size"),
    node_prob: Optional[float] = typer.Option(None, "--node-prob"),
    edge_prob: Optional[float] = typer.Option(None, "--edge-prob"),
    instance_prob: Optional[float] = typer.Option(None, "--instance-prob"),
    random_injection_period: Optional[int] = typer.Option(
        None, "--random-injection-period"
    ),
    step_max: Optional[int] = typer.Option(None, "--step-max"),
) -> None:
    """Run MAP-Elites and write snapshots plus telemetry."""
    with _exit_codes():
        snapshot = load_snapshot(resume) if resume is not None else None

        manager = ConfigManager()
        if snapshot is not None:
            manager.load_values(snapshot.config.provenance())
        if config_file is not None:
            manager.load_file(config_file)
        manager.set_overrides(
            master_seed=master_seed,
            generations=generations,
            n_classes=n_classes,
            width=width,
            height=height,
            horizon=horizon,
            overpopulation_cap=overpopulation_cap,
            n_seeds=n_seeds,
            init_batch=init_batch,
            archive_mode=archive_mode.value if archive_mode is not None else None,
            bins_x=bins_x,
            bins_y=bins_y,
            jobs=jobs,
            checkpoint_every=checkpoint_every,
            batch_size=batch_size,
            node_prob=node_prob,
            edge_prob=edge_prob,
            instance_prob=instance_prob,
            random_injection_period=random_injection_period,
            step_max=step_max,
        )
        set_config_manager(manager)
        config = manager.build()

        if snapshot is not None:
            _check_resumable(config, snapshot.archive)
            evolver = Evolver(
                config,
                archive=snapshot.archive,
                generation=snapshot.generation,
                eval_seeds=snapshot.eval_seeds,
                evaluations=snapshot.evaluations,
            )
        else:
            evolver = Evolver(config)

        telemetry_path = out_dir / "telemetry.tsv"
        pending: list[TelemetryRecord] = []
        if snapshot is None or not telemetry_path.exists():
            write_telemetry(telemetry_path, [], config.provenance())

        def on_generation(ev: Evolver, record: TelemetryRecord) -> None:
            pending.append(record)
            every = config.checkpoint_every
            if every and record.generation and record.generation % every == 0:
                write_telemetry(telemetry_path, pending, append=True)
                pending.clear()
                path = save_snapshot(
                    _checkpoint_path(out_dir, record.generation), _snapshot(ev)
                )
                logger.info(
                    "Checkpoint written", path=str(path), generation=record.generation
                )

        logger.info(
            "Evolution started",
            master_seed=config.master_seed,
            generations=config.generations,
            archive_mode=config.archive_mode.value,
            resolution=list(config.resolution),
            resumed_from=evolver.generation,
            jobs=config.jobs,
        )
        with evolver:
            archive = evolver.run(on_generation=on_generation)

        write_telemetry(telemetry_path, pending, append=True)
        final = save_snapshot(out_dir / "archive.arch", _snapshot(evolver))

        typer.echo(f"snapshot: {final}")
        typer.echo(f"generation: {evolver.generation}")
        typer.echo(f"qd_score: {archive.qd_score():.6f}")
        typer.echo(f"best_score: {archive.best_score():.6f}")
        typer.echo(f"occupied_cells: {len(archive)}")


def _print_frame(state: SimulationState) -> None:
    typer.echo(render_frame(state))
    typer.echo("")


@app.command("simulate")
def simulate_command(
    genotype_path: Path = typer.Argument(..., help="Genotype document (.fort)"),
    seed: int = typer.Option(0, "--seed", help="Rollout seed"),
    horizon: int = typer.Option(constants.HORIZON, "--horizon", min=1),
    overpopulation_cap: int = typer.Option(
        constants.OVERPOPULATION_CAP, "--overpopulation-cap", min=1
    ),
    out: Optional[Path] = typer.Option(None, "--out", help="Rollout log path (.roll)"),
    population: Optional[Path] = typer.Option(
        None, "--population", help="Population table path (.tsv)"
    ),
    render: bool = typer.Option(False, "--render", help="Print ASCII frames"),
) -> None:
    """Run one rollout and write its log and population table."""
    with _exit_codes():
        genotype = load_genotype(genotype_path)
        stem = f"{genotype_path.stem}_seed{seed}"
        out = out or Path(constants.OUTPUT_DIR) / f"{stem}.roll"
        population = population or out.with_suffix(".population.tsv")

        log, state = simulate(
            genotype,
            seed,
            horizon,
            overpopulation_cap,
            on_tick=_print_frame if render else None,
        )
        if replay_population(genotype.alphabet, log) != state.population_log:
            raise SimulationError("Rollout log does not reproduce the population table")

        provenance = {
            "genotype": str(genotype_path),
            "seed": seed,
            "horizon": horizon,
            "overpopulation_cap": overpopulation_cap,
        }
        save_rollout(out, log, provenance)
        save_population_table(
            population, genotype.alphabet, population_table(state), provenance
        )
        logger.info(
            "Rollout written",
            path=str(out),
            ticks=log.ticks,
            termination=log.termination.value,
            final_count=log.final_count,
        )
        typer.echo(f"rollout: {out}", err=render)
        typer.echo(f"population: {population}", err=render)
        typer.echo(f"termination: {log.termination.value}", err=render)
        typer.echo(f"final_count: {log.final_count}", err=render)


@app.command("render")
def render_command(
    genotype_path: Path = typer.Argument(..., help="Genotype document (.fort)"),
    seed: int = typer.Option(0, "--seed"),
    horizon: int = typer.Option(constants.HORIZON, "--horizon", min=1),
    overpopulation_cap: int = typer.Option(
        constants.OVERPOPULATION_CAP, "--overpopulation-cap", min=1
    ),
) -> None:
    """Stream the ASCII frames of one rollout to stdout."""
    with _exit_codes():
        genotype = load_genotype(genotype_path)
        simulate(
            genotype, seed, horizon, overpopulation_cap, record=False, on_tick=_print_frame
        )


@app.command("genotype")
def genotype_command(
    out: Path = typer.Argument(..., help="Where to write the genotype (.fort)"),
    seed: int = typer.Option(0, "--seed"),
    n_classes: int = typer.Option(constants.N_CLASSES, "--n-classes", min=1),
    width: int = typer.Option(constants.FORTRESS_WIDTH, "--width", min=3),
    height: int = typer.Option(constants.FORTRESS_HEIGHT, "--height", min=3),
    total_nodes: Optional[int] = typer.Option(
        None, "--total-nodes", help="Aggregate node count (random if unset)"
    ),
    step_max: int = typer.Option(constants.STEP_MAX, "--step-max", min=1),
) -> None:
    """Write a random genotype document."""
    with _exit_codes():
        if n_classes > len(constants.GLYPH_POOL):
            raise ConfigError(
                [f"n_classes: at most {len(constants.GLYPH_POOL)} classes are supported"]
            )
        try:
            genotype = random_genotype(
                derive_rng(seed), n_classes, width, height, total_nodes, step_max
            )
        except ValueError as e:
            raise ConfigError([f"total_nodes: {e}"])
        save_genotype(out, genotype)
        typer.echo(f"genotype: {out}")
        typer.echo(f"total_nodes: {genotype.total_nodes}")


@app.command()
def reevaluate(
    snapshots: list[Path] = typer.Argument(..., help="One or more snapshots"),
    original_seeds: bool = typer.Option(
        False,
        "--original-seeds/--new-seeds",
        help="Reuse the stored evaluation seeds instead of drawing fresh ones",
    ),
    horizons: Optional[list[int]] = typer.Option(
        None, "--horizon", help="Episode length; repeat for several rows"
    ),
    n_seeds: Optional[int] = typer.Option(None, "--n-seeds", min=1),
    trial: int = typer.Option(0, "--trial", help="Fresh-seed stream index"),
    jobs: int = typer.Option(constants.JOBS, "--jobs", min=1),
    out_dir: Path = typer.Option(Path(constants.OUTPUT_DIR), "--out-dir"),
) -> None:
    """Re-evaluate elites and report best score, QD score and size before/after."""
    with _exit_codes():
        loaded = [load_snapshot(path) for path in snapshots]
        first = loaded[0]
        try:
            archive = merge_archives([s.archive for s in loaded])
        except ValueError as e:
            raise ConfigError([f"snapshots: {e}"])

        if original_seeds:
            seeds = list(first.eval_seeds)
        else:
            count = n_seeds or len(first.eval_seeds)
            seeds = reevaluation_seeds(first.config.master_seed, count, trial)

        rows = []
        for horizon in horizons or [first.config.horizon]:
            fresh = reevaluate_archive(archive, seeds, horizon, jobs)
            config = RunConfig.model_validate(
                {
                    **first.config.provenance(),
                    "horizon": horizon,
                    "n_seeds": len(seeds),
                    "eval_seeds": seeds,
                }
            )
            label = "original" if original_seeds else "new"
            path = save_snapshot(
                out_dir / f"reevaluated_{label}_h{horizon}.arch",
                ArchiveSnapshot(
                    archive=fresh,
                    config=config,
                    eval_seeds=seeds,
                    generation=first.generation,
                    evaluations=first.evaluations + len(archive),
                    extra={"sources": [str(p) for p in snapshots], "trial": trial},
                ),
            )
            typer.echo(f"snapshot: {path}", err=True)
            rows.append(
                ReevaluationRow(
                    new_seeds=not original_seeds,
                    horizon=horizon,
                    before=archive.summary(),
                    after=fresh.summary(),
                )
            )

        report = format_report(rows)
        report_path = out_dir / "reevaluation.tsv"
        report_path.write_text(report, encoding="utf-8")
        typer.echo(report, nl=False)


def _parse_cell(text: str) -> tuple[int, int]:
    try:
        x, y = (int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError([f"trajectories: expected BIN_X,BIN_Y, got '{text}'"])
    return x, y


@app.command()
def export(
    snapshot_path: Path = typer.Argument(..., help="Archive snapshot (.arch)"),
    out: Optional[Path] = typer.Option(None, "--out", help="Heatmap CSV path"),
    grid: Optional[Path] = typer.Option(None, "--grid", help="Dense heat matrix path"),
    heat: HeatColumn = typer.Option(
        HeatColumn.FITNESS, "--heat", help="Heat column for --grid"
    ),
    trajectories: Optional[str] = typer.Option(
        None, "--trajectories", help="Export population trajectories of cell BIN_X,BIN_Y"
    ),
    trajectories_out: Optional[Path] = typer.Option(None, "--trajectories-out"),
) -> None:
    """Export an archive as a heatmap table."""
    with _exit_codes():
        snapshot = load_snapshot(snapshot_path)
        archive = snapshot.archive
        out = out or snapshot_path.with_suffix(".csv")
        write_heatmap(out, archive)
        typer.echo(f"heatmap: {out} ({len(archive)} rows)")

        if grid is not None:
            write_grid(grid, archive, heat.value)
            typer.echo(f"grid: {grid} ({heat.value})")

        if trajectories is not None:
            cell = _parse_cell(trajectories)
            elite = archive.get(cell)
            if elite is None:
                raise ConfigError([f"trajectories: cell {cell} is empty"])
            path = trajectories_out or snapshot_path.with_name(
                f"{snapshot_path.stem}_cell{cell[0]}_{cell[1]}.tsv"
            )
            write_trajectories(
                path,
                elite.genotype.alphabet,
                elite.result.populations,
                elite.result.seeds,
            )
            typer.echo(f"trajectories: {path}")


@app.command()
def version() -> None:
    """Show version information."""
    typer.echo(f"Fortress QD v{__version__}")


if __name__ == "__main__":
    app()
