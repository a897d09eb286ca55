"""
Quality-diversity search over fortresses.

Multi-seed evaluation, the FSM-size entropy metric, the mutation operator,
random initialisation, the MAP-Elites driver and elite re-evaluation.
"""

from __future__ import annotations

import dataclasses
import math
import time
from collections.abc import Callable, Sequence
from concurrent.futures import Executor, ProcessPoolExecutor
from functools import partial
from typing import Any, Optional

import numpy as np

import constants
from fortress_qd.core.archive import Archive
from fortress_qd.core.fsm import (
    ClassSpace,
    FortressGenotype,
    Placement,
    add_edge,
    add_nodes,
    alter_edge,
    alter_nodes,
    default_alphabet,
    delete_edge,
    delete_nodes,
    max_nodes_per_class,
    random_class,
)
from fortress_qd.core.simulation import count_exploration, simulate
from fortress_qd.models.config import MutationConfig, RunConfig
from fortress_qd.models.results import EvalResult, TelemetryRecord
from fortress_qd.utils.logger import LoggerMixin, get_logger
from fortress_qd.utils.seeding import evaluation_seeds, offspring_rng

logger = get_logger(__name__)


def fsm_size_entropy(genotype: FortressGenotype) -> float:
    """Normalised Shannon entropy of class sizes over n equal-width bins.

    0 means every class falls in the same size bin, 1 means one class per bin.
    """
    n = genotype.n_classes
    if n <= 1:
        return 0.0
    sizes = np.array([c.node_count for c in genotype.classes])
    counts, _ = np.histogram(sizes, bins=n, range=(1, max_nodes_per_class(n)))
    p = counts[counts > 0] / n
    if len(p) == 1:
        return 0.0
    entropy = float(-(p * np.log(p)).sum() / math.log(n))
    return min(max(entropy, 0.0), 1.0)


def evaluate(
    genotype: FortressGenotype,
    seeds: Sequence[int],
    horizon: int = constants.HORIZON,
    overpopulation_cap: int = constants.OVERPOPULATION_CAP,
) -> EvalResult:
    """Simulate once per seed and score exploration unioned over seeds."""
    if not seeds:
        raise ValueError("evaluate needs at least one seed")
    visited: dict[str, set[int]] = {g: set() for g in genotype.alphabet}
    fired: dict[str, set[int]] = {g: set() for g in genotype.alphabet}
    final_counts: list[int] = []
    terminations: list[str] = []
    populations: list[list[list[int]]] = []

    for seed in seeds:
        _, state = simulate(
            genotype, int(seed), horizon, overpopulation_cap, record=False
        )
        for glyph in genotype.alphabet:
            visited[glyph] |= state.visited_nodes[glyph]
            fired[glyph] |= state.fired_edges[glyph]
        final_counts.append(state.live_count)
        terminations.append(state.termination.value)
        populations.append([list(row) for row in state.population_log])

    explored, total = count_exploration(genotype, visited, fired)
    return EvalResult(
        fitness=explored / total if total else 0.0,
        explored=explored,
        total=total,
        bc_instances=math.fsum(final_counts) / len(final_counts),
        bc_nodes=genotype.total_nodes,
        entropy=fsm_size_entropy(genotype),
        seeds=[int(s) for s in seeds],
        horizon=horizon,
        final_counts=final_counts,
        terminations=terminations,
        populations=populations,
    )


def evaluate_batch(
    genotypes: Sequence[FortressGenotype],
    seeds: Sequence[int],
    horizon: int = constants.HORIZON,
    overpopulation_cap: int = constants.OVERPOPULATION_CAP,
    executor: Optional[Executor] = None,
) -> list[EvalResult]:
    """Evaluate genotypes, in parallel when an executor is given.

    Results come back in input order whatever the schedule.
    """
    work = partial(
        evaluate,
        seeds=list(seeds),
        horizon=horizon,
        overpopulation_cap=overpopulation_cap,
    )
    if executor is None or len(genotypes) <= 1:
        return [work(g) for g in genotypes]
    return list(executor.map(work, genotypes))


def node_edit_count(rng: np.random.Generator, max_count: int) -> int:
    """Heavy-tailed count with P(k) proportional to 1/k on [1, max_count]."""
    ks = np.arange(1, max_count + 1)
    weights = 1.0 / ks
    return int(rng.choice(ks, p=weights / weights.sum()))


def mutate(
    genotype: FortressGenotype, config: MutationConfig, rng: np.random.Generator
) -> FortressGenotype:
    """Node, edge and instance edit loops, each repeating on a coin flip."""
    space = genotype.space(config.step_max)
    classes = list(genotype.classes)
    placements = list(genotype.initial_instances)
    tiles = genotype.interior_tiles()

    node_r, edge_r, instance_r = rng.random(), rng.random(), rng.random()

    loops = 0
    while node_r < config.node_prob and loops < config.max_loops:
        op = int(rng.integers(3))
        i = int(rng.integers(len(classes)))
        count = node_edit_count(rng, config.max_node_edit)
        if op == 0:
            classes[i] = delete_nodes(classes[i], count, rng)
        elif op == 1:
            classes[i] = add_nodes(classes[i], count, space, rng)
        else:
            classes[i] = alter_nodes(classes[i], count, space, rng)
        node_r = rng.random()
        loops += 1

    loops = 0
    while edge_r < config.edge_prob and loops < config.max_loops:
        op = int(rng.integers(3))
        i = int(rng.integers(len(classes)))
        if op == 0:
            classes[i] = delete_edge(classes[i], rng)
        elif op == 1:
            classes[i] = add_edge(classes[i], space, rng)
        else:
            classes[i] = alter_edge(classes[i], space, rng)
        edge_r = rng.random()
        loops += 1

    loops = 0
    while instance_r < config.instance_prob and loops < config.max_loops:
        if int(rng.integers(2)) == 0:
            if placements:
                del placements[int(rng.integers(len(placements)))]
        else:
            glyph = space.alphabet[int(rng.integers(len(space.alphabet)))]
            x, y = tiles[int(rng.integers(len(tiles)))]
            if len(placements) < len(tiles):
                placements.append(Placement(glyph, x, y))
        instance_r = rng.random()
        loops += 1

    return dataclasses.replace(
        genotype, classes=tuple(classes), initial_instances=tuple(placements)
    )


def split_node_budget(total: int, n: int, rng: np.random.Generator) -> list[int]:
    """Split `total` nodes over `n` classes, each ending in [1, 6n + 4].

    An even multinomial split; overfilled classes hand their surplus, one node
    at a time, to the currently smallest class, and empty classes borrow a
    node from the largest.
    """
    capacity = max_nodes_per_class(n)
    if not n <= total <= capacity * n:
        raise ValueError(f"total {total} outside [{n}, {capacity * n}]")
    sizes = [int(s) for s in rng.multinomial(total, [1.0 / n] * n)]

    surplus = 0
    for i, size in enumerate(sizes):
        if size > capacity:
            surplus += size - capacity
            sizes[i] = capacity
    while surplus > 0:
        smallest = min(
            (i for i in range(n) if sizes[i] < capacity), key=lambda i: (sizes[i], i)
        )
        sizes[smallest] += 1
        surplus -= 1

    for i in range(n):
        if sizes[i] == 0:
            largest = max(range(n), key=lambda j: (sizes[j], -j))
            sizes[largest] -= 1
            sizes[i] = 1
    return sizes


def random_genotype(
    rng: np.random.Generator,
    n_classes: int = constants.N_CLASSES,
    width: int = constants.FORTRESS_WIDTH,
    height: int = constants.FORTRESS_HEIGHT,
    total_nodes: Optional[int] = None,
    step_max: int = constants.STEP_MAX,
) -> FortressGenotype:
    """Random fortress, uniform along the aggregate node count axis.

    One instance per class is placed on distinct random interior tiles.
    """
    alphabet = default_alphabet(n_classes)
    capacity = max_nodes_per_class(n_classes)
    if total_nodes is None:
        total_nodes = int(rng.integers(n_classes, capacity * n_classes + 1))
    sizes = split_node_budget(total_nodes, n_classes, rng)

    space = ClassSpace.for_fortress(alphabet, width, height, step_max)
    classes = tuple(
        random_class(glyph, i, sizes[i], space, rng) for i, glyph in enumerate(alphabet)
    )

    genotype = FortressGenotype(classes, (), width, height)
    tiles = genotype.interior_tiles()
    picks = rng.choice(len(tiles), size=min(n_classes, len(tiles)), replace=False)
    placements = tuple(
        Placement(alphabet[i], *tiles[int(tile)]) for i, tile in enumerate(picks)
    )
    return dataclasses.replace(genotype, initial_instances=placements)


def is_random_slot(batch_index: int, period: int) -> bool:
    """One random genotype after every `period` mutants."""
    return period > 0 and (batch_index + 1) % (period + 1) == 0


class Evolver(LoggerMixin):
    """MAP-Elites driver.

    Generation 0 fills the archive with a batch of random genotypes; each
    later generation produces one batch of offspring (mutants of uniformly
    chosen elites plus injected random genotypes), evaluates them on the fixed
    seed set and commits them to the archive in batch order.
    """

    def __init__(
        self,
        config: RunConfig,
        archive: Optional[Archive] = None,
        generation: Optional[int] = None,
        eval_seeds: Optional[Sequence[int]] = None,
        evaluations: int = 0,
    ) -> None:
        super().__init__()
        self.config = config
        if eval_seeds is None:
            eval_seeds = config.eval_seeds or evaluation_seeds(
                config.master_seed, config.n_seeds
            )
        self.eval_seeds = list(eval_seeds)
        self.archive = archive if archive is not None else Archive(
            config.archive_mode,
            config.resolution,
            n_classes=config.n_classes,
            overpopulation_cap=config.overpopulation_cap,
        )
        self.generation = generation
        self.evaluations = evaluations
        self.telemetry: list[TelemetryRecord] = []
        self._executor: Optional[ProcessPoolExecutor] = None
        self._started = time.monotonic()

    def __enter__(self) -> Evolver:
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    @property
    def executor(self) -> Optional[ProcessPoolExecutor]:
        if self.config.jobs <= 1:
            return None
        if self._executor is None:
            self._executor = ProcessPoolExecutor(max_workers=self.config.jobs)
        return self._executor

    def _random(self, rng: np.random.Generator) -> FortressGenotype:
        c = self.config
        return random_genotype(
            rng, c.n_classes, c.width, c.height, step_max=c.mutation.step_max
        )

    def _commit(
        self, genotypes: Sequence[FortressGenotype], generation: int
    ) -> TelemetryRecord:
        results = evaluate_batch(
            genotypes,
            self.eval_seeds,
            self.config.horizon,
            self.config.overpopulation_cap,
            self.executor,
        )
        for genotype, result in zip(genotypes, results):
            self.archive.insert(genotype, result)
        self.evaluations += len(genotypes)
        self.generation = generation
        record = TelemetryRecord(
            generation=generation,
            qd_score=self.archive.qd_score(),
            best_score=self.archive.best_score(),
            occupied_cells=len(self.archive),
            evaluations=self.evaluations,
        )
        self.telemetry.append(record)
        return record

    def initialize(self) -> TelemetryRecord:
        if self.generation is not None:
            raise RuntimeError("Archive already initialised")
        batch = [
            self._random(offspring_rng(self.config.master_seed, 0, i))
            for i in range(self.config.init_batch)
        ]
        record = self._commit(batch, 0)
        self.log_info(
            "Archive initialised",
            init_batch=len(batch),
            occupied_cells=record.occupied_cells,
            eval_seeds=self.eval_seeds,
        )
        return record

    def offspring(self, generation: int) -> list[FortressGenotype]:
        """The deterministic offspring batch of `generation`."""
        mutation = self.config.mutation
        batch = []
        for index in range(mutation.batch_size):
            rng = offspring_rng(self.config.master_seed, generation, index)
            if is_random_slot(index, mutation.random_injection_period):
                batch.append(self._random(rng))
            else:
                parent = self.archive.sample_parent(rng)
                batch.append(mutate(parent.genotype, mutation, rng))
        return batch

    def step(self) -> TelemetryRecord:
        if self.generation is None:
            return self.initialize()
        generation = self.generation + 1
        return self._commit(self.offspring(generation), generation)

    def run(
        self,
        generations: Optional[int] = None,
        on_generation: Optional[Callable[[Evolver, TelemetryRecord], None]] = None,
    ) -> Archive:
        """Run until `generations` (default: config) generations are complete."""
        target = self.config.generations if generations is None else generations
        if self.generation is None:
            record = self.initialize()
            if on_generation is not None:
                on_generation(self, record)
        while self.generation is not None and self.generation < target:
            record = self.step()
            if on_generation is not None:
                on_generation(self, record)
            if (
                constants.ENABLE_PROGRESS_LOG
                and record.generation % constants.PROGRESS_INTERVAL == 0
            ):
                self._log_progress(record)
        self.log_info(
            "Evolution finished",
            generation=self.generation,
            qd_score=round(self.archive.qd_score(), 4),
            best_score=round(self.archive.best_score(), 4),
            occupied_cells=len(self.archive),
        )
        return self.archive

    def _log_progress(self, record: TelemetryRecord) -> None:
        elapsed = time.monotonic() - self._started
        self.log_info(
            "Generation progress",
            generation=record.generation,
            qd_score=round(record.qd_score, 4),
            best_score=round(record.best_score, 4),
            occupied_cells=record.occupied_cells,
            coverage_percent=round(self.archive.coverage() * 100, 2),
            evaluations_per_second=round(self.evaluations / elapsed, 2)
            if elapsed > 0
            else 0,
        )


def evolve(config: RunConfig, generations: Optional[int] = None) -> Archive:
    """Run MAP-Elites from scratch; all randomness derives from the master seed."""
    with Evolver(config) as evolver:
        return evolver.run(generations)


def reevaluate_archive(
    archive: Archive,
    new_seeds: Sequence[int],
    horizon: int = constants.HORIZON,
    jobs: int = 1,
) -> Archive:
    """Re-evaluate every elite and re-insert it into a fresh archive."""
    if not len(archive):
        raise ValueError("Cannot re-evaluate an empty archive")
    genotypes = [elite.genotype for _, elite in archive.elites()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = evaluate_batch(
                genotypes, new_seeds, horizon, archive.overpopulation_cap, pool
            )
    else:
        results = evaluate_batch(
            genotypes, new_seeds, horizon, archive.overpopulation_cap
        )

    fresh = archive.empty_copy()
    for genotype, result in zip(genotypes, results):
        fresh.insert(genotype, result)
    logger.info(
        "Archive re-evaluated",
        seeds=list(new_seeds),
        horizon=horizon,
        size_before=len(archive),
        size_after=len(fresh),
        qd_before=round(archive.qd_score(), 4),
        qd_after=round(fresh.qd_score(), 4),
    )
    return fresh
