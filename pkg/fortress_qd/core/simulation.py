"""
Fortress simulation engine.

Runs deterministic, seeded rollouts of a `FortressGenotype`. Each tick every
instance alive at tick start acts once in ascending instance_id order, then
takes the single highest-priority satisfied edge out of its current node.
The engine tracks which nodes and edges each class has explored, logs
per-class populations every tick and, optionally, a replayable record stream.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

import numpy as np

import constants
from fortress_qd.core.fsm import (
    ActionKind,
    ActionNode,
    ConditionEdge,
    ConditionKind,
    EntityClassDef,
    FortressGenotype,
)
from fortress_qd.exceptions import SimulationError

# north, south, east, west
DIRECTIONS: tuple[tuple[int, int], ...] = ((0, -1), (0, 1), (1, 0), (-1, 0))

# Event actions written to the rollout log besides node actions
EVENT_INIT = "init"
EVENT_SPAWNED = "spawned"
EVENT_REMOVED = "removed"
EVENT_TRANSFORMED = "transformed"


class Termination(str, Enum):
    """Rollout status."""

    RUNNING = "running"
    STEP_LIMIT = "step_limit"
    OVERPOPULATION = "overpopulation"


@dataclass(slots=True)
class EntityInstance:
    """A live agent of some class occupying a tile."""

    instance_id: int
    glyph: str
    x: int
    y: int
    current_node: int = 0
    ticks_in_node: int = 0

    @property
    def position(self) -> tuple[int, int]:
        return (self.x, self.y)


@dataclass(frozen=True)
class RolloutRecord:
    """One logged event; glyph, position and node describe the post-event state."""

    tick: int
    instance_id: int
    glyph: str
    x: int
    y: int
    node: int
    action: str
    edge: Optional[int] = None


@dataclass
class RolloutLog:
    seed: int
    horizon: int
    records: list[RolloutRecord]
    termination: Termination
    final_count: int
    ticks: int


def action_token(node: ActionNode) -> str:
    return node.kind.value if node.target is None else f"{node.kind.value}:{node.target}"


@dataclass(eq=False)
class SimulationState:
    """Live world of one rollout. Confined to a single execution context."""

    genotype: FortressGenotype
    seed: int
    horizon: int
    overpopulation_cap: int
    rng: np.random.Generator
    instances: dict[int, EntityInstance] = field(default_factory=dict)
    next_instance_id: int = 0
    tick: int = 0
    visited_nodes: dict[str, set[int]] = field(default_factory=dict)
    fired_edges: dict[str, set[int]] = field(default_factory=dict)
    population_log: list[tuple[int, ...]] = field(default_factory=list)
    termination: Termination = Termination.RUNNING
    records: Optional[list[RolloutRecord]] = None
    classes: dict[str, EntityClassDef] = field(default_factory=dict)
    edge_order: dict[str, list[list[tuple[int, ConditionEdge]]]] = field(
        default_factory=dict
    )
    by_glyph: dict[str, dict[int, EntityInstance]] = field(default_factory=dict)

    @property
    def live_count(self) -> int:
        return len(self.instances)

    @property
    def running(self) -> bool:
        return self.termination is Termination.RUNNING

    def instances_of(self, glyph: str) -> Iterator[EntityInstance]:
        return iter(self.by_glyph.get(glyph, {}).values())

    def population(self) -> tuple[int, ...]:
        return tuple(len(self.by_glyph[g]) for g in self.genotype.alphabet)

    def to_dict(self) -> dict[str, Any]:
        """Canonical plain-data view used for comparisons and debugging."""
        return {
            "seed": self.seed,
            "tick": self.tick,
            "termination": self.termination.value,
            "next_instance_id": self.next_instance_id,
            "instances": [
                [i.instance_id, i.glyph, i.x, i.y, i.current_node, i.ticks_in_node]
                for i in self.instances.values()
            ],
            "visited_nodes": {g: sorted(s) for g, s in self.visited_nodes.items()},
            "fired_edges": {g: sorted(s) for g, s in self.fired_edges.items()},
            "population_log": [list(row) for row in self.population_log],
        }


def manhattan(a: EntityInstance, x: int, y: int) -> int:
    return abs(a.x - x) + abs(a.y - y)


def _record(
    state: SimulationState,
    tick: int,
    instance: EntityInstance,
    action: str,
    edge: Optional[int] = None,
) -> None:
    if state.records is not None:
        state.records.append(
            RolloutRecord(
                tick,
                instance.instance_id,
                instance.glyph,
                instance.x,
                instance.y,
                instance.current_node,
                action,
                edge,
            )
        )


def _spawn(
    state: SimulationState, glyph: str, x: int, y: int, tick: int, event: str
) -> EntityInstance:
    instance = EntityInstance(state.next_instance_id, glyph, x, y)
    state.next_instance_id += 1
    state.instances[instance.instance_id] = instance
    state.by_glyph[glyph][instance.instance_id] = instance
    state.visited_nodes[glyph].add(0)
    _record(state, tick, instance, event)
    return instance


def _remove(state: SimulationState, instance: EntityInstance) -> None:
    del state.instances[instance.instance_id]
    del state.by_glyph[instance.glyph][instance.instance_id]


def init_state(
    genotype: FortressGenotype,
    seed: int,
    horizon: int = constants.HORIZON,
    overpopulation_cap: int = constants.OVERPOPULATION_CAP,
    record: bool = True,
) -> SimulationState:
    """Create the tick-0 world for `genotype` under `seed`."""
    state = SimulationState(
        genotype=genotype,
        seed=seed,
        horizon=horizon,
        overpopulation_cap=overpopulation_cap,
        rng=np.random.default_rng(seed),
        records=[] if record else None,
    )
    for definition in genotype.classes:
        glyph = definition.glyph
        state.classes[glyph] = definition
        state.edge_order[glyph] = [
            definition.outgoing(node) for node in range(definition.node_count)
        ]
        state.visited_nodes[glyph] = set()
        state.fired_edges[glyph] = set()
        state.by_glyph[glyph] = {}

    for placement in genotype.initial_instances:
        _spawn(state, placement.glyph, placement.x, placement.y, 0, EVENT_INIT)

    state.population_log.append(state.population())
    if state.live_count >= overpopulation_cap:
        state.termination = Termination.OVERPOPULATION
    return state


def _interior(state: SimulationState, x: int, y: int) -> bool:
    return 0 < x < state.genotype.width - 1 and 0 < y < state.genotype.height - 1


def _random_direction(state: SimulationState) -> tuple[int, int]:
    return DIRECTIONS[int(state.rng.integers(len(DIRECTIONS)))]


def _nearest(
    state: SimulationState, instance: EntityInstance, glyph: str
) -> Optional[EntityInstance]:
    best: Optional[EntityInstance] = None
    best_key: tuple[int, int] = (0, 0)
    for other in state.instances_of(glyph):
        if other is instance:
            continue
        key = (manhattan(other, instance.x, instance.y), other.instance_id)
        if best is None or key < best_key:
            best, best_key = other, key
    return best


def _spawn_near(
    state: SimulationState, actor: EntityInstance, glyph: str, tick: int
) -> None:
    if state.live_count >= state.overpopulation_cap:
        return
    options = [
        (actor.x + dx, actor.y + dy)
        for dx, dy in DIRECTIONS
        if _interior(state, actor.x + dx, actor.y + dy)
    ]
    if options:
        x, y = options[int(state.rng.integers(len(options)))]
    else:
        x, y = actor.x, actor.y
    _spawn(state, glyph, x, y, tick, EVENT_SPAWNED)


def apply_action(state: SimulationState, instance: EntityInstance, tick: int) -> bool:
    """Execute the action of the instance's current node.

    Returns False when the instance removed itself.
    """
    node = state.classes[instance.glyph].nodes[instance.current_node]
    kind = node.kind
    target = node.target or ""

    if kind is ActionKind.IDLE:
        return True

    if kind is ActionKind.MOVE:
        dx, dy = _random_direction(state)
        if _interior(state, instance.x + dx, instance.y + dy):
            instance.x += dx
            instance.y += dy
        return True

    if kind is ActionKind.DIE:
        _remove(state, instance)
        return False

    if kind is ActionKind.CLONE:
        _spawn_near(state, instance, instance.glyph, tick)
        return True

    if kind is ActionKind.PUSH:
        dx, dy = _random_direction(state)
        tx, ty = instance.x + dx, instance.y + dy
        if not _interior(state, tx, ty):
            return True
        victims = [
            o
            for o in state.instances_of(target)
            if o is not instance and o.x == tx and o.y == ty
        ]
        if victims:
            victim = min(victims, key=lambda o: o.instance_id)
            bx, by = tx + dx, ty + dy
            if not _interior(state, bx, by):
                return True
            victim.x, victim.y = bx, by
        instance.x, instance.y = tx, ty
        return True

    if kind is ActionKind.TAKE:
        prey = _nearest(state, instance, target)
        if prey is not None:
            _remove(state, prey)
            _record(state, tick, prey, EVENT_REMOVED)
        return True

    if kind is ActionKind.CHASE:
        quarry = _nearest(state, instance, target)
        if quarry is None:
            return True
        axes = []
        if quarry.x != instance.x:
            axes.append((1 if quarry.x > instance.x else -1, 0))
        if quarry.y != instance.y:
            axes.append((0, 1 if quarry.y > instance.y else -1))
        if len(axes) == 2 and int(state.rng.integers(2)) == 1:
            axes.reverse()
        for dx, dy in axes:
            if _interior(state, instance.x + dx, instance.y + dy):
                instance.x += dx
                instance.y += dy
                break
        return True

    if kind is ActionKind.ADD:
        _spawn_near(state, instance, target, tick)
        return True

    if kind is ActionKind.TRANSFORM:
        previous = instance.glyph
        del state.by_glyph[previous][instance.instance_id]
        instance.glyph = target
        instance.current_node = 0
        instance.ticks_in_node = 0
        state.by_glyph[target][instance.instance_id] = instance
        state.visited_nodes[target].add(0)
        _record(state, tick, instance, f"{EVENT_TRANSFORMED}:{previous}")
        return True

    if kind is ActionKind.MOVE_WALL:
        dx, dy = _random_direction(state)
        tx, ty = instance.x + dx, instance.y + dy
        if not _interior(state, tx, ty):
            return True
        if any(
            o is not instance and o.x == tx and o.y == ty
            for o in state.instances_of(target)
        ):
            return True
        instance.x, instance.y = tx, ty
        return True

    raise SimulationError(f"Unknown action kind: {kind}")


def eval_condition(
    edge: ConditionEdge, instance: EntityInstance, state: SimulationState
) -> bool:
    """Whether `edge`'s guard holds for `instance` in the current world."""
    condition = edge.condition
    kind = condition.kind
    if kind is ConditionKind.NONE:
        return True
    if kind is ConditionKind.STEP:
        ticks = instance.ticks_in_node
        return ticks > 0 and ticks % (condition.value or 1) == 0

    glyph = condition.glyph or ""
    if kind is ConditionKind.WITHIN:
        reach = condition.value or 0
        return any(
            o is not instance and manhattan(o, instance.x, instance.y) <= reach
            for o in state.instances_of(glyph)
        )
    if kind is ConditionKind.NEXT_TO:
        return any(
            o is not instance and manhattan(o, instance.x, instance.y) == 1
            for o in state.instances_of(glyph)
        )
    if kind is ConditionKind.TOUCH:
        return any(
            o is not instance and o.x == instance.x and o.y == instance.y
            for o in state.instances_of(glyph)
        )
    raise SimulationError(f"Unknown condition kind: {kind}")


def step(state: SimulationState) -> SimulationState:
    """Advance the world by one tick."""
    if not state.running:
        raise SimulationError(
            f"Cannot step a terminated rollout ({state.termination.value})"
        )
    tick = state.tick + 1

    for instance_id in list(state.instances):
        instance = state.instances.get(instance_id)
        if instance is None:
            continue
        token = action_token(
            state.classes[instance.glyph].nodes[instance.current_node]
        )
        if not apply_action(state, instance, tick):
            _record(state, tick, instance, token)
            continue

        instance.ticks_in_node += 1
        fired: Optional[int] = None
        for edge_index, edge in state.edge_order[instance.glyph][instance.current_node]:
            if eval_condition(edge, instance, state):
                instance.current_node = edge.destination
                instance.ticks_in_node = 0
                state.visited_nodes[instance.glyph].add(edge.destination)
                state.fired_edges[instance.glyph].add(edge_index)
                fired = edge_index
                break
        _record(state, tick, instance, token, fired)

    state.tick = tick
    state.population_log.append(state.population())
    if state.live_count >= state.overpopulation_cap:
        state.termination = Termination.OVERPOPULATION
    elif tick >= state.horizon:
        state.termination = Termination.STEP_LIMIT
    return state


def simulate(
    genotype: FortressGenotype,
    seed: int,
    horizon: int = constants.HORIZON,
    overpopulation_cap: int = constants.OVERPOPULATION_CAP,
    record: bool = True,
    on_tick: Optional[Callable[[SimulationState], None]] = None,
) -> tuple[RolloutLog, SimulationState]:
    """Run a full rollout and return its log and final state."""
    if horizon < 1:
        raise SimulationError(f"horizon must be at least 1, got {horizon}")
    state = init_state(genotype, seed, horizon, overpopulation_cap, record)
    while state.running:
        step(state)
        if on_tick is not None:
            on_tick(state)
    log = RolloutLog(
        seed=seed,
        horizon=horizon,
        records=state.records if state.records is not None else [],
        termination=state.termination,
        final_count=state.live_count,
        ticks=state.tick,
    )
    return log, state


def count_exploration(
    genotype: FortressGenotype,
    visited_nodes: dict[str, set[int]],
    fired_edges: dict[str, set[int]],
) -> tuple[int, int]:
    explored = sum(
        len(visited_nodes.get(g, ())) + len(fired_edges.get(g, ()))
        for g in genotype.alphabet
    )
    total = sum(c.node_count + c.edge_count for c in genotype.classes)
    return explored, total


def exploration_counts(state: SimulationState) -> tuple[int, int]:
    """(explored nodes + edges, total nodes + edges) over all classes."""
    return count_exploration(state.genotype, state.visited_nodes, state.fired_edges)


def replay_exploration(
    genotype: FortressGenotype, log: RolloutLog
) -> tuple[int, int]:
    """Recompute exploration counts from a rollout log alone."""
    visited: dict[str, set[int]] = defaultdict(set)
    fired: dict[str, set[int]] = defaultdict(set)
    for record in log.records:
        visited[record.glyph].add(record.node)
        if record.edge is not None:
            fired[record.glyph].add(record.edge)
    return count_exploration(genotype, visited, fired)


def replay_population(
    alphabet: tuple[str, ...], log: RolloutLog
) -> list[tuple[int, ...]]:
    """Recompute per-tick per-class counts from a rollout log alone."""
    counts = dict.fromkeys(alphabet, 0)
    rows: list[tuple[int, ...]] = []
    records = iter(log.records)
    pending = next(records, None)
    for tick in range(log.ticks + 1):
        while pending is not None and pending.tick == tick:
            action = pending.action
            if action in (EVENT_INIT, EVENT_SPAWNED):
                counts[pending.glyph] += 1
            elif action == EVENT_REMOVED or action == ActionKind.DIE.value:
                counts[pending.glyph] -= 1
            elif action.startswith(EVENT_TRANSFORMED + ":"):
                counts[action.split(":", 1)[1]] -= 1
                counts[pending.glyph] += 1
            pending = next(records, None)
        rows.append(tuple(counts[g] for g in alphabet))
    return rows
