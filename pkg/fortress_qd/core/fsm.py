"""
Entity class genotypes.

An entity class is a glyph plus a finite-state machine whose nodes are actions
and whose edges are prioritised conditions. This module defines those value
types, the fortress-level genotype that bundles them with initial placements,
their validity rules, random generation, and the edit operations used by
mutation. All edits return new values.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np

import constants
from fortress_qd.exceptions import ConfigError


class ActionKind(str, Enum):
    """Action performed by an instance residing in a node."""

    IDLE = "idle"
    MOVE = "move"
    DIE = "die"
    CLONE = "clone"
    PUSH = "push"
    TAKE = "take"
    CHASE = "chase"
    ADD = "add"
    TRANSFORM = "transform"
    MOVE_WALL = "move_wall"

    @property
    def targeted(self) -> bool:
        return self in TARGETED_ACTIONS


UNTARGETED_ACTIONS = (
    ActionKind.IDLE,
    ActionKind.MOVE,
    ActionKind.DIE,
    ActionKind.CLONE,
)
TARGETED_ACTIONS = (
    ActionKind.PUSH,
    ActionKind.TAKE,
    ActionKind.CHASE,
    ActionKind.ADD,
    ActionKind.TRANSFORM,
    ActionKind.MOVE_WALL,
)


class ConditionKind(str, Enum):
    """Guard of a transition edge."""

    NONE = "none"
    STEP = "step"
    WITHIN = "within"
    NEXT_TO = "nextTo"
    TOUCH = "touch"


# Higher wins
CONDITION_PRIORITY = {
    ConditionKind.NONE: 0,
    ConditionKind.STEP: 1,
    ConditionKind.WITHIN: 2,
    ConditionKind.NEXT_TO: 3,
    ConditionKind.TOUCH: 4,
}
GLYPH_CONDITIONS = (ConditionKind.WITHIN, ConditionKind.NEXT_TO, ConditionKind.TOUCH)
VALUED_CONDITIONS = (ConditionKind.STEP, ConditionKind.WITHIN)
CONDITION_KINDS = tuple(ConditionKind)


@dataclass(frozen=True)
class ActionNode:
    """One FSM state: an action kind and, for targeted kinds, a glyph."""

    kind: ActionKind
    target: Optional[str] = None

    def __str__(self) -> str:
        if self.target is None:
            return self.kind.value
        return f"{self.kind.value}({self.target})"


@dataclass(frozen=True)
class Condition:
    """Edge guard; `glyph` and `value` are set only where the kind uses them."""

    kind: ConditionKind
    glyph: Optional[str] = None
    value: Optional[int] = None

    @property
    def priority(self) -> int:
        return CONDITION_PRIORITY[self.kind]

    def __str__(self) -> str:
        args = [str(a) for a in (self.glyph, self.value) if a is not None]
        return f"{self.kind.value}({','.join(args)})" if args else self.kind.value


@dataclass(frozen=True)
class ConditionEdge:
    """Transition from `source` to `destination` guarded by `condition`."""

    source: int
    destination: int
    condition: Condition


@dataclass(frozen=True)
class EntityClassDef:
    """A species definition shared by all of its instances."""

    glyph: str
    class_id: int
    nodes: tuple[ActionNode, ...]
    edges: tuple[ConditionEdge, ...] = ()

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def outgoing(self, node: int) -> list[tuple[int, ConditionEdge]]:
        """Edges leaving `node` as (edge index, edge), highest priority first.

        Ties within a priority rank keep insertion order.
        """
        candidates = [(i, e) for i, e in enumerate(self.edges) if e.source == node]
        return sorted(candidates, key=lambda item: -item[1].condition.priority)


@dataclass(frozen=True)
class Placement:
    """Initial instance of class `glyph` at tile (x, y)."""

    glyph: str
    x: int
    y: int


@dataclass(frozen=True)
class FortressGenotype:
    """The evolvable unit: entity classes plus initial placements."""

    classes: tuple[EntityClassDef, ...]
    initial_instances: tuple[Placement, ...] = ()
    width: int = constants.FORTRESS_WIDTH
    height: int = constants.FORTRESS_HEIGHT

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def alphabet(self) -> tuple[str, ...]:
        return tuple(c.glyph for c in self.classes)

    @property
    def total_nodes(self) -> int:
        return sum(c.node_count for c in self.classes)

    @property
    def total_edges(self) -> int:
        return sum(c.edge_count for c in self.classes)

    def class_for(self, glyph: str) -> EntityClassDef:
        for definition in self.classes:
            if definition.glyph == glyph:
                return definition
        raise KeyError(glyph)

    def is_interior(self, x: int, y: int) -> bool:
        return 0 < x < self.width - 1 and 0 < y < self.height - 1

    def interior_tiles(self) -> list[tuple[int, int]]:
        """Traversable tiles in row-major order."""
        return [
            (x, y) for y in range(1, self.height - 1) for x in range(1, self.width - 1)
        ]

    def replace_class(self, definition: EntityClassDef) -> FortressGenotype:
        classes = tuple(
            definition if c.glyph == definition.glyph else c for c in self.classes
        )
        return dataclasses.replace(self, classes=classes)

    def space(self, step_max: int = constants.STEP_MAX) -> ClassSpace:
        return ClassSpace.for_fortress(self.alphabet, self.width, self.height, step_max)


def max_nodes_per_class(n: int) -> int:
    """Size of the action-node space for an alphabet of `n` glyphs."""
    if n < 1:
        raise ConfigError([f"n_classes: must be at least 1, got {n}"])
    return 6 * n + 4


def default_alphabet(n: int) -> tuple[str, ...]:
    if n < 1 or n > len(constants.GLYPH_POOL):
        raise ConfigError(
            [f"n_classes: must be between 1 and {len(constants.GLYPH_POOL)}, got {n}"]
        )
    return tuple(constants.GLYPH_POOL[:n])


@dataclass(frozen=True)
class ClassSpace:
    """Sampling space for nodes and edges of one fortress."""

    alphabet: tuple[str, ...]
    step_max: int = constants.STEP_MAX
    within_max: int = max(constants.FORTRESS_WIDTH, constants.FORTRESS_HEIGHT)

    @classmethod
    def for_fortress(
        cls,
        alphabet: Sequence[str],
        width: int,
        height: int,
        step_max: int = constants.STEP_MAX,
    ) -> ClassSpace:
        return cls(tuple(alphabet), step_max=step_max, within_max=max(width, height))

    @cached_property
    def node_kinds(self) -> tuple[ActionNode, ...]:
        kinds = [ActionNode(kind) for kind in UNTARGETED_ACTIONS]
        kinds.extend(
            ActionNode(kind, glyph)
            for kind in TARGETED_ACTIONS
            for glyph in self.alphabet
        )
        return tuple(kinds)

    @property
    def capacity(self) -> int:
        return max_nodes_per_class(len(self.alphabet))

    def sample_node(self, rng: np.random.Generator) -> ActionNode:
        return self.node_kinds[int(rng.integers(self.capacity))]

    def sample_condition(self, rng: np.random.Generator) -> Condition:
        kind = CONDITION_KINDS[int(rng.integers(len(CONDITION_KINDS)))]
        if kind is ConditionKind.STEP:
            return Condition(kind, value=int(rng.integers(1, self.step_max + 1)))
        if kind is ConditionKind.WITHIN:
            glyph = self.alphabet[int(rng.integers(len(self.alphabet)))]
            return Condition(
                kind, glyph=glyph, value=int(rng.integers(1, self.within_max + 1))
            )
        if kind in GLYPH_CONDITIONS:
            glyph = self.alphabet[int(rng.integers(len(self.alphabet)))]
            return Condition(kind, glyph=glyph)
        return Condition(kind)

    def sample_edge(self, node_count: int, rng: np.random.Generator) -> ConditionEdge:
        source = int(rng.integers(node_count))
        destination = int(rng.integers(node_count))
        return ConditionEdge(source, destination, self.sample_condition(rng))


def validate_class(definition: EntityClassDef, alphabet: Iterable[str]) -> list[str]:
    """Return the invariant violations of `definition`; empty means valid."""
    glyphs = set(alphabet)
    violations: list[str] = []
    capacity = max_nodes_per_class(max(len(glyphs), 1))

    if definition.node_count < 1:
        violations.append("class has no nodes")
    if definition.node_count > capacity:
        violations.append(
            f"too many nodes: {definition.node_count} > capacity {capacity}"
        )
    elif (
        definition.node_count == capacity
        and len(set(definition.nodes)) != definition.node_count
    ):
        violations.append("class at capacity must hold every node kind exactly once")

    for index, node in enumerate(definition.nodes):
        if node.kind.targeted:
            if node.target is None:
                violations.append(f"node {index}: missing target for {node.kind.value}")
            elif node.target not in glyphs:
                violations.append(f"node {index}: unknown target '{node.target}'")
        elif node.target is not None:
            violations.append(
                f"node {index}: unexpected target for {node.kind.value}"
            )

    for index, edge in enumerate(definition.edges):
        for end in (edge.source, edge.destination):
            if not 0 <= end < definition.node_count:
                violations.append(f"edge {index}: dangling edge to node {end}")
                break
        condition = edge.condition
        if condition.kind in GLYPH_CONDITIONS:
            if condition.glyph is None:
                violations.append(f"edge {index}: missing glyph for {condition.kind.value}")
            elif condition.glyph not in glyphs:
                violations.append(f"edge {index}: unknown target '{condition.glyph}'")
        elif condition.glyph is not None:
            violations.append(f"edge {index}: unexpected glyph for {condition.kind.value}")
        if condition.kind in VALUED_CONDITIONS:
            if condition.value is None or condition.value < 1:
                violations.append(
                    f"edge {index}: {condition.kind.value} needs a positive integer"
                )
        elif condition.value is not None:
            violations.append(f"edge {index}: unexpected integer for {condition.kind.value}")

    return violations


def validate_genotype(genotype: FortressGenotype) -> list[str]:
    """Return the invariant violations of a whole fortress."""
    violations: list[str] = []
    if genotype.width < 3 or genotype.height < 3:
        violations.append(
            f"fortress {genotype.width}x{genotype.height} has no interior tiles"
        )
    if genotype.n_classes < 1:
        violations.append("fortress has no entity classes")
        return violations

    alphabet = genotype.alphabet
    if len(set(alphabet)) != len(alphabet):
        violations.append("glyphs are not unique across classes")
    elif list(alphabet) != sorted(alphabet):
        violations.append("classes are not listed in glyph order")
    reserved = (constants.WALL_GLYPH, constants.EMPTY_GLYPH, constants.FIELD_PLACEHOLDER)
    for glyph in alphabet:
        if len(glyph) != 1 or not glyph.isprintable() or glyph.isspace():
            violations.append(f"glyph {glyph!r} is not a printable character")
        if glyph in reserved:
            violations.append(f"glyph '{glyph}' is reserved")

    for definition in genotype.classes:
        violations.extend(
            f"class '{definition.glyph}': {v}"
            for v in validate_class(definition, alphabet)
        )

    known = set(alphabet)
    for index, placement in enumerate(genotype.initial_instances):
        if placement.glyph not in known:
            violations.append(f"placement {index}: unknown class '{placement.glyph}'")
        if not genotype.is_interior(placement.x, placement.y):
            violations.append(
                f"placement {index}: ({placement.x}, {placement.y}) is outside the walls"
            )
    return violations


def random_edges(
    node_count: int, space: ClassSpace, rng: np.random.Generator
) -> tuple[ConditionEdge, ...]:
    """Seed one random edge per node."""
    return tuple(space.sample_edge(node_count, rng) for _ in range(node_count))


def random_class(
    glyph: str,
    class_id: int,
    node_budget: int,
    space: ClassSpace,
    rng: np.random.Generator,
) -> EntityClassDef:
    """Build a class with `node_budget` distinct node kinds and seeded edges."""
    if not 1 <= node_budget <= space.capacity:
        raise ValueError(
            f"node budget {node_budget} outside [1, {space.capacity}]"
        )
    picks = rng.choice(space.capacity, size=node_budget, replace=False)
    nodes = tuple(space.node_kinds[int(i)] for i in picks)
    return EntityClassDef(glyph, class_id, nodes, random_edges(node_budget, space, rng))


def add_nodes(
    definition: EntityClassDef,
    count: int,
    space: ClassSpace,
    rng: np.random.Generator,
) -> EntityClassDef:
    """Append up to `count` kinds not yet present, clamped at capacity.

    A class that reaches capacity ends up holding every kind exactly once:
    repeated kinds are rewritten in place to the remaining absent kinds.
    """
    room = space.capacity - definition.node_count
    count = min(count, room)
    if count <= 0:
        return definition
    present = set(definition.nodes)
    absent = [kind for kind in space.node_kinds if kind not in present]
    order = [absent[int(i)] for i in rng.permutation(len(absent))]
    if count < room:
        return dataclasses.replace(definition, nodes=definition.nodes + tuple(order[:count]))

    nodes = list(definition.nodes)
    seen: set[ActionNode] = set()
    fill = iter(order)
    for index, kind in enumerate(nodes):
        if kind in seen:
            nodes[index] = next(fill)
        seen.add(nodes[index])
    nodes.extend(fill)
    return dataclasses.replace(definition, nodes=tuple(nodes))


def delete_nodes(
    definition: EntityClassDef, count: int, rng: np.random.Generator
) -> EntityClassDef:
    """Remove up to `count` nodes, keeping at least one and reindexing edges."""
    count = min(count, definition.node_count - 1)
    if count <= 0:
        return definition
    dropped = {int(i) for i in rng.choice(definition.node_count, size=count, replace=False)}
    remap: dict[int, int] = {}
    nodes: list[ActionNode] = []
    for index, node in enumerate(definition.nodes):
        if index not in dropped:
            remap[index] = len(nodes)
            nodes.append(node)
    edges = tuple(
        ConditionEdge(remap[e.source], remap[e.destination], e.condition)
        for e in definition.edges
        if e.source in remap and e.destination in remap
    )
    return dataclasses.replace(definition, nodes=tuple(nodes), edges=edges)


def alter_nodes(
    definition: EntityClassDef,
    count: int,
    space: ClassSpace,
    rng: np.random.Generator,
) -> EntityClassDef:
    """Rewrite up to `count` nodes in place; edges are preserved.

    Below capacity replacements come from the full space. At capacity they are
    drawn without replacement from the rewritten and absent kinds, so the class
    keeps every kind exactly once.
    """
    count = min(count, definition.node_count)
    if count <= 0:
        return definition
    nodes = list(definition.nodes)
    indices = [int(i) for i in rng.choice(definition.node_count, size=count, replace=False)]
    if definition.node_count < space.capacity:
        for index in indices:
            nodes[index] = space.sample_node(rng)
    else:
        rewritten = set(indices)
        kept = {kind for i, kind in enumerate(nodes) if i not in rewritten}
        pool = [kind for kind in space.node_kinds if kind not in kept]
        picks = rng.choice(len(pool), size=count, replace=False)
        for index, pick in zip(indices, picks):
            nodes[index] = pool[int(pick)]
    return dataclasses.replace(definition, nodes=tuple(nodes))


def add_edge(
    definition: EntityClassDef, space: ClassSpace, rng: np.random.Generator
) -> EntityClassDef:
    edge = space.sample_edge(definition.node_count, rng)
    return dataclasses.replace(definition, edges=definition.edges + (edge,))


def delete_edge(
    definition: EntityClassDef, rng: np.random.Generator
) -> EntityClassDef:
    if not definition.edges:
        return definition
    index = int(rng.integers(definition.edge_count))
    edges = definition.edges[:index] + definition.edges[index + 1 :]
    return dataclasses.replace(definition, edges=edges)


def alter_edge(
    definition: EntityClassDef, space: ClassSpace, rng: np.random.Generator
) -> EntityClassDef:
    if not definition.edges:
        return definition
    index = int(rng.integers(definition.edge_count))
    edges = list(definition.edges)
    edges[index] = dataclasses.replace(edges[index], condition=space.sample_condition(rng))
    return dataclasses.replace(definition, edges=tuple(edges))
