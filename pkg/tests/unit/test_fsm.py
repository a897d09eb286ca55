"""
Unit tests for entity class genotypes.
"""

import numpy as np
import pytest

from fortress_qd.core.fsm import (
    ActionKind,
    ActionNode,
    ClassSpace,
    ConditionKind,
    EntityClassDef,
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
    validate_class,
    validate_genotype,
)
from fortress_qd.exceptions import ConfigError
from tests.factories import edge, idle_class, node

ABC = ("A", "B", "C")


@pytest.mark.unit
class TestCapacity:
    """Node space size."""

    def test_fifteen_classes(self) -> None:
        assert max_nodes_per_class(15) == 94
        assert max_nodes_per_class(15) * 15 == 1410

    def test_single_class(self) -> None:
        assert max_nodes_per_class(1) == 10

    def test_rejects_empty_alphabet(self) -> None:
        with pytest.raises(ConfigError):
            max_nodes_per_class(0)

    def test_space_enumerates_every_kind_once(self) -> None:
        space = ClassSpace(default_alphabet(15))
        assert len(space.node_kinds) == space.capacity == 94
        assert len(set(space.node_kinds)) == 94

    def test_default_alphabet_bounds(self) -> None:
        assert default_alphabet(3) == ABC
        with pytest.raises(ConfigError):
            default_alphabet(0)


@pytest.mark.unit
class TestValidateClass:
    """Class invariant checks."""

    def test_valid_class(self) -> None:
        definition = EntityClassDef(
            "A",
            0,
            (node(ActionKind.MOVE), node(ActionKind.CHASE, "B")),
            (edge(0, 1, ConditionKind.WITHIN, "B", 3), edge(1, 0, ConditionKind.STEP, value=5)),
        )
        assert validate_class(definition, ABC) == []

    def test_dangling_edge(self) -> None:
        definition = EntityClassDef(
            "A", 0, (node(ActionKind.IDLE),) * 3, (edge(0, 99),)
        )
        violations = validate_class(definition, ABC)
        assert any("dangling edge" in v for v in violations)

    def test_unknown_target(self) -> None:
        definition = EntityClassDef("A", 0, (node(ActionKind.TAKE, "Z"),))
        assert any("unknown target" in v for v in validate_class(definition, ABC))

    def test_missing_and_unexpected_target(self) -> None:
        definition = EntityClassDef(
            "A", 0, (ActionNode(ActionKind.PUSH), ActionNode(ActionKind.IDLE, "B"))
        )
        violations = validate_class(definition, ABC)
        assert any("missing target" in v for v in violations)
        assert any("unexpected target" in v for v in violations)

    def test_condition_parameters(self) -> None:
        definition = EntityClassDef(
            "A",
            0,
            (node(ActionKind.IDLE),),
            (
                edge(0, 0, ConditionKind.STEP),
                edge(0, 0, ConditionKind.TOUCH),
                edge(0, 0, ConditionKind.NONE, "A"),
            ),
        )
        violations = validate_class(definition, ABC)
        assert len(violations) == 3

    def test_full_class_with_repeated_kinds(self) -> None:
        space = ClassSpace(ABC)
        kinds = list(space.node_kinds)
        kinds[-1] = kinds[0]
        definition = EntityClassDef("A", 0, tuple(kinds))
        assert any("every node kind" in v for v in validate_class(definition, ABC))
        assert validate_class(EntityClassDef("A", 0, space.node_kinds), ABC) == []

    def test_too_many_nodes(self) -> None:
        definition = EntityClassDef("A", 0, (node(ActionKind.IDLE),) * 23)
        assert any("too many nodes" in v for v in validate_class(definition, ABC))

    def test_no_nodes(self) -> None:
        assert validate_class(EntityClassDef("A", 0, ()), ABC) == ["class has no nodes"]


@pytest.mark.unit
class TestValidateGenotype:
    """Fortress-level checks."""

    def test_minimal_is_valid(self, minimal_genotype: FortressGenotype) -> None:
        assert validate_genotype(minimal_genotype) == []

    def test_interior_is_78_tiles(self, minimal_genotype: FortressGenotype) -> None:
        assert len(minimal_genotype.interior_tiles()) == 78

    def test_reserved_glyph(self) -> None:
        genotype = FortressGenotype((idle_class("#", 0),))
        assert any("reserved" in v for v in validate_genotype(genotype))

    def test_duplicate_glyphs(self) -> None:
        genotype = FortressGenotype((idle_class("A", 0), idle_class("A", 1)))
        assert any("not unique" in v for v in validate_genotype(genotype))

    def test_classes_out_of_glyph_order(self) -> None:
        genotype = FortressGenotype((idle_class("B", 0), idle_class("A", 1)))
        assert any("glyph order" in v for v in validate_genotype(genotype))

    def test_placement_on_wall(self) -> None:
        genotype = FortressGenotype((idle_class("A", 0),), (Placement("A", 0, 3),))
        assert any("outside the walls" in v for v in validate_genotype(genotype))

    def test_placement_unknown_class(self) -> None:
        genotype = FortressGenotype((idle_class("A", 0),), (Placement("B", 2, 2),))
        assert any("unknown class" in v for v in validate_genotype(genotype))


@pytest.mark.unit
class TestOutgoing:
    """Edge priority ordering."""

    def test_priority_then_insertion_order(self) -> None:
        definition = EntityClassDef(
            "A",
            0,
            (node(ActionKind.IDLE),) * 2,
            (
                edge(0, 1, ConditionKind.NONE),
                edge(0, 1, ConditionKind.STEP, value=2),
                edge(0, 0, ConditionKind.TOUCH, "A"),
                edge(1, 0, ConditionKind.TOUCH, "A"),
                edge(0, 0, ConditionKind.STEP, value=3),
            ),
        )
        assert [i for i, _ in definition.outgoing(0)] == [2, 1, 4, 0]
        assert [i for i, _ in definition.outgoing(1)] == [3]


@pytest.mark.unit
class TestRandomAndEdits:
    """Random construction and edit operations keep classes valid."""

    def test_random_class_has_distinct_kinds(self, rng: np.random.Generator) -> None:
        space = ClassSpace(ABC)
        definition = random_class("A", 0, space.capacity, space, rng)
        assert len(set(definition.nodes)) == space.capacity
        assert definition.edge_count == space.capacity
        assert validate_class(definition, ABC) == []

    def test_random_class_budget_bounds(self, rng: np.random.Generator) -> None:
        space = ClassSpace(ABC)
        with pytest.raises(ValueError):
            random_class("A", 0, 0, space, rng)
        with pytest.raises(ValueError):
            random_class("A", 0, space.capacity + 1, space, rng)

    def test_random_class_is_deterministic(self) -> None:
        space = ClassSpace(ABC)
        first = random_class("A", 0, 5, space, np.random.default_rng(3))
        second = random_class("A", 0, 5, space, np.random.default_rng(3))
        assert first == second

    def test_add_nodes_clamps_at_capacity(self, rng: np.random.Generator) -> None:
        space = ClassSpace(ABC)
        definition = random_class("A", 0, space.capacity - 2, space, rng)
        grown = add_nodes(definition, 10, space, rng)
        assert grown.node_count == space.capacity
        assert len(set(grown.nodes)) == space.capacity
        assert add_nodes(grown, 3, space, rng) is grown

    def test_delete_nodes_keeps_one_and_reindexes(self, rng: np.random.Generator) -> None:
        definition = EntityClassDef(
            "A",
            0,
            (node(ActionKind.IDLE), node(ActionKind.MOVE), node(ActionKind.DIE)),
            (edge(0, 2), edge(2, 1), edge(1, 0)),
        )
        shrunk = delete_nodes(definition, 10, rng)
        assert shrunk.node_count == 1
        assert all(e.source == 0 and e.destination == 0 for e in shrunk.edges)
        assert validate_class(shrunk, ABC) == []

        one = delete_nodes(definition, 1, rng)
        assert one.node_count == 2
        assert one.edge_count == 1
        assert validate_class(one, ABC) == []

    def test_edge_edits(self, rng: np.random.Generator) -> None:
        space = ClassSpace(ABC)
        definition = idle_class("A", 0)
        assert delete_edge(definition, rng) is definition
        assert alter_edge(definition, space, rng) is definition
        grown = add_edge(definition, space, rng)
        assert grown.edge_count == 1
        altered = alter_edge(grown, space, rng)
        assert altered.edge_count == 1
        assert validate_class(altered, ABC) == []
        assert delete_edge(grown, rng).edge_count == 0

    def test_alter_nodes_preserves_edges(self, rng: np.random.Generator) -> None:
        space = ClassSpace(ABC)
        definition = random_class("A", 0, 6, space, rng)
        altered = alter_nodes(definition, 3, space, rng)
        assert altered.edges == definition.edges
        assert altered.node_count == 6
        assert validate_class(altered, ABC) == []

    def test_full_class_keeps_every_kind(self) -> None:
        space = ClassSpace(default_alphabet(15))
        full_space = set(space.node_kinds)
        for seed in range(50):
            gen = np.random.default_rng(seed)
            full = random_class("A", 0, space.capacity, space, gen)
            altered = alter_nodes(full, 3, space, gen)
            assert set(altered.nodes) == full_space
            assert altered.edges == full.edges
            assert validate_class(altered, space.alphabet) == []

    def test_refilling_after_alter_reaches_every_kind(self) -> None:
        space = ClassSpace(default_alphabet(15))
        for seed in range(50):
            gen = np.random.default_rng(seed)
            partial = random_class("A", 0, space.capacity - 4, space, gen)
            altered = alter_nodes(partial, 10, space, gen)
            refilled = add_nodes(altered, 10, space, gen)
            assert refilled.node_count == space.capacity
            assert set(refilled.nodes) == set(space.node_kinds)
            assert validate_class(refilled, space.alphabet) == []
            assert set(alter_nodes(refilled, 5, space, gen).nodes) == set(space.node_kinds)

    def test_sampled_conditions_are_in_range(self, rng: np.random.Generator) -> None:
        space = ClassSpace(ABC, step_max=4, within_max=6)
        for _ in range(500):
            condition = space.sample_condition(rng)
            if condition.kind is ConditionKind.STEP:
                assert 1 <= (condition.value or 0) <= 4
            if condition.kind is ConditionKind.WITHIN:
                assert 1 <= (condition.value or 0) <= 6
