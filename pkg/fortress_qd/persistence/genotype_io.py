"""
Genotype document format (.fort).

A line-oriented, versioned text format:

    fortress-genotype v1
    size 15 8
    alphabet ABCDEFGHIJKLMNO
    class A 0
    node idle
    node chase B
    edge 0 1 within B 3
    edge 1 0 step - 5
    end
    ...
    instance A 3 4

Classes are written in glyph order, nodes and edges in index order, and
placements in their listed order. Edge conditions always carry the fields
kind, glyph, integer, with '-' for an unused field.
"""

from pathlib import Path
from typing import Optional, Union

import constants
from fortress_qd.core.fsm import (
    ActionKind,
    ActionNode,
    Condition,
    ConditionEdge,
    ConditionKind,
    EntityClassDef,
    FortressGenotype,
    Placement,
    validate_class,
    validate_genotype,
)
from fortress_qd.exceptions import GenotypeError, GenotypeParseError

HEADER = "fortress-genotype"
_DASH = constants.FIELD_PLACEHOLDER


def serialize_genotype(genotype: FortressGenotype) -> str:
    """Canonical text document of a valid genotype."""
    violations = validate_genotype(genotype)
    if violations:
        raise GenotypeError(violations)

    classes = sorted(genotype.classes, key=lambda c: c.glyph)
    lines = [
        f"{HEADER} v{constants.GENOTYPE_SCHEMA_VERSION}",
        f"size {genotype.width} {genotype.height}",
        f"alphabet {''.join(c.glyph for c in classes)}",
    ]
    for definition in classes:
        lines.append(f"class {definition.glyph} {definition.class_id}")
        for node in definition.nodes:
            target = f" {node.target}" if node.target is not None else ""
            lines.append(f"node {node.kind.value}{target}")
        for edge in definition.edges:
            condition = edge.condition
            glyph = condition.glyph if condition.glyph is not None else _DASH
            value = str(condition.value) if condition.value is not None else _DASH
            lines.append(
                f"edge {edge.source} {edge.destination} "
                f"{condition.kind.value} {glyph} {value}"
            )
        lines.append("end")
    for placement in genotype.initial_instances:
        lines.append(f"instance {placement.glyph} {placement.x} {placement.y}")
    return "\n".join(lines) + "\n"


def _int(token: str, line: int, field: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise GenotypeParseError(f"expected an integer, got '{token}'", line, field)


def _expect(parts: list[str], count: int, line: int, keyword: str) -> None:
    if len(parts) != count:
        raise GenotypeParseError(
            f"'{keyword}' takes {count - 1} fields, got {len(parts) - 1}", line, keyword
        )


class _ClassBuilder:
    def __init__(self, glyph: str, class_id: int, line: int) -> None:
        self.glyph = glyph
        self.class_id = class_id
        self.line = line
        self.nodes: list[ActionNode] = []
        self.edges: list[ConditionEdge] = []
        self.edge_lines: list[int] = []

    def build(self, alphabet: str) -> EntityClassDef:
        for edge, line in zip(self.edges, self.edge_lines):
            for end, field in ((edge.source, "source"), (edge.destination, "destination")):
                if not 0 <= end < len(self.nodes):
                    raise GenotypeParseError(
                        f"dangling edge: node {end} does not exist in class "
                        f"'{self.glyph}' ({len(self.nodes)} nodes)",
                        line,
                        field,
                    )
        definition = EntityClassDef(
            self.glyph, self.class_id, tuple(self.nodes), tuple(self.edges)
        )
        violations = validate_class(definition, alphabet)
        if violations:
            raise GenotypeParseError(
                f"class '{self.glyph}': {'; '.join(violations)}", self.line, "class"
            )
        return definition


def _parse_node(parts: list[str], line: int) -> ActionNode:
    if len(parts) not in (2, 3):
        raise GenotypeParseError("'node' takes a kind and an optional target", line, "node")
    try:
        kind = ActionKind(parts[1])
    except ValueError:
        raise GenotypeParseError(f"unknown action kind '{parts[1]}'", line, "kind")
    target = parts[2] if len(parts) == 3 else None
    return ActionNode(kind, target)


def _parse_edge(parts: list[str], line: int) -> ConditionEdge:
    _expect(parts, 6, line, "edge")
    source = _int(parts[1], line, "source")
    destination = _int(parts[2], line, "destination")
    try:
        kind = ConditionKind(parts[3])
    except ValueError:
        raise GenotypeParseError(f"unknown condition kind '{parts[3]}'", line, "condition")
    glyph = None if parts[4] == _DASH else parts[4]
    value = None if parts[5] == _DASH else _int(parts[5], line, "value")
    return ConditionEdge(source, destination, Condition(kind, glyph, value))


def parse_genotype(text: str) -> FortressGenotype:
    """Parse and validate a genotype document."""
    lines = text.splitlines()
    if not lines:
        raise GenotypeParseError("empty document", 1, "header")

    header = lines[0].split()
    if len(header) != 2 or header[0] != HEADER or not header[1].startswith("v"):
        raise GenotypeParseError(f"expected '{HEADER} v<version>'", 1, "header")
    version = header[1][1:]
    if version != str(constants.GENOTYPE_SCHEMA_VERSION):
        raise GenotypeParseError(f"unsupported schema version '{version}'", 1, "version")

    size: Optional[tuple[int, int]] = None
    alphabet: Optional[str] = None
    classes: list[EntityClassDef] = []
    placements: list[Placement] = []
    current: Optional[_ClassBuilder] = None

    for number, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if not parts:
            continue
        keyword = parts[0]

        if current is not None:
            if keyword == "node":
                current.nodes.append(_parse_node(parts, number))
            elif keyword == "edge":
                current.edges.append(_parse_edge(parts, number))
                current.edge_lines.append(number)
            elif keyword == "end":
                classes.append(current.build(alphabet or ""))
                current = None
            else:
                raise GenotypeParseError(
                    f"unexpected '{keyword}' inside class '{current.glyph}'", number
                )
            continue

        if keyword == "size":
            _expect(parts, 3, number, "size")
            size = (_int(parts[1], number, "width"), _int(parts[2], number, "height"))
        elif keyword == "alphabet":
            _expect(parts, 2, number, "alphabet")
            alphabet = parts[1]
        elif keyword == "class":
            _expect(parts, 3, number, "class")
            if alphabet is None:
                raise GenotypeParseError("'class' before 'alphabet'", number, "class")
            current = _ClassBuilder(parts[1], _int(parts[2], number, "class_id"), number)
        elif keyword == "instance":
            _expect(parts, 4, number, "instance")
            placements.append(
                Placement(
                    parts[1], _int(parts[2], number, "x"), _int(parts[3], number, "y")
                )
            )
        else:
            raise GenotypeParseError(f"unknown record '{keyword}'", number)

    if current is not None:
        raise GenotypeParseError(
            f"class '{current.glyph}' is missing its 'end'", current.line, "class"
        )
    if size is None:
        raise GenotypeParseError("missing 'size' record", None, "size")
    if alphabet is None:
        raise GenotypeParseError("missing 'alphabet' record", None, "alphabet")
    if "".join(c.glyph for c in classes) != alphabet:
        raise GenotypeParseError(
            "classes do not match the alphabet record", None, "alphabet"
        )

    genotype = FortressGenotype(tuple(classes), tuple(placements), size[0], size[1])
    violations = validate_genotype(genotype)
    if violations:
        raise GenotypeParseError("; ".join(violations), None, "placement")
    return genotype


def save_genotype(path: Union[str, Path], genotype: FortressGenotype) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_genotype(genotype), encoding="utf-8")
    return path


def load_genotype(path: Union[str, Path]) -> FortressGenotype:
    return parse_genotype(Path(path).read_text(encoding="utf-8"))
