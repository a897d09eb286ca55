"""
Exception hierarchy for the Fortress QD toolkit.
"""

from typing import Optional


class FortressError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(FortressError):
    """Raised when a run configuration is invalid."""

    def __init__(self, violations: list[str]) -> None:
        self.violations = violations
        super().__init__("Invalid configuration:\n  " + "\n  ".join(violations))


class GenotypeError(FortressError):
    """Raised when a genotype value breaks its invariants."""

    def __init__(self, violations: list[str]) -> None:
        self.violations = violations
        super().__init__("Invalid genotype: " + "; ".join(violations))


class GenotypeParseError(FortressError):
    """Raised when a genotype document cannot be parsed."""

    def __init__(
        self, message: str, line: Optional[int] = None, field: Optional[str] = None
    ) -> None:
        self.message = message
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class SimulationError(FortressError):
    """Raised on simulation contract violations."""


class SnapshotError(FortressError):
    """Base class for archive snapshot load failures."""


class SnapshotVersionError(SnapshotError):
    """Snapshot schema version is not supported."""


class SnapshotTruncatedError(SnapshotError):
    """Snapshot file ends before its checksum trailer."""


class SnapshotChecksumError(SnapshotError):
    """Snapshot content does not match its recorded checksum."""


class SnapshotCellError(SnapshotError):
    """A single cell record of a snapshot is corrupted."""

    def __init__(self, cell: tuple[int, int], reason: str) -> None:
        self.cell = cell
        self.reason = reason
        super().__init__(f"Corrupted cell record at ({cell[0]}, {cell[1]}): {reason}")


class RolloutFormatError(FortressError):
    """Raised when a rollout log file cannot be decoded."""
