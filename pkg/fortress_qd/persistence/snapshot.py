"""
Archive snapshot format (.arch).

Layout, one record per line:

    fortress-archive v1
    {"config": {...}, "eval_seeds": [...], "generation": 12, ...}
    cell 0 3 {"genotype": "...", "result": {...}}
    ...
    checksum <sha256 of every preceding byte>

Cells are written in (bin_x, bin_y) order and every JSON object with sorted
keys, so a reloaded snapshot re-serializes to the same bytes. Writes go to a
temporary file in the target directory which is then renamed into place.
"""

import hashlib
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import orjson
from pydantic import ValidationError

import constants
from fortress_qd.core.archive import Archive
from fortress_qd.exceptions import (
    GenotypeParseError,
    SnapshotCellError,
    SnapshotChecksumError,
    SnapshotError,
    SnapshotTruncatedError,
    SnapshotVersionError,
)
from fortress_qd.models.config import ArchiveMode, RunConfig
from fortress_qd.models.results import EvalResult
from fortress_qd.persistence.genotype_io import parse_genotype, serialize_genotype
from fortress_qd.utils.logger import get_logger

logger = get_logger(__name__)

HEADER = "fortress-archive"
_CHECKSUM = "checksum "


@dataclass
class ArchiveSnapshot:
    """An archive plus everything needed to resume the run that built it."""

    archive: Archive
    config: RunConfig
    eval_seeds: list[int]
    generation: int
    evaluations: int = 0
    extra: dict[str, Any] = field(default_factory=dict)

    def metadata(self) -> dict[str, Any]:
        archive = self.archive
        return {
            "config": self.config.provenance(),
            "mode": archive.mode.value,
            "resolution": list(archive.resolution),
            "ranges": [list(r) for r in archive.ranges],
            "n_classes": archive.n_classes,
            "overpopulation_cap": archive.overpopulation_cap,
            "master_seed": self.config.master_seed,
            "eval_seeds": list(self.eval_seeds),
            "generation": self.generation,
            "evaluations": self.evaluations,
            "extra": self.extra,
        }


def _dumps(value: Any) -> str:
    return orjson.dumps(value, option=orjson.OPT_SORT_KEYS).decode("utf-8")


def serialize_snapshot(snapshot: ArchiveSnapshot) -> bytes:
    lines = [
        f"{HEADER} v{constants.SNAPSHOT_SCHEMA_VERSION}",
        _dumps(snapshot.metadata()),
    ]
    for (bin_x, bin_y), elite in snapshot.archive.elites():
        record = {
            "genotype": serialize_genotype(elite.genotype),
            "result": elite.result.to_dict(),
        }
        lines.append(f"cell {bin_x} {bin_y} {_dumps(record)}")
    body = ("\n".join(lines) + "\n").encode("utf-8")
    digest = hashlib.sha256(body).hexdigest()
    return body + f"{_CHECKSUM}{digest}\n".encode("utf-8")


def save_snapshot(path: Union[str, Path], snapshot: ArchiveSnapshot) -> Path:
    """Write atomically: temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = serialize_snapshot(snapshot)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.info(
        "Snapshot written",
        path=str(path),
        generation=snapshot.generation,
        occupied_cells=len(snapshot.archive),
    )
    return path


def _parse_cell(line: str, archive: Archive) -> None:
    parts = line.split(" ", 3)
    if len(parts) != 4 or parts[0] != "cell":
        raise SnapshotError(f"Malformed record: {line[:40]!r}")
    try:
        cell = (int(parts[1]), int(parts[2]))
    except ValueError:
        raise SnapshotError(f"Malformed cell coordinates: {line[:40]!r}")

    try:
        record = orjson.loads(parts[3])
        genotype = parse_genotype(record["genotype"])
        result = EvalResult.model_validate(record["result"])
    except orjson.JSONDecodeError as e:
        raise SnapshotCellError(cell, f"invalid JSON ({e})")
    except (KeyError, TypeError) as e:
        raise SnapshotCellError(cell, f"missing field {e}")
    except GenotypeParseError as e:
        raise SnapshotCellError(cell, f"genotype: {e}")
    except ValidationError as e:
        raise SnapshotCellError(cell, f"result: {e.errors()[0]['msg']}")

    if archive.cell_for(result) != cell:
        raise SnapshotCellError(cell, "descriptor does not fall in this cell")
    if cell in archive:
        raise SnapshotCellError(cell, "duplicate cell")
    archive.insert(genotype, result)


def parse_snapshot(data: bytes) -> ArchiveSnapshot:
    """Decode a snapshot, raising a distinct error per failure kind."""
    if not data:
        raise SnapshotTruncatedError("Snapshot is empty")
    text = data.decode("utf-8", errors="replace")
    lines = text.split("\n")

    header = lines[0].split()
    if len(header) != 2 or header[0] != HEADER:
        raise SnapshotVersionError(f"Not an archive snapshot: {lines[0][:40]!r}")
    if header[1] != f"v{constants.SNAPSHOT_SCHEMA_VERSION}":
        raise SnapshotVersionError(f"Unsupported snapshot version {header[1]!r}")

    # Complete files end with the checksum line and a newline
    if len(lines) < 4 or lines[-1] != "" or not lines[-2].startswith(_CHECKSUM):
        raise SnapshotTruncatedError("Snapshot has no checksum trailer")
    expected = lines[-2][len(_CHECKSUM) :]
    body_lines = lines[1:-2]

    try:
        meta = orjson.loads(body_lines[0])
        config = RunConfig.model_validate(meta["config"])
        archive = Archive(
            ArchiveMode(meta["mode"]),
            (meta["resolution"][0], meta["resolution"][1]),
            (tuple(meta["ranges"][0]), tuple(meta["ranges"][1])),
            n_classes=meta["n_classes"],
            overpopulation_cap=meta["overpopulation_cap"],
        )
    except (orjson.JSONDecodeError, KeyError, IndexError, TypeError, ValueError) as e:
        raise SnapshotError(f"Invalid snapshot metadata: {e}")

    for line in body_lines[1:]:
        _parse_cell(line, archive)

    body = data[: data.rindex(_CHECKSUM.encode("utf-8"))]
    if hashlib.sha256(body).hexdigest() != expected:
        raise SnapshotChecksumError("Snapshot checksum does not match its contents")

    return ArchiveSnapshot(
        archive=archive,
        config=config,
        eval_seeds=[int(s) for s in meta["eval_seeds"]],
        generation=int(meta["generation"]),
        evaluations=int(meta["evaluations"]),
        extra=dict(meta.get("extra") or {}),
    )


def load_snapshot(path: Union[str, Path]) -> ArchiveSnapshot:
    path = Path(path)
    try:
        return parse_snapshot(path.read_bytes())
    except SnapshotError as e:
        logger.error("Snapshot load failed", path=str(path), error=str(e))
        raise
