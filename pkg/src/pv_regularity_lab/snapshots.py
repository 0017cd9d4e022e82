# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Binary snapshot files and the JSON trajectory manifest.

Snapshot layout (little-endian): magic ``PVRL``, u32 version, u32 component
count (1 or 3), u32 n, f64 box length, u8 domain tag, then each component as
n^3 f64 samples with x varying fastest: sample k is f[k % n, (k // n) % n, k // n^2].
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import FormatError, HashMismatch, ValidationError, VersionMismatch
from .fields import Domain, Grid3, ScalarField, VectorField
from .lab_config import DOMAIN_TAGS, MANIFEST_FILENAME, SNAPSHOT_MAGIC, SNAPSHOT_PATTERN, SNAPSHOT_VERSION
from .logger import get_logger

logger = get_logger(__name__)

HEADER = struct.Struct("<4sIIIdB")
SAMPLE_DTYPE = np.dtype("<f8")
MANIFEST_VERSION = 1

_TAG_TO_DOMAIN = {tag: Domain(name) for name, tag in DOMAIN_TAGS.items()}


def encode_snapshot(data: ScalarField | VectorField) -> bytes:
    """Serialize a scalar or vector field to the snapshot byte layout."""
    grid = data.grid
    components = [data.values] if isinstance(data, ScalarField) else list(data.data)
    header = HEADER.pack(
        SNAPSHOT_MAGIC, SNAPSHOT_VERSION, len(components), grid.n, grid.box_length, DOMAIN_TAGS[grid.domain.value]
    )
    body = b"".join(np.asarray(c, dtype=SAMPLE_DTYPE).tobytes(order="F") for c in components)
    return header + body


def decode_snapshot(payload: bytes) -> ScalarField | VectorField:
    """Parse snapshot bytes.

    Raises:
        FormatError: On a bad magic, header value or payload length
        VersionMismatch: If the version is not the supported one
    """
    if len(payload) < HEADER.size:
        raise FormatError(f"Snapshot is {len(payload)} bytes, shorter than its {HEADER.size}-byte header")
    magic, version, count, n, box_length, tag = HEADER.unpack_from(payload)
    if magic != SNAPSHOT_MAGIC:
        raise FormatError(f"Bad snapshot magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise VersionMismatch(f"Snapshot version {version} is not supported (expected {SNAPSHOT_VERSION})")
    if count not in (1, 3):
        raise FormatError(f"Snapshot component count must be 1 or 3, got {count}")
    if tag not in _TAG_TO_DOMAIN:
        raise FormatError(f"Unknown snapshot domain tag {tag}")
    try:
        grid = Grid3(n, box_length, _TAG_TO_DOMAIN[tag])
    except ValidationError as e:
        raise FormatError(f"Invalid snapshot grid: {e}") from e

    expected = HEADER.size + count * n**3 * SAMPLE_DTYPE.itemsize
    if len(payload) != expected:
        raise FormatError(f"Snapshot payload is {len(payload)} bytes, expected {expected}")
    flat = np.frombuffer(payload, dtype=SAMPLE_DTYPE, offset=HEADER.size).reshape(count, n**3)
    samples = np.stack([component.reshape((n, n, n), order="F") for component in flat])
    try:
        if count == 1:
            return ScalarField(grid, samples[0])
        return VectorField(grid, samples)
    except ValidationError as e:
        raise FormatError(f"Snapshot samples are invalid: {e}") from e


def write_snapshot(path: str | Path, data: ScalarField | VectorField) -> Path:
    """Write a field to a snapshot file and return its path."""
    target = Path(path)
    target.write_bytes(encode_snapshot(data))
    logger.debug(f"-> Wrote snapshot {target}")
    return target


def read_snapshot(path: str | Path) -> ScalarField | VectorField:
    """Read a snapshot file.

    Raises:
        FileNotFoundError: If the file does not exist
        FormatError: If the file is malformed
    """
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"Snapshot file not found: {source}")
    try:
        return decode_snapshot(source.read_bytes())
    except FormatError as e:
        raise type(e)(f"{source}: {e}") from e


def snapshot_filename(index: int) -> str:
    return SNAPSHOT_PATTERN.format(index=index)


@dataclass(frozen=True)
class SnapshotEntry:
    index: int
    t: float
    path: str
    dissipated: float | None = None


def _entry_json(entry: SnapshotEntry) -> dict[str, Any]:
    document: dict[str, Any] = {"index": entry.index, "t": entry.t, "path": entry.path}
    if entry.dissipated is not None:
        document["dissipated"] = entry.dissipated
    return document


def _optional_float(value: Any) -> float | None:
    return None if value is None else float(value)


@dataclass(frozen=True)
class TrajectoryManifest:
    """Index of the snapshot files of one simulation run.

    Attributes:
        config_hash: SHA-256 hash of the run configuration
        grid: Grid shared by every snapshot
        viscosity: Kinematic viscosity of the run
        entries: Snapshots in time order; paths are relative to the manifest directory
    """

    config_hash: str
    grid: Grid3
    viscosity: float
    entries: list[SnapshotEntry] = field(default_factory=list)

    @property
    def times(self) -> list[float]:
        return [entry.t for entry in self.entries]

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "format_version": MANIFEST_VERSION,
            "config_hash": self.config_hash,
            "grid": self.grid.to_json_dict(),
            "viscosity": self.viscosity,
            "snapshots": [_entry_json(e) for e in self.entries],
        }

    @classmethod
    def from_json_dict(cls, document: dict[str, Any]) -> TrajectoryManifest:
        """Build a manifest from its JSON form.

        Raises:
            VersionMismatch: If format_version is unsupported
            FormatError: If a required key is missing or malformed
        """
        version = document.get("format_version")
        if version != MANIFEST_VERSION:
            raise VersionMismatch(f"Manifest version {version} is not supported (expected {MANIFEST_VERSION})")
        try:
            grid_doc = document["grid"]
            grid = Grid3(int(grid_doc["n"]), float(grid_doc["box_length"]), Domain(grid_doc["domain"]))
            entries = [
                SnapshotEntry(int(s["index"]), float(s["t"]), str(s["path"]), _optional_float(s.get("dissipated")))
                for s in document["snapshots"]
            ]
            return cls(str(document["config_hash"]), grid, float(document["viscosity"]), entries)
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"Malformed trajectory manifest: {e}") from e


def write_manifest(manifest: TrajectoryManifest, output_dir: str | Path) -> Path:
    """Write the manifest JSON into output_dir and return its path."""
    path = Path(output_dir) / MANIFEST_FILENAME
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest.to_json_dict(), f, indent=2)
    logger.info(f"-> Trajectory manifest written to {path}")
    return path


def read_manifest(path: str | Path, expected_hash: str | None = None) -> TrajectoryManifest:
    """Load a trajectory manifest, optionally refusing a foreign config hash.

    Raises:
        FileNotFoundError: If the manifest does not exist
        FormatError: If the JSON is malformed
        HashMismatch: If expected_hash is given and differs from the manifest's hash
    """
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"Trajectory manifest not found: {source}")
    try:
        with open(source, encoding="utf-8") as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(f"{source} is not valid JSON: {e}") from e
    manifest = TrajectoryManifest.from_json_dict(document)
    if expected_hash is not None and manifest.config_hash != expected_hash:
        raise HashMismatch(
            f"Manifest {source} was produced with config hash {manifest.config_hash[:12]}..., "
            f"expected {expected_hash[:12]}..."
        )
    return manifest
