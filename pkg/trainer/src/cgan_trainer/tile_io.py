"""Reader/writer for the covmap dataset interchange formats.

Tile files ("CMT1", little-endian): 4-byte magic, u32 tile_id, u32 N,
u32 manifold count, N*N occupancy bytes (row-major, south row first), then per
manifold one f32 gamma_db followed by (N/2)^2 f32 values. The manifest is a
JSON document carrying the grid, channel constants, and per-tile entries.
This module implements the formats directly so the trainer stays decoupled
from the producing package.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"CMT1"


class TileFormatError(ValueError):
    pass


def read_tile(path: str | os.PathLike) -> tuple[int, np.ndarray, list[tuple[float, np.ndarray]]]:
    """Returns (tile_id, occupancy uint8 (N,N), [(gamma_db, values (N/2,N/2)), ...])."""
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != MAGIC:
        raise TileFormatError(f"{path}: not a CMT1 tile file")
    tile_id, n, count = struct.unpack_from("<III", data, 4)
    half = n // 2
    expected = 16 + n * n + count * (4 + half * half * 4)
    if len(data) != expected:
        raise TileFormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    occ = np.frombuffer(data, dtype=np.uint8, count=n * n, offset=16).reshape(n, n)
    if occ.max(initial=0) > 1:
        raise TileFormatError(f"{path}: occupancy bytes must be 0/1")
    manifolds = []
    pos = 16 + n * n
    for _ in range(count):
        (gamma_db,) = struct.unpack_from("<f", data, pos)
        vals = np.frombuffer(data, dtype="<f4", count=half * half, offset=pos + 4)
        manifolds.append((float(gamma_db), vals.reshape(half, half).copy()))
        pos += 4 + half * half * 4
    return tile_id, occ.copy(), manifolds


def write_tile(path: str | os.PathLike, tile_id: int, occupancy: np.ndarray,
               manifolds: list[tuple[float, np.ndarray]]) -> None:
    occupancy = np.asarray(occupancy, dtype=np.uint8)
    n = occupancy.shape[0]
    half = n // 2
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<III", tile_id, n, len(manifolds))
    blob += occupancy.tobytes()
    for gamma_db, values in manifolds:
        values = np.asarray(values, dtype=np.float32)
        if values.shape != (half, half):
            raise TileFormatError(f"manifold shape {values.shape}, expected {(half, half)}")
        if float(values.min()) < 0.0 or float(values.max()) > 1.0:
            raise TileFormatError("manifold values must lie in [0, 1]")
        blob += struct.pack("<f", gamma_db)
        blob += values.astype("<f4").tobytes()
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(bytes(blob))
    os.replace(tmp, path)


@dataclass
class ManifestEntry:
    tile_id: int
    path: str
    split: str
    bs_count: int


@dataclass
class Manifest:
    n_cells: int
    side_m: float
    gamma_db: list[float]
    alpha: float
    entries: list[ManifestEntry]
    base_dir: Path

    def split_entries(self, which: str) -> list[ManifestEntry]:
        if which == "all":
            return sorted(self.entries, key=lambda e: e.tile_id)
        return sorted((e for e in self.entries if e.split == which), key=lambda e: e.tile_id)

    def tile_path(self, entry: ManifestEntry) -> Path:
        return self.base_dir / entry.path


def read_manifest(path: str | os.PathLike) -> Manifest:
    path = Path(path)
    doc = json.loads(path.read_text())
    entries = [ManifestEntry(tile_id=t["tile_id"], path=t["path"], split=t["split"],
                             bs_count=t["bs_count"]) for t in doc["tiles"]]
    return Manifest(n_cells=doc["grid"]["n_cells"], side_m=doc["grid"]["side_m"],
                    gamma_db=[float(g) for g in doc["channel"]["gamma_db"]],
                    alpha=float(doc["channel"]["alpha"]), entries=entries,
                    base_dir=path.parent)


def find_gamma(manifolds: list[tuple[float, np.ndarray]], gamma_db: float,
               tol: float = 1e-3) -> np.ndarray:
    for g, values in manifolds:
        if abs(g - gamma_db) <= tol:
            return values
    available = [g for g, _ in manifolds]
    raise TileFormatError(f"no manifold at {gamma_db} dB, available: {available}")
