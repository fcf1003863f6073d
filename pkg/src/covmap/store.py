"""Bit-exact tile persistence, the dataset manifest, and grayscale rendering.

Tile file layout (all integers little-endian):

    magic   4 bytes  "CMT1"
    u32     tile_id
    u32     N (cells per side)
    u32     manifold count M
    N*N     occupancy bytes in {0,1}, row-major, south row first
    M times:
        f32         gamma_db
        (N/2)^2 f32 coverage values, row-major, south row first

The grid side length in meters is not part of the file; it travels in the
manifest. Files are byte-identical for identical inputs.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coverage import CoverageManifold
from .errors import FormatError, InputDomainError
from .tiles import GridSpec, RoiTile

MAGIC = b"CMT1"
FORMAT_VERSION = 1


def write_tile(path: str | os.PathLike, tile: RoiTile,
               manifolds: list[CoverageManifold]) -> None:
    """Serialize one tile and its manifolds; the write is atomic (temp + rename)."""
    n = tile.grid.n_cells
    half = n // 2
    for m in manifolds:
        if m.values.shape != (half, half):
            raise InputDomainError(
                f"manifold shape {m.values.shape} does not match tile grid {half}x{half}")
        if m.tile_id != tile.tile_id:
            raise InputDomainError(f"manifold tile_id {m.tile_id} != tile {tile.tile_id}")
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<III", tile.tile_id, n, len(manifolds))
    blob += tile.occupancy.astype(np.uint8).tobytes()
    for m in manifolds:
        blob += struct.pack("<f", m.gamma_db)
        blob += m.values.astype("<f4").tobytes()
    atomic_write(path, bytes(blob))


def read_tile(path: str | os.PathLike, side_m: float = 1.0,
              ) -> tuple[RoiTile, list[CoverageManifold]]:
    """Inverse of write_tile. side_m restores the metric grid (the file stores
    only cell counts); pass the manifest's value, or leave the default when
    only pixel content matters."""
    data = Path(path).read_bytes()
    if len(data) < 16:
        raise FormatError(f"file too short ({len(data)} bytes), header needs 16", offset=0)
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}", offset=0)
    tile_id, n, count = struct.unpack_from("<III", data, 4)
    if n < 4 or n % 2 != 0:
        raise FormatError(f"invalid grid size N={n}", offset=8)
    occ_len = n * n
    half = n // 2
    man_len = 4 + half * half * 4
    expected = 16 + occ_len + count * man_len
    if len(data) != expected:
        raise FormatError(
            f"truncated or oversized file: expected {expected} bytes, found {len(data)}",
            offset=min(len(data), expected))
    occ = np.frombuffer(data, dtype=np.uint8, count=occ_len, offset=16)
    bad = np.nonzero(occ > 1)[0]
    if bad.size:
        raise FormatError(f"occupancy byte {occ[bad[0]]} not in {{0,1}}",
                          offset=16 + int(bad[0]))
    tile = RoiTile(tile_id=tile_id, grid=GridSpec(side_m=side_m, n_cells=n),
                   occupancy=occ.reshape(n, n).copy())
    manifolds = []
    pos = 16 + occ_len
    for _ in range(count):
        (gamma_db,) = struct.unpack_from("<f", data, pos)
        vals = np.frombuffer(data, dtype="<f4", count=half * half, offset=pos + 4)
        if not np.isfinite(vals).all() or vals.min() < 0.0 or vals.max() > 1.0:
            raise FormatError("manifold value outside [0, 1]", offset=pos + 4)
        manifolds.append(CoverageManifold(tile_id=tile_id, gamma_db=float(gamma_db),
                                          values=vals.reshape(half, half).astype(np.float64)))
        pos += man_len
    return tile, manifolds


def sha256_file(path: str | os.PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def atomic_write(path: str | os.PathLike, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


@dataclass
class TileEntry:
    tile_id: int
    path: str
    bs_count: int
    split: str
    sha256: str


@dataclass
class DatasetManifest:
    """Inventory of a dataset: grid, channel constants, tile files, provenance."""

    grid: GridSpec
    alpha: float
    noise_over_power: float
    gamma_db: list[float]
    channel: str
    tiles: list[TileEntry]
    params: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        ids = [t.tile_id for t in self.tiles]
        if len(ids) != len(set(ids)):
            raise InputDomainError("tile_ids in a manifest must be unique")

    def entry(self, tile_id: int) -> TileEntry:
        for t in self.tiles:
            if t.tile_id == tile_id:
                return t
        raise KeyError(tile_id)

    def split_ids(self, which: str) -> list[int]:
        if which == "all":
            return sorted(t.tile_id for t in self.tiles)
        return sorted(t.tile_id for t in self.tiles if t.split == which)

    def to_json(self) -> str:
        doc = {
            "format_version": self.format_version,
            "grid": {"side_m": self.grid.side_m, "n_cells": self.grid.n_cells},
            "channel": {
                "alpha": self.alpha,
                "noise_over_power": self.noise_over_power,
                "gamma_db": list(self.gamma_db),
                "model": self.channel,
            },
            "params": self.params,
            "tiles": [
                {"tile_id": t.tile_id, "path": t.path, "bs_count": t.bs_count,
                 "split": t.split, "sha256": t.sha256}
                for t in self.tiles
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    def save(self, path: str | os.PathLike) -> None:
        atomic_write(path, self.to_json().encode())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "DatasetManifest":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise FormatError(f"manifest is not valid JSON: {e}") from e
        try:
            grid = GridSpec(side_m=doc["grid"]["side_m"], n_cells=doc["grid"]["n_cells"])
            ch = doc["channel"]
            tiles = [TileEntry(tile_id=t["tile_id"], path=t["path"], bs_count=t["bs_count"],
                               split=t["split"], sha256=t["sha256"])
                     for t in doc["tiles"]]
            return cls(grid=grid, alpha=ch["alpha"], noise_over_power=ch["noise_over_power"],
                       gamma_db=list(ch["gamma_db"]), channel=ch["model"], tiles=tiles,
                       params=doc.get("params", {}),
                       format_version=doc.get("format_version", FORMAT_VERSION))
        except KeyError as e:
            raise FormatError(f"manifest missing field {e}") from e

    def verify(self, base_dir: str | os.PathLike) -> list[int]:
        """Re-hash every tile file; returns tile_ids whose checksum mismatches."""
        base = Path(base_dir)
        bad = []
        for t in self.tiles:
            f = base / t.path
            if not f.exists() or sha256_file(f) != t.sha256:
                bad.append(t.tile_id)
        return bad


def _png_chunk(kind: bytes, payload: bytes) -> bytes:
    return (struct.pack(">I", len(payload)) + kind + payload
            + struct.pack(">I", zlib.crc32(kind + payload)))


def encode_png_gray(pixels: np.ndarray) -> bytes:
    """Encode a uint8 matrix (row 0 at the top) as an 8-bit grayscale PNG."""
    pixels = np.asarray(pixels, dtype=np.uint8)
    h, w = pixels.shape
    raw = b"".join(b"\x00" + pixels[r].tobytes() for r in range(h))
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 0, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n" + _png_chunk(b"IHDR", ihdr)
            + _png_chunk(b"IDAT", zlib.compress(raw, 9)) + _png_chunk(b"IEND", b""))


def to_pixels(m: CoverageManifold) -> np.ndarray:
    """Quantize to 8-bit gray, north row on top; ties round away from zero."""
    q = np.floor(m.values * 255.0 + 0.5).astype(np.uint8)
    return q[::-1]


def render_png(m: CoverageManifold) -> bytes:
    """Grayscale image of one manifold, deterministic bytes for a given input."""
    return encode_png_gray(to_pixels(m))


def render_triptych(truth: CoverageManifold, pred: CoverageManifold) -> bytes:
    """truth | prediction | absolute difference, separated by white columns."""
    diff = CoverageManifold(tile_id=truth.tile_id, gamma_db=truth.gamma_db,
                            values=np.abs(truth.values - pred.values))
    panels = [to_pixels(truth), to_pixels(pred), to_pixels(diff)]
    sep = np.full((panels[0].shape[0], 1), 255, dtype=np.uint8)
    return encode_png_gray(np.hstack([panels[0], sep, panels[1], sep, panels[2]]))
