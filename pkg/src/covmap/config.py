"""Pipeline configuration: defaults, flat key-value config files, seed streams."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .coverage import ChannelParams
from .errors import InputDomainError
from .tiles import GridSpec

DEFAULT_GAMMA_DB = (0.0, 5.0, 10.0, 15.0, 20.0)


@dataclass
class PipelineConfig:
    """Knobs of the CSV-to-evaluation pipeline with dense-deployment defaults
    (5 km frames, 256 cells, pathloss 4, interference-limited)."""

    roi_side_m: float = 5000.0
    n_cells: int = 256
    alpha: float = 4.0
    gamma_db: tuple[float, ...] = DEFAULT_GAMMA_DB
    noise_over_power: float = 0.0
    b_min: int = 20
    b_max: int = 400
    train_fraction: float = 0.7
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.roi_side_m <= 0:
            raise InputDomainError(f"roi_side_m must be positive, got {self.roi_side_m}")
        if self.b_min > self.b_max:
            raise InputDomainError(f"b_min {self.b_min} exceeds b_max {self.b_max}")
        if not 0.0 < self.train_fraction < 1.0:
            raise InputDomainError(f"train_fraction must lie in (0,1), got {self.train_fraction}")
        if self.jobs < 1:
            raise InputDomainError(f"jobs must be >= 1, got {self.jobs}")
        if self.seed < 0:
            raise InputDomainError(f"seed must be non-negative, got {self.seed}")

    @property
    def grid(self) -> GridSpec:
        return GridSpec(side_m=self.roi_side_m, n_cells=self.n_cells)

    def channel(self, gamma_db: float) -> ChannelParams:
        return ChannelParams.from_db(gamma_db, alpha=self.alpha,
                                     noise_over_power=self.noise_over_power)


_PARSERS = {
    "roi_side_m": float,
    "n_cells": int,
    "alpha": float,
    "gamma_db": lambda s: tuple(float(x) for x in str(s).split(",") if x.strip() != ""),
    "noise_over_power": float,
    "b_min": int,
    "b_max": int,
    "train_fraction": float,
    "seed": int,
    "jobs": int,
}


def parse_config_file(path: str | Path) -> dict:
    """Read a flat `key = value` file; '#' starts a comment, blank lines skipped."""
    values = {}
    known = {f.name for f in fields(PipelineConfig)}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputDomainError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise InputDomainError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as e:
            raise InputDomainError(f"{path}:{lineno}: bad value for {key}: {e}") from e
    return values


def build_config(file_path: str | None, overrides: dict) -> PipelineConfig:
    """Config file values first, then CLI overrides on top of the defaults."""
    values = parse_config_file(file_path) if file_path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**values)


def derive_seed(root_seed: int, stage: str, index: int | None = None) -> int:
    """Per-stage substream id: the stage name is hashed into the seed sequence
    so distinct stages never share a stream."""
    stage_id = int.from_bytes(hashlib.sha256(stage.encode()).digest()[:8], "little")
    entropy = [root_seed, stage_id] if index is None else [root_seed, stage_id, index]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
