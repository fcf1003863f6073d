"""Per-pixel L1 evaluation of predicted against simulated manifolds."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .coverage import CoverageManifold
from .errors import InputDomainError


@dataclass
class EvalReport:
    """Per-tile L1 errors of one predictor at one threshold, plus their mean."""

    predictor: str
    gamma_db: float
    per_tile_errors: dict[int, float]

    @property
    def tile_count(self) -> int:
        return len(self.per_tile_errors)

    @property
    def mean_error(self) -> float:
        return float(np.mean(list(self.per_tile_errors.values())))

    def to_json(self) -> str:
        doc = {
            "predictor": self.predictor,
            "gamma_db": self.gamma_db,
            "K": self.tile_count,
            "mean_error": self.mean_error,
            "per_tile": [{"tile_id": t, "error": e}
                         for t, e in sorted(self.per_tile_errors.items())],
        }
        return json.dumps(doc, indent=2)


def l1(a: CoverageManifold, b: CoverageManifold) -> float:
    """Mean absolute per-pixel difference between two equal-shape manifolds."""
    if a.values.shape != b.values.shape:
        raise InputDomainError(f"shape mismatch: {a.values.shape} vs {b.values.shape}")
    return float(np.abs(a.values - b.values).mean())


def avg(m: CoverageManifold) -> float:
    """Arithmetic mean of a manifold's entries."""
    return float(m.values.mean())


def dataset_error(pred: dict[int, CoverageManifold], truth: dict[int, CoverageManifold],
                  predictor: str = "", gamma_db: float | None = None) -> EvalReport:
    """Per-tile L1 against the truth set and the mean over tiles."""
    if not truth:
        raise InputDomainError("truth set is empty")
    missing = sorted(set(truth) - set(pred))
    extra = sorted(set(pred) - set(truth))
    if missing or extra:
        raise InputDomainError(
            f"tile id mismatch: missing predictions {missing}, unmatched predictions {extra}")
    errors = {tid: l1(pred[tid], truth[tid]) for tid in truth}
    if gamma_db is None:
        gamma_db = next(iter(truth.values())).gamma_db
    return EvalReport(predictor=predictor, gamma_db=gamma_db, per_tile_errors=errors)


def render_table(reports: list[EvalReport]) -> str:
    """Aligned text table: one row per predictor, one column per threshold."""
    gammas = sorted({r.gamma_db for r in reports})
    predictors = []
    for r in reports:
        if r.predictor not in predictors:
            predictors.append(r.predictor)
    cell = {(r.predictor, r.gamma_db): r.mean_error for r in reports}

    name_w = max(len("gamma"), *(len(p) for p in predictors))
    header = " | ".join([f"{'gamma':<{name_w}}"] + [f"{g:g} dB".rjust(8) for g in gammas])
    rule = "-+-".join(["-" * name_w] + ["-" * 8] * len(gammas))
    lines = [header, rule]
    for p in predictors:
        cells = []
        for g in gammas:
            v = cell.get((p, g))
            cells.append(f"{v:.4f}".rjust(8) if v is not None else " " * 8)
        lines.append(" | ".join([f"{p:<{name_w}}"] + cells))
    return "\n".join(lines)
