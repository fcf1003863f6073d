"""Ground-truth coverage simulation.

Each location in the evaluation region is served by its nearest base station;
the SINR there is g_j d_j^-alpha over the sum of the interferers' g_l d_l^-alpha
plus sigma^2/P, with unit-mean exponential gains. Averaging the coverage event
over the gains gives the closed form

    Cov = exp(-gamma d_j^alpha sigma^2/P) * prod_{l != j} 1 / (1 + gamma (d_j/d_l)^alpha)

which this module evaluates exactly; a Monte-Carlo estimator of the same
probability serves as the independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputDomainError
from .geo import PlanarPoint
from .tiles import GridSpec, RoiTile

_CHANNELS = ("rayleigh_mean1",)

# users per vectorized block; caps the (users x BS) distance matrix
_BLOCK = 8192


@dataclass(frozen=True)
class ChannelParams:
    """SINR model constants: pathloss exponent, linear threshold, noise-to-power."""

    alpha: float
    gamma: float
    noise_over_power: float = 0.0
    channel: str = "rayleigh_mean1"

    def __post_init__(self):
        if self.alpha <= 2:
            raise InputDomainError(f"alpha must exceed 2, got {self.alpha}")
        if self.gamma <= 0:
            raise InputDomainError(f"gamma must be positive, got {self.gamma}")
        if self.noise_over_power < 0:
            raise InputDomainError(f"noise_over_power must be >= 0, got {self.noise_over_power}")
        if self.channel not in _CHANNELS:
            raise InputDomainError(f"unknown channel {self.channel!r}, expected one of {_CHANNELS}")

    @classmethod
    def from_db(cls, gamma_db: float, alpha: float, noise_over_power: float = 0.0,
                channel: str = "rayleigh_mean1") -> "ChannelParams":
        return cls(alpha=alpha, gamma=10.0 ** (gamma_db / 10.0),
                   noise_over_power=noise_over_power, channel=channel)

    @property
    def gamma_db(self) -> float:
        return 10.0 * math.log10(self.gamma)


@dataclass
class CoverageManifold:
    """Coverage probabilities on the (N/2) x (N/2) evaluation grid of one tile."""

    tile_id: int
    gamma_db: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise InputDomainError(f"manifold must be square, got shape {vals.shape}")
        if vals.size == 0 or not np.isfinite(vals).all():
            raise InputDomainError("manifold entries must be finite")
        if vals.min() < 0.0 or vals.max() > 1.0:
            raise InputDomainError(
                f"manifold entries must lie in [0, 1], found [{vals.min()}, {vals.max()}]")
        self.values = vals


def roe_grid(grid: GridSpec) -> list[PlanarPoint]:
    """Cell centers of the concentric L/2 x L/2 evaluation square, row-major
    from the south row. Requires N divisible by 4 so the two grids align."""
    return [PlanarPoint(x, y) for x, y in roe_points(grid)]


def roe_points(grid: GridSpec) -> np.ndarray:
    """Array form of roe_grid: ((N/2)^2, 2) of (x, y) coordinates."""
    n = grid.n_cells
    if n % 4 != 0:
        raise InputDomainError(f"n_cells must be divisible by 4 for an aligned RoE, got {n}")
    res = grid.resolution_m
    centers = (np.arange(n // 4, 3 * n // 4) + 0.5) * res
    xx, yy = np.meshgrid(centers, centers)  # row-major: y varies slowest
    return np.column_stack((xx.ravel(), yy.ravel()))


def _coverage_values(users: np.ndarray, bs: np.ndarray, gamma: float, alpha: float,
                     noise_over_power: float) -> np.ndarray:
    """Closed-form coverage at each user location; users (U,2), bs (n,2)."""
    out = np.empty(len(users))
    for lo in range(0, len(users), _BLOCK):
        u = users[lo:lo + _BLOCK]
        diff = u[:, None, :] - bs[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        j = np.argmin(d2, axis=1)  # first minimum = lowest BS index
        rows = np.arange(len(u))
        dj2 = d2[rows, j]
        colocated = dj2 == 0.0

        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = (dj2[:, None] / d2) ** (alpha / 2.0)
        ratio[rows, j] = 0.0  # serving BS is not an interferer
        ratio[colocated] = 0.0
        log_cov = -np.sum(np.log1p(gamma * ratio), axis=1)
        if noise_over_power > 0.0:
            log_cov -= gamma * noise_over_power * dj2 ** (alpha / 2.0)
        vals = np.exp(log_cov)
        vals[colocated] = 1.0
        out[lo:lo + _BLOCK] = vals
    return out


def coverage_at(user: PlanarPoint, bs: list[PlanarPoint], params: ChannelParams) -> float:
    """Exact Rayleigh coverage probability at one location."""
    if len(bs) == 0:
        raise InputDomainError("coverage needs at least one base station")
    users = np.array([[user.x_m, user.y_m]])
    bs_xy = np.array([[p.x_m, p.y_m] for p in bs])
    return float(_coverage_values(users, bs_xy, params.gamma, params.alpha,
                                  params.noise_over_power)[0])


def manifold(tile: RoiTile, params: ChannelParams) -> CoverageManifold:
    """Closed-form coverage manifold of a tile at one threshold."""
    return manifold_set(tile, [params])[0]


def manifold_set(tile: RoiTile, params_list: list[ChannelParams]) -> list[CoverageManifold]:
    """Manifolds of one tile for several thresholds, sharing the geometry work.

    All entries must agree on alpha and noise so the serving assignment and
    distances are common; only gamma varies.
    """
    if tile.bs_count < 1:
        raise InputDomainError(f"tile {tile.tile_id} has no base stations")
    if not params_list:
        return []
    first = params_list[0]
    for p in params_list[1:]:
        if p.alpha != first.alpha or p.noise_over_power != first.noise_over_power:
            raise InputDomainError("manifold_set requires shared alpha and noise_over_power")

    users = roe_points(tile.grid)
    bs = tile.bs_positions()
    side = tile.grid.n_cells // 2
    out = []
    for p in params_list:
        vals = _coverage_values(users, bs, p.gamma, p.alpha, p.noise_over_power)
        out.append(CoverageManifold(tile_id=tile.tile_id, gamma_db=p.gamma_db,
                                    values=vals.reshape(side, side)))
    return out


def mc_coverage_at(user: PlanarPoint, bs: list[PlanarPoint], params: ChannelParams,
                   trials: int, seed: int) -> float:
    """Monte-Carlo estimate of the coverage probability at one location.

    Draws unit-mean exponential gains per base station per trial and counts
    trials with SINR above the threshold. Deterministic for a given seed.
    """
    if len(bs) == 0:
        raise InputDomainError("coverage needs at least one base station")
    if trials < 1:
        raise InputDomainError(f"trials must be >= 1, got {trials}")
    bs_xy = np.array([[p.x_m, p.y_m] for p in bs])
    return _mc_coverage(np.array([user.x_m, user.y_m]), bs_xy, params, trials,
                        np.random.default_rng(seed))


def _mc_coverage(user_xy: np.ndarray, bs_xy: np.ndarray, params: ChannelParams,
                 trials: int, rng: np.random.Generator) -> float:
    d2 = np.sum((bs_xy - user_xy) ** 2, axis=1)
    j = int(np.argmin(d2))
    if d2[j] == 0.0:
        return 1.0  # user sits on the serving BS: SINR diverges
    n = len(bs_xy)
    if n == 1 and params.noise_over_power == 0.0:
        return 1.0  # no interference, no noise
    # float32 gains: statistical noise dominates rounding by orders of magnitude
    att = (d2 ** (-params.alpha / 2.0)).astype(np.float32)
    att_serving = att[j]
    att_masked = att.copy()
    att_masked[j] = 0.0
    gamma32 = np.float32(params.gamma)
    noise32 = np.float32(params.noise_over_power)
    covered = 0
    chunk = max(1, min(trials, 2**22 // n))
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        gains = rng.standard_exponential((m, n), dtype=np.float32)
        interference = gains @ att_masked
        signal = gains[:, j] * att_serving
        covered += int(np.count_nonzero(signal > gamma32 * (interference + noise32)))
        done += m
    return covered / trials


def mc_manifold(tile: RoiTile, params: ChannelParams, trials: int, seed: int) -> CoverageManifold:
    """Monte-Carlo manifold; pixel i uses the substream seeded by (seed, i)."""
    if tile.bs_count < 1:
        raise InputDomainError(f"tile {tile.tile_id} has no base stations")
    users = roe_points(tile.grid)
    bs = tile.bs_positions()
    side = tile.grid.n_cells // 2
    vals = np.empty(len(users))
    for i, u in enumerate(users):
        vals[i] = _mc_coverage(u, bs, params, trials, np.random.default_rng([seed, i]))
    return CoverageManifold(tile_id=tile.tile_id, gamma_db=params.gamma_db,
                            values=vals.reshape(side, side))
