"""Stochastic-geometry baseline predictors.

The homogeneous-PPP average coverage probability under nearest-BS association
and Rayleigh fading reduces to an integral in

    rho(gamma, alpha) = gamma^(2/alpha) * int_{gamma^(-2/alpha)}^inf du / (1 + u^(alpha/2))

In the interference-limited regime the ACP is 1/(1 + rho), independent of the
BS density; with noise it keeps the density-weighted exponential integral.
Both baselines predict a constant manifold per tile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .coverage import ChannelParams, CoverageManifold
from .errors import InputDomainError
from .tiles import RoiTile

_RHO_ABS_TOL = 1e-9
_ACP_ABS_TOL = 1e-7


@dataclass(frozen=True)
class PppParams:
    """Inputs to the PPP ACP: empirical density plus the channel constants."""

    density: float
    alpha: float
    gamma: float
    noise_over_power: float = 0.0

    def __post_init__(self):
        if self.alpha <= 2:
            raise InputDomainError(f"alpha must exceed 2, got {self.alpha}")
        if self.gamma <= 0:
            raise InputDomainError(f"gamma must be positive, got {self.gamma}")
        if self.noise_over_power < 0:
            raise InputDomainError(f"noise_over_power must be >= 0, got {self.noise_over_power}")
        if self.noise_over_power > 0 and self.density <= 0:
            raise InputDomainError("density must be positive when noise_over_power > 0")


def rho(gamma: float, alpha: float) -> float:
    """Evaluate the interference integral by adaptive quadrature.

    The improper upper limit is handled by quad's built-in mapping onto a
    finite interval; the integrand decays like u^(-alpha/2), integrable for
    alpha > 2. Absolute error is kept below 1e-9.
    """
    if alpha <= 2:
        raise InputDomainError(f"integral diverges for alpha <= 2, got alpha={alpha}")
    if gamma <= 0:
        raise InputDomainError(f"gamma must be positive, got {gamma}")
    half = alpha / 2.0
    lower = gamma ** (-2.0 / alpha)
    value, err = quad(lambda u: 1.0 / (1.0 + u**half), lower, np.inf,
                      epsabs=_RHO_ABS_TOL / 10.0, epsrel=1e-12, limit=200)
    if err > _RHO_ABS_TOL:
        raise ArithmeticError(f"rho quadrature error {err} above budget {_RHO_ABS_TOL}")
    return gamma ** (2.0 / alpha) * value


def rho_alpha4(gamma: float) -> float:
    """Closed form of rho at alpha = 4: sqrt(gamma) * (pi/2 - arctan(1/sqrt(gamma)))."""
    if gamma <= 0:
        raise InputDomainError(f"gamma must be positive, got {gamma}")
    s = np.sqrt(gamma)
    return float(s * (np.pi / 2.0 - np.arctan(1.0 / s)))


def ppp_acp(params: PppParams) -> float:
    """Average coverage probability of a homogeneous PPP network.

    Interference-limited case: 1/(1 + rho). With noise, evaluates
    pi*lambda * int_0^inf exp(-pi*lambda*v*(1+rho) - gamma*(s2/P)*v^(alpha/2)) dv.
    """
    r = rho(params.gamma, params.alpha)
    if params.noise_over_power == 0.0:
        return 1.0 / (1.0 + r)
    lam = params.density
    coef = np.pi * lam * (1.0 + r)
    gn = params.gamma * params.noise_over_power
    half = params.alpha / 2.0
    value, err = quad(lambda v: np.exp(-coef * v - gn * v**half), 0.0, np.inf,
                      epsabs=_ACP_ABS_TOL / (10.0 * np.pi * lam), epsrel=1e-10, limit=200)
    if np.pi * lam * err > _ACP_ABS_TOL:
        raise ArithmeticError(f"ACP quadrature error {np.pi * lam * err} above {_ACP_ABS_TOL}")
    return float(np.pi * lam * value)


def ppp_manifold(tile: RoiTile, params: ChannelParams) -> CoverageManifold:
    """Constant manifold at the PPP ACP for the tile's empirical density."""
    density = tile.bs_count / tile.grid.side_m**2
    if tile.bs_count == 0:
        # zero-noise ACP is density-free; pick any positive placeholder
        density = 1.0 / tile.grid.side_m**2
    acp = ppp_acp(PppParams(density=density, alpha=params.alpha, gamma=params.gamma,
                            noise_over_power=params.noise_over_power))
    side = tile.grid.n_cells // 2
    return CoverageManifold(tile_id=tile.tile_id, gamma_db=params.gamma_db,
                            values=np.full((side, side), acp))


def bfsg_manifold(truth: CoverageManifold) -> CoverageManifold:
    """Best-fitted constant manifold: the truth's arithmetic mean everywhere.

    Upper-bounds every constant predictor that targets the spatial mean; the
    L1-optimal constant would be the median, which this deliberately is not.
    """
    mean = float(truth.values.mean())
    return CoverageManifold(tile_id=truth.tile_id, gamma_db=truth.gamma_db,
                            values=np.full_like(truth.values, mean))
