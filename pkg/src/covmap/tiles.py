"""Rasterization of planar points into binary occupancy grids, tile filtering,
train/test splitting, and a Poisson generator for synthetic tiles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputDomainError
from .geo import PlanarPoint


@dataclass(frozen=True)
class GridSpec:
    """Square grid over one frame: side length in meters, cells per side."""

    side_m: float
    n_cells: int

    def __post_init__(self):
        if self.n_cells < 4 or self.n_cells % 2 != 0:
            raise InputDomainError(f"n_cells must be even and >= 4, got {self.n_cells}")
        if self.side_m <= 0:
            raise InputDomainError(f"side_m must be positive, got {self.side_m}")

    @property
    def resolution_m(self) -> float:
        return self.side_m / self.n_cells


@dataclass
class RoiTile:
    """Binary occupancy of one frame: 1 marks a cell holding at least one BS.

    Row 0 is the south edge, column 0 the west edge.
    """

    tile_id: int
    grid: GridSpec
    occupancy: np.ndarray
    bs_count: int = field(init=False)

    def __post_init__(self):
        occ = np.asarray(self.occupancy, dtype=np.uint8)
        n = self.grid.n_cells
        if occ.shape != (n, n):
            raise InputDomainError(f"occupancy shape {occ.shape} does not match grid {n}x{n}")
        if not np.isin(occ, (0, 1)).all():
            raise InputDomainError("occupancy entries must be 0 or 1")
        self.occupancy = occ
        self.bs_count = int(occ.sum())

    def bs_positions(self) -> np.ndarray:
        """Centers of occupied cells as an (m, 2) array of (x, y) meters."""
        rows, cols = np.nonzero(self.occupancy)
        res = self.grid.resolution_m
        return np.column_stack(((cols + 0.5) * res, (rows + 0.5) * res))


@dataclass(frozen=True)
class SplitAssignment:
    """Deterministic train/test membership for a set of tile ids."""

    assignment: dict[int, str]
    seed: int
    train_fraction: float

    def ids(self, which: str) -> list[int]:
        return sorted(t for t, s in self.assignment.items() if s == which)


def rasterize(points: list[PlanarPoint], grid: GridSpec, tile_id: int = 0) -> RoiTile:
    """Mark the grid cell of each point; several points in one cell collapse
    to a single 1. Point (x, y) lands in (row, col) = (floor(y/res), floor(x/res))."""
    occ = np.zeros((grid.n_cells, grid.n_cells), dtype=np.uint8)
    res = grid.resolution_m
    n = grid.n_cells
    for p in points:
        if not (0.0 <= p.x_m < grid.side_m and 0.0 <= p.y_m < grid.side_m):
            raise InputDomainError(f"point ({p.x_m}, {p.y_m}) outside frame [0, {grid.side_m})^2")
        # guard against float division landing exactly on n
        row = min(int(p.y_m / res), n - 1)
        col = min(int(p.x_m / res), n - 1)
        occ[row, col] = 1
    return RoiTile(tile_id=tile_id, grid=grid, occupancy=occ)


def filter_tiles(tiles: list[RoiTile], b_min: int, b_max: int) -> list[RoiTile]:
    """Keep tiles whose occupied-cell count lies in [b_min, b_max], order preserved."""
    if b_min > b_max:
        raise InputDomainError(f"b_min {b_min} exceeds b_max {b_max}")
    return [t for t in tiles if b_min <= t.bs_count <= b_max]


def split(tiles: list[RoiTile], fraction: float, seed: int) -> SplitAssignment:
    """Shuffle tile ids deterministically and send the first round(fraction*K)
    to train. Depends only on the id set, the seed, and the fraction."""
    if not 0.0 < fraction < 1.0:
        raise InputDomainError(f"fraction must lie in (0, 1), got {fraction}")
    ids = sorted(t.tile_id for t in tiles)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ids))
    n_train = int(round(fraction * len(ids)))
    assignment = {}
    for rank, idx in enumerate(perm):
        assignment[ids[idx]] = "train" if rank < n_train else "test"
    return SplitAssignment(assignment=assignment, seed=seed, train_fraction=fraction)


def _rasterize_xy(xy: np.ndarray, grid: GridSpec) -> np.ndarray:
    occ = np.zeros((grid.n_cells, grid.n_cells), dtype=np.uint8)
    idx = np.minimum((xy / grid.resolution_m).astype(np.int64), grid.n_cells - 1)
    occ[idx[:, 1], idx[:, 0]] = 1
    return occ


def synth_ppp(density: float, grid: GridSpec, seed: int, tile_id: int = 0) -> RoiTile:
    """One synthetic tile: Poisson(density * L^2) points dropped uniformly on
    the frame, then rasterized. Deterministic for a given seed."""
    if density <= 0:
        raise InputDomainError(f"density must be positive, got {density}")
    rng = np.random.default_rng(seed)
    count = rng.poisson(density * grid.side_m**2)
    xy = rng.uniform(0.0, grid.side_m, size=(count, 2))
    return RoiTile(tile_id=tile_id, grid=grid, occupancy=_rasterize_xy(xy, grid))


def synth_clustered(density: float, grid: GridSpec, seed: int, tile_id: int = 0) -> RoiTile:
    """One deployment-like synthetic tile: Gaussian clusters over a sparse
    uniform background, with per-tile count, cluster scale, and background
    share all randomized. Homogeneous Poisson tiles all share one spatial
    statistic; this generator produces the across-tile diversity that real
    BS maps exhibit. density sets the mean count per area as an upper scale;
    realized counts vary by about an order of magnitude below it.
    """
    if density <= 0:
        raise InputDomainError(f"density must be positive, got {density}")
    rng = np.random.default_rng(seed)
    side = grid.side_m
    top = density * side**2
    mean_count = np.exp(rng.uniform(np.log(max(2.0, top / 8.0)), np.log(top)))
    total = rng.poisson(mean_count)
    n_clusters = 1 + rng.poisson(2)
    centers = rng.uniform(0.0, side, size=(n_clusters, 2))
    sigmas = np.exp(rng.uniform(np.log(side / 30.0), np.log(side / 8.0), size=n_clusters))
    bg_fraction = rng.uniform(0.05, 0.4)
    which = rng.integers(0, n_clusters, size=total)
    xy = centers[which] + rng.normal(size=(total, 2)) * sigmas[which][:, None]
    background = rng.uniform(0.0, side, size=(total, 2))
    is_bg = rng.uniform(size=total) < bg_fraction
    xy[is_bg] = background[is_bg]
    xy = np.mod(xy, side)  # wrap cluster tails back onto the frame
    return RoiTile(tile_id=tile_id, grid=grid, occupancy=_rasterize_xy(xy, grid))
