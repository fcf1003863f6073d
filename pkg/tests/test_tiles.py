import numpy as np
import pytest

from covmap.errors import InputDomainError
from covmap.geo import PlanarPoint
from covmap.tiles import (GridSpec, RoiTile, filter_tiles, rasterize, split,
                          synth_clustered, synth_ppp)


def test_gridspec_resolution_matches_reported_value():
    # 5 km frame at 256 cells gives the 19.53 m resolution
    g = GridSpec(side_m=5000.0, n_cells=256)
    assert g.resolution_m == 19.53125


def test_gridspec_rejects_odd_or_tiny():
    with pytest.raises(InputDomainError):
        GridSpec(side_m=100.0, n_cells=5)
    with pytest.raises(InputDomainError):
        GridSpec(side_m=100.0, n_cells=2)
    with pytest.raises(InputDomainError):
        GridSpec(side_m=0.0, n_cells=8)


def test_rasterize_corner_point():
    g = GridSpec(side_m=80.0, n_cells=8)
    t = rasterize([PlanarPoint(0.0, 0.0)], g)
    assert t.occupancy[0, 0] == 1
    assert t.occupancy.sum() == 1
    assert t.bs_count == 1


def test_rasterize_binary_collapse():
    g = GridSpec(side_m=80.0, n_cells=8)
    t = rasterize([PlanarPoint(3.0, 4.0), PlanarPoint(5.0, 9.9)], g)
    assert t.bs_count == 1  # same 10 m cell


def test_rasterize_row_is_south_to_north():
    g = GridSpec(side_m=80.0, n_cells=8)
    t = rasterize([PlanarPoint(5.0, 75.0)], g)  # near north edge
    assert t.occupancy[7, 0] == 1


def test_rasterize_rejects_out_of_frame():
    g = GridSpec(side_m=80.0, n_cells=8)
    with pytest.raises(InputDomainError, match="80"):
        rasterize([PlanarPoint(80.0, 0.0)], g)


def test_rasterize_idempotent_under_duplication():
    g = GridSpec(side_m=100.0, n_cells=4)
    rng = np.random.default_rng(1)
    pts = [PlanarPoint(x, y) for x, y in rng.uniform(0, 100, size=(30, 2))]
    once = rasterize(pts, g)
    twice = rasterize(pts + pts, g)
    assert np.array_equal(once.occupancy, twice.occupancy)


def _tile_with_count(count, tile_id=0):
    g = GridSpec(side_m=100.0, n_cells=32)
    occ = np.zeros((32, 32), dtype=np.uint8)
    occ.flat[:count] = 1
    return RoiTile(tile_id=tile_id, grid=g, occupancy=occ)


def test_filter_bounds_inclusive():
    tiles = [_tile_with_count(c, i) for i, c in enumerate((19, 20, 400, 401, 100))]
    kept = filter_tiles(tiles, 20, 400)
    assert [t.bs_count for t in kept] == [20, 400, 100]


def test_filter_idempotent():
    tiles = [_tile_with_count(c, i) for i, c in enumerate(range(10, 60, 7))]
    once = filter_tiles(tiles, 20, 40)
    assert filter_tiles(once, 20, 40) == once


def test_split_sizes_and_determinism():
    tiles = [_tile_with_count(30, i) for i in range(10)]
    a = split(tiles, 0.7, seed=5)
    b = split(tiles, 0.7, seed=5)
    assert a == b
    assert len(a.ids("train")) == 7
    assert len(a.ids("test")) == 3


def test_split_partitions_tiles():
    tiles = [_tile_with_count(30, i * 3) for i in range(21)]
    s = split(tiles, 0.7, seed=11)
    train, test = set(s.ids("train")), set(s.ids("test"))
    assert train | test == {t.tile_id for t in tiles}
    assert train & test == set()


def test_split_different_seeds_same_sizes():
    tiles = [_tile_with_count(30, i) for i in range(40)]
    a = split(tiles, 0.7, seed=1)
    b = split(tiles, 0.7, seed=2)
    assert len(a.ids("train")) == len(b.ids("train")) == 28
    assert a.assignment != b.assignment


def test_split_is_order_independent():
    tiles = [_tile_with_count(30, i) for i in range(12)]
    a = split(tiles, 0.5, seed=9)
    b = split(list(reversed(tiles)), 0.5, seed=9)
    assert a == b


def test_synth_ppp_deterministic():
    g = GridSpec(side_m=1000.0, n_cells=16)
    a = synth_ppp(1e-4, g, seed=77)
    b = synth_ppp(1e-4, g, seed=77)
    assert np.array_equal(a.occupancy, b.occupancy)


def test_synth_ppp_empty_limit():
    g = GridSpec(side_m=1000.0, n_cells=16)
    t = synth_ppp(1e-12, g, seed=3)
    assert t.bs_count == 0


def test_synth_ppp_count_statistics():
    # Poisson points over C independent cells occupy Binomial(C, 1-exp(-lam/C))
    # cells: mean C*p, variance C*p*(1-p). Checked at 3 sigma over 1000 seeds.
    g = GridSpec(side_m=1000.0, n_cells=256)
    lam = 100.0
    density = lam / g.side_m**2
    cells = g.n_cells**2
    p = 1.0 - np.exp(-lam / cells)
    mean_occ = cells * p
    var_occ = cells * p * (1.0 - p)

    counts = np.array([synth_ppp(density, g, seed=s).bs_count for s in range(1000)])
    se_mean = np.sqrt(var_occ / len(counts))
    assert abs(counts.mean() - mean_occ) <= 3 * se_mean
    # fourth central moment of the occupancy count, normal-ish approximation
    mu4 = 3 * var_occ**2 + var_occ * (1 - 6 * p * (1 - p))
    se_var = np.sqrt((mu4 - var_occ**2) / len(counts))
    assert abs(counts.var(ddof=1) - var_occ) <= 3 * se_var


def test_synth_clustered_deterministic_and_valid():
    g = GridSpec(side_m=5000.0, n_cells=64)
    a = synth_clustered(300 / g.side_m**2, g, seed=21)
    b = synth_clustered(300 / g.side_m**2, g, seed=21)
    assert np.array_equal(a.occupancy, b.occupancy)
    assert a.bs_count > 0


def test_roitile_rejects_nonbinary():
    g = GridSpec(side_m=100.0, n_cells=4)
    occ = np.zeros((4, 4), dtype=np.uint8)
    occ[0, 0] = 2
    with pytest.raises(InputDomainError):
        RoiTile(tile_id=0, grid=g, occupancy=occ)
