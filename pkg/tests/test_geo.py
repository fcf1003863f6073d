import math

import numpy as np
import pytest

from covmap.errors import InputDomainError
from covmap.geo import (EARTH_RADIUS_M, GeoPoint, RoiFrame, assign, haversine_m,
                        partition, project)


def test_project_identity():
    for origin in (GeoPoint(0, 0), GeoPoint(48.1, 11.5), GeoPoint(-33.9, 151.2)):
        p = project(origin, origin)
        assert p.x_m == 0.0 and p.y_m == 0.0


def test_project_100m_east_at_equator():
    # 100 m eastward at the equator corresponds to 8.9932e-4 degrees of longitude
    p = project(GeoPoint(0, 0), GeoPoint(0, 8.9932e-4))
    assert p.x_m == pytest.approx(100.0, rel=1e-3)
    assert p.y_m == 0.0


def test_project_cosine_scaling_at_60deg():
    delta = 1.7e-3
    x_eq = project(GeoPoint(0, 0), GeoPoint(0, delta)).x_m
    x_60 = project(GeoPoint(60, 0), GeoPoint(60, delta)).x_m
    assert x_60 == pytest.approx(0.5 * x_eq, rel=1e-12)


def test_project_rejects_bad_latitude():
    with pytest.raises(InputDomainError):
        GeoPoint(95.0, 0.0)


def test_longitude_normalization():
    assert GeoPoint(0, 185.0).lon_deg == pytest.approx(-175.0)
    assert GeoPoint(0, -180.0).lon_deg == -180.0
    assert GeoPoint(0, 180.0).lon_deg == -180.0


def test_project_vs_haversine_oracle():
    # <= 0.5% relative error for displacements up to 10 km, |lat| <= 70
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(500):
        lat0 = rng.uniform(-70, 70)
        lon0 = rng.uniform(-179, 179)
        origin = GeoPoint(lat0, lon0)
        bearing = rng.uniform(0, 2 * math.pi)
        dist = rng.uniform(10.0, 10_000.0)
        dlat = math.degrees(dist * math.sin(bearing) / EARTH_RADIUS_M)
        dlon = math.degrees(dist * math.cos(bearing)
                            / (EARTH_RADIUS_M * math.cos(math.radians(lat0))))
        target = GeoPoint(lat0 + dlat, lon0 + dlon)
        p = project(origin, target)
        planar = math.hypot(p.x_m, p.y_m)
        true = haversine_m(origin, target)
        if true > 0:
            worst = max(worst, abs(planar - true) / true)
    assert worst <= 0.005


def test_displacement_depends_only_on_offset_at_fixed_latitude():
    origin = GeoPoint(40.0, 8.0)
    rng = np.random.default_rng(7)
    for _ in range(50):
        a, b, c = rng.uniform(-0.01, 0.01, size=3)
        p = project(origin, GeoPoint(40.0, 8.0 + a + c))
        q = project(origin, GeoPoint(40.0, 8.0 + a))
        r = project(origin, GeoPoint(40.0, 8.0 + c))
        assert p.x_m - q.x_m == pytest.approx(r.x_m, abs=1e-6)


def _bbox(lat0, lon0, width_m, height_m):
    lat1 = lat0 + math.degrees(height_m / EARTH_RADIUS_M)
    mid = 0.5 * (lat0 + lat1)
    lon1 = lon0 + math.degrees(width_m / (EARTH_RADIUS_M * math.cos(math.radians(mid))))
    return GeoPoint(lat0, lon0), GeoPoint(lat1, lon1)


def test_partition_exact_tiling():
    frames = partition(_bbox(10.0, 20.0, 2 * 5000, 3 * 5000), 5000.0)
    assert len(frames) == 6
    assert [f.frame_id for f in frames] == list(range(6))


def test_partition_partial_frames_dropped():
    assert len(partition(_bbox(10.0, 20.0, 2.5 * 5000, 1.0 * 5000), 5000.0)) == 2


def test_partition_too_small_bbox():
    assert partition(_bbox(10.0, 20.0, 4000, 9000), 5000.0) == []


def test_partition_degenerate_bbox():
    p = GeoPoint(10.0, 20.0)
    assert partition((p, p), 5000.0) == []


def test_assign_corner_and_halfopen_edge():
    frames = partition(_bbox(0.0, 0.0, 2 * 1000, 1000), 1000.0)
    assert len(frames) == 2
    sw = frames[0].origin
    east = frames[1].origin
    assigned, skipped = assign([sw, east], frames)
    assert skipped == 0
    # frame corner -> local (0, 0); the shared west/east edge belongs east
    assert assigned[0][0].x_m == 0.0 and assigned[0][0].y_m == 0.0
    assert 1 in assigned and assigned[1][0].x_m == 0.0


def test_assign_empty_points():
    frames = partition(_bbox(0.0, 0.0, 3000, 3000), 1000.0)
    assigned, skipped = assign([], frames)
    assert assigned == {} and skipped == 0


def test_assign_out_of_region_counted():
    frames = partition(_bbox(50.0, 8.0, 3000, 3000), 1000.0)
    assigned, skipped = assign([GeoPoint(49.0, 8.0), GeoPoint(51.0, 8.0)], frames)
    assert assigned == {} and skipped == 2


def test_assign_local_coords_in_range_and_disjoint():
    side = 2000.0
    frames = partition(_bbox(59.0, 10.0, 5 * side, 4 * side), side)
    rng = np.random.default_rng(3)
    pts = [GeoPoint(rng.uniform(58.95, 59.25), rng.uniform(9.9, 10.5)) for _ in range(2000)]
    assigned, skipped = assign(pts, frames)
    total = sum(len(v) for v in assigned.values())
    assert total + skipped == len(pts)
    for fid, locals_ in assigned.items():
        assert 0 <= fid < len(frames)
        for p in locals_:
            assert 0.0 <= p.x_m < side and 0.0 <= p.y_m < side


def test_roiframe_validation():
    with pytest.raises(InputDomainError):
        RoiFrame(frame_id=0, origin=GeoPoint(0, 0), side_m=0.0)
