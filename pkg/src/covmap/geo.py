"""Spherical-to-planar projection and partitioning of a region into square frames.

Coordinates on the sphere are decimal degrees; local frames are metric, with
x pointing east and y pointing north relative to a frame origin. The
projection is the small-angle spherical map: a longitude difference scales by
the cosine of the reference latitude, a latitude difference maps directly to
arc length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InputDomainError

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPoint:
    """A point on the sphere. Longitude is normalized to [-180, 180)."""

    lat_deg: float
    lon_deg: float

    def __post_init__(self):
        if not (math.isfinite(self.lat_deg) and math.isfinite(self.lon_deg)):
            raise InputDomainError(f"non-finite coordinates ({self.lat_deg}, {self.lon_deg})")
        if not -90.0 <= self.lat_deg <= 90.0:
            raise InputDomainError(f"latitude {self.lat_deg} outside [-90, 90]")
        lon = (self.lon_deg + 180.0) % 360.0 - 180.0
        object.__setattr__(self, "lon_deg", lon)


@dataclass(frozen=True)
class PlanarPoint:
    """East/north displacement in meters relative to some frame origin."""

    x_m: float
    y_m: float

    def __post_init__(self):
        if not (math.isfinite(self.x_m) and math.isfinite(self.y_m)):
            raise InputDomainError(f"non-finite planar point ({self.x_m}, {self.y_m})")


@dataclass(frozen=True)
class RoiFrame:
    """One L x L square frame: integer id, southwest corner, side length."""

    frame_id: int
    origin: GeoPoint
    side_m: float

    def __post_init__(self):
        if self.side_m <= 0:
            raise InputDomainError(f"side_m must be positive, got {self.side_m}")


def project(origin: GeoPoint, p: GeoPoint) -> PlanarPoint:
    """Project p into the local flat frame anchored at origin.

    Returns (x, y) = (R cos(lat0) * dlon, R * dlat) with angles in radians and
    R the mean Earth radius. The cosine is taken at the origin latitude so the
    whole frame shares one affine map. Valid for points within a few degrees
    of the origin.
    """
    dlat = math.radians(p.lat_deg - origin.lat_deg)
    dlon = math.radians(p.lon_deg - origin.lon_deg)
    # shortest way around the antimeridian
    if dlon > math.pi:
        dlon -= 2.0 * math.pi
    elif dlon < -math.pi:
        dlon += 2.0 * math.pi
    x = EARTH_RADIUS_M * math.cos(math.radians(origin.lat_deg)) * dlon
    y = EARTH_RADIUS_M * dlat
    return PlanarPoint(x, y)


def partition(bbox: tuple[GeoPoint, GeoPoint], side_m: float) -> list[RoiFrame]:
    """Lay a row-major grid of disjoint side_m x side_m frames over bbox.

    The grid is anchored at the bbox southwest corner; partial frames at the
    north/east edges are dropped. Extents are measured at the bbox center
    latitude, so frame origins are spaced uniformly in longitude. A degenerate
    bbox yields an empty list.
    """
    sw, ne = bbox
    if side_m <= 0:
        raise InputDomainError(f"side_m must be positive, got {side_m}")
    if ne.lat_deg < sw.lat_deg or ne.lon_deg < sw.lon_deg:
        raise InputDomainError("bbox northeast corner must lie north-east of southwest corner")

    center_lat = 0.5 * (sw.lat_deg + ne.lat_deg)
    cos_c = math.cos(math.radians(center_lat))
    extent_x = EARTH_RADIUS_M * cos_c * math.radians(ne.lon_deg - sw.lon_deg)
    extent_y = EARTH_RADIUS_M * math.radians(ne.lat_deg - sw.lat_deg)
    # epsilon keeps an exactly n*L extent from losing its last row to rounding
    nx = int(extent_x / side_m + 1e-9)
    ny = int(extent_y / side_m + 1e-9)
    if nx <= 0 or ny <= 0:
        return []

    dlat_deg = math.degrees(side_m / EARTH_RADIUS_M)
    dlon_deg = math.degrees(side_m / (EARTH_RADIUS_M * cos_c))
    frames = []
    for row in range(ny):
        for col in range(nx):
            origin = GeoPoint(sw.lat_deg + row * dlat_deg, sw.lon_deg + col * dlon_deg)
            frames.append(RoiFrame(frame_id=row * nx + col, origin=origin, side_m=side_m))
    return frames


def assign(
    points: list[GeoPoint], frames: list[RoiFrame]
) -> tuple[dict[int, list[PlanarPoint]], int]:
    """Project each point into the frame that contains it.

    A point belongs to a frame when both frame-local coordinates fall in
    [0, side_m) (half-open cells); when the local maps of two neighboring
    frames both claim a point, the lower frame_id wins so assignment is a
    function. Returns (frame_id -> local points, count of points outside all
    frames). Only frames that received at least one point appear in the map.
    """
    out: dict[int, list[PlanarPoint]] = {}
    skipped = 0
    if not frames:
        return out, len(points)

    ordered = sorted(frames, key=lambda f: f.frame_id)
    by_id = {f.frame_id: f for f in ordered}
    sw = ordered[0].origin
    side = ordered[0].side_m
    nx = sum(1 for f in ordered if f.origin.lat_deg == sw.lat_deg)
    ny = len(ordered) // nx
    dlat_deg = math.degrees(side / EARTH_RADIUS_M)
    if nx > 1:
        dlon_deg = ordered[1].origin.lon_deg - sw.lon_deg
    else:
        mid_lat = sw.lat_deg + 0.5 * ny * dlat_deg
        dlon_deg = math.degrees(side / (EARTH_RADIUS_M * math.cos(math.radians(mid_lat))))

    for p in points:
        row = int((p.lat_deg - sw.lat_deg) // dlat_deg)
        col0 = int((p.lon_deg - sw.lon_deg) // dlon_deg)
        hit = None
        if 0 <= row < ny:
            # a row's own cos factor shifts containment by at most one column
            # relative to the lattice pitch, so three candidates suffice
            for col in (col0 - 1, col0, col0 + 1):
                if not 0 <= col < nx:
                    continue
                frame = by_id[row * nx + col]
                local = project(frame.origin, p)
                if 0.0 <= local.x_m < side and 0.0 <= local.y_m < side:
                    hit = (frame.frame_id, local)
                    break
        if hit is None:
            skipped += 1
        else:
            out.setdefault(hit[0], []).append(hit[1])
    return out, skipped


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters on the R = 6371 km sphere."""
    lat1, lat2 = math.radians(a.lat_deg), math.radians(b.lat_deg)
    dlat = lat2 - lat1
    dlon = math.radians(b.lon_deg - a.lon_deg)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(h))
