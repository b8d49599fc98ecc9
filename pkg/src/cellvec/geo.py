"""Projection, grid tessellation, Morton cell ids, and geographic distance.

Coordinates follow (lon, lat) order throughout. The tessellation lives in the
spherical Web Mercator plane (sphere radius 6378137 m), which gives a global,
axis-aligned grid of nominally square cells; the ground size of a cell shrinks
by roughly cos(lat) away from the equator (about 23.6 m ground for a 30 m cell
at latitude 38). Cell ids are 64-bit Morton (Z-order) interleaves of the grid
indices after a 2^31 bias shift, so negative indices map into unsigned codes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .validation import check_lon_lat, check_positive

MERCATOR_RADIUS_M = 6378137.0
MERCATOR_BOUND_M = math.pi * MERCATOR_RADIUS_M  # 20037508.342789244
EARTH_RADIUS_M = 6371000.0

_INDEX_BIAS = 1 << 31

_M0 = 0x5555555555555555
_M1 = 0x3333333333333333
_M2 = 0x0F0F0F0F0F0F0F0F
_M3 = 0x00FF00FF00FF00FF
_M4 = 0x0000FFFF0000FFFF
_M32 = 0xFFFFFFFF


class GeoPoint(NamedTuple):
    lon: float
    lat: float


@dataclass(frozen=True)
class GridSpec:
    """Tessellation parameter set; cell_size is in Mercator-plane meters."""

    cell_size: float = 30.0

    def __post_init__(self):
        check_positive(self.cell_size, "cell_size")


def project(lon, lat):
    """Forward spherical Web Mercator transform.

    Accepts scalars or numpy arrays; returns (x, y) in meters. Latitudes
    beyond the Mercator limit raise ValueError.
    """
    lon_a = np.asarray(lon, dtype=np.float64)
    lat_a = np.asarray(lat, dtype=np.float64)
    if lon_a.ndim == 0:
        check_lon_lat(float(lon_a), float(lat_a))
    else:
        if not (np.all(np.abs(lon_a) <= 180.0) and np.all(np.isfinite(lon_a))):
            raise ValueError("longitude out of range [-180, 180]")
        if not (np.all(np.abs(lat_a) <= 85.05113) and np.all(np.isfinite(lat_a))):
            raise ValueError("latitude out of Web Mercator range")
    x = MERCATOR_RADIUS_M * np.radians(lon_a)
    # atanh(sin(phi)) == ln(tan(pi/4 + phi/2)), exact at the origin
    y = MERCATOR_RADIUS_M * np.arctanh(np.sin(np.radians(lat_a)))
    if x.ndim == 0:
        return float(x), float(y)
    return x, y


def unproject(x, y):
    """Inverse spherical Web Mercator transform, returning (lon, lat) degrees."""
    x_a = np.asarray(x, dtype=np.float64)
    y_a = np.asarray(y, dtype=np.float64)
    lon = np.degrees(x_a / MERCATOR_RADIUS_M)
    lat = np.degrees(2.0 * np.arctan(np.exp(y_a / MERCATOR_RADIUS_M)) - np.pi / 2.0)
    if lon.ndim == 0:
        return float(lon), float(lat)
    return lon, lat


def _spread_bits(v):
    # 32-bit value -> even bit positions of a 64-bit value
    v = (v | (v << 16)) & _M4
    v = (v | (v << 8)) & _M3
    v = (v | (v << 4)) & _M2
    v = (v | (v << 2)) & _M1
    v = (v | (v << 1)) & _M0
    return v


def _compact_bits(v):
    # even bit positions of a 64-bit value -> 32-bit value
    v = v & _M0
    v = (v | (v >> 1)) & _M1
    v = (v | (v >> 2)) & _M2
    v = (v | (v >> 4)) & _M3
    v = (v | (v >> 8)) & _M4
    v = (v | (v >> 16)) & _M32
    return v


def morton_encode(ix, iy):
    """Interleave two 32-bit indices into one 64-bit Z-order code.

    Bit k of ix lands at output bit 2k, bit k of iy at bit 2k+1. Accepts
    scalars or arrays; values are taken modulo 2^32.
    """
    ix_a = np.asarray(ix).astype(np.uint64) & np.uint64(_M32)
    iy_a = np.asarray(iy).astype(np.uint64) & np.uint64(_M32)
    code = _spread_bits(ix_a) | (_spread_bits(iy_a) << np.uint64(1))
    if code.ndim == 0:
        return int(code)
    return code


def morton_decode(code):
    """Exact inverse of morton_encode; returns (ix, iy)."""
    c = np.asarray(code).astype(np.uint64)
    ix = _compact_bits(c)
    iy = _compact_bits(c >> np.uint64(1))
    if c.ndim == 0:
        return int(ix), int(iy)
    return ix, iy


def cell_of(x, y, grid: GridSpec):
    """Morton cell id of a projected point.

    Grid indices are floor(x / cell_size), floor(y / cell_size), bias-shifted
    by 2^31 before interleaving. Points outside the Mercator extent raise.
    """
    x_a = np.asarray(x, dtype=np.float64)
    y_a = np.asarray(y, dtype=np.float64)
    bound = MERCATOR_BOUND_M + 1e-6
    if not (np.all(np.abs(x_a) <= bound) and np.all(np.abs(y_a) <= bound)):
        raise ValueError("projected point outside the Web Mercator extent")
    ix = np.floor(x_a / grid.cell_size).astype(np.int64) + _INDEX_BIAS
    iy = np.floor(y_a / grid.cell_size).astype(np.int64) + _INDEX_BIAS
    if not (np.all(ix >= 0) and np.all(ix <= _M32) and np.all(iy >= 0) and np.all(iy <= _M32)):
        raise ValueError("grid index outside the 32-bit range after bias shift")
    return morton_encode(ix, iy)


def cell_indices(code):
    """Signed grid indices (ix, iy) of a cell id, bias removed."""
    ix, iy = morton_decode(code)
    if np.ndim(ix) == 0:
        return int(ix) - _INDEX_BIAS, int(iy) - _INDEX_BIAS
    return ix.astype(np.int64) - _INDEX_BIAS, iy.astype(np.int64) - _INDEX_BIAS


def cell_center_xy(code, grid: GridSpec):
    """Projected-plane center of a cell: ((ix + 0.5) * s, (iy + 0.5) * s)."""
    ix, iy = cell_indices(code)
    s = grid.cell_size
    return (ix + 0.5) * s, (iy + 0.5) * s


def cell_centroid(code, grid: GridSpec) -> GeoPoint:
    """Geographic center of one cell."""
    x, y = cell_center_xy(code, grid)
    lon, lat = unproject(x, y)
    return GeoPoint(lon, lat)


def cell_centroids(codes, grid: GridSpec):
    """Vectorized cell_centroid: arrays of lon and lat for an array of codes."""
    x, y = cell_center_xy(np.asarray(codes), grid)
    return unproject(x, y)


def distance_m(lon1, lat1, lon2, lat2):
    """Great-circle haversine distance in meters (sphere radius 6371000 m)."""
    lon1_r = np.radians(np.asarray(lon1, dtype=np.float64))
    lat1_r = np.radians(np.asarray(lat1, dtype=np.float64))
    lon2_r = np.radians(np.asarray(lon2, dtype=np.float64))
    lat2_r = np.radians(np.asarray(lat2, dtype=np.float64))
    sdlat = np.sin((lat2_r - lat1_r) / 2.0)
    sdlon = np.sin((lon2_r - lon1_r) / 2.0)
    h = sdlat * sdlat + np.cos(lat1_r) * np.cos(lat2_r) * sdlon * sdlon
    d = 2.0 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(h)))
    if d.ndim == 0:
        return float(d)
    return d


def plane_distance_m(x1, y1, x2, y2):
    """Euclidean distance in the Mercator plane, for strict-plane replication."""
    d = np.hypot(np.asarray(x2, dtype=np.float64) - x1, np.asarray(y2, dtype=np.float64) - y1)
    if d.ndim == 0:
        return float(d)
    return d
