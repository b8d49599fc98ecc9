"""Shared helpers for the test suite."""

import math

import numpy as np

from cellvec import geo
from cellvec.embedding import EmbeddingModel
from cellvec.ingest import WaypointRecord

M_PER_DEG = math.pi * geo.EARTH_RADIUS_M / 180.0

BASE_LON = 23.7
BASE_LAT = 37.9


def wp(t, east=0.0, north=0.0, vehicle="v1", lon0=BASE_LON, lat0=BASE_LAT):
    """Waypoint displaced east/north meters from a base coordinate."""
    lat = lat0 + north / M_PER_DEG
    lon = lon0 + east / (M_PER_DEG * math.cos(math.radians(lat)))
    return WaypointRecord(vehicle, int(t), lon, lat)


def cell_at(x_m, y_m, grid=None):
    """Morton cell containing a Mercator-plane point."""
    return geo.cell_of(x_m, y_m, grid or geo.GridSpec())


def model_at_positions(positions_m, vectors, grid=None):
    """EmbeddingModel whose tokens are the cells of Mercator-plane positions."""
    grid = grid or geo.GridSpec()
    cells = [geo.cell_of(x, y, grid) for x, y in positions_m]
    assert len(set(cells)) == len(cells), "positions must map to distinct cells"
    return EmbeddingModel(cells, np.asarray(vectors, dtype=np.float64))
