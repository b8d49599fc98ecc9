"""Stop detection and conversion of stop sequences into cell-id sequences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from sklearn.base import BaseEstimator, TransformerMixin

from . import geo
from .ingest import format_timestamp
from .validation import check_non_negative, check_positive

_METERS_PER_DEG = math.pi * geo.EARTH_RADIUS_M / 180.0

STOP_HEADER = "vehicle_id,day,t_start,t_end,lon,lat,n_points"


@dataclass(frozen=True, slots=True)
class StopEvent:
    """One detected dwell: centroid of its member waypoints and its time span."""

    lon: float
    lat: float
    t_start: int
    t_end: int
    n_points: int

    @property
    def duration(self) -> int:
        return self.t_end - self.t_start


@dataclass
class CellSequence:
    """Collapsed cell ids of one trajectory; no two consecutive cells equal."""

    vehicle_id: str
    day: object
    cells: list


class StopDetector(BaseEstimator, TransformerMixin):
    """Sequential anchor clustering over a time-ordered waypoint stream.

    A cluster grows while each new point lies within ``radius`` meters of the
    running centroid of the cluster members. Up to ``max_noise_run``
    consecutive outliers are tolerated: they are excluded from the centroid,
    and the cluster resumes if a later point re-enters the radius. One more
    consecutive outlier closes the cluster; a new cluster is then seeded from
    the first buffered outlier and the rest are replayed, so a fast move into
    a new dwell loses no points. A time gap longer than ``2 * min_duration``
    between consecutive points also closes any open cluster, because an
    unobserved interval is not evidence of a dwell. A closed cluster is
    emitted as a StopEvent when its time span is at least ``min_duration``.

    The within-radius test uses a local equirectangular approximation of
    ground distance, which is accurate to well under 0.1% at the sub-kilometer
    scale relevant to a dwell radius.
    """

    def __init__(self, min_duration: float = 300.0, radius: float = 50.0,
                 max_noise_run: int = 2):
        self.min_duration = min_duration
        self.radius = radius
        self.max_noise_run = max_noise_run

    def _check_params(self):
        check_positive(self.min_duration, "min_duration")
        check_positive(self.radius, "radius")
        check_non_negative(self.max_noise_run, "max_noise_run")

    def fit(self, X=None, y=None):
        """Stateless; present for pipeline compatibility."""
        self._check_params()
        return self

    def transform(self, X: Iterable) -> list:
        """Detect stops for every trajectory in X."""
        return [self.detect(traj) for traj in X]

    def detect(self, traj) -> list:
        """Detect stops in one time-ordered trajectory.

        ``traj`` is a RawTrajectory or any object with a ``points`` list of
        records carrying ``t``, ``lon`` and ``lat``.
        """
        self._check_params()
        points = traj.points if hasattr(traj, "points") else traj
        min_dur = self.min_duration
        radius2 = self.radius * self.radius
        max_run = int(self.max_noise_run)
        max_gap = 2.0 * min_dur
        m_deg = _METERS_PER_DEG

        stops = []
        # open cluster state
        n = 0
        sum_lon = sum_lat = 0.0
        first_t = last_t = 0
        outliers: list = []
        prev_t = None

        def finalize():
            if n >= 2 and last_t - first_t >= min_dur:
                stops.append(StopEvent(sum_lon / n, sum_lat / n, first_t, last_t, n))

        for rec in points:
            t = rec.t
            lon = rec.lon
            lat = rec.lat
            if prev_t is not None and t - prev_t > max_gap and n:
                finalize()
                n = 0
                outliers.clear()
            prev_t = t
            if n == 0:
                n = 1
                sum_lon = lon
                sum_lat = lat
                first_t = last_t = t
                continue
            c_lon = sum_lon / n
            c_lat = sum_lat / n
            dy = (lat - c_lat) * m_deg
            dx = (lon - c_lon) * m_deg * math.cos(math.radians(c_lat))
            if dx * dx + dy * dy <= radius2:
                n += 1
                sum_lon += lon
                sum_lat += lat
                last_t = t
                outliers.clear()
                continue
            outliers.append(rec)
            if len(outliers) <= max_run:
                continue
            # noise budget exhausted: close the cluster, reseed from the
            # first outlier and replay the rest (at most max_run points, so
            # the replay itself can never overflow the budget again)
            finalize()
            pending = outliers[:]
            outliers.clear()
            seed = pending[0]
            n = 1
            sum_lon = seed.lon
            sum_lat = seed.lat
            first_t = last_t = seed.t
            for q in pending[1:]:
                c_lon = sum_lon / n
                c_lat = sum_lat / n
                dy = (q.lat - c_lat) * m_deg
                dx = (q.lon - c_lon) * m_deg * math.cos(math.radians(c_lat))
                if dx * dx + dy * dy <= radius2:
                    n += 1
                    sum_lon += q.lon
                    sum_lat += q.lat
                    last_t = q.t
                    outliers.clear()
                else:
                    outliers.append(q)
        finalize()
        return stops


def collapse_to_cells(stops, grid: geo.GridSpec) -> list:
    """Map stop centroids to Morton cells, collapsing consecutive duplicates."""
    cells = []
    prev = None
    for stop in stops:
        x, y = geo.project(stop.lon, stop.lat)
        code = geo.cell_of(x, y, grid)
        if code != prev:
            cells.append(code)
            prev = code
    return cells


def trajectory_cell_sequence(traj, detector: StopDetector,
                             grid: geo.GridSpec) -> Optional[CellSequence]:
    """Full stop stage for one trajectory; None when no stop was found."""
    stops = detector.detect(traj)
    if not stops:
        return None
    return CellSequence(traj.vehicle_id, traj.day, collapse_to_cells(stops, grid))


def write_stops_csv(sink, vehicle_id: str, day, stops) -> None:
    """Append stop dump rows (header written by the caller)."""
    day_s = day.isoformat()
    for s in stops:
        sink.write(
            f"{vehicle_id},{day_s},{format_timestamp(s.t_start)},"
            f"{format_timestamp(s.t_end)},{s.lon:.9g},{s.lat:.9g},{s.n_points}\n"
        )
