"""Waypoint CSV parsing and per-vehicle, per-day trajectory segmentation.

Input format: UTF-8 CSV with header ``vehicle_id,timestamp,lon,lat`` and
ISO-8601 UTC timestamps at second precision (``2017-06-01T08:30:00Z``).
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .errors import FormatError
from .validation import valid_lat, valid_lon

WAYPOINT_HEADER = "vehicle_id,timestamp,lon,lat"

_EPOCH_ORDINAL = datetime.date(1970, 1, 1).toordinal()
_SECONDS_PER_DAY = 86400


class WaypointRecord(NamedTuple):
    vehicle_id: str
    t: int  # UTC epoch seconds
    lon: float
    lat: float


@dataclass
class RawTrajectory:
    """All waypoints of one vehicle within one calendar day, time-ordered."""

    vehicle_id: str
    day: datetime.date
    points: list = field(default_factory=list)


def _days_from_civil(y: int, m: int, d: int) -> int:
    # days since 1970-01-01 for a proleptic Gregorian date
    y -= m <= 2
    era = (y if y >= 0 else y - 399) // 400
    yoe = y - era * 400
    doy = (153 * (m + (-3 if m > 2 else 9)) + 2) // 5 + d - 1
    doe = yoe * 365 + yoe // 4 - yoe // 100 + doy
    return era * 146097 + doe - 719468


def parse_timestamp(s: str) -> int:
    """Parse ``YYYY-MM-DDTHH:MM:SSZ`` into UTC epoch seconds."""
    if len(s) != 20 or s[19] != "Z" or s[4] != "-" or s[7] != "-" or s[10] != "T":
        raise ValueError(f"bad timestamp: {s!r}")
    days = _days_from_civil(int(s[0:4]), int(s[5:7]), int(s[8:10]))
    return days * _SECONDS_PER_DAY + int(s[11:13]) * 3600 + int(s[14:16]) * 60 + int(s[17:19])


def format_timestamp(t: int) -> str:
    """Inverse of parse_timestamp."""
    days, rem = divmod(int(t), _SECONDS_PER_DAY)
    date = datetime.date.fromordinal(_EPOCH_ORDINAL + days)
    h, rem = divmod(rem, 3600)
    m, s = divmod(rem, 60)
    return f"{date.isoformat()}T{h:02d}:{m:02d}:{s:02d}Z"


def parse_waypoints(stream: Iterable[str], strict: bool = False):
    """Parse a waypoint CSV stream.

    Returns ``(records, skipped)``: the records in file order and the number
    of malformed rows. In strict mode the first malformed row raises
    FormatError instead of being counted.
    """
    it = iter(stream)
    try:
        header = next(it)
    except StopIteration:
        raise FormatError("empty stream: missing waypoint CSV header") from None
    if header.strip().lstrip("﻿") != WAYPOINT_HEADER:
        raise FormatError(f"expected header {WAYPOINT_HEADER!r}, got {header.strip()!r}")

    records = []
    append = records.append
    skipped = 0
    date_cache: dict = {}
    for line_no, line in enumerate(it, start=2):
        line = line.rstrip("\r\n")
        if not line:
            continue
        try:
            vid, ts, lon_s, lat_s = line.split(",")
            day_part = ts[:10]
            base = date_cache.get(day_part)
            if base is None:
                if len(ts) != 20 or ts[19] != "Z" or ts[10] != "T":
                    raise ValueError(f"bad timestamp: {ts!r}")
                base = _days_from_civil(int(ts[0:4]), int(ts[5:7]), int(ts[8:10])) * _SECONDS_PER_DAY
                date_cache[day_part] = base
            t = base + int(ts[11:13]) * 3600 + int(ts[14:16]) * 60 + int(ts[17:19])
            lon = float(lon_s)
            lat = float(lat_s)
            if not vid or not valid_lon(lon) or not valid_lat(lat):
                raise ValueError("field out of range")
        except ValueError as exc:
            if strict:
                raise FormatError(f"line {line_no}: {exc}") from None
            skipped += 1
            continue
        append(WaypointRecord(vid, t, lon, lat))
    return records, skipped


def segment_trajectories(records, day_offset_hours: int = 0):
    """Group waypoints into per-(vehicle, UTC day) trajectories.

    Input may be unsorted; each group is sorted by time with stable tie
    order, and trajectories are emitted sorted by (vehicle_id, day) so the
    output is deterministic regardless of input sharding.

    day_offset_hours shifts the day boundary for local-day replication.
    """
    offset = day_offset_hours * 3600
    groups: dict = {}
    for rec in records:
        key = (rec.vehicle_id, (rec.t - offset) // _SECONDS_PER_DAY)
        bucket = groups.get(key)
        if bucket is None:
            groups[key] = [rec]
        else:
            bucket.append(rec)
    out = []
    for (vid, day_no) in sorted(groups):
        pts = groups[(vid, day_no)]
        pts.sort(key=lambda r: r.t)
        out.append(RawTrajectory(vid, datetime.date.fromordinal(_EPOCH_ORDINAL + day_no), pts))
    return out
