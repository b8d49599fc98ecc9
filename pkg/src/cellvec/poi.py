"""Reference POI loading and per-cell category labeling.

POIs come from a pre-extracted CSV with header ``id,lon,lat,code,category``.
A cell containing exactly one POI gets that POI's category; a cell containing
more than one POI (regardless of their categories) gets the reserved label
``mixed``; cells without POIs are absent from the map.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple

from . import geo
from .errors import FormatError
from .validation import valid_lat, valid_lon

POI_HEADER = "id,lon,lat,code,category"
MIXED_LABEL = "mixed"
NO_POI_LABEL = "NO POI"


class PoiRecord(NamedTuple):
    id: str
    lon: float
    lat: float
    code: int
    category: str


def load_pois(stream: Iterable[str], strict: bool = False):
    """Parse a POI CSV stream; returns (records, skipped)."""
    it = iter(stream)
    try:
        header = next(it)
    except StopIteration:
        raise FormatError("empty stream: missing POI CSV header") from None
    if header.strip().lstrip("﻿") != POI_HEADER:
        raise FormatError(f"expected header {POI_HEADER!r}, got {header.strip()!r}")
    records = []
    skipped = 0
    for line_no, line in enumerate(it, start=2):
        line = line.rstrip("\r\n")
        if not line:
            continue
        try:
            pid, lon_s, lat_s, code_s, category = line.split(",")
            lon = float(lon_s)
            lat = float(lat_s)
            if not pid or not category or not valid_lon(lon) or not valid_lat(lat):
                raise ValueError("field out of range")
            rec = PoiRecord(pid, lon, lat, int(code_s), category)
        except ValueError as exc:
            if strict:
                raise FormatError(f"line {line_no}: {exc}") from None
            skipped += 1
            continue
        records.append(rec)
    return records, skipped


def label_cells(pois, grid: geo.GridSpec) -> dict:
    """Cell id -> category (or ``mixed``) for every cell containing a POI."""
    labels: dict = {}
    for p in pois:
        if p.category == MIXED_LABEL:
            raise ValueError(f"POI {p.id!r} uses the reserved category name {MIXED_LABEL!r}")
        x, y = geo.project(p.lon, p.lat)
        code = geo.cell_of(x, y, grid)
        if code in labels:
            labels[code] = MIXED_LABEL
        else:
            labels[code] = p.category
    return labels
