"""Small input validation helpers used across the package."""

from __future__ import annotations

import math

MAX_LON = 180.0
MAX_LAT = 85.05113  # Web Mercator latitude limit


def check_positive(value: float, name: str) -> float:
    if not (value > 0) or not math.isfinite(value):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_non_negative(value: float, name: str) -> float:
    if value < 0 or not math.isfinite(value):
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return value


def check_count(value: int, name: str, minimum: int = 1) -> int:
    if int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def valid_lon(lon: float) -> bool:
    return math.isfinite(lon) and -MAX_LON <= lon <= MAX_LON


def valid_lat(lat: float) -> bool:
    return math.isfinite(lat) and -MAX_LAT <= lat <= MAX_LAT


def check_lon_lat(lon: float, lat: float) -> None:
    if not valid_lon(lon):
        raise ValueError(f"longitude out of range [-180, 180]: {lon!r}")
    if not valid_lat(lat):
        raise ValueError(f"latitude out of range [-{MAX_LAT}, {MAX_LAT}]: {lat!r}")
