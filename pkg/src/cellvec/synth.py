"""Synthetic worlds and agent traces with ground truth.

A world is a set of category-labeled places snapped to grid-cell centers
(one place per cell, enforced by minimum-separation rejection sampling) and
a set of agents with homes and a bounded activity radius. Each agent day is
an itinerary drawn from a cyclic category transition grammar, so places of
the same category share chronological context by construction; the bounded
radius makes similarity decay with distance reproducible. Itineraries are
rendered into dwell waypoints at a 30 s cadence with Gaussian position
noise, plus sparse travel waypoints on long legs.

Travel waypoints are only emitted for legs longer than 2 * 200 m and are
spaced at least 200 m apart, so they can never satisfy a 50 m dwell radius
or bridge two dwell clusters. Place separation defaults to 4 cell widths,
which stays clear of the default stop radius even after the ~cos(lat)
ground-size shrink of Mercator cells.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import geo
from .ingest import WAYPOINT_HEADER, format_timestamp
from .poi import POI_HEADER
from .validation import check_count, check_non_negative, check_positive

logger = logging.getLogger(__name__)

GROUND_TRUTH_HEADER = "place_id,lon,lat,category,cell_morton"

TRAVEL_SPEED_MPS = 8.0
MIN_TRAVEL_SPACING_M = 200.0
DWELL_CADENCE_S = 30
DAY_START_S = 6 * 3600
BASE_EPOCH = 1704067200  # 2024-01-01T00:00:00Z
SEPARATION_CELLS = 4.0

# cyclic category grammar: mass on the successor category, some on the one
# after it, the remainder spread over the rest (never the same category)
NEXT_CATEGORY_P = 0.80
SKIP_CATEGORY_P = 0.15

_METERS_PER_DEG = math.pi * geo.EARTH_RADIUS_M / 180.0


@dataclass(frozen=True)
class SynthConfig:
    n_categories: int = 4
    places_per_category: int = 50
    world_extent_m: float = 20000.0
    n_agents: int = 100
    days: int = 60
    agent_activity_radius_m: float = 8000.0
    visits_per_day_mean: float = 7.0
    dwell_minutes_range: tuple = (6.0, 15.0)
    gps_noise_sigma_m: float = 3.0
    seed: int = 42
    origin_lon: float = 23.6
    origin_lat: float = 37.9

    def __post_init__(self):
        check_count(self.n_categories, "n_categories")
        check_count(self.places_per_category, "places_per_category")
        check_count(self.n_agents, "n_agents")
        check_count(self.days, "days")
        check_positive(self.world_extent_m, "world_extent_m")
        check_positive(self.agent_activity_radius_m, "agent_activity_radius_m")
        check_positive(self.visits_per_day_mean, "visits_per_day_mean")
        check_non_negative(self.gps_noise_sigma_m, "gps_noise_sigma_m")
        lo, hi = self.dwell_minutes_range
        if not (6.0 <= lo <= hi):
            raise ValueError("dwell_minutes_range must satisfy 6 <= lo <= hi")


class Place(NamedTuple):
    id: str
    x: float
    y: float
    lon: float
    lat: float
    category: str
    cat_index: int
    cell: int


class Agent(NamedTuple):
    id: str
    x: float
    y: float
    radius_m: float


@dataclass
class World:
    places: list
    agents: list
    transitions: np.ndarray  # category transition matrix


class Visit(NamedTuple):
    place_index: int
    t_arrive: int
    t_depart: int


@dataclass(frozen=True)
class Itinerary:
    agent_index: int
    day: int
    visits: list


def category_transitions(n_categories: int) -> np.ndarray:
    """Row-stochastic next-category matrix; self transitions only when
    there is a single category."""
    k = n_categories
    if k == 1:
        return np.ones((1, 1))
    t = np.zeros((k, k))
    for i in range(k):
        t[i, (i + 1) % k] = NEXT_CATEGORY_P
        if (i + 2) % k != i:
            t[i, (i + 2) % k] = SKIP_CATEGORY_P
        others = [j for j in range(k) if j != i and t[i, j] == 0.0]
        for j in others:
            t[i, j] = (1.0 - t[i].sum()) / len(others) if others else 0.0
        t[i, i] = 0.0
        t[i] /= t[i].sum()
    return t


def generate_world(cfg: SynthConfig, grid: geo.GridSpec = geo.GridSpec()) -> World:
    """Sample places (snapped to cell centers, minimum separation) and agent
    homes, deterministically per seed."""
    rng = np.random.default_rng(cfg.seed)
    origin_x, origin_y = geo.project(cfg.origin_lon, cfg.origin_lat)
    n_places = cfg.n_categories * cfg.places_per_category
    min_sep = SEPARATION_CELLS * grid.cell_size
    size = grid.cell_size

    xs = np.empty(n_places)
    ys = np.empty(n_places)
    accepted = 0
    max_attempts = 200 * n_places
    for _ in range(max_attempts):
        if accepted == n_places:
            break
        dx, dy = rng.uniform(0.0, cfg.world_extent_m, 2)
        x = (math.floor((origin_x + dx) / size) + 0.5) * size
        y = (math.floor((origin_y + dy) / size) + 0.5) * size
        if accepted and np.min(np.hypot(xs[:accepted] - x, ys[:accepted] - y)) < min_sep:
            continue
        xs[accepted] = x
        ys[accepted] = y
        accepted += 1
    if accepted < n_places:
        raise ValueError(
            f"could not place {n_places} places with {min_sep:.0f} m separation "
            f"inside a {cfg.world_extent_m:.0f} m extent")

    lons, lats = geo.unproject(xs, ys)
    cells = geo.cell_of(xs, ys, grid)
    places = [
        Place(f"p{i:04d}", float(xs[i]), float(ys[i]), float(lons[i]), float(lats[i]),
              f"cat{i % cfg.n_categories}", i % cfg.n_categories, int(cells[i]))
        for i in range(n_places)
    ]
    homes = rng.uniform(0.0, cfg.world_extent_m, (cfg.n_agents, 2))
    agents = [
        Agent(f"a{i:04d}", origin_x + homes[i, 0], origin_y + homes[i, 1],
              cfg.agent_activity_radius_m)
        for i in range(cfg.n_agents)
    ]
    return World(places, agents, category_transitions(cfg.n_categories))


def plan_itineraries(world: World, cfg: SynthConfig) -> list:
    """Draw the visit plan (places and dwell intervals) for every agent day.

    Visits per day are Poisson with the configured mean; the next place is
    drawn from the category grammar among reachable places, never repeating
    the current place. Agents with no reachable place are skipped with a
    warning. Every visited place lies within the agent's activity radius.
    """
    n_cat = cfg.n_categories
    trans = world.transitions
    px = np.array([p.x for p in world.places])
    py = np.array([p.y for p in world.places])
    pcat = np.array([p.cat_index for p in world.places])
    dwell_lo, dwell_hi = cfg.dwell_minutes_range
    out = []
    for a_idx, agent in enumerate(world.agents):
        reach = np.where(np.hypot(px - agent.x, py - agent.y) <= agent.radius_m)[0]
        if len(reach) == 0:
            logger.warning("agent %s has no place within %.0f m; skipped",
                           agent.id, agent.radius_m)
            continue
        reach_by_cat = {c: reach[pcat[reach] == c] for c in range(n_cat)}
        rng = np.random.default_rng((cfg.seed, a_idx))
        for day in range(cfg.days):
            n_visits = int(rng.poisson(cfg.visits_per_day_mean))
            if n_visits < 1:
                continue
            t = BASE_EPOCH + day * 86400 + DAY_START_S
            visits = []
            cur_cat = int(rng.integers(0, n_cat))
            cur_place = -1
            for _ in range(n_visits):
                for _ in range(8):
                    cands = reach_by_cat[cur_cat]
                    cands = cands[cands != cur_place]
                    if len(cands):
                        break
                    cur_cat = int(rng.choice(n_cat, p=trans[cur_cat]))
                else:
                    cands = reach[reach != cur_place]
                    if len(cands) == 0:
                        break
                place = int(rng.choice(cands))
                if cur_place >= 0:
                    leg = math.hypot(px[place] - px[cur_place], py[place] - py[cur_place])
                    t += max(60, int(leg / TRAVEL_SPEED_MPS))
                dwell_s = int(rng.uniform(dwell_lo, dwell_hi) * 60.0)
                visits.append(Visit(place, t, t + dwell_s))
                t += dwell_s
                cur_place = place
                cur_cat = int(rng.choice(n_cat, p=trans[pcat[place]]))
            if visits:
                out.append(Itinerary(a_idx, day, visits))
    return out


def _waypoint_rows_for(itinerary: Itinerary, world: World, cfg: SynthConfig, rng) -> list:
    """(t, lon, lat) rows for one agent day, chronological."""
    places = world.places
    sigma = cfg.gps_noise_sigma_m
    rows = []
    prev = None
    for visit in itinerary.visits:
        p = places[visit.place_index]
        if prev is not None:
            q = places[prev.place_index]
            leg = math.hypot(p.x - q.x, p.y - q.y)
            n_travel = min(3, max(0, int(leg / MIN_TRAVEL_SPACING_M) - 1))
            for j in range(n_travel):
                frac = (j + 1) / (n_travel + 1)
                tx = q.x + (p.x - q.x) * frac
                ty = q.y + (p.y - q.y) * frac
                tt = int(prev.t_depart + (visit.t_arrive - prev.t_depart) * frac)
                lon, lat = geo.unproject(tx, ty)
                rows.append(_noisy_row(tt, lon, lat, sigma, rng))
        for t in range(visit.t_arrive, visit.t_depart + 1, DWELL_CADENCE_S):
            rows.append(_noisy_row(t, p.lon, p.lat, sigma, rng))
        prev = visit
    return rows


def _noisy_row(t: int, lon: float, lat: float, sigma: float, rng):
    if sigma > 0.0:
        east, north = rng.normal(0.0, sigma, 2)
        lat = lat + north / _METERS_PER_DEG
        lon = lon + east / (_METERS_PER_DEG * math.cos(math.radians(lat)))
    return t, lon, lat


def generate_trajectories(world: World, cfg: SynthConfig, sink) -> int:
    """Render all itineraries into a waypoint CSV; returns the row count.

    Output is ordered by (agent, day, time) and byte-deterministic per seed.
    Noise draws come from a per-agent stream independent of the planning
    stream, so plans are reproducible on their own.
    """
    sink.write(WAYPOINT_HEADER + "\n")
    count = 0
    for itin in plan_itineraries(world, cfg):
        agent = world.agents[itin.agent_index]
        rng = np.random.default_rng((cfg.seed, itin.agent_index, 1))
        for t, lon, lat in _waypoint_rows_for(itin, world, cfg, rng):
            sink.write(f"{agent.id},{format_timestamp(t)},{lon:.13f},{lat:.13f}\n")
            count += 1
    return count


def write_ground_truth_csv(sink, world: World) -> None:
    sink.write(GROUND_TRUTH_HEADER + "\n")
    for p in world.places:
        sink.write(f"{p.id},{p.lon:.13f},{p.lat:.13f},{p.category},{p.cell}\n")


def write_pois_csv(sink, world: World) -> None:
    """Places rendered as a reference POI CSV (category code 1000 + index)."""
    sink.write(POI_HEADER + "\n")
    for p in world.places:
        sink.write(f"{p.id},{p.lon:.13f},{p.lat:.13f},{1000 + p.cat_index},{p.category}\n")
