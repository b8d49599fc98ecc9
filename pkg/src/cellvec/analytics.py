"""Embedding-space analytics: neighbor reports, category similarity tests,
distance-decay regression, and empirical semi-variograms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import geo
from .poi import MIXED_LABEL, NO_POI_LABEL
from .stats import OLSAccumulator, OLSFit, welch_t


def sample_cells(model, n: int, seed: int, labels: Optional[dict] = None,
                 category: Optional[str] = None) -> list:
    """Uniform sample of cells without replacement, deterministic per seed.

    With ``category`` set, the population is restricted to cells whose label
    equals it. A population smaller than n is returned whole, in vocabulary
    order.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if category is not None:
        if labels is None:
            raise ValueError("a label map is required to filter by category")
        population = [t for t in model.tokens if labels.get(t) == category]
    else:
        population = list(model.tokens)
    if not population:
        raise ValueError("empty cell population")
    if len(population) <= n:
        return population
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(population), size=n, replace=False)
    return [population[i] for i in picks]


@dataclass(frozen=True)
class NeighborEntry:
    cell: int
    similarity: float
    label: str
    distance_m: float
    lon: float
    lat: float


@dataclass(frozen=True)
class NeighborReport:
    target_cell: int
    target_label: str
    target_lon: float
    target_lat: float
    neighbors: list


def neighbor_report(model, labels: dict, grid: geo.GridSpec, target: int,
                    k: int = 10, metric: str = "haversine") -> NeighborReport:
    """Top-k similar cells annotated with POI labels and distances."""
    hits = model.top_k(target, k)
    t_lon, t_lat = geo.cell_centroid(target, grid)
    t_xy = geo.cell_center_xy(target, grid)
    entries = []
    for cell, sim in hits:
        lon, lat = geo.cell_centroid(cell, grid)
        if metric == "plane":
            x, y = geo.cell_center_xy(cell, grid)
            dist = geo.plane_distance_m(t_xy[0], t_xy[1], x, y)
        else:
            dist = geo.distance_m(t_lon, t_lat, lon, lat)
        entries.append(NeighborEntry(cell, sim, labels.get(cell, NO_POI_LABEL), dist, lon, lat))
    return NeighborReport(target, labels.get(target, NO_POI_LABEL), t_lon, t_lat, entries)


@dataclass(frozen=True)
class CategoryTestResult:
    category: str
    sample_size: int
    intra_mean: float
    inter_mean: float
    t_stat: float
    df: float
    p_two_sided: float
    n_intra_pairs: int
    n_inter_pairs: int


def category_similarity_test(model, labels: dict, category: str, n: int = 300,
                             seed: int = 0) -> CategoryTestResult:
    """Welch two-sided t-test of intra-category vs cross-category similarity.

    Samples min(n, population) cells of the category and, independently, the
    same number of cells carrying some other single category (``mixed`` cells
    have no single category to contrast and are excluded). The intra set is
    every unordered pair within the category sample; the inter set is every
    cross pair between the two samples. If fewer other-labeled cells exist
    than the category sample size, all of them are used.
    """
    in_cat = [t for t in model.tokens if labels.get(t) == category]
    others = [
        t for t in model.tokens
        if (lbl := labels.get(t)) is not None and lbl != category and lbl != MIXED_LABEL
    ]
    if len(in_cat) < 2:
        raise ValueError(f"need >= 2 labeled cells in category {category!r}, found {len(in_cat)}")
    if len(others) < 2:
        raise ValueError("need >= 2 labeled cells outside the category")
    rng = np.random.default_rng(seed)
    if len(in_cat) > n:
        s_c = [in_cat[i] for i in rng.choice(len(in_cat), size=n, replace=False)]
    else:
        s_c = in_cat
    n_other = min(len(s_c), len(others))
    if len(others) > n_other:
        s_o = [others[i] for i in rng.choice(len(others), size=n_other, replace=False)]
    else:
        s_o = others

    unit = model.unit_vectors
    u_c = unit[[model.index(t) for t in s_c]]
    u_o = unit[[model.index(t) for t in s_o]]
    iu = np.triu_indices(len(s_c), k=1)
    intra = (u_c @ u_c.T)[iu]
    inter = (u_c @ u_o.T).ravel()
    t_stat, df, p = welch_t(intra, inter)
    return CategoryTestResult(
        category=category,
        sample_size=len(s_c),
        intra_mean=float(intra.mean()),
        inter_mean=float(inter.mean()),
        t_stat=t_stat,
        df=df,
        p_two_sided=p,
        n_intra_pairs=len(intra),
        n_inter_pairs=len(inter),
    )


def _sample_geometry(model, sample, grid: geo.GridSpec, metric: str):
    codes = np.asarray(sample, dtype=np.uint64)
    idx = [model.index(t) for t in sample]
    unit = model.unit_vectors[idx]
    if metric == "plane":
        ax, ay = geo.cell_center_xy(codes, grid)
    elif metric == "haversine":
        ax, ay = geo.cell_centroids(codes, grid)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return np.asarray(ax, dtype=np.float64), np.asarray(ay, dtype=np.float64), unit


def pairwise_decay(model, sample, grid: geo.GridSpec, min_m: float = 0.0,
                   max_m: float = math.inf, metric: str = "haversine"):
    """Stream (distance, similarity) blocks over all unordered sample pairs.

    Yields one pair of numpy arrays per anchor cell, restricted to pairs
    whose distance lies in [min_m, max_m). Enumeration order is (i, j) with
    i < j in sample order; nothing is materialized across anchors, so a
    3000-cell sample (4,498,500 pairs) streams in bounded memory.
    """
    if len(sample) < 2:
        raise ValueError("need at least 2 sampled cells")
    ax, ay, unit = _sample_geometry(model, sample, grid, metric)
    n = len(sample)
    for i in range(n - 1):
        if metric == "plane":
            d = np.hypot(ax[i + 1:] - ax[i], ay[i + 1:] - ay[i])
        else:
            d = geo.distance_m(ax[i], ay[i], ax[i + 1:], ay[i + 1:])
        cs = unit[i + 1:] @ unit[i]
        mask = (d >= min_m) & (d < max_m)
        if mask.all():
            yield d, cs
        else:
            yield d[mask], cs[mask]


@dataclass(frozen=True)
class DecayModel:
    slope: float
    intercept: float
    r_squared: float
    n_pairs: int
    min_m: float
    max_m: float


def fit_decay(model, sample, grid: geo.GridSpec, min_m: float = 0.0,
              max_m: float = math.inf, metric: str = "haversine") -> DecayModel:
    """OLS fit of similarity against distance over the streamed pairs."""
    acc = OLSAccumulator()
    for d, cs in pairwise_decay(model, sample, grid, min_m, max_m, metric):
        acc.add_block(d, cs)
    fit = acc.fit()
    return DecayModel(fit.slope, fit.intercept, fit.r_squared, fit.n, min_m, max_m)


@dataclass(frozen=True)
class VariogramBin:
    h_lo: float
    h_hi: float
    n_pairs: int
    gamma: Optional[float]

    @property
    def h_mid(self) -> float:
        return 0.5 * (self.h_lo + self.h_hi)


@dataclass(frozen=True)
class VariogramResult:
    bins: list
    fit: Optional[OLSFit]
    bin_width: float
    max_dist: float
    n_pairs: int


def empirical_variogram(model, sample, grid: geo.GridSpec, bin_width: float = 1000.0,
                        max_dist: float = 100000.0,
                        metric: str = "haversine") -> VariogramResult:
    """Binned semi-variogram of the embedding field over sampled cells.

    Every unordered pair with distance below ``max_dist`` contributes
    gamma_pair = 0.5 * ||u_i - u_j||^2 of its unit vectors (identically
    1 - cosine similarity) to bin floor(distance / bin_width). Empty bins
    report n_pairs = 0 and gamma None. An OLS line over (bin midpoint,
    gamma) of the non-empty bins is attached when it is defined.

    Bin sums are accumulated in one sequential pass over pairs in (i, j)
    order, so a brute-force per-bin recomputation in the same order
    reproduces the result exactly.
    """
    if len(sample) < 2:
        raise ValueError("need at least 2 sampled cells")
    if bin_width <= 0 or max_dist <= 0:
        raise ValueError("bin_width and max_dist must be positive")
    ax, ay, unit = _sample_geometry(model, sample, grid, metric)
    n = len(sample)
    n_bins = int(math.ceil(max_dist / bin_width))
    bin_blocks = []
    term_blocks = []
    for i in range(n - 1):
        if metric == "plane":
            d = np.hypot(ax[i + 1:] - ax[i], ay[i + 1:] - ay[i])
        else:
            d = geo.distance_m(ax[i], ay[i], ax[i + 1:], ay[i + 1:])
        mask = d < max_dist
        diff = unit[i + 1:][mask] - unit[i]
        # (diff * diff).sum(axis=1) reduces each row exactly like a 1-D sum,
        # so per-pair recomputation reproduces these terms bit-for-bit
        term_blocks.append(0.5 * (diff * diff).sum(axis=1))
        bin_blocks.append((d[mask] / bin_width).astype(np.int64))
    all_bins = np.concatenate(bin_blocks) if bin_blocks else np.empty(0, dtype=np.int64)
    all_terms = np.concatenate(term_blocks) if term_blocks else np.empty(0)
    counts = np.bincount(all_bins, minlength=n_bins)
    sums = np.bincount(all_bins, weights=all_terms, minlength=n_bins)

    bins = []
    fit_acc = OLSAccumulator()
    for i in range(n_bins):
        lo = i * bin_width
        hi = lo + bin_width
        if counts[i] > 0:
            gamma = float(sums[i] / counts[i])
            fit_acc.add(0.5 * (lo + hi), gamma)
            bins.append(VariogramBin(lo, hi, int(counts[i]), gamma))
        else:
            bins.append(VariogramBin(lo, hi, 0, None))
    fit = None
    if fit_acc.n >= 2 and fit_acc.sxx > 0:
        fit = fit_acc.fit()
    return VariogramResult(bins, fit, bin_width, max_dist, int(counts.sum()))
