"""Serialization of analytics results to JSON, GeoJSON, CSV and SVG.

Cell ids are serialized as decimal strings in JSON documents: Morton codes
occupy up to 62 bits and would lose precision as JSON numbers. Unbounded
distances are serialized as null.
"""

from __future__ import annotations

import json
import math

from .analytics import CategoryTestResult, DecayModel, NeighborReport, VariogramResult


def _num(v):
    if v is None:
        return None
    if isinstance(v, float) and math.isinf(v):
        return None
    return v


def write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as sink:
        json.dump(payload, sink, sort_keys=True, indent=2)
        sink.write("\n")


def neighbor_report_dict(report: NeighborReport) -> dict:
    return {
        "target": {
            "cell": str(report.target_cell),
            "label": report.target_label,
            "lon": report.target_lon,
            "lat": report.target_lat,
        },
        "neighbors": [
            {
                "cell": str(e.cell),
                "similarity": e.similarity,
                "label": e.label,
                "distance_m": e.distance_m,
                "lon": e.lon,
                "lat": e.lat,
            }
            for e in report.neighbors
        ],
    }


def neighbor_report_geojson(report: NeighborReport) -> dict:
    features = [
        {
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [report.target_lon, report.target_lat]},
            "properties": {
                "cell": str(report.target_cell),
                "label": report.target_label,
                "role": "target",
            },
        }
    ]
    for rank, e in enumerate(report.neighbors, start=1):
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [e.lon, e.lat]},
                "properties": {
                    "cell": str(e.cell),
                    "label": e.label,
                    "role": "neighbor",
                    "rank": rank,
                    "similarity": e.similarity,
                    "distance_m": e.distance_m,
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}


def category_test_dict(result: CategoryTestResult) -> dict:
    return {
        "category": result.category,
        "sample_size": result.sample_size,
        "intra_mean": result.intra_mean,
        "inter_mean": result.inter_mean,
        "t_stat": result.t_stat,
        "df": result.df,
        "p_two_sided": result.p_two_sided,
        "n_intra_pairs": result.n_intra_pairs,
        "n_inter_pairs": result.n_inter_pairs,
    }


def decay_dict(model: DecayModel) -> dict:
    return {
        "slope": model.slope,
        "intercept": model.intercept,
        "r_squared": model.r_squared,
        "n_pairs": model.n_pairs,
        "range_filter": {"min_m": _num(model.min_m), "max_m": _num(model.max_m)},
    }


def variogram_dict(result: VariogramResult) -> dict:
    return {
        "bin_width": result.bin_width,
        "max_dist": result.max_dist,
        "n_pairs": result.n_pairs,
        "bins": [
            {"h_lo": b.h_lo, "h_hi": b.h_hi, "n_pairs": b.n_pairs, "gamma": b.gamma}
            for b in result.bins
        ],
        "fit": None
        if result.fit is None
        else {
            "slope": result.fit.slope,
            "intercept": result.fit.intercept,
            "r_squared": result.fit.r_squared,
            "n": result.fit.n,
        },
    }


def write_pairs_csv(path, blocks) -> None:
    """Dump a pairwise_decay stream as ``D,CS`` rows."""
    with open(path, "w", encoding="utf-8") as sink:
        sink.write("D,CS\n")
        for d, cs in blocks:
            for i in range(len(d)):
                sink.write(f"{d[i]:.9g},{cs[i]:.9g}\n")


def write_variogram_csv(path, result: VariogramResult) -> None:
    """``h_mid,n_pairs,gamma`` rows; empty bins carry gamma ``nan``."""
    with open(path, "w", encoding="utf-8") as sink:
        sink.write("h_mid,n_pairs,gamma\n")
        for b in result.bins:
            gamma = "nan" if b.gamma is None else f"{b.gamma:.9g}"
            sink.write(f"{b.h_mid:.9g},{b.n_pairs},{gamma}\n")


def write_scatter_svg(path, xs, ys, x_label: str = "x", y_label: str = "y",
                      line=None, max_points: int = 5000) -> None:
    """Minimal scatter plot: axes, points and an optional fitted line.

    Large inputs are thinned to at most ``max_points`` evenly spaced points.
    """
    xs = list(xs)
    ys = list(ys)
    if len(xs) != len(ys):
        raise ValueError("x and y lengths differ")
    if len(xs) > max_points:
        step = len(xs) / max_points
        picks = [int(i * step) for i in range(max_points)]
        xs = [xs[i] for i in picks]
        ys = [ys[i] for i in picks]
    width, height, margin = 640, 480, 50
    x_lo, x_hi = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y_lo, y_hi = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x):
        return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 10}" text-anchor="middle">{x_label}</text>',
        f'<text x="15" y="{height / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 15 {height / 2:.0f})">{y_label}</text>',
        f'<text x="{margin}" y="{height - margin + 20}" text-anchor="middle">{x_lo:.4g}</text>',
        f'<text x="{width - margin}" y="{height - margin + 20}" text-anchor="middle">{x_hi:.4g}</text>',
        f'<text x="{margin - 5}" y="{height - margin}" text-anchor="end">{y_lo:.4g}</text>',
        f'<text x="{margin - 5}" y="{margin}" text-anchor="end">{y_hi:.4g}</text>',
    ]
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="1.5" fill="steelblue"/>')
    if line is not None:
        slope, intercept = line
        parts.append(
            f'<line x1="{sx(x_lo):.2f}" y1="{sy(slope * x_lo + intercept):.2f}" '
            f'x2="{sx(x_hi):.2f}" y2="{sy(slope * x_hi + intercept):.2f}" stroke="crimson"/>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as sink:
        sink.write("\n".join(parts))
        sink.write("\n")
