"""Subcommand front-end for the pipeline.

Stages compose through files only: synth -> stops -> corpus -> train ->
query/analyze. Every subcommand writes its artifacts plus a manifest.json
(resolved parameters, input digests, seed, tool version) into --out; the
manifest never contains absolute paths or timestamps, so reruns with the
same inputs are byte-identical at --threads 1.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

from . import __version__, geo
from .analytics import (
    category_similarity_test,
    empirical_variogram,
    fit_decay,
    neighbor_report,
    pairwise_decay,
    sample_cells,
)
from .corpus import build_vocab, corpus_stats, encode_corpus, read_sequences, write_sequences, Vocab
from .embedding import SkipGramEmbedder, load_embeddings, save_embeddings
from .errors import CellvecError
from .ingest import WAYPOINT_HEADER, format_timestamp, parse_waypoints, segment_trajectories
from .poi import MIXED_LABEL, label_cells, load_pois
from .reports import (
    category_test_dict,
    decay_dict,
    neighbor_report_dict,
    neighbor_report_geojson,
    variogram_dict,
    write_json,
    write_pairs_csv,
    write_scatter_svg,
    write_variogram_csv,
)
from .stops import STOP_HEADER, StopDetector, collapse_to_cells, write_stops_csv
from .synth import SynthConfig, generate_trajectories, generate_world, write_ground_truth_csv, write_pois_csv


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: str, subcommand: str, params: dict, inputs: list,
                    seed=None) -> None:
    manifest = {
        "tool": "cellvec",
        "version": __version__,
        "subcommand": subcommand,
        "params": params,
        "inputs": {os.path.basename(p): _sha256(p) for p in inputs},
    }
    if seed is not None:
        manifest["seed"] = seed
    write_json(os.path.join(out_dir, "manifest.json"), manifest)


def _out_dir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _labels_from_pois(path: str, grid: geo.GridSpec):
    with open(path, "r", encoding="utf-8") as f:
        pois, skipped = load_pois(f)
    if skipped:
        print(f"skipped {skipped} malformed POI rows", file=sys.stderr)
    return label_cells(pois, grid)


def cmd_synth(args) -> int:
    out = _out_dir(args)
    cfg = SynthConfig(
        n_categories=args.categories,
        places_per_category=args.places_per_category,
        world_extent_m=args.extent_m,
        n_agents=args.agents,
        days=args.days,
        agent_activity_radius_m=args.radius_m,
        visits_per_day_mean=args.visits_mean,
        dwell_minutes_range=(args.dwell_min, args.dwell_max),
        gps_noise_sigma_m=args.noise_sigma_m,
        seed=args.seed,
    )
    grid = geo.GridSpec(args.cell_size)
    world = generate_world(cfg, grid)
    wp_path = os.path.join(out, "waypoints.csv")
    with open(wp_path, "w", encoding="utf-8") as f:
        n_rows = generate_trajectories(world, cfg, f)
    with open(os.path.join(out, "places.csv"), "w", encoding="utf-8") as f:
        write_ground_truth_csv(f, world)
    with open(os.path.join(out, "pois.csv"), "w", encoding="utf-8") as f:
        write_pois_csv(f, world)
    print(f"wrote {n_rows} waypoints for {len(world.places)} places, "
          f"{len(world.agents)} agents")
    params = {k: getattr(args, k) for k in (
        "categories", "places_per_category", "extent_m", "agents", "days", "radius_m",
        "visits_mean", "dwell_min", "dwell_max", "noise_sigma_m", "cell_size")}
    _write_manifest(out, "synth", params, [], seed=args.seed)
    return 0


def cmd_ingest(args) -> int:
    out = _out_dir(args)
    with open(args.waypoints, "r", encoding="utf-8") as f:
        records, skipped = parse_waypoints(f, strict=args.strict)
    trajectories = segment_trajectories(records, args.day_offset_hours)
    norm_path = os.path.join(out, "normalized.csv")
    with open(norm_path, "w", encoding="utf-8") as f:
        f.write(WAYPOINT_HEADER + "\n")
        for traj in trajectories:
            for rec in traj.points:
                f.write(f"{rec.vehicle_id},{format_timestamp(rec.t)},{rec.lon:.13f},{rec.lat:.13f}\n")
    write_json(os.path.join(out, "summary.json"), {
        "n_records": len(records),
        "n_skipped": skipped,
        "n_trajectories": len(trajectories),
    })
    print(f"{len(records)} records ({skipped} skipped), {len(trajectories)} trajectories")
    _write_manifest(out, "ingest", {
        "waypoints": os.path.basename(args.waypoints),
        "strict": args.strict,
        "day_offset_hours": args.day_offset_hours,
    }, [args.waypoints])
    return 0


def cmd_stops(args) -> int:
    out = _out_dir(args)
    grid = geo.GridSpec(args.cell_size)
    detector = StopDetector(min_duration=args.min_duration, radius=args.radius,
                            max_noise_run=args.max_noise_run)
    with open(args.waypoints, "r", encoding="utf-8") as f:
        records, skipped = parse_waypoints(f, strict=args.strict)
    trajectories = segment_trajectories(records, args.day_offset_hours)
    n_stops = 0
    n_sequences = 0
    stops_path = os.path.join(out, "stops.csv")
    cells_path = os.path.join(out, "cells.txt")
    with open(stops_path, "w", encoding="utf-8") as sf, \
            open(cells_path, "w", encoding="utf-8") as cf:
        sf.write(STOP_HEADER + "\n")
        for traj in trajectories:
            stops = detector.detect(traj)
            if not stops:
                continue
            write_stops_csv(sf, traj.vehicle_id, traj.day, stops)
            n_stops += len(stops)
            cells = collapse_to_cells(stops, grid)
            write_sequences(cf, [cells])
            n_sequences += 1
    write_json(os.path.join(out, "summary.json"), {
        "n_records": len(records),
        "n_skipped": skipped,
        "n_trajectories": len(trajectories),
        "n_stops": n_stops,
        "n_sequences": n_sequences,
    })
    print(f"{n_stops} stops over {n_sequences} sequences "
          f"from {len(trajectories)} trajectories")
    _write_manifest(out, "stops", {
        "waypoints": os.path.basename(args.waypoints),
        "min_duration": args.min_duration,
        "radius": args.radius,
        "max_noise_run": args.max_noise_run,
        "day_offset_hours": args.day_offset_hours,
        "cell_size": args.cell_size,
        "strict": args.strict,
    }, [args.waypoints])
    return 0


def cmd_corpus(args) -> int:
    out = _out_dir(args)
    with open(args.cells, "r", encoding="utf-8") as f:
        sequences = read_sequences(f)
    vocab = build_vocab(sequences, min_count=args.min_count)
    encoded = encode_corpus(sequences, vocab)
    stats = corpus_stats(encoded)
    vocab_path = os.path.join(out, "vocab.txt")
    with open(vocab_path, "w", encoding="utf-8") as f:
        vocab.save(f)
    write_json(os.path.join(out, "corpus_stats.json"), {
        "n_sequences": stats.n_sequences,
        "n_cells": stats.n_cells,
        "mean_len": stats.mean_len,
        "stddev_len": stats.stddev_len,
        "vocab_size": len(vocab),
    })
    print(f"vocab {len(vocab)} cells; {stats.n_sequences} sequences, "
          f"mean length {stats.mean_len:.2f} (stddev {stats.stddev_len:.2f})")
    _write_manifest(out, "corpus", {
        "cells": os.path.basename(args.cells),
        "min_count": args.min_count,
    }, [args.cells])
    return 0


def cmd_train(args) -> int:
    out = _out_dir(args)
    with open(args.cells, "r", encoding="utf-8") as f:
        sequences = read_sequences(f)
    with open(args.vocab, "r", encoding="utf-8") as f:
        vocab = Vocab.load(f)
    corpus = encode_corpus(sequences, vocab)
    embedder = SkipGramEmbedder(
        dim=args.dim, window=args.window, negatives=args.negatives, epochs=args.epochs,
        lr_start=args.lr_start, lr_end=args.lr_end, unigram_power=args.unigram_power,
        subsample_t=args.subsample_t, seed=args.seed, threads=args.threads,
    ).fit(corpus)
    emb_path = os.path.join(out, "embeddings.txt")
    save_embeddings(embedder.model_, emb_path)
    print(f"trained {len(embedder.model_)} x {args.dim} embeddings "
          f"({embedder.total_pairs_} pairs)")
    params = {k: getattr(args, k) for k in (
        "dim", "window", "negatives", "epochs", "lr_start", "lr_end",
        "unigram_power", "subsample_t", "threads")}
    params["cells"] = os.path.basename(args.cells)
    params["vocab"] = os.path.basename(args.vocab)
    _write_manifest(out, "train", params, [args.cells, args.vocab], seed=args.seed)
    return 0


def cmd_query(args) -> int:
    out = _out_dir(args)
    grid = geo.GridSpec(args.cell_size)
    model = load_embeddings(args.embeddings)
    labels = _labels_from_pois(args.pois, grid) if args.pois else {}
    metric = "plane" if args.plane_distance else "haversine"
    target = int(args.target)
    if target not in model:
        raise CellvecError(f"target cell {target} is not in the trained vocabulary")
    report = neighbor_report(model, labels, grid, target, args.k, metric)
    write_json(os.path.join(out, "neighbor_report.json"), neighbor_report_dict(report))
    write_json(os.path.join(out, "neighbors.geojson"), neighbor_report_geojson(report))
    print(f"target {args.target} ({report.target_label}): {len(report.neighbors)} neighbors")
    inputs = [args.embeddings] + ([args.pois] if args.pois else [])
    _write_manifest(out, "query", {
        "embeddings": os.path.basename(args.embeddings),
        "pois": os.path.basename(args.pois) if args.pois else None,
        "target": str(args.target),
        "k": args.k,
        "cell_size": args.cell_size,
        "metric": metric,
    }, inputs)
    return 0


def cmd_analyze(args) -> int:
    out = _out_dir(args)
    grid = geo.GridSpec(args.cell_size)
    model = load_embeddings(args.embeddings)
    metric = "plane" if args.plane_distance else "haversine"
    if args.task == "category-sim":
        labels = _labels_from_pois(args.pois, grid)
        categories = args.category
        auto = not categories
        if auto:
            present = {labels[t] for t in model.tokens if t in labels}
            categories = sorted(c for c in present if c != MIXED_LABEL)
        results = []
        for cat in categories:
            try:
                res = category_similarity_test(model, labels, cat, n=args.n, seed=args.seed)
            except ValueError as exc:
                if not auto:
                    raise
                print(f"skipping {cat}: {exc}", file=sys.stderr)
                continue
            results.append(category_test_dict(res))
            print(f"{cat}: n={res.sample_size} intra={res.intra_mean:.4f} "
                  f"inter={res.inter_mean:.4f} t={res.t_stat:.2f} p={res.p_two_sided:.3g}")
        write_json(os.path.join(out, "category_sim.json"), results)
        _write_manifest(out, "analyze category-sim", {
            "embeddings": os.path.basename(args.embeddings),
            "pois": os.path.basename(args.pois),
            "categories": categories,
            "n": args.n,
            "metric": metric,
            "cell_size": args.cell_size,
        }, [args.embeddings, args.pois], seed=args.seed)
        return 0

    sample = sample_cells(model, args.sample, args.seed)
    if args.task == "decay":
        max_m = args.max_m if args.max_m is not None else math.inf
        decay = fit_decay(model, sample, grid, args.min_m, max_m, metric)
        write_json(os.path.join(out, "decay.json"), decay_dict(decay))
        print(f"decay over {decay.n_pairs} pairs: CS = {decay.slope:.3e} * D + "
              f"{decay.intercept:.3f} (r2 {decay.r_squared:.3f})")
        if args.dump_pairs:
            write_pairs_csv(os.path.join(out, "pairs.csv"),
                            pairwise_decay(model, sample, grid, args.min_m, max_m, metric))
        if args.svg:
            xs, ys = [], []
            stride = max(1, (len(sample) * (len(sample) - 1) // 2) // 5000)
            i = 0
            for d, cs in pairwise_decay(model, sample, grid, args.min_m, max_m, metric):
                for j in range(len(d)):
                    if i % stride == 0:
                        xs.append(float(d[j]))
                        ys.append(float(cs[j]))
                    i += 1
            write_scatter_svg(os.path.join(out, "decay.svg"), xs, ys, "D (m)", "CS",
                              line=(decay.slope, decay.intercept))
        _write_manifest(out, "analyze decay", {
            "embeddings": os.path.basename(args.embeddings),
            "sample": args.sample,
            "min_m": args.min_m,
            "max_m": args.max_m,
            "metric": metric,
            "cell_size": args.cell_size,
        }, [args.embeddings], seed=args.seed)
        return 0

    if args.task == "variogram":
        if args.pois and args.category:
            labels = _labels_from_pois(args.pois, grid)
            sample = sample_cells(model, args.sample, args.seed, labels, args.category[0])
        result = empirical_variogram(model, sample, grid, args.bin_width, args.max_dist, metric)
        write_json(os.path.join(out, "variogram.json"), variogram_dict(result))
        write_variogram_csv(os.path.join(out, "variogram.csv"), result)
        n_filled = sum(1 for b in result.bins if b.n_pairs)
        print(f"variogram: {result.n_pairs} pairs over {n_filled}/{len(result.bins)} bins")
        if args.svg:
            pts = [(b.h_mid, b.gamma) for b in result.bins if b.gamma is not None]
            line = None if result.fit is None else (result.fit.slope, result.fit.intercept)
            write_scatter_svg(os.path.join(out, "variogram.svg"),
                              [p[0] for p in pts], [p[1] for p in pts],
                              "h (m)", "gamma", line=line)
        _write_manifest(out, "analyze variogram", {
            "embeddings": os.path.basename(args.embeddings),
            "sample": args.sample,
            "bin_width": args.bin_width,
            "max_dist": args.max_dist,
            "category": args.category[0] if args.category else None,
            "metric": metric,
            "cell_size": args.cell_size,
        }, [args.embeddings], seed=args.seed)
        return 0
    raise CellvecError(f"unknown analyze task {args.task!r}")


def _load_config(path: str) -> dict:
    cfg = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CellvecError(f"{path}:{line_no}: expected key=value")
            key, value = line.split("=", 1)
            cfg[key.strip()] = value.strip()
    return cfg


def cmd_pipeline(args) -> int:
    cfg = _load_config(args.config) if args.config else {}

    def get(key, default, cast):
        return cast(cfg[key]) if key in cfg else default

    seed = args.seed if args.seed is not None else get("seed", 42, int)
    out = args.out
    cell_size = get("grid.cell_size", 30.0, float)

    stage_args = argparse.Namespace(
        out=os.path.join(out, "synth"),
        categories=get("synth.n_categories", 4, int),
        places_per_category=get("synth.places_per_category", 50, int),
        extent_m=get("synth.world_extent_m", 20000.0, float),
        agents=get("synth.n_agents", 100, int),
        days=get("synth.days", 60, int),
        radius_m=get("synth.agent_activity_radius_m", 8000.0, float),
        visits_mean=get("synth.visits_per_day_mean", 7.0, float),
        dwell_min=get("synth.dwell_min", 6.0, float),
        dwell_max=get("synth.dwell_max", 15.0, float),
        noise_sigma_m=get("synth.gps_noise_sigma_m", 3.0, float),
        cell_size=cell_size,
        seed=seed,
    )
    cmd_synth(stage_args)
    waypoints = os.path.join(out, "synth", "waypoints.csv")
    pois = os.path.join(out, "synth", "pois.csv")

    cmd_stops(argparse.Namespace(
        out=os.path.join(out, "stops"), waypoints=waypoints,
        min_duration=get("stops.min_duration", 300.0, float),
        radius=get("stops.radius", 50.0, float),
        max_noise_run=get("stops.max_noise_run", 2, int),
        day_offset_hours=get("stops.day_offset_hours", 0, int),
        cell_size=cell_size, strict=False,
    ))
    cells = os.path.join(out, "stops", "cells.txt")

    cmd_corpus(argparse.Namespace(
        out=os.path.join(out, "corpus"), cells=cells,
        min_count=get("corpus.min_count", 5, int),
    ))
    vocab_path = os.path.join(out, "corpus", "vocab.txt")

    cmd_train(argparse.Namespace(
        out=os.path.join(out, "train"), cells=cells, vocab=vocab_path,
        dim=get("train.dim", 20, int), window=get("train.window", 5, int),
        negatives=get("train.negatives", 5, int), epochs=get("train.epochs", 5, int),
        lr_start=get("train.lr_start", 0.025, float), lr_end=get("train.lr_end", 0.0001, float),
        unigram_power=get("train.unigram_power", 0.75, float),
        subsample_t=get("train.subsample_t", 0.0, float),
        seed=seed, threads=args.threads,
    ))
    embeddings = os.path.join(out, "train", "embeddings.txt")

    # neighbor report for the most visited labeled cell
    grid = geo.GridSpec(cell_size)
    model = load_embeddings(embeddings)
    labels = _labels_from_pois(pois, grid)
    target = next((t for t in model.tokens if t in labels), None)
    if target is not None:
        cmd_query(argparse.Namespace(
            out=os.path.join(out, "query"), embeddings=embeddings, pois=pois,
            target=target, k=get("query.k", 10, int), cell_size=cell_size,
            plane_distance=False,
        ))

    common = dict(embeddings=embeddings, cell_size=cell_size, seed=seed,
                  plane_distance=False, svg=False)
    cmd_analyze(argparse.Namespace(
        task="category-sim", out=os.path.join(out, "analyze-category"),
        pois=pois, category=[], n=get("analyze.category_n", 300, int), **common))
    cmd_analyze(argparse.Namespace(
        task="decay", out=os.path.join(out, "analyze-decay"),
        sample=get("analyze.sample", 3000, int),
        min_m=get("analyze.min_m", 0.0, float), max_m=None, dump_pairs=False, **common))
    cmd_analyze(argparse.Namespace(
        task="variogram", out=os.path.join(out, "analyze-variogram"),
        sample=get("analyze.sample", 3000, int),
        bin_width=get("analyze.bin_width", 1000.0, float),
        max_dist=get("analyze.max_dist", 100000.0, float),
        pois=None, category=[], **common))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellvec",
        description="Place embeddings from GPS waypoints on a Morton-coded grid.")
    parser.add_argument("--version", action="version", version=f"cellvec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic world and waypoint CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--categories", type=int, default=4)
    p.add_argument("--places-per-category", type=int, default=50)
    p.add_argument("--extent-m", type=float, default=20000.0)
    p.add_argument("--agents", type=int, default=100)
    p.add_argument("--days", type=int, default=60)
    p.add_argument("--radius-m", type=float, default=8000.0)
    p.add_argument("--visits-mean", type=float, default=7.0)
    p.add_argument("--dwell-min", type=float, default=6.0)
    p.add_argument("--dwell-max", type=float, default=15.0)
    p.add_argument("--noise-sigma-m", type=float, default=3.0)
    p.add_argument("--cell-size", type=float, default=30.0)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="validate and normalize a waypoint CSV")
    p.add_argument("--waypoints", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--day-offset-hours", type=int, default=0)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stops", help="detect stops and emit cell sequences")
    p.add_argument("--waypoints", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-duration", type=float, default=300.0)
    p.add_argument("--radius", type=float, default=50.0)
    p.add_argument("--max-noise-run", type=int, default=2)
    p.add_argument("--day-offset-hours", type=int, default=0)
    p.add_argument("--cell-size", type=float, default=30.0)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_stops)

    p = sub.add_parser("corpus", help="build the frequency-filtered vocabulary")
    p.add_argument("--cells", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-count", type=int, default=5)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("train", help="train skip-gram embeddings")
    p.add_argument("--cells", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr-start", type=float, default=0.025)
    p.add_argument("--lr-end", type=float, default=0.0001)
    p.add_argument("--unigram-power", type=float, default=0.75)
    p.add_argument("--subsample-t", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("query", help="top-k neighbor report for one cell")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--pois")
    p.add_argument("--cell-size", type=float, default=30.0)
    p.add_argument("--plane-distance", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("analyze", help="category tests, decay fits, variograms")
    p.add_argument("task", choices=["category-sim", "decay", "variogram"])
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pois")
    p.add_argument("--category", action="append", default=[])
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--sample", type=int, default=3000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-m", type=float, default=0.0)
    p.add_argument("--max-m", type=float, default=None)
    p.add_argument("--bin-width", type=float, default=1000.0)
    p.add_argument("--max-dist", type=float, default=100000.0)
    p.add_argument("--cell-size", type=float, default=30.0)
    p.add_argument("--plane-distance", action="store_true")
    p.add_argument("--dump-pairs", action="store_true")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("pipeline", help="run every stage from one config file")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CellvecError, ValueError, KeyError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
