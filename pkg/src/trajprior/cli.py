"""Command-line pipeline: ingest -> (rasterize | cluster | sample) -> fuse -> eval.

Every subcommand is a plain file-in/file-out stage with deterministic output:
rerunning with the same flags and seed produces byte-identical files.
Exit codes: 0 success, 2 usage/input error, 3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fusion, ingest, metrics, raster, selection, tensorio
from .core import ContractError, GridSpec, Trajectory, TrajectorySet

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VERIFY = 3

GRAD_CHECK_TOL = 1e-4


def _dump_json(path, obj) -> None:
    Path(path).write_text(
        json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _parse_roi(text: str) -> tuple:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise ContractError("--roi expects x0,x1,y0,y1")
    return tuple(parts)


def _parse_cell(text: str) -> tuple:
    parts = [float(v) for v in text.split(",")]
    if len(parts) == 1:
        return (parts[0], parts[0])
    if len(parts) == 2:
        return (parts[0], parts[1])
    raise ContractError("--cell expects DX or DX,DY")


def _spec_from_args(args) -> GridSpec:
    x0, x1, y0, y1 = _parse_roi(args.roi)
    dx, dy = _parse_cell(args.cell)
    return GridSpec(x0, x1, y0, y1, dx, dy)


def _add_grid_args(p) -> None:
    p.add_argument("--roi", default="-50,50,-25,25", help="x0,x1,y0,y1 in meters")
    p.add_argument("--cell", default="0.5", help="cell size DX or DX,DY in meters")


def _load_set(path, fmt="jsonl") -> TrajectorySet:
    return ingest.parse_trajectories(Path(path).read_text(encoding="utf-8"), fmt)


def _traj_record(t: Trajectory) -> dict:
    return {"id": t.id, "points": [[float(x), float(y)] for x, y in t.points]}


def cmd_ingest(args) -> int:
    cfg = ingest.IngestConfig(min_length_m=args.min_length,
                              smooth_window=args.smooth_window)
    ts = _load_set(args.input, args.format)
    m_before = len(ts)
    ts = ingest.filter_by_length(ts, cfg)
    ts = ingest.smooth_set(ts, cfg)
    retained = ingest.retention_check(ts, cfg)
    Path(args.out).write_text(ingest.serialize_trajectories(ts, "jsonl"),
                              encoding="utf-8")
    print(f"ingested {m_before} trajectories, kept {len(ts)} "
          f"(min_length={cfg.min_length_m}, smooth_window={cfg.smooth_window})")
    print(f"retention_check: {'pass' if retained else 'fail'} "
          f"(m={len(ts)}, centerlines={ts.centerline_count})")
    return EXIT_OK


def cmd_rasterize(args) -> int:
    spec = _spec_from_args(args)
    ts = _load_set(args.input)
    if len(ts) == 0:
        print("warning: no trajectories; writing all-zero heatmap", file=sys.stderr)
    heatmap = raster.rasterize_trajectories(ts, spec)
    tensorio.save_heatmap(args.out, heatmap)
    if args.png:
        tensorio.write_pgm(args.png, heatmap.density)
    print(f"heatmap H={spec.height} W={spec.width} n_max={heatmap.n_max} "
          f"hit_cells={int((heatmap.count > 0).sum())}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    ts = _load_set(args.input)
    result = selection.kmeans(ts, args.k, r=args.resample, max_iter=args.max_iter,
                              tol=args.tol, seed=args.seed)
    doc = {
        "k": args.k,
        "resample": args.resample,
        "seed": args.seed,
        "assignment": [int(a) for a in result.assignment],
        "inertia": result.inertia,
        "inertia_trace": result.inertia_trace,
        "iterations": result.iterations,
        "centers": [{"points": [[float(x), float(y)] for x, y in c.points]}
                    for c in result.centers],
    }
    _dump_json(args.out, doc)
    if args.queries_out:
        _dump_json(args.queries_out, _query_seed(
            [c.points for c in result.centers], args.resample))
    print(f"kmeans k={args.k} iterations={result.iterations} "
          f"inertia={result.inertia:.6g}")
    return EXIT_OK


def cmd_sample(args) -> int:
    ts = _load_set(args.input)
    result = selection.fps(ts, args.count, seed=args.seed,
                           start_index=args.start_index)
    doc = {
        "count": args.count,
        "seed": args.seed,
        "indices": result.indices,
        "min_dists": result.min_dists,
        "selected": [_traj_record(ts.trajectories[i]) for i in result.indices],
    }
    _dump_json(args.out, doc)
    if args.queries_out:
        pts = [selection.resample(ts.trajectories[i], args.resample).points
               for i in result.indices]
        _dump_json(args.queries_out, _query_seed(pts, args.resample))
    print(f"fps count={args.count} start={result.indices[0]}")
    return EXIT_OK


def _query_seed(point_arrays, r) -> dict:
    """Query-seed export for downstream detector integration."""
    return {"resample": r,
            "queries": [[[float(x), float(y)] for x, y in pts]
                        for pts in point_arrays]}


def cmd_fuse(args) -> int:
    bev = tensorio.load_feature_map(args.bev)
    prior = tensorio.load_feature_map(args.prior)
    op, fp = tensorio.load_params(args.params)
    fused, stats = fusion.fuse_pipeline(bev, prior, op, fp)
    tensorio.save_feature_map(args.out, fused)
    sidecar = dict(stats)
    if args.check_grads:
        err = max(fusion.finite_difference_check(seed)
                  for seed in (args.seed, args.seed + 1))
        sidecar["grad_check_max_rel_err"] = err
        print(f"gradient check: max relative error {err:.3e}")
        if err > GRAD_CHECK_TOL:
            _dump_json(str(args.out) + ".json", sidecar)
            print(f"gradient check failed (> {GRAD_CHECK_TOL})", file=sys.stderr)
            return EXIT_VERIFY
    _dump_json(str(args.out) + ".json", sidecar)
    print(f"fused C={fused.channels} mean_alpha={stats['mean_alpha']:.4f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    spec = _spec_from_args(args)
    pred = _load_set(args.pred)
    gt = ingest.parse_centerlines(Path(args.gt).read_text(encoding="utf-8"), spec)
    report = {
        "iou": metrics.prior_iou(pred, gt, spec, args.width),
        "ae_dist": metrics.ae_dist(
            metrics.sample_polyline_points(pred.trajectories, args.sample_step),
            metrics.sample_polyline_points(gt.polylines, args.sample_step)),
        "width_m": args.width,
    }
    pred_labels = ingest.traj_labels(pred)
    gt_labels = ingest.centerline_labels(gt)
    if pred_labels and gt_labels and len(pred) == len(gt):
        report["ae_type"] = metrics.ae_type(
            [pred_labels.get(t.id) for t in pred.trajectories],
            [gt_labels.get(p.id) for p in gt.polylines])
    _dump_json(args.out, report)
    if args.csv:
        row = ",".join(f"{k}={report[k]}" for k in sorted(report))
        with open(args.csv, "a", encoding="utf-8") as f:
            f.write(row + "\n")
    print(f"iou={report['iou']:.4f} ae_dist={report['ae_dist']:.4f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    ts, cmap = ingest.synth_scene(args.seed, args.lanes, args.per_lane, args.noise)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "trajectories.jsonl").write_text(
        ingest.serialize_trajectories(ts), encoding="utf-8")
    (out_dir / "centerlines.jsonl").write_text(
        ingest.serialize_centerlines(cmap), encoding="utf-8")
    print(f"synth scene: {len(ts)} trajectories, {len(cmap)} centerlines "
          f"-> {out_dir}")
    return EXIT_OK


def cmd_gen_params(args) -> int:
    op, fp = fusion.random_params(args.seed, args.channels, args.hidden)
    tensorio.save_params(args.out, op, fp)
    print(f"params: channels={args.channels} hidden={args.hidden} seed={args.seed}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajprior",
        description="Trajectory map-prior pipeline: ingest, rasterize, "
                    "cluster/sample, fuse, evaluate.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, filter and smooth trajectories")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    p.add_argument("--min-length", type=float, default=5.0)
    p.add_argument("--smooth-window", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("rasterize", help="build the density/direction heatmap")
    p.add_argument("--input", required=True)
    _add_grid_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--png", default=None, help="optional grayscale density image")
    p.set_defaults(func=cmd_rasterize)

    p = sub.add_parser("cluster", help="k-means representative trajectories")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--resample", type=int, default=selection.DEFAULT_RESAMPLE)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--queries-out", default=None,
                   help="also write a query-seed JSON for detector integration")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("sample", help="Frechet farthest-point sampling")
    p.add_argument("--input", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start-index", type=int, default=None)
    p.add_argument("--resample", type=int, default=selection.DEFAULT_RESAMPLE)
    p.add_argument("--out", required=True)
    p.add_argument("--queries-out", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fuse", help="align and fuse a prior with a BEV feature map")
    p.add_argument("--bev", required=True)
    p.add_argument("--prior", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--check-grads", action="store_true",
                   help="verify analytic gradients against finite differences")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("eval", help="score a prior against ground-truth centerlines")
    p.add_argument("--pred", required=True, help="trajectory JSONL")
    p.add_argument("--gt", required=True, help="centerline JSONL")
    _add_grid_args(p)
    p.add_argument("--width", type=float, default=metrics.DEFAULT_LINE_WIDTH)
    p.add_argument("--sample-step", type=float, default=metrics.DEFAULT_SAMPLE_STEP)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", default=None, help="append a CSV row to this file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lanes", type=int, default=3)
    p.add_argument("--per-lane", type=int, default=10)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gen-params", help="write seeded random fusion parameters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--channels", type=int, default=2)
    p.add_argument("--hidden", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_params)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ingest.ParseError, ContractError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
