"""Command-line driver.

Subcommands:
  render-export  render views of a mesh and write training data
                 (channel PNGs, heatmap stacks, per-view metadata)
  place          end-to-end landmark placement (oracle or heatmap detector)
  evaluate       score a results file against ground-truth landmarks
  sweep          placement error as a function of view count

Exit codes: 0 success, 2 bad input, 3 pipeline failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .curvature import estimate_curvature_field
from .camera import ViewSamplingConfig, sample_cameras
from .consensus import RansacConfig
from .detect import OracleConfig
from .export import export_training_view
from .mesh import MeshFormatError, load_mesh
from .pipeline import (
    PipelineConfig,
    PipelineError,
    evaluate,
    load_landmarks,
    read_results_json,
    run_pipeline,
    view_sweep,
    write_report_json,
    write_results_json,
)

EXIT_INPUT_ERROR = 2
EXIT_PIPELINE_ERROR = 3

_INPUT_STAGES = {"load_mesh", "load_landmarks", "load_export", "config"}


def _axis(text):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("axis must be three comma-separated numbers")
    return tuple(parts)


def _counts(text):
    return [int(x) for x in text.split(",") if x]


def _add_shared(parser, views_default=100):
    parser.add_argument("--mesh", required=True, help="OBJ or PLY mesh file")
    parser.add_argument("--views", type=int, default=views_default, help="number of rendered views")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed for cameras and the oracle")
    parser.add_argument("--cap-angle", type=float, default=60.0, help="spherical-cap half angle, degrees")
    parser.add_argument("--frontal-axis", type=_axis, default=(0.0, 0.0, 1.0),
                        help="approximate facing direction, e.g. 0,0,1")
    parser.add_argument("--out", type=Path, required=True, help="output directory")


def _add_ransac(parser):
    parser.add_argument("--ransac-iters", type=int, default=500)
    parser.add_argument("--ransac-threshold", type=float, default=2.0, help="inlier threshold, mm")
    parser.add_argument("--min-inliers", type=int, default=3)


def build_parser():
    parser = argparse.ArgumentParser(prog="mvlandmarks", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render-export", help="export rendered training views")
    _add_shared(p)
    p.add_argument("--landmarks", required=True, help="ground-truth landmark JSON")
    p.add_argument("--sigma", type=float, default=5.0, help="heatmap Gaussian sigma, px")
    p.add_argument("--channels", default="geometry,depth",
                   help="comma list from rgb,geometry,depth,curvature")
    p.add_argument("--curvature-radius", type=float, default=10.0, help="neighborhood radius, mm")

    p = sub.add_parser("place", help="place landmarks on a mesh")
    _add_shared(p)
    p.add_argument("--landmarks", help="ground-truth landmark JSON (required for oracle)")
    p.add_argument("--detector", choices=("oracle", "heatmaps"), default="oracle")
    p.add_argument("--export-dir", type=Path, help="render-export output (heatmaps detector)")
    p.add_argument("--channels", default="", help="channels to render during the run")
    p.add_argument("--oracle-noise", type=float, default=0.0, help="detection noise sigma, px")
    p.add_argument("--oracle-outlier-rate", type=float, default=0.0)
    p.add_argument("--oracle-outlier-spread", type=float, default=50.0, help="px")
    p.add_argument("--oracle-dropout", type=float, default=0.0)
    p.add_argument("--heatmap-threshold", type=float, default=0.5)
    _add_ransac(p)

    p = sub.add_parser("evaluate", help="score a results file against ground truth")
    p.add_argument("--results", required=True, help="results JSON from `place`")
    p.add_argument("--landmarks", required=True, help="ground-truth landmark JSON")
    p.add_argument("--out", type=Path, help="directory for report.json (default: stdout only)")

    p = sub.add_parser("sweep", help="error vs number of views")
    _add_shared(p)
    p.add_argument("--landmarks", required=True)
    p.add_argument("--view-counts", type=_counts, default=[25, 50, 75, 100])
    p.add_argument("--oracle-noise", type=float, default=0.0)
    p.add_argument("--oracle-outlier-rate", type=float, default=0.0)
    p.add_argument("--oracle-outlier-spread", type=float, default=50.0)
    p.add_argument("--oracle-dropout", type=float, default=0.0)
    _add_ransac(p)
    return parser


def _pipeline_config(args, detector="oracle", channels=""):
    return PipelineConfig(
        view_count=args.views,
        rng_seed=args.seed,
        cap_half_angle=args.cap_angle,
        frontal_axis=args.frontal_axis,
        channels=tuple(c for c in channels.split(",") if c),
        detector=detector,
        oracle=OracleConfig(
            noise_sigma=getattr(args, "oracle_noise", 0.0),
            outlier_rate=getattr(args, "oracle_outlier_rate", 0.0),
            outlier_spread=getattr(args, "oracle_outlier_spread", 50.0),
            dropout_rate=getattr(args, "oracle_dropout", 0.0),
        ),
        ransac=RansacConfig(
            iterations=getattr(args, "ransac_iters", 500),
            inlier_threshold=getattr(args, "ransac_threshold", 2.0),
            min_inliers=getattr(args, "min_inliers", 3),
            rng_seed=args.seed,
        ),
        heatmap_threshold=getattr(args, "heatmap_threshold", 0.5),
    )


def _cmd_render_export(args):
    from .render import render_view

    mesh = load_mesh(args.mesh)
    gt = load_landmarks(args.landmarks)
    channels = tuple(c for c in args.channels.split(",") if c)
    center = mesh.bounding_box().center
    mesh_c = mesh.translated(-center)
    gt_c = gt.translated(-center)

    curv = None
    if "curvature" in channels:
        curv = estimate_curvature_field(mesh_c, args.curvature_radius)

    cameras = sample_cameras(mesh_c, ViewSamplingConfig(
        view_count=args.views,
        frontal_axis=args.frontal_axis,
        cap_half_angle=args.cap_angle,
        rng_seed=args.seed,
    ))
    args.out.mkdir(parents=True, exist_ok=True)
    for view_id, cam in enumerate(cameras):
        view = render_view(mesh_c, cam, channels=channels, curvature=curv,
                           landmarks=gt_c.points, landmark_ids=gt_c.ids.tolist(), view_id=view_id)
        export_training_view(view, gt_c.points, sigma=args.sigma, out_dir=args.out,
                             landmark_ids=gt_c.ids.tolist())
    manifest = {
        "mesh": str(args.mesh),
        "view_count": len(cameras),
        "seed": args.seed,
        "channels": list(channels),
        "sigma": args.sigma,
        "origin_offset": [float(x) for x in center],
    }
    (args.out / "export.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(cameras)} views to {args.out}")
    return 0


def _cmd_place(args):
    config = _pipeline_config(args, detector=args.detector, channels=args.channels)
    if args.detector == "oracle" and not args.landmarks:
        print("error: --landmarks is required with the oracle detector", file=sys.stderr)
        return EXIT_INPUT_ERROR
    if args.detector == "heatmaps" and not args.export_dir:
        print("error: --export-dir is required with the heatmaps detector", file=sys.stderr)
        return EXIT_INPUT_ERROR
    results, report = run_pipeline(args.mesh, args.landmarks, config, export_dir=args.export_dir)

    args.out.mkdir(parents=True, exist_ok=True)
    expected = None
    if args.landmarks:
        expected = load_landmarks(args.landmarks).ids.tolist()
    write_results_json(args.out / "results.json", results, expected_landmark_ids=expected)
    print(f"resolved {len(results)} landmarks -> {args.out / 'results.json'}")
    if report is not None:
        write_report_json(args.out / "report.json", report)
        print(f"mean error {report.overall_mean_mm:.3f} mm over "
              f"{len(report.per_landmark)} landmarks ({report.missing} missing)")
    return 0


def _cmd_evaluate(args):
    results = read_results_json(args.results)
    gt = load_landmarks(args.landmarks)
    report = evaluate(results, gt)
    payload = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.json").write_text(payload + "\n")
    print(payload)
    return 0


def _cmd_sweep(args):
    mesh = load_mesh(args.mesh)
    gt = load_landmarks(args.landmarks)
    config = _pipeline_config(args)
    rows = view_sweep(mesh, gt, args.view_counts, config)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "sweep.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")
    print(f"{'views':>8} {'mean error (mm)':>18} {'resolved':>10}")
    for row in rows:
        print(f"{row['view_count']:>8} {row['mean_error_mm']:>18.4f} {row['resolved']:>10}")
    return 0


_COMMANDS = {
    "render-export": _cmd_render_export,
    "place": _cmd_place,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except PipelineError as exc:
        if exc.stage in _INPUT_STAGES:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT_ERROR
        print(f"pipeline failure: {exc}", file=sys.stderr)
        return EXIT_PIPELINE_ERROR
    except (MeshFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
