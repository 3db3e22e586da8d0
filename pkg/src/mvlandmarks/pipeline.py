"""End-to-end driver: render views, detect, fuse, snap, and score.

The driver translates the mesh so its bounding-box center sits at the
origin (cameras orbit the origin), runs a detector over every view, fuses
detections per landmark, and reports positions back in the original mesh
coordinates. Scoring is the Euclidean distance in mm between each estimated
surface point and its annotated position.
"""

import json
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from .camera import CameraSpec, ViewSamplingConfig, sample_cameras
from .consensus import ConsensusResult, RansacConfig, place_landmarks, results_to_records
from .curvature import estimate_curvature_field
from .detect import HeatmapStack, OracleConfig, decode_heatmaps, oracle_detect
from .export import read_heatmap_stack
from .mesh import load_mesh
from .octree import build_octree
from .render import render_view


class PipelineError(RuntimeError):
    """Failure inside a pipeline stage; `stage` names the culprit."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class LandmarkSet:
    """Named ground-truth 3D landmarks (ids unique, coordinates in mm)."""

    ids: np.ndarray
    names: list
    points: np.ndarray
    schema_name: str = ""

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if len(set(self.ids.tolist())) != len(self.ids):
            raise ValueError("landmark ids must be unique")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("landmark coordinates must be finite")
        if len(self.names) != len(self.ids) or len(self.points) != len(self.ids):
            raise ValueError("ids, names, points must have equal length")

    def __len__(self):
        return len(self.ids)

    def translated(self, offset):
        return LandmarkSet(self.ids, list(self.names), self.points + np.asarray(offset), self.schema_name)


def load_landmarks(path):
    """Read a landmark set from JSON {schema_name, landmarks: [{id, name, xyz}]}."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValueError(f"cannot read landmark file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed landmark JSON {path}: {exc}") from exc
    try:
        entries = data["landmarks"]
        ids = [int(e["id"]) for e in entries]
        names = [str(e.get("name", "")) for e in entries]
        points = [[float(x) for x in e["xyz"]] for e in entries]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed landmark JSON {path}: missing field {exc}") from exc
    return LandmarkSet(np.array(ids), names, np.array(points), schema_name=str(data.get("schema_name", "")))


def save_landmarks(landmarks, path):
    data = {
        "schema_name": landmarks.schema_name,
        "landmarks": [
            {"id": int(i), "name": n, "xyz": [float(x) for x in p]}
            for i, n, p in zip(landmarks.ids, landmarks.names, landmarks.points)
        ],
    }
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


@dataclass
class EvaluationReport:
    """Per-landmark localisation error statistics (mm)."""

    per_landmark: dict  # id -> {"mean_error_mm", "sd_error_mm", "n"}
    overall_mean_mm: float
    missing: int

    def to_dict(self):
        return {
            "per_landmark": [
                {"landmark_id": int(lid), **{k: (int(v) if k == "n" else float(v)) for k, v in stats.items()}}
                for lid, stats in sorted(self.per_landmark.items())
            ],
            "overall_mean_mm": float(self.overall_mean_mm),
            "missing": int(self.missing),
        }


def _report_from_errors(errors_by_id, missing):
    per_landmark = {}
    all_errors = []
    for lid, errs in sorted(errors_by_id.items()):
        errs = np.asarray(errs, dtype=np.float64)
        sd = float(errs.std(ddof=1)) if len(errs) > 1 else 0.0
        per_landmark[int(lid)] = {
            "mean_error_mm": float(errs.mean()),
            "sd_error_mm": sd,
            "n": int(len(errs)),
        }
        all_errors.extend(errs.tolist())
    overall = float(np.mean(all_errors)) if all_errors else float("nan")
    return EvaluationReport(per_landmark=per_landmark, overall_mean_mm=overall, missing=missing)


def evaluate(results, gt):
    """Score one mesh: Euclidean error of each surface point vs its annotation.

    Landmarks present in the ground truth but absent from the results are
    counted in `missing` and excluded from the means.
    """
    gt_by_id = {int(i): p for i, p in zip(gt.ids, gt.points)}
    if not any(r.landmark_id in gt_by_id for r in results):
        raise ValueError("no overlapping landmark ids between results and ground truth")
    errors_by_id = {}
    matched = set()
    for r in results:
        p_gt = gt_by_id.get(r.landmark_id)
        if p_gt is None:
            continue
        matched.add(r.landmark_id)
        errors_by_id[r.landmark_id] = [float(np.linalg.norm(r.surface_point - p_gt))]
    missing = len(gt_by_id) - len(matched)
    return _report_from_errors(errors_by_id, missing)


def evaluate_batch(pairs):
    """Aggregate (results, gt) pairs from several meshes into one report."""
    errors_by_id = {}
    missing = 0
    overlap = False
    for results, gt in pairs:
        gt_by_id = {int(i): p for i, p in zip(gt.ids, gt.points)}
        matched = set()
        for r in results:
            p_gt = gt_by_id.get(r.landmark_id)
            if p_gt is None:
                continue
            overlap = True
            matched.add(r.landmark_id)
            errors_by_id.setdefault(r.landmark_id, []).append(float(np.linalg.norm(r.surface_point - p_gt)))
        missing += len(gt_by_id) - len(matched)
    if not overlap:
        raise ValueError("no overlapping landmark ids between results and ground truth")
    return _report_from_errors(errors_by_id, missing)


@dataclass
class PipelineConfig:
    """Knobs for the end-to-end run; defaults mirror the library defaults."""

    view_count: int = 100
    rng_seed: int = 0
    cap_half_angle: float = 60.0
    frontal_axis: tuple = (0.0, 0.0, 1.0)
    channels: tuple = ()
    detector: str = "oracle"  # "oracle" or "heatmaps"
    oracle: OracleConfig = dataclass_field(default_factory=OracleConfig)
    ransac: RansacConfig = dataclass_field(default_factory=RansacConfig)
    heatmap_threshold: float = 0.5
    curvature_radius: float = 10.0
    octree_max_depth: int = 10
    octree_max_tris: int = 32


def _stage(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(stage, str(exc)) from exc


def run_oracle_pipeline(mesh, gt, config=PipelineConfig(), cameras=None):
    """Render-free oracle run on in-memory inputs.

    Returns (results, report, cameras). The oracle detector needs only the
    per-view cameras, so views are created with an empty channel set unless
    channels were requested. `cameras` can be injected (e.g. a shared pool
    for view sweeps); otherwise they are sampled per config.
    """
    center = mesh.bounding_box().center
    mesh_c = mesh.translated(-center)
    gt_c = gt.translated(-center)

    if cameras is None:
        cameras = _stage("sample_cameras", sample_cameras, mesh_c, ViewSamplingConfig(
            view_count=config.view_count,
            frontal_axis=config.frontal_axis,
            cap_half_angle=config.cap_half_angle,
            rng_seed=config.rng_seed,
        ))

    curv = None
    if "curvature" in config.channels:
        curv = _stage("curvature", estimate_curvature_field, mesh_c, config.curvature_radius)

    detections = []
    oracle_cfg = OracleConfig(
        noise_sigma=config.oracle.noise_sigma,
        outlier_rate=config.oracle.outlier_rate,
        outlier_spread=config.oracle.outlier_spread,
        dropout_rate=config.oracle.dropout_rate,
        rng_seed=config.rng_seed if config.oracle.rng_seed is None else config.oracle.rng_seed,
    )
    for view_id, cam in enumerate(cameras):
        view = _stage("render", render_view, mesh_c, cam, channels=config.channels,
                      curvature=curv, view_id=view_id)
        detections.extend(_stage("detect", oracle_detect, view, gt_c.points, oracle_cfg,
                                 landmark_ids=gt_c.ids.tolist()))

    octree = _stage("octree", build_octree, mesh_c, config.octree_max_depth, config.octree_max_tris)
    cam_map = {i: c for i, c in enumerate(cameras)}
    results = _stage("consensus", place_landmarks, mesh_c, octree, cam_map, detections, config.ransac)
    for r in results:  # back to the original mesh frame
        r.point = r.point + center
        r.surface_point = r.surface_point + center
    report = _stage("evaluate", evaluate, results, gt) if len(results) else None
    return results, report, cameras


def run_heatmap_pipeline(mesh, export_dir, config=PipelineConfig(), gt=None):
    """Consume an export directory (HMP1 stacks + per-view metadata JSON).

    Cameras are restored from the metadata records, heatmaps decoded with
    the configured threshold, and the fused landmarks snapped to `mesh`.
    Landmark ids follow the order recorded in each view's metadata.
    """
    export_dir = Path(export_dir)
    meta_paths = sorted(export_dir.glob("view_*.json"))
    if not meta_paths:
        raise PipelineError("load_export", f"no view metadata found in {export_dir}")

    center = mesh.bounding_box().center
    mesh_c = mesh.translated(-center)

    cameras = {}
    detections = []
    for meta_path in meta_paths:
        meta = _stage("load_export", lambda p: json.loads(p.read_text()), meta_path)
        view_id = int(meta["view_id"])
        cameras[view_id] = CameraSpec.from_dict(meta["camera"])
        stack_path = meta["files"]["heatmaps"]
        if not Path(stack_path).is_absolute():
            stack_path = export_dir / Path(stack_path).name
        planes = _stage("load_export", read_heatmap_stack, stack_path)
        lids = [rec["id"] for rec in meta["gt_landmarks_2d"]]
        stack = HeatmapStack(planes, landmark_ids=lids if len(lids) == len(planes) else None)
        detections.extend(_stage("detect", decode_heatmaps, stack, config.heatmap_threshold, view_id))

    octree = _stage("octree", build_octree, mesh_c, config.octree_max_depth, config.octree_max_tris)
    results = _stage("consensus", place_landmarks, mesh_c, octree, cameras, detections, config.ransac)
    for r in results:
        r.point = r.point + center
        r.surface_point = r.surface_point + center
    report = None
    if gt is not None and len(results):
        report = _stage("evaluate", evaluate, results, gt)
    return results, report


def run_pipeline(mesh_path, landmarks_path=None, config=PipelineConfig(), export_dir=None):
    """Path-based entry point; see run_oracle_pipeline / run_heatmap_pipeline.

    Returns (results, report). `landmarks_path` supplies ground truth (and
    drives the oracle detector); `export_dir` supplies heatmap stacks when
    config.detector == "heatmaps".
    """
    mesh = _stage("load_mesh", load_mesh, mesh_path)
    gt = _stage("load_landmarks", load_landmarks, landmarks_path) if landmarks_path else None
    if config.detector == "oracle":
        if gt is None:
            raise PipelineError("load_landmarks", "oracle detector requires a ground-truth landmark file")
        results, report, _ = run_oracle_pipeline(mesh, gt, config)
        return results, report
    if config.detector == "heatmaps":
        if export_dir is None:
            raise PipelineError("load_export", "heatmap detector requires an export directory")
        return run_heatmap_pipeline(mesh, export_dir, config, gt=gt)
    raise PipelineError("config", f"unknown detector {config.detector!r}")


def view_sweep(mesh, gt, view_counts, config=PipelineConfig()):
    """Mean landmark error per view count, over one shared camera pool.

    All counts reuse prefixes of the same seeded camera sample, so the
    25-view run literally uses the first 25 cameras of the 100-view run.
    Returns a list of {"view_count", "mean_error_mm", "resolved", "missing"}.
    """
    if not view_counts:
        raise ValueError("view_counts must be nonempty")
    pool = sample_cameras(mesh.translated(-mesh.bounding_box().center), ViewSamplingConfig(
        view_count=max(view_counts),
        frontal_axis=config.frontal_axis,
        cap_half_angle=config.cap_half_angle,
        rng_seed=config.rng_seed,
    ))
    rows = []
    for count in view_counts:
        results, report, _ = run_oracle_pipeline(mesh, gt, config, cameras=pool[:count])
        rows.append({
            "view_count": int(count),
            "mean_error_mm": float(report.overall_mean_mm) if report else float("nan"),
            "resolved": len(results),
            "missing": int(report.missing) if report else len(gt),
        })
    return rows


def write_results_json(path, results, expected_landmark_ids=None):
    records = results_to_records(results, expected_landmark_ids)
    Path(path).write_text(json.dumps({"landmarks": records}, indent=2, sort_keys=True) + "\n")


def read_results_json(path):
    """Load a results file back into ConsensusResult objects (ok entries only)."""
    data = json.loads(Path(path).read_text())
    results = []
    for rec in data["landmarks"]:
        if rec.get("status") != "ok":
            continue
        results.append(ConsensusResult(
            landmark_id=int(rec["landmark_id"]),
            point=np.array(rec["p"], dtype=np.float64),
            surface_point=np.array(rec["surface_point"], dtype=np.float64),
            inlier_view_ids=list(rec.get("inlier_views", [])),
            rms_residual=float(rec.get("rms_residual", 0.0)),
            ray_count_used=len(rec.get("inlier_views", [])),
        ))
    return results


def write_report_json(path, report):
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
