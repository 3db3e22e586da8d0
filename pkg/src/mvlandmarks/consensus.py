"""Fuse per-view 2D detections into 3D landmark positions.

Each detection back-projects to a world-space ray (origin a, unit direction
n). For a candidate point p the squared distance to a ray is

    d^2 = (p - a)^T (p - a) - [(p - a)^T n]^2

and the point minimizing the sum of squared distances over a ray bundle
solves S p = C with S = sum(n n^T - I) and C = sum((n n^T - I) a), computed
through the Moore-Penrose pseudo-inverse so rank-deficient bundles (all rays
parallel) still yield the minimum-norm minimizer. A RANSAC loop over random
ray triples rejects outlier rays before the final fit, and the fused point
is snapped to the closest point on the mesh surface.
"""

from dataclasses import dataclass

import numpy as np

from .octree import closest_surface_point

PINV_RCOND = 1e-9


@dataclass(frozen=True)
class LandmarkRay:
    """World-space ray with provenance; direction is normalized on creation."""

    origin: np.ndarray
    direction: np.ndarray
    landmark_id: int
    view_id: int
    confidence: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64))
        d = np.asarray(self.direction, dtype=np.float64)
        norm = np.linalg.norm(d)
        if norm == 0:
            raise ValueError("ray direction must be nonzero")
        object.__setattr__(self, "direction", d / norm)


def back_project(camera, detection, view_id=None):
    """Detection (u, v) -> LandmarkRay through the camera.

    For orthographic cameras the direction is the view axis and the origin
    the un-projection of (u, v) onto the near plane. `view_id` (when given)
    guards against pairing a detection with the wrong view's camera.
    """
    if view_id is not None and detection.view_id != view_id:
        raise ValueError(
            f"detection from view {detection.view_id} back-projected through camera of view {view_id}"
        )
    origin, direction = camera.pixel_ray(detection.u, detection.v)
    return LandmarkRay(
        origin=origin,
        direction=direction,
        landmark_id=detection.landmark_id,
        view_id=detection.view_id,
        confidence=detection.confidence,
    )


def point_to_ray_sqdist(p, ray):
    """Squared distance (mm^2) from point p to the (infinite) ray line.

    Never negative; cancellation for points on the ray clamps to 0.
    """
    w = np.asarray(p, dtype=np.float64) - ray.origin
    t = w @ ray.direction
    return max(float(w @ w - t * t), 0.0)


def _bundle_arrays(rays):
    a = np.array([r.origin for r in rays])
    n = np.array([r.direction for r in rays])
    return a, n


def _sqdists_to_rays(p, a, n):
    w = p - a
    t = np.einsum("ij,ij->i", w, n)
    return np.maximum(np.einsum("ij,ij->i", w, w) - t * t, 0.0)


def _lsq_point(a, n):
    outer = n[:, :, None] * n[:, None, :] - np.eye(3)
    s = outer.sum(axis=0)
    c = np.einsum("ijk,ik->j", outer, a)
    svals = np.linalg.svd(s, compute_uv=False)
    ok = bool(svals[-1] > PINV_RCOND * svals[0])
    p = np.linalg.pinv(s, rcond=PINV_RCOND) @ c
    return p, ok


def lsq_point_from_rays(rays):
    """Least-squares point for a ray bundle.

    Returns (p, ok). `ok` is False when the bundle is rank deficient (all
    rays parallel); p is then the minimum-norm point among the minimizers.
    """
    if len(rays) < 2:
        raise ValueError("need at least 2 rays for a least-squares point")
    a, n = _bundle_arrays(rays)
    return _lsq_point(a, n)


@dataclass(frozen=True)
class RansacConfig:
    iterations: int = 500
    inlier_threshold: float = 2.0  # mm
    min_inliers: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.inlier_threshold <= 0:
            raise ValueError("inlier_threshold must be positive")
        if self.min_inliers < 3:
            raise ValueError("min_inliers must be >= 3")


def ransac_consensus(rays, config=RansacConfig()):
    """Robust consensus point from a bundle of rays.

    Hypotheses come from least-squares fits of 3 randomly sampled rays;
    support is the number of rays within inlier_threshold of the hypothesis
    (ties broken by lower inlier RMS). The best hypothesis is refit on its
    full inlier set. Sampling is seeded and runs over the bundle sorted by
    (view_id, landmark_id), so the result is invariant to input order.

    Returns (p, inlier_rays, ok); ok is False when the best support is
    below min_inliers.
    """
    if len(rays) < config.min_inliers:
        raise ValueError(f"need at least {config.min_inliers} rays, got {len(rays)}")
    order = sorted(range(len(rays)), key=lambda i: (rays[i].view_id, rays[i].landmark_id))
    rays = [rays[i] for i in order]
    a, n = _bundle_arrays(rays)
    nrays = len(rays)
    thr2 = config.inlier_threshold ** 2

    rng = np.random.default_rng(config.rng_seed)
    best_count = -1
    best_rms = np.inf
    best_mask = None
    for _ in range(config.iterations):
        idx = rng.choice(nrays, size=3, replace=False)
        p, _ = _lsq_point(a[idx], n[idx])
        d2 = _sqdists_to_rays(p, a, n)
        mask = d2 < thr2
        count = int(mask.sum())
        if count == 0:
            continue
        rms = float(np.sqrt(d2[mask].mean()))
        if count > best_count or (count == best_count and rms < best_rms):
            best_count = count
            best_rms = rms
            best_mask = mask

    ok = best_count >= config.min_inliers
    if best_mask is None:
        return np.zeros(3), [], False
    if best_count >= 2:
        p, _ = _lsq_point(a[best_mask], n[best_mask])
    inliers = [r for r, m in zip(rays, best_mask) if m]
    return p, inliers, ok


@dataclass
class ConsensusResult:
    landmark_id: int
    point: np.ndarray
    surface_point: np.ndarray
    inlier_view_ids: list
    rms_residual: float
    ray_count_used: int


def place_landmarks(mesh, octree, cameras, detections, config=RansacConfig()):
    """Full per-landmark fusion: back-project, RANSAC, snap to the surface.

    Parameters
    ----------
    mesh, octree : the target surface and its spatial index
    cameras : dict of view_id -> CameraSpec
    detections : iterable of Detection2D (any mix of landmarks/views)
    config : RansacConfig

    Landmarks with fewer detections than min_inliers, or whose RANSAC
    consensus fails, are omitted from the result list (absent, never
    fabricated). Results are ordered by landmark id.
    """
    by_landmark = {}
    for det in detections:
        by_landmark.setdefault(det.landmark_id, []).append(det)

    results = []
    for lid in sorted(by_landmark):
        dets = by_landmark[lid]
        if len(dets) < config.min_inliers:
            continue
        rays = [back_project(cameras[d.view_id], d, view_id=d.view_id) for d in dets]
        p, inliers, ok = ransac_consensus(rays, config)
        if not ok:
            continue
        a, n = _bundle_arrays(inliers)
        rms = float(np.sqrt(_sqdists_to_rays(p, a, n).mean()))
        surface_point, _, _ = closest_surface_point(octree, mesh, p)
        results.append(
            ConsensusResult(
                landmark_id=int(lid),
                point=p,
                surface_point=surface_point,
                inlier_view_ids=sorted(r.view_id for r in inliers),
                rms_residual=rms,
                ray_count_used=len(rays),
            )
        )
    return results


def results_to_records(results, expected_landmark_ids=None):
    """JSON-ready records; absent landmarks get a bare status entry."""
    records = []
    seen = set()
    for r in results:
        seen.add(r.landmark_id)
        records.append({
            "landmark_id": r.landmark_id,
            "p": [float(x) for x in r.point],
            "surface_point": [float(x) for x in r.surface_point],
            "inlier_views": list(r.inlier_view_ids),
            "rms_residual": float(r.rms_residual),
            "status": "ok",
        })
    if expected_landmark_ids is not None:
        for lid in expected_landmark_ids:
            if lid not in seen:
                records.append({"landmark_id": int(lid), "status": "absent"})
    records.sort(key=lambda rec: rec["landmark_id"])
    return records
