"""Robust per-vertex mean curvature from local sphere fitting.

For each vertex P the estimator grows a neighborhood along mesh edges
(10 mm default), finds the local surface normal by eigen-analysis of the
neighborhood point cloud, and fits the sphere through P whose center lies on
the normal line. In the linearized sphere equation a neighbor q (relative to
P) satisfies ||q||^2 = 2R * (q . m) with m the unit normal toward the center,
so the curvature k = 1/R solves the one-unknown least-squares problem

    minimize sum_i (k * ||q_i||^2 - 2 q_i . m)^2

giving k = 2 * sum(h_i * d_i^2) / sum(d_i^4) with h_i = q_i . m and
d_i^2 = ||q_i||^2. On anisotropic surfaces this converges to the mean of the
two principal curvatures (e.g. 1/(2r) on a cylinder of radius r), and it is
exact on spheres and planes. Sign is positive where the surface is convex
with respect to the outward normal.
"""

from dataclasses import dataclass
import struct
from pathlib import Path

import numpy as np

from .mesh import grow_neighborhood

DEFAULT_RADIUS_MM = 10.0
MAX_SPHERE_RADIUS_MM = 1.0e6  # fits flatter than this clamp to zero curvature
_COLLINEAR_EIG_RATIO = 1.0e-10
MIN_NEIGHBORS = 4


@dataclass
class CurvatureField:
    """Per-vertex signed mean curvature (1/mm) plus degeneracy flags."""

    values: np.ndarray
    degenerate: np.ndarray
    radius: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.degenerate = np.asarray(self.degenerate, dtype=bool)


def _fit_curvature(q, normal_ref):
    """Curvature from seed-relative neighbor offsets `q` and a reference normal.

    Returns (value, degenerate). `normal_ref` orients the PCA normal; it only
    needs a positive dot product with the true outward normal.
    """
    n_pts = len(q)
    if n_pts < MIN_NEIGHBORS:
        return 0.0, True
    # eigen-analysis of the local cloud (seed contributes the origin)
    m = q.sum(axis=0) / (n_pts + 1)
    cov = q.T @ q - (n_pts + 1) * np.outer(m, m)
    evals, evecs = np.linalg.eigh(cov)
    if evals[1] <= _COLLINEAR_EIG_RATIO * max(evals[2], 0.0):
        return 0.0, True  # collinear cloud, no well-defined plane
    normal = evecs[:, 0]
    if normal @ normal_ref < 0.0:
        normal = -normal
    d2 = np.einsum("ij,ij->i", q, q)
    h = q @ normal
    denom = float(d2 @ d2)
    if denom == 0.0:
        return 0.0, True
    kappa = -2.0 * float(np.sum(h * d2)) / denom
    if abs(kappa) < 1.0 / MAX_SPHERE_RADIUS_MM:
        return 0.0, False
    return kappa, False


def estimate_vertex_curvature(mesh, vertex_id, radius=DEFAULT_RADIUS_MM):
    """Signed mean curvature (1/mm) at one vertex; 0.0 for degenerate vertices."""
    ids = grow_neighborhood(mesh, vertex_id, radius)
    ids = ids[ids != vertex_id]
    q = mesh.vertices[ids] - mesh.vertices[vertex_id]
    value, _ = _fit_curvature(q, mesh.vertex_normals()[vertex_id])
    return value


def _grow_all_neighborhoods(mesh, radius):
    """Region-grow every vertex at once by synchronized ring expansion.

    Returns (seed_of, flat): parallel arrays of (seed id, member id) pairs,
    seeds excluded from their own lists, grouped by seed. Produces exactly
    the members grow_neighborhood would: a vertex joins a seed's region when
    an edge connects it to an already-included vertex and it lies within
    `radius` of the seed.
    """
    nv = mesh.vertex_count
    verts = mesh.vertices
    offsets, adjacency = mesh.vertex_adjacency()
    degree = np.diff(offsets)
    r2 = float(radius) * float(radius)

    seeds = np.arange(nv, dtype=np.int64)
    member_keys = seeds * nv + seeds  # sorted (seed, vertex) pair keys
    frontier_s = seeds
    frontier_v = seeds
    while len(frontier_s):
        deg = degree[frontier_v]
        cand_s = np.repeat(frontier_s, deg)
        # flattened adjacency lists of the frontier vertices
        starts = offsets[frontier_v]
        idx = np.repeat(starts + deg - deg.cumsum(), deg) + np.arange(deg.sum())
        cand_w = adjacency[idx]
        # dedup and drop known members before touching coordinates; most
        # candidates re-propose existing members
        keys = np.unique(cand_s * nv + cand_w)
        pos = np.minimum(np.searchsorted(member_keys, keys), len(member_keys) - 1)
        keys = keys[member_keys[pos] != keys]
        cand_s = keys // nv
        cand_w = keys % nv
        diff = verts[cand_w] - verts[cand_s]
        near = np.einsum("ij,ij->i", diff, diff) <= r2
        fresh = keys[near]
        if not len(fresh):
            break
        member_keys = np.sort(np.concatenate([member_keys, fresh]))
        frontier_s = cand_s[near]
        frontier_v = cand_w[near]
    seed_of = member_keys // nv
    flat = member_keys % nv
    keep = seed_of != flat
    return seed_of[keep], flat[keep]


def estimate_curvature_field(mesh, radius=DEFAULT_RADIUS_MM):
    """Estimate curvature at every vertex.

    Degenerate vertices (too few neighbors within `radius`, or a collinear
    neighborhood) get value 0 and a raised flag. The computation is batched:
    neighborhoods grow for all seeds in lockstep, then covariance/eigen/fit
    steps run vectorized over all vertices at once.
    """
    nv = mesh.vertex_count
    values = np.zeros(nv)
    degenerate = np.zeros(nv, dtype=bool)
    if nv == 0:
        return CurvatureField(values, degenerate, radius)

    verts = mesh.vertices
    seed_of, flat = _grow_all_neighborhoods(mesh, radius)
    counts = np.bincount(seed_of, minlength=nv)
    degenerate |= counts < MIN_NEIGHBORS
    q = verts[flat] - verts[seed_of]

    # batched covariance of each cloud (plus the seed at the origin);
    # bincount-based segment sums, exploiting covariance symmetry
    sum_q = np.stack([np.bincount(seed_of, weights=q[:, k], minlength=nv) for k in range(3)], axis=1)
    sum_qq = np.empty((nv, 3, 3))
    for i in range(3):
        for j in range(i, 3):
            s = np.bincount(seed_of, weights=q[:, i] * q[:, j], minlength=nv)
            sum_qq[:, i, j] = s
            sum_qq[:, j, i] = s
    n_pts = counts + 1
    mean = sum_q / n_pts[:, None]
    cov = sum_qq - n_pts[:, None, None] * (mean[:, :, None] * mean[:, None, :])

    evals, evecs = np.linalg.eigh(cov)
    degenerate |= evals[:, 1] <= _COLLINEAR_EIG_RATIO * np.maximum(evals[:, 2], 0.0)

    normals = evecs[:, :, 0]
    ref = mesh.vertex_normals()
    flip = np.einsum("ij,ij->i", normals, ref) < 0.0
    normals[flip] = -normals[flip]

    d2 = np.einsum("ij,ij->i", q, q)
    h = np.einsum("ij,ij->i", q, normals[seed_of])
    numer = np.bincount(seed_of, weights=h * d2, minlength=nv)
    denom = np.bincount(seed_of, weights=d2 * d2, minlength=nv)

    ok = ~degenerate & (denom > 0.0)
    values[ok] = -2.0 * numer[ok] / denom[ok]
    values[np.abs(values) < 1.0 / MAX_SPHERE_RADIUS_MM] = 0.0
    values[degenerate] = 0.0
    return CurvatureField(values, degenerate, radius)


# ---------------------------------------------------------------------------
# Sidecar cache: 16-byte header (magic, vertex count, radius) + float32 values

_MAGIC = b"CRV1"


def save_curvature(field, path):
    path = Path(path)
    header = _MAGIC + struct.pack("<I", len(field.values)) + struct.pack("<d", field.radius)
    path.write_bytes(header + field.values.astype("<f4").tobytes())


def load_curvature(path):
    """Read a curvature sidecar. Degeneracy flags are not stored in the file."""
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a curvature sidecar (bad magic)")
    count = struct.unpack_from("<I", raw, 4)[0]
    radius = struct.unpack_from("<d", raw, 8)[0]
    values = np.frombuffer(raw, dtype="<f4", count=count, offset=16).astype(np.float64)
    if len(values) != count:
        raise ValueError(f"{path}: truncated curvature sidecar")
    return CurvatureField(values, np.zeros(count, dtype=bool), radius)
