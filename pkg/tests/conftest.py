import numpy as np
import pytest

from mvlandmarks.mesh import TriangleMesh
from mvlandmarks import shapes


@pytest.fixture(scope="session")
def sphere100():
    """Icosphere, 3 subdivisions, radius 100 mm (642 vertices)."""
    v, t = shapes.icosphere(3, 100.0)
    return TriangleMesh(v, t)


@pytest.fixture(scope="session")
def sphere1000_lvl4():
    """Icosphere, 4 subdivisions, radius 1000 mm (~66 mm edges)."""
    v, t = shapes.icosphere(4, 1000.0)
    return TriangleMesh(v, t)


def random_rotation(rng):
    """Uniform-ish random rotation matrix via QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


# ---------------------------------------------------------------------------
# Independent oracles (deliberately different formulations from the library)


def oracle_point_to_triangle(p, a, b, c):
    """Closest point on triangle abc to p: plane projection + edge clamping.

    Projects p onto the triangle plane and accepts the projection when its
    barycentric coordinates are all nonnegative; otherwise takes the best of
    the three clamped edge-segment projections. Independent of the
    region-decomposition form used by the library.
    """
    p, a, b, c = (np.asarray(x, dtype=np.float64) for x in (p, a, b, c))
    n = np.cross(b - a, c - a)
    nn = n @ n
    candidates = []
    if nn > 0:
        proj = p - ((p - a) @ n / nn) * n
        # barycentric via areas
        w_a = np.cross(b - proj, c - proj) @ n
        w_b = np.cross(c - proj, a - proj) @ n
        w_c = np.cross(a - proj, b - proj) @ n
        if w_a >= 0 and w_b >= 0 and w_c >= 0:
            candidates.append(proj)
    for s, e in ((a, b), (b, c), (c, a)):
        d = e - s
        denom = d @ d
        t = 0.0 if denom == 0 else np.clip((p - s) @ d / denom, 0.0, 1.0)
        candidates.append(s + t * d)
    dists = [np.linalg.norm(p - q) for q in candidates]
    return candidates[int(np.argmin(dists))]


def oracle_brute_force_closest(mesh, p):
    """Closest surface point by scanning every triangle with the oracle above."""
    best = None
    best_d = np.inf
    for tri in mesh.triangles:
        q = oracle_point_to_triangle(p, *mesh.vertices[tri])
        d = np.linalg.norm(np.asarray(p, dtype=np.float64) - q)
        if d < best_d:
            best_d = d
            best = q
    return best, best_d


def oracle_grow_bfs(mesh, seed, radius):
    """Independent region growing: plain adjacency-dict BFS with distance gate."""
    adj = {}
    for i, j, k in mesh.triangles:
        for x, y in ((i, j), (j, k), (k, i)):
            adj.setdefault(int(x), set()).add(int(y))
            adj.setdefault(int(y), set()).add(int(x))
    origin = mesh.vertices[seed]
    included = {int(seed)}
    frontier = [int(seed)]
    while frontier:
        nxt = []
        for v in frontier:
            for w in adj.get(v, ()):
                if w not in included and np.linalg.norm(mesh.vertices[w] - origin) <= radius:
                    included.add(w)
                    nxt.append(w)
        frontier = nxt
    return included


def ray_bundle_objective(a, n):
    """Sum of squared point-to-ray distances as a callable of p."""
    a = np.asarray(a, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)

    def f(p):
        w = p - a
        t = np.einsum("ij,ij->i", w, n)
        return float(np.sum(np.einsum("ij,ij->i", w, w) - t * t))

    return f


def make_ray_bundle(rng, n_inliers, n_outliers, point, perturb_mm, outlier_mm):
    """Synthetic bundle with known ground truth.

    Inlier rays pass within perturb_mm of `point` (perpendicular offset
    uniform in a disc); each outlier passes through its own point displaced
    outlier_mm away in a random direction.
    """
    from mvlandmarks.consensus import LandmarkRay

    point = np.asarray(point, dtype=np.float64)
    rays = []
    view = 0
    for _ in range(n_inliers):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        perp = rng.normal(size=3)
        perp -= (perp @ d) * d
        norm = np.linalg.norm(perp)
        if norm > 0:
            perp *= rng.uniform(0.0, perturb_mm) / norm
        rays.append(LandmarkRay(origin=point + perp - 20.0 * d, direction=d,
                                landmark_id=0, view_id=view))
        view += 1
    for _ in range(n_outliers):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        off = rng.normal(size=3)
        off *= outlier_mm / np.linalg.norm(off)
        rays.append(LandmarkRay(origin=point + off - 20.0 * d, direction=d,
                                landmark_id=0, view_id=view))
        view += 1
    return rays
