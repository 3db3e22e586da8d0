"""Octree over mesh triangles and exact closest-point-on-surface queries.

The tree subdivides the mesh bounding box into axis-aligned octants; a leaf
stores the indices of every triangle whose AABB overlaps the leaf box (a
conservative superset of true triangle-box intersection, so no intersecting
triangle is ever missed). Queries run best-first with box-distance pruning
and return exactly the brute-force closest point.
"""

import heapq

import numpy as np

from .mesh import BoundingBox


class _Node:
    __slots__ = ("box_min", "box_max", "children", "triangle_ids")

    def __init__(self, box_min, box_max):
        self.box_min = box_min
        self.box_max = box_max
        self.children = None
        self.triangle_ids = None

    @property
    def is_leaf(self):
        return self.children is None


class Octree:
    """Spatial index over the triangles of a TriangleMesh.

    Parameters
    ----------
    mesh : TriangleMesh
    max_depth : int
        Maximum subdivision depth (root at depth 0).
    max_triangles_per_leaf : int
        A node holding more triangles than this splits, until max_depth.
    """

    def __init__(self, mesh, max_depth=10, max_triangles_per_leaf=32):
        if mesh.triangle_count == 0:
            raise ValueError("cannot build an octree over an empty mesh")
        self.mesh = mesh
        self.max_depth = int(max_depth)
        self.max_triangles_per_leaf = int(max_triangles_per_leaf)
        corners = mesh.triangle_corners()
        self._tri_min = corners.min(axis=1)
        self._tri_max = corners.max(axis=1)
        self._corners = corners
        bbox = mesh.bounding_box()
        self.bounding_box = BoundingBox(bbox.min, bbox.max)
        self.root = _Node(bbox.min.copy(), bbox.max.copy())
        self._build(self.root, np.arange(mesh.triangle_count), 0)
        self._stamp = np.full(mesh.triangle_count, -1, dtype=np.int64)
        self._query_id = 0
        self.last_query_triangle_count = 0

    def _build(self, node, tri_ids, depth):
        if len(tri_ids) <= self.max_triangles_per_leaf or depth >= self.max_depth:
            node.triangle_ids = np.ascontiguousarray(tri_ids)
            return
        mid = 0.5 * (node.box_min + node.box_max)
        tmin = self._tri_min[tri_ids]
        tmax = self._tri_max[tri_ids]
        node.children = []
        lows = (node.box_min, mid)
        highs = (mid, node.box_max)
        for ix in range(2):
            for iy in range(2):
                for iz in range(2):
                    cmin = np.array([lows[ix][0], lows[iy][1], lows[iz][2]])
                    cmax = np.array([highs[ix][0], highs[iy][1], highs[iz][2]])
                    # AABB-overlap test against the child box
                    sel = np.all(tmin <= cmax, axis=1) & np.all(tmax >= cmin, axis=1)
                    child = _Node(cmin, cmax)
                    self._build(child, tri_ids[sel], depth + 1)
                    node.children.append(child)

    def leaves(self):
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend(node.children)
        return out

    def closest_point(self, point):
        """Closest surface point to `point`.

        Returns (point_on_surface, triangle_id, distance). Identical to a
        brute-force scan over all triangles; ties resolve to the lowest
        triangle id among exact-equal distances encountered first in
        best-first order.
        """
        p = np.asarray(point, dtype=np.float64)
        self._query_id += 1
        stamp_id = self._query_id
        visited = 0
        best_d2 = np.inf
        best_point = None
        best_tri = -1
        heap = [(_box_sqdist(p, self.root.box_min, self.root.box_max), 0, self.root)]
        counter = 1
        while heap:
            d2, _, node = heapq.heappop(heap)
            if d2 >= best_d2:
                break  # nothing closer remains
            if node.is_leaf:
                ids = node.triangle_ids
                if not len(ids):
                    continue
                fresh = ids[self._stamp[ids] != stamp_id]
                if not len(fresh):
                    continue
                self._stamp[fresh] = stamp_id
                visited += len(fresh)
                pts = closest_point_on_triangles(self._corners[fresh], p)
                d2s = np.einsum("ij,ij->i", pts - p, pts - p)
                k = int(np.argmin(d2s))
                if d2s[k] < best_d2:
                    best_d2 = float(d2s[k])
                    best_point = pts[k]
                    best_tri = int(fresh[k])
            else:
                for child in node.children:
                    cd2 = _box_sqdist(p, child.box_min, child.box_max)
                    if cd2 < best_d2:
                        heapq.heappush(heap, (cd2, counter, child))
                        counter += 1
        self.last_query_triangle_count = visited
        return best_point, best_tri, float(np.sqrt(best_d2))


def build_octree(mesh, max_depth=10, max_tris=32):
    """Build an Octree over `mesh`. Thin constructor wrapper."""
    return Octree(mesh, max_depth=max_depth, max_triangles_per_leaf=max_tris)


def closest_surface_point(octree, mesh, point):
    """Closest point on `mesh` to `point`, via the octree.

    Returns (surface_point, triangle_id, distance_mm). The octree must have
    been built over the same mesh.
    """
    if octree.mesh is not mesh and octree.mesh.triangle_count != mesh.triangle_count:
        raise ValueError("octree was not built over this mesh")
    return octree.closest_point(point)


def _box_sqdist(p, box_min, box_max):
    """Squared distance from p to an axis-aligned box (0 inside)."""
    d = np.maximum(box_min - p, 0.0) + np.maximum(p - box_max, 0.0)
    return float(d @ d)


def closest_point_on_triangles(corners, p):
    """Closest point to `p` on each of a batch of triangles.

    Region-decomposition closed form (vertex / edge / interior cases),
    vectorized over the batch.

    Parameters
    ----------
    corners : (N, 3, 3) array, triangle corner positions
    p : (3,) query point

    Returns
    -------
    (N, 3) array of closest points.
    """
    a = corners[:, 0]
    b = corners[:, 1]
    c = corners[:, 2]
    ab = b - a
    ac = c - a
    ap = p - a

    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)

    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)

    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    out = np.empty_like(a)
    done = np.zeros(len(a), dtype=bool)

    # vertex regions
    m = (d1 <= 0) & (d2 <= 0)
    out[m] = a[m]
    done |= m
    m = ~done & (d3 >= 0) & (d4 <= d3)
    out[m] = b[m]
    done |= m
    m = ~done & (d6 >= 0) & (d5 <= d6)
    out[m] = c[m]
    done |= m

    # edge AB
    m = ~done & (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    if np.any(m):
        v = d1[m] / (d1[m] - d3[m])
        out[m] = a[m] + v[:, None] * ab[m]
        done |= m
    # edge AC
    m = ~done & (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    if np.any(m):
        w = d2[m] / (d2[m] - d6[m])
        out[m] = a[m] + w[:, None] * ac[m]
        done |= m
    # edge BC
    m = ~done & (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    if np.any(m):
        w = (d4[m] - d3[m]) / ((d4[m] - d3[m]) + (d5[m] - d6[m]))
        out[m] = b[m] + w[:, None] * (c[m] - b[m])
        done |= m

    # interior
    m = ~done
    if np.any(m):
        denom = va[m] + vb[m] + vc[m]
        denom = np.where(denom == 0, 1.0, denom)  # degenerate slivers fall back to a
        v = vb[m] / denom
        w = vc[m] / denom
        out[m] = a[m] + v[:, None] * ab[m] + w[:, None] * ac[m]
    return out
