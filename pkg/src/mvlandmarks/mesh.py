"""Triangle mesh container, OBJ/PLY file I/O, and vertex-neighborhood growing.

Supported file subset:
  OBJ -- ``v x y z`` and ``f i j k`` records (1-based indices, triangles only).
  PLY -- ascii and binary_little_endian; element ``vertex`` with properties
         x, y, z and optionally red, green, blue (uchar, mapped to [0, 1]);
         element ``face`` with a vertex_indices list property.
"""

import struct
from collections import deque
from pathlib import Path

import numpy as np


class MeshFormatError(ValueError):
    """Raised when a mesh file cannot be parsed or violates basic invariants."""


class TriangleMesh:
    """Immutable triangle mesh in world units (mm).

    Parameters
    ----------
    vertices : (V, 3) float array
    triangles : (T, 3) int array
        Vertex-index triples; every index in [0, V) and no repeated index
        within a triangle.
    vertex_colors : (V, 3) float array in [0, 1], optional
    vertex_curvature : (V,) float array (1/mm), optional
    """

    def __init__(self, vertices, triangles, vertex_colors=None, vertex_curvature=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must have shape (V, 3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValueError("triangles must have shape (T, 3)")
        nv = len(self.vertices)
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= nv):
            raise ValueError("triangle index out of range")
        t = self.triangles
        if t.size and (np.any(t[:, 0] == t[:, 1]) or np.any(t[:, 1] == t[:, 2]) or np.any(t[:, 0] == t[:, 2])):
            raise ValueError("triangle repeats a vertex index")
        self.vertex_colors = None
        if vertex_colors is not None:
            self.vertex_colors = np.ascontiguousarray(vertex_colors, dtype=np.float64)
            if self.vertex_colors.shape != (nv, 3):
                raise ValueError("vertex_colors must have shape (V, 3)")
        self.vertex_curvature = None
        if vertex_curvature is not None:
            self.vertex_curvature = np.ascontiguousarray(vertex_curvature, dtype=np.float64)
            if self.vertex_curvature.shape != (nv,):
                raise ValueError("vertex_curvature must have shape (V,)")
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)
        self._adjacency = None

    @property
    def vertex_count(self):
        return len(self.vertices)

    @property
    def triangle_count(self):
        return len(self.triangles)

    def bounding_box(self):
        if not len(self.vertices):
            raise ValueError("empty mesh has no bounding box")
        return BoundingBox(self.vertices.min(axis=0), self.vertices.max(axis=0))

    def triangle_corners(self):
        """(T, 3, 3) array of triangle corner positions."""
        return self.vertices[self.triangles]

    def triangle_normals(self, normalize=True):
        """Per-triangle normals from the winding order (outward for CCW meshes)."""
        c = self.triangle_corners()
        n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        if normalize:
            lens = np.linalg.norm(n, axis=1)
            lens[lens == 0] = 1.0
            n = n / lens[:, None]
        return n

    def vertex_normals(self):
        """Area-weighted average of incident triangle normals, unit length."""
        n = np.zeros_like(self.vertices)
        fn = self.triangle_normals(normalize=False)  # area-weighted
        for k in range(3):
            np.add.at(n, self.triangles[:, k], fn)
        lens = np.linalg.norm(n, axis=1)
        lens[lens == 0] = 1.0
        return n / lens[:, None]

    def vertex_adjacency(self):
        """CSR-style (offsets, neighbors) arrays of the edge graph. Cached."""
        if self._adjacency is None:
            nv = self.vertex_count
            t = self.triangles
            if len(t):
                edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
                keys = np.concatenate([edges[:, 0] * nv + edges[:, 1], edges[:, 1] * nv + edges[:, 0]])
                keys = np.unique(keys)
                src = keys // nv
                dst = keys % nv
            else:
                src = dst = np.zeros(0, dtype=np.int64)
            counts = np.bincount(src, minlength=nv) if len(src) else np.zeros(nv, dtype=np.int64)
            offsets = np.zeros(nv + 1, dtype=np.int64)
            np.cumsum(counts, out=offsets[1:])
            self._adjacency = (offsets, np.ascontiguousarray(dst))
        return self._adjacency

    def translated(self, offset):
        """Copy of the mesh with `offset` added to every vertex."""
        return TriangleMesh(
            self.vertices + np.asarray(offset, dtype=np.float64),
            self.triangles,
            self.vertex_colors,
            self.vertex_curvature,
        )

    def transformed(self, rotation, translation=(0.0, 0.0, 0.0)):
        """Copy with vertices mapped through R @ v + t."""
        r = np.asarray(rotation, dtype=np.float64)
        t = np.asarray(translation, dtype=np.float64)
        return TriangleMesh(self.vertices @ r.T + t, self.triangles, self.vertex_colors, self.vertex_curvature)


class BoundingBox:
    """Axis-aligned box; min <= max componentwise."""

    def __init__(self, min_corner, max_corner):
        self.min = np.asarray(min_corner, dtype=np.float64).copy()
        self.max = np.asarray(max_corner, dtype=np.float64).copy()
        if np.any(self.min > self.max):
            raise ValueError("bounding box min exceeds max")

    @property
    def center(self):
        return 0.5 * (self.min + self.max)

    @property
    def extent(self):
        return self.max - self.min

    def corners(self):
        """(8, 3) array of box corner positions."""
        mn, mx = self.min, self.max
        return np.array([[x, y, z] for x in (mn[0], mx[0]) for y in (mn[1], mx[1]) for z in (mn[2], mx[2])])

    def contains(self, point):
        p = np.asarray(point)
        return bool(np.all(p >= self.min) and np.all(p <= self.max))

    def __repr__(self):
        return f"BoundingBox({self.min.tolist()}, {self.max.tolist()})"


# ---------------------------------------------------------------------------
# File I/O


def load_mesh(path):
    """Load an OBJ or PLY file into a TriangleMesh.

    Format is picked from the file suffix (.obj / .ply). Raises
    MeshFormatError on malformed content or a mesh without triangles.
    """
    path = Path(path)
    if not path.exists():
        raise MeshFormatError(f"mesh file not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".obj":
        mesh = _load_obj(path)
    elif suffix == ".ply":
        mesh = _load_ply(path)
    else:
        raise MeshFormatError(f"unsupported mesh format: {path.suffix!r} (expected .obj or .ply)")
    if mesh.triangle_count == 0:
        raise MeshFormatError(f"mesh has no triangles: {path}")
    return mesh


def save_mesh(mesh, path, binary=True):
    """Write a TriangleMesh as OBJ (geometry only) or PLY (geometry + colors)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        _save_obj(mesh, path)
    elif suffix == ".ply":
        _save_ply(mesh, path, binary=binary)
    else:
        raise MeshFormatError(f"unsupported mesh format: {path.suffix!r} (expected .obj or .ply)")


def _load_obj(path):
    verts = []
    tris = []
    try:
        text = path.read_text()
    except OSError as exc:
        raise MeshFormatError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise MeshFormatError(f"{path}:{lineno}: vertex record needs 3 coordinates")
            try:
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError as exc:
                raise MeshFormatError(f"{path}:{lineno}: bad vertex coordinate") from exc
        elif tag == "f":
            if len(parts) != 4:
                raise MeshFormatError(f"{path}:{lineno}: only triangular faces are supported")
            try:
                idx = [int(p.split("/")[0]) for p in parts[1:]]
            except ValueError as exc:
                raise MeshFormatError(f"{path}:{lineno}: bad face index") from exc
            # OBJ is 1-based; negative indices count from the end
            idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
            tris.append(idx)
        # other record types (vn, vt, o, g, s, usemtl, ...) are ignored
    if not verts:
        raise MeshFormatError(f"{path}: no vertices")
    try:
        return TriangleMesh(np.array(verts), np.array(tris, dtype=np.int64).reshape(-1, 3))
    except ValueError as exc:
        raise MeshFormatError(f"{path}: {exc}") from exc


def _save_obj(mesh, path):
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    for t in mesh.triangles:
        lines.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
    path.write_text("\n".join(lines) + "\n")


_PLY_TYPES = {
    "char": "b", "int8": "b",
    "uchar": "B", "uint8": "B",
    "short": "h", "int16": "h",
    "ushort": "H", "uint16": "H",
    "int": "i", "int32": "i",
    "uint": "I", "uint32": "I",
    "float": "f", "float32": "f",
    "double": "d", "float64": "d",
}


def _load_ply(path):
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise MeshFormatError(f"cannot read {path}: {exc}") from exc
    if not raw.startswith(b"ply"):
        raise MeshFormatError(f"{path}: missing ply magic")
    end = raw.find(b"end_header")
    if end < 0:
        raise MeshFormatError(f"{path}: missing end_header")
    end = raw.index(b"\n", end) + 1
    header = raw[:end].decode("ascii", errors="replace")
    body = raw[end:]

    fmt = None
    elements = []  # list of (name, count, [(prop_name, type, list_count_type|None)])
    for line in header.splitlines()[1:]:
        parts = line.split()
        if not parts or parts[0] == "comment":
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise MeshFormatError(f"{path}: property before element")
            if parts[1] == "list":
                elements[-1][2].append((parts[4], parts[3], parts[2]))
            else:
                elements[-1][2].append((parts[2], parts[1], None))
        elif parts[0] == "end_header":
            break
    if fmt not in ("ascii", "binary_little_endian"):
        raise MeshFormatError(f"{path}: unsupported ply format {fmt!r}")

    data = {}
    if fmt == "ascii":
        tokens = body.split()
        pos = 0
        for name, count, props in elements:
            rows = []
            for _ in range(count):
                row = {}
                for pname, ptype, ltype in props:
                    if ltype is None:
                        row[pname] = float(tokens[pos]); pos += 1
                    else:
                        n = int(tokens[pos]); pos += 1
                        row[pname] = [float(tokens[pos + k]) for k in range(n)]
                        pos += n
                rows.append(row)
            data[name] = rows
    else:
        pos = 0
        for name, count, props in elements:
            rows = []
            for _ in range(count):
                row = {}
                for pname, ptype, ltype in props:
                    if ltype is None:
                        code = _PLY_TYPES.get(ptype)
                        if code is None:
                            raise MeshFormatError(f"{path}: unknown ply type {ptype!r}")
                        size = struct.calcsize("<" + code)
                        row[pname] = struct.unpack_from("<" + code, body, pos)[0]
                        pos += size
                    else:
                        ccode = _PLY_TYPES.get(ltype)
                        icode = _PLY_TYPES.get(ptype)
                        if ccode is None or icode is None:
                            raise MeshFormatError(f"{path}: unknown ply list types {ltype!r}/{ptype!r}")
                        n = struct.unpack_from("<" + ccode, body, pos)[0]
                        pos += struct.calcsize("<" + ccode)
                        row[pname] = list(struct.unpack_from(f"<{n}{icode}", body, pos))
                        pos += n * struct.calcsize("<" + icode)
                rows.append(row)
            data[name] = rows

    if "vertex" not in data:
        raise MeshFormatError(f"{path}: no vertex element")
    vrows = data["vertex"]
    try:
        verts = np.array([[r["x"], r["y"], r["z"]] for r in vrows], dtype=np.float64)
    except KeyError as exc:
        raise MeshFormatError(f"{path}: vertex element missing coordinate {exc}") from exc
    colors = None
    if vrows and all(k in vrows[0] for k in ("red", "green", "blue")):
        colors = np.array([[r["red"], r["green"], r["blue"]] for r in vrows], dtype=np.float64) / 255.0

    tris = []
    for row in data.get("face", []):
        idx = row.get("vertex_indices", row.get("vertex_index"))
        if idx is None:
            raise MeshFormatError(f"{path}: face without vertex_indices")
        idx = [int(i) for i in idx]
        if len(idx) != 3:
            raise MeshFormatError(f"{path}: only triangular faces are supported (got {len(idx)} indices)")
        tris.append(idx)
    try:
        return TriangleMesh(verts, np.array(tris, dtype=np.int64).reshape(-1, 3), vertex_colors=colors)
    except ValueError as exc:
        raise MeshFormatError(f"{path}: {exc}") from exc


def _save_ply(mesh, path, binary=True):
    has_color = mesh.vertex_colors is not None
    lines = [
        "ply",
        f"format {'binary_little_endian' if binary else 'ascii'} 1.0",
        f"element vertex {mesh.vertex_count}",
        "property double x",
        "property double y",
        "property double z",
    ]
    if has_color:
        lines += ["property uchar red", "property uchar green", "property uchar blue"]
    lines += [
        f"element face {mesh.triangle_count}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    header = ("\n".join(lines) + "\n").encode("ascii")
    if binary:
        chunks = [header]
        colors = None
        if has_color:
            colors = np.clip(np.round(mesh.vertex_colors * 255.0), 0, 255).astype(np.uint8)
        for i, v in enumerate(mesh.vertices):
            chunks.append(struct.pack("<3d", *v))
            if has_color:
                chunks.append(struct.pack("<3B", *colors[i]))
        for t in mesh.triangles:
            chunks.append(struct.pack("<B3i", 3, *t))
        path.write_bytes(b"".join(chunks))
    else:
        body = []
        colors = None
        if has_color:
            colors = np.clip(np.round(mesh.vertex_colors * 255.0), 0, 255).astype(np.uint8)
        for i, v in enumerate(mesh.vertices):
            rec = f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}"
            if has_color:
                rec += f" {colors[i][0]} {colors[i][1]} {colors[i][2]}"
            body.append(rec)
        for t in mesh.triangles:
            body.append(f"3 {t[0]} {t[1]} {t[2]}")
        path.write_bytes(header + ("\n".join(body) + "\n").encode("ascii"))


# ---------------------------------------------------------------------------
# Region growing


def grow_neighborhood(mesh, vertex_id, radius):
    """Vertices edge-connected to `vertex_id` within Euclidean `radius` of it.

    Breadth-first expansion along mesh edges; a vertex joins the region only
    if its straight-line distance to the seed is <= radius AND it is reachable
    from the seed through vertices already in the region. The seed itself is
    always included. Returns a sorted int array of vertex ids.
    """
    if not (0 <= vertex_id < mesh.vertex_count):
        raise ValueError(f"vertex_id {vertex_id} out of range")
    if radius <= 0:
        raise ValueError("radius must be positive")
    offsets, neighbors = mesh.vertex_adjacency()
    seed = mesh.vertices[vertex_id]
    r2 = float(radius) * float(radius)
    verts = mesh.vertices
    included = {vertex_id}
    queue = deque([vertex_id])
    while queue:
        v = queue.popleft()
        for w in neighbors[offsets[v]:offsets[v + 1]]:
            w = int(w)
            if w in included:
                continue
            d = verts[w] - seed
            if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= r2:
                included.add(w)
                queue.append(w)
    return np.array(sorted(included), dtype=np.int64)
