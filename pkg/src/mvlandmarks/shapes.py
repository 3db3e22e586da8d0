"""Procedural test geometry: icospheres, grids, cylinders, boxes.

All generators return (vertices, triangles) as float64 / int64 arrays with
counter-clockwise winding seen from outside, so face normals point outward.
Units are whatever the caller passes in (the rest of the package assumes mm).
"""

import numpy as np


def icosahedron(radius=1.0):
    """The 12-vertex, 20-face icosahedron inscribed in a sphere of `radius`."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    verts *= radius / np.linalg.norm(verts[0])
    tris = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return verts, tris


def icosphere(subdivisions=3, radius=1.0):
    """Icosahedron subdivided `subdivisions` times, vertices snapped to the sphere.

    Vertex count is 10 * 4**k + 2 and triangle count 20 * 4**k.
    """
    verts, tris = icosahedron(radius)
    for _ in range(subdivisions):
        edge_mid = {}
        verts_list = list(verts)

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in edge_mid:
                m = 0.5 * (verts_list[i] + verts_list[j])
                m *= radius / np.linalg.norm(m)
                edge_mid[key] = len(verts_list)
                verts_list.append(m)
            return edge_mid[key]

        new_tris = []
        for a, b, c in tris:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_tris += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.array(verts_list)
        tris = np.array(new_tris, dtype=np.int64)
    return verts, tris


def plane_grid(nx=10, ny=10, spacing=1.0, z=0.0):
    """Regular grid in the z=const plane, triangulated; normals point +z."""
    xs = np.arange(nx) * spacing
    ys = np.arange(ny) * spacing
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([gx.ravel(), gy.ravel(), np.full(nx * ny, float(z))], axis=1)
    tris = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            v00 = i * ny + j
            v01 = v00 + 1
            v10 = v00 + ny
            v11 = v10 + 1
            tris.append([v00, v10, v11])
            tris.append([v00, v11, v01])
    return verts, np.array(tris, dtype=np.int64)


def cylinder(radius=10.0, height=100.0, n_around=64, n_along=40, capped=False):
    """Open (or capped) cylinder along +z, centered on the origin."""
    thetas = np.linspace(0.0, 2 * np.pi, n_around, endpoint=False)
    zs = np.linspace(-height / 2.0, height / 2.0, n_along)
    verts = []
    for z in zs:
        for t in thetas:
            verts.append([radius * np.cos(t), radius * np.sin(t), z])
    verts = np.array(verts)
    tris = []
    for i in range(n_along - 1):
        for j in range(n_around):
            jn = (j + 1) % n_around
            v00 = i * n_around + j
            v01 = i * n_around + jn
            v10 = v00 + n_around
            v11 = v01 + n_around
            tris.append([v00, v01, v11])
            tris.append([v00, v11, v10])
    if capped:
        bot = len(verts)
        verts = np.vstack([verts, [[0, 0, -height / 2.0], [0, 0, height / 2.0]]])
        top = bot + 1
        last = (n_along - 1) * n_around
        for j in range(n_around):
            jn = (j + 1) % n_around
            tris.append([bot, jn, j])
            tris.append([top, last + j, last + jn])
    return verts, np.array(tris, dtype=np.int64)


def box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)):
    """Axis-aligned box with 8 vertices and 12 triangles."""
    sx, sy, sz = size
    cx, cy, cz = center
    corners = np.array(
        [
            [x, y, z]
            for x in (-sx / 2, sx / 2)
            for y in (-sy / 2, sy / 2)
            for z in (-sz / 2, sz / 2)
        ]
    ) + np.array([cx, cy, cz])
    # quads per face, outward winding
    quads = [
        (0, 1, 3, 2),  # -x
        (4, 6, 7, 5),  # +x
        (0, 4, 5, 1),  # -y
        (2, 3, 7, 6),  # +y
        (0, 2, 6, 4),  # -z
        (1, 5, 7, 3),  # +z
    ]
    tris = []
    for a, b, c, d in quads:
        tris.append([a, b, c])
        tris.append([a, c, d])
    return corners, np.array(tris, dtype=np.int64)
