import numpy as np
import pytest

from mvlandmarks import shapes
from mvlandmarks.mesh import MeshFormatError, TriangleMesh, grow_neighborhood, load_mesh, save_mesh

from conftest import oracle_grow_bfs


def test_mesh_invariant_checks():
    v = np.zeros((3, 3))
    with pytest.raises(ValueError):
        TriangleMesh(v, [[0, 1, 3]])  # index out of range
    with pytest.raises(ValueError):
        TriangleMesh(v, [[0, 1, 1]])  # repeated index
    with pytest.raises(ValueError):
        TriangleMesh(v, [[0, 1, 2]], vertex_colors=np.zeros((2, 3)))


def test_load_obj_handwritten(tmp_path):
    path = tmp_path / "quad.obj"
    path.write_text(
        "# two triangles\n"
        "v 0 0 0\n"
        "v 1 0 0\n"
        "v 1 1 0\n"
        "v 0 1 0\n"
        "f 1 2 3\n"
        "f 1 3 4\n"
    )
    mesh = load_mesh(path)
    assert mesh.vertex_count == 4
    assert mesh.triangle_count == 2
    assert np.allclose(mesh.vertices[2], [1, 1, 0])
    assert mesh.triangles.tolist() == [[0, 1, 2], [0, 2, 3]]


def test_load_ply_ascii_colors(tmp_path):
    path = tmp_path / "tri.ply"
    path.write_text(
        "ply\n"
        "format ascii 1.0\n"
        "element vertex 3\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "element face 1\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
        "0 0 0 255 0 0\n"
        "1 0 0 255 0 0\n"
        "0 1 0 255 0 0\n"
        "3 0 1 2\n"
    )
    mesh = load_mesh(path)
    assert mesh.vertex_count == 3
    assert np.allclose(mesh.vertex_colors, [[1, 0, 0]] * 3)


def test_icosphere_counts_from_subdivision_formula():
    # generator oracle: V = 10 * 4^k + 2, T = 20 * 4^k
    for k in range(4):
        v, t = shapes.icosphere(k, 1.0)
        assert len(v) == 10 * 4 ** k + 2
        assert len(t) == 20 * 4 ** k


def test_load_icosphere_roundtrip_obj(tmp_path, sphere100):
    # 642-vertex icosphere -> 1280 triangles survives save/load
    path = tmp_path / "sphere.obj"
    save_mesh(sphere100, path)
    again = load_mesh(path)
    assert again.vertex_count == 642
    assert again.triangle_count == 1280
    assert np.allclose(again.vertices, sphere100.vertices)
    assert np.array_equal(again.triangles, sphere100.triangles)


@pytest.mark.parametrize("binary", [True, False])
def test_ply_roundtrip_with_colors(tmp_path, binary):
    v, t = shapes.box()
    rng = np.random.default_rng(0)
    colors = rng.integers(0, 256, size=(len(v), 3)) / 255.0
    mesh = TriangleMesh(v, t, vertex_colors=colors)
    path = tmp_path / "box.ply"
    save_mesh(mesh, path, binary=binary)
    again = load_mesh(path)
    assert np.allclose(again.vertices, mesh.vertices)
    assert np.array_equal(again.triangles, mesh.triangles)
    assert np.allclose(again.vertex_colors, colors, atol=0.5 / 255.0)


def test_load_errors(tmp_path):
    with pytest.raises(MeshFormatError):
        load_mesh(tmp_path / "missing.obj")
    bad = tmp_path / "bad.obj"
    bad.write_text("v 0 0\n")
    with pytest.raises(MeshFormatError):
        load_mesh(bad)
    empty = tmp_path / "empty.obj"
    empty.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\n")
    with pytest.raises(MeshFormatError):
        load_mesh(empty)  # zero triangles
    weird = tmp_path / "weird.xyz"
    weird.write_text("nope")
    with pytest.raises(MeshFormatError):
        load_mesh(weird)


def test_grow_tiny_radius_returns_seed_only(sphere100):
    out = grow_neighborhood(sphere100, 7, 1e-6)
    assert out.tolist() == [7]


def test_grow_whole_mesh_on_large_radius(sphere100):
    out = grow_neighborhood(sphere100, 0, 1e6)
    assert len(out) == sphere100.vertex_count


def test_grow_matches_bfs_oracle_on_grid():
    v, t = shapes.plane_grid(12, 12, 1.0)
    mesh = TriangleMesh(v, t)
    for seed in (0, 5, 77, 143):
        got = set(grow_neighborhood(mesh, seed, 2.5).tolist())
        assert got == oracle_grow_bfs(mesh, seed, 2.5)


def test_grow_matches_bfs_oracle_random_mesh(sphere100):
    rng = np.random.default_rng(3)
    noisy = TriangleMesh(sphere100.vertices + rng.normal(0, 5, sphere100.vertices.shape),
                         sphere100.triangles)
    for seed in rng.integers(0, noisy.vertex_count, size=6):
        for radius in (8.0, 20.0):
            got = set(grow_neighborhood(noisy, int(seed), radius).tolist())
            assert got == oracle_grow_bfs(noisy, int(seed), radius)


def test_grow_monotone_in_radius(sphere100):
    rng = np.random.default_rng(11)
    for seed in rng.integers(0, sphere100.vertex_count, size=5):
        prev = set()
        for radius in (5.0, 12.0, 25.0, 60.0):
            cur = set(grow_neighborhood(sphere100, int(seed), radius).tolist())
            assert prev <= cur
            prev = cur


def test_grow_isolated_vertex():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 5, 5.0]])
    mesh = TriangleMesh(v, [[0, 1, 2]])
    assert grow_neighborhood(mesh, 3, 10.0).tolist() == [3]


def test_grow_connectivity_gate():
    # two parallel strips 0.5 apart but not edge-connected: growth must not jump
    v1, t1 = shapes.plane_grid(5, 5, 1.0, z=0.0)
    v2, t2 = shapes.plane_grid(5, 5, 1.0, z=0.5)
    verts = np.vstack([v1, v2])
    tris = np.vstack([t1, t2 + len(v1)])
    mesh = TriangleMesh(verts, tris)
    out = grow_neighborhood(mesh, 0, 3.0)
    assert all(i < len(v1) for i in out)
