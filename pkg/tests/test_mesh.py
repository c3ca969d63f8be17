import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pppr.errors import (
    ClosureOverflowError,
    DegenerateTriangleError,
    MeshError,
    MeshParseError,
    NonManifoldEdgeError,
    OrientationError,
    UnknownFormatError,
)
from pppr.mesh import (
    SurfaceMesh,
    ball_patches,
    bisect_marked,
    build_mesh,
    chevron_torus_mesh,
    export_mesh,
    icosahedron,
    import_mesh,
    projected_icosphere,
    tetrahedron,
    uniform_refine,
    unit_icosphere,
    vertex_patch,
)
from pppr.surfaces import get_surface


def _brute_patch(mesh, i, k):
    h = mesh.vertex_h[i]
    d = np.linalg.norm(mesh.vertices - mesh.vertices[i], axis=1)
    return set(np.flatnonzero(d <= k * h))


# -- construction and validation ----------------------------------------------


def test_tetrahedron_euler():
    m = tetrahedron()
    assert (m.n_vertices, m.n_triangles) == (4, 4)
    assert m.euler_characteristic == 2


def test_icosahedron_counts():
    m = icosahedron()
    assert (m.n_vertices, m.n_edges, m.n_triangles) == (12, 30, 20)


def test_two_triangles_are_not_closed():
    with pytest.raises(NonManifoldEdgeError):
        build_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], [[0, 1, 2], [1, 3, 2]])


def test_flipped_triangle_detected():
    t = tetrahedron()
    tris = t.triangles.copy()
    tris[0] = tris[0][::-1]
    with pytest.raises(OrientationError):
        build_mesh(t.vertices, tris)


def test_degenerate_triangle_detected():
    t = tetrahedron()
    v = t.vertices.copy()
    v[3] = 0.5 * (v[0] + v[1])  # collapse a triangle onto an edge
    with pytest.raises(DegenerateTriangleError):
        build_mesh(v, t.triangles)


def test_index_out_of_range():
    with pytest.raises(MeshError):
        build_mesh(tetrahedron().vertices, [[0, 1, 7]])


def test_mesh_is_immutable():
    m = tetrahedron()
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 1.0


def test_edge_map_and_vertex_triangles():
    m = icosahedron()
    assert m.edge_map.shape == (30, 2)
    for e, (a, b) in zip(m.edges, m.edge_map):
        for t in (a, b):
            assert set(e) <= set(m.triangles[t])
    for i in range(m.n_vertices):
        assert all(i in m.triangles[t] for t in m.vertex_triangles(i))
        assert len(m.vertex_triangles(i)) == 5


def test_outward_orientation():
    m = unit_icosphere(2)
    centroids = m.corners.mean(axis=1)
    assert np.all(np.sum(m.face_normals * centroids, axis=1) > 0)


# -- generators ---------------------------------------------------------------


@pytest.mark.parametrize("nu,nv", [(20, 10), (40, 20), (8, 4)])
def test_chevron_counts(nu, nv):
    m = chevron_torus_mesh(nu, nv)
    assert m.n_vertices == nu * nv
    assert m.n_triangles == 2 * nu * nv
    assert m.euler_characteristic == 0


@pytest.mark.parametrize("nu,nv", [(3, 4), (4, 3), (2, 4), (20, 5)])
def test_chevron_bad_parameters(nu, nv):
    with pytest.raises(ValueError):
        chevron_torus_mesh(nu, nv)


def test_chevron_diagonals_alternate_per_column():
    m = chevron_torus_mesh(8, 4)
    # the diagonal of the first cell in column 0 and column 1 point differently
    e = {tuple(sorted(x)) for x in m.edges.tolist()}

    def idx(a, b):
        return (a % 8) * 4 + (b % 4)

    assert tuple(sorted((idx(0, 0), idx(1, 1)))) in e
    assert tuple(sorted((idx(1, 1), idx(2, 0)))) in e
    assert tuple(sorted((idx(1, 0), idx(2, 1)))) not in e


def test_icosphere_counts():
    for level, (v, f) in enumerate([(12, 20), (42, 80), (162, 320)]):
        m = projected_icosphere(level, get_surface("sphere"))
        assert (m.n_vertices, m.n_triangles) == (v, f)
        assert np.allclose(np.linalg.norm(m.vertices, axis=1), 1.0, atol=1e-12)


def test_icosphere_on_dziuk():
    surf = get_surface("dziuk")
    m = projected_icosphere(0, surf)
    assert m.n_vertices == 12
    assert np.max(np.abs(surf.phi(m.vertices))) <= 1e-12


def test_icosphere_on_highcurv_valid():
    surf = get_surface("highcurv")
    m = projected_icosphere(3, surf)
    assert m.euler_characteristic == 2
    assert np.max(np.abs(surf.phi(m.vertices))) <= 1e-12


# -- refinement ---------------------------------------------------------------


def test_uniform_refine_counts():
    m = icosahedron()
    r = uniform_refine(m)
    assert r.n_triangles == 4 * m.n_triangles
    assert r.n_vertices == m.n_vertices + m.n_edges
    assert r.generation == m.generation + 1


def test_uniform_refine_without_surface_uses_chord_midpoints():
    m = icosahedron()
    r = uniform_refine(m)
    mids = 0.5 * (m.vertices[m.edges[:, 0]] + m.vertices[m.edges[:, 1]])
    new = r.vertices[m.n_vertices:]
    d = np.linalg.norm(new[:, None, :] - mids[None, :, :], axis=2).min(axis=1)
    assert np.max(d) < 1e-15
    assert np.array_equal(r.vertices[: m.n_vertices], m.vertices)


def test_uniform_refine_torus_matches_chevron():
    surf = get_surface("torus")
    r = uniform_refine(chevron_torus_mesh(20, 10), surf)
    assert r.n_vertices == 800


def test_projected_midpoints_within_h_squared():
    surf = get_surface("highcurv")
    m = projected_icosphere(2, surf)
    res, hs = [], []
    for _ in range(3):
        r = uniform_refine(m, surf)
        res.append(np.max(np.abs(surf.phi(r.vertices[m.n_vertices:]))))
        hs.append(m.h_max)
        m = r
    slopes = np.diff(np.log(res)) / np.diff(np.log(hs))
    assert np.all(slopes >= 1.9)


def test_torus_area_converges_second_order():
    exact = 16 * np.pi**2
    errs, hs = [], []
    for l in range(4):
        m = chevron_torus_mesh(20 * 2**l, 10 * 2**l)
        errs.append(abs(m.total_area - exact))
        hs.append(m.h_max)
    slopes = np.diff(np.log(errs)) / np.diff(np.log(hs))
    assert np.allclose(slopes[-2:], 2.0, atol=0.1)


def test_bisect_empty_is_identity():
    m = icosahedron()
    assert bisect_marked(m, []) is m


def test_bisect_single_triangle_conforming():
    surf = get_surface("sphere")
    m = projected_icosphere(1, surf)
    r = bisect_marked(m, [0], surf)
    assert r.n_triangles > m.n_triangles
    assert r.euler_characteristic == 2
    assert np.all(r.areas > 0)
    assert np.max(np.abs(surf.phi(r.vertices))) < 1e-12


def test_bisect_all_twice_is_one_uniform_refinement_in_order():
    m = projected_icosphere(1, get_surface("sphere"))
    F = m.n_triangles
    r = bisect_marked(m, np.arange(F))
    r = bisect_marked(r, np.arange(r.n_triangles))
    assert 4 * F <= r.n_triangles <= 6 * F


def test_bisect_deterministic():
    m = chevron_torus_mesh(8, 4)
    a = bisect_marked(m, [3, 7, 11])
    b = bisect_marked(m, [11, 3, 7])
    assert np.array_equal(a.vertices, b.vertices) and np.array_equal(a.triangles, b.triangles)


def test_bisect_closure_budget_enforced(monkeypatch):
    import pppr.mesh.refine as refine

    monkeypatch.setattr(refine, "CLOSURE_BUDGET_FACTOR", 0)
    m = icosahedron()
    with pytest.raises(ClosureOverflowError):
        refine.bisect_marked(m, np.arange(m.n_triangles))


@given(st.lists(st.integers(0, 79), max_size=30), st.integers(1, 3))
@settings(max_examples=25, deadline=None)
def test_bisect_random_marks_stay_valid(marks, rounds):
    surf = get_surface("sphere")
    m = projected_icosphere(1, surf)
    rng = np.random.default_rng(len(marks))
    for _ in range(rounds):
        sel = [t % m.n_triangles for t in marks] or [int(rng.integers(m.n_triangles))]
        m = bisect_marked(m, sel, surf)
    m.validate()
    assert m.euler_characteristic == 2


# -- patches ------------------------------------------------------------------


@pytest.mark.parametrize("k", [1, 2, 3])
def test_vertex_patch_matches_brute_force(k):
    m = chevron_torus_mesh(20, 10)
    for i in range(0, m.n_vertices, 17):
        p = vertex_patch(m, i, k)
        assert p.member_vertices[0] == i
        assert set(p.member_vertices.tolist()) == _brute_patch(m, i, k)
        assert len(p.member_vertices) >= 6


def test_ball_patches_matches_vertex_patch():
    m = projected_icosphere(3, get_surface("dziuk"))
    P = ball_patches(m, 2 * m.vertex_h)
    for i in range(0, m.n_vertices, 11):
        row = set(P.indices[P.indptr[i]: P.indptr[i + 1]].tolist())
        assert row == set(vertex_patch(m, i, 2).member_vertices.tolist())


def test_vertex_patch_large_k_covers_mesh():
    m = icosahedron()
    assert len(vertex_patch(m, 0, 10).member_vertices) == 12


def test_vertex_patch_rejects_k_zero():
    with pytest.raises(ValueError):
        vertex_patch(icosahedron(), 0, 0)


def test_vertex_h_is_longest_incident_edge():
    m = projected_icosphere(2, get_surface("highcurv"))
    for i in range(0, m.n_vertices, 13):
        nb = m.neighbors(i)
        assert m.vertex_h[i] == pytest.approx(np.max(np.linalg.norm(m.vertices[nb] - m.vertices[i], axis=1)))


# -- I/O ----------------------------------------------------------------------


@pytest.mark.parametrize("fmt", ["off", "obj"])
def test_roundtrip(tmp_path, fmt):
    m = projected_icosphere(2, get_surface("dziuk"))
    path = tmp_path / f"m.{fmt}"
    export_mesh(m, path)
    r = import_mesh(path)
    assert np.array_equal(r.triangles, m.triangles)
    assert np.allclose(r.vertices, m.vertices, rtol=1e-15, atol=0)


def test_vtk_fields(tmp_path):
    m = tetrahedron()
    path = tmp_path / "m.vtk"
    export_mesh(m, path, point_data={"u_h": np.arange(4.0), "recovered_gradient": np.ones((4, 3))},
                cell_data={"eta": np.ones(4)})
    text = path.read_text()
    assert "DATASET POLYDATA" in text
    assert "VECTORS recovered_gradient double" in text
    assert "SCALARS u_h double 1" in text
    assert "CELL_DATA 4" in text


def test_off_quad_face_reports_arity(tmp_path):
    path = tmp_path / "q.off"
    path.write_text("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")
    with pytest.raises(MeshParseError, match="4 vertices") as exc:
        import_mesh(path)
    assert exc.value.line == 7


def test_unknown_format(tmp_path):
    with pytest.raises(UnknownFormatError):
        export_mesh(tetrahedron(), tmp_path / "m.stl")
    with pytest.raises(UnknownFormatError):
        import_mesh(tmp_path / "m.vtk")


def test_surface_mesh_repr():
    assert "vertices=4" in repr(SurfaceMesh(tetrahedron().vertices, tetrahedron().triangles))
