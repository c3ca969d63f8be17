import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pppr import fem
from pppr.errors import DegenerateNormalError, FieldMismatchError, PatchGrowthError, RankDeficiencyError
from pppr.mesh import SurfaceMesh, chevron_torus_mesh, icosahedron, projected_icosphere
from pppr.recovery import (
    MIN_PATCH_SIZE,
    RECOVERY_METHODS,
    _design,
    build_frame,
    build_frames,
    fit_quadratic_value_preserving,
    recover,
    recover_averaging,
    recover_ppr,
    recover_pppr,
    select_patch,
    vertex_normals,
)
from pppr.selftest import flat_grid
from pppr.surfaces import get_problem, get_surface, unit_normal


@pytest.fixture(scope="module")
def torus():
    return chevron_torus_mesh(40, 20)


@pytest.fixture(scope="module")
def torus_u(torus):
    return fem.solve(torus, get_problem("torus_xy"))


# -- frames -------------------------------------------------------------------


@pytest.mark.parametrize("mode", ["simple_average", "area_weighted", "exact"])
def test_frames_orthonormal_right_handed(torus, mode):
    B = build_frames(torus, mode, surface=get_surface("torus"))
    eye = np.einsum("nij,nkj->nik", B, B)
    assert np.max(np.abs(eye - np.eye(3))) <= 1e-13
    assert np.allclose(np.linalg.det(B), 1.0, atol=1e-13)


def test_flat_plane_frame_normal():
    mesh, interior, rot = flat_grid()
    for i in interior[:5]:
        f = build_frame(mesh, i)
        assert abs(abs(f.normal @ rot[:, 2]) - 1.0) <= 1e-13
        assert f.source == "averaged_normal"


def test_exact_frame_uses_surface_normal(torus):
    s = get_surface("torus")
    f = build_frame(torus, 5, mode="exact", surface=s)
    assert f.source == "exact_normal"
    assert np.allclose(f.normal, unit_normal(s, torus.vertices[5]), atol=1e-13)


def test_exact_frame_needs_surface(torus):
    with pytest.raises(ValueError):
        build_frames(torus, "exact")
    with pytest.raises(ValueError):
        build_frames(torus, "bogus")


@pytest.mark.parametrize("mode", ["simple_average", "area_weighted"])
def test_averaged_normals_converge_on_torus(mode):
    s = get_surface("torus")
    errs, hs = [], []
    for l in range(4):
        m = chevron_torus_mesh(20 * 2**l, 10 * 2**l)
        errs.append(np.max(np.linalg.norm(vertex_normals(m, mode) - unit_normal(s, m.vertices), axis=1)))
        hs.append(m.h_max)
    slopes = np.diff(np.log(errs)) / np.diff(np.log(hs))
    assert np.all(slopes >= 0.9)


def test_degenerate_normal_reports_vertex():
    # the same triangle twice with opposite orientation: averaged normals cancel
    v = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    m = SurfaceMesh(v, [[0, 1, 2], [0, 2, 1]], validate=False)
    with pytest.raises(DegenerateNormalError) as exc:
        vertex_normals(m, "area_weighted")
    assert exc.value.vertex == 0


# -- patches and fits ---------------------------------------------------------


def test_select_patch_admissible(torus):
    for i in range(0, torus.n_vertices, 37):
        pc = select_patch(torus, i, build_frame(torus, i))
        members = pc.patch.member_vertices
        assert members[0] == i and len(members) >= MIN_PATCH_SIZE
        assert np.allclose(pc.zeta[0], 0.0)
        A = _design(pc.zeta[1:] / pc.scale)
        assert np.linalg.matrix_rank(A) == 5
        assert pc.scale == pytest.approx(pc.patch.ring_parameter * torus.vertex_h[i])


def test_regular_grid_ball_is_three_by_three_block():
    # h_i is the diagonal, so the k = 1 ball holds all 8 surrounding grid points
    mesh, interior, _ = flat_grid(jitter=0.0)
    pc = select_patch(mesh, interior[0], build_frame(mesh, interior[0]))
    assert pc.patch.ring_parameter == 1
    assert len(pc.patch.member_vertices) == 9


def test_patch_grows_when_ball_too_small():
    # icosahedron: the k = 1 ball is the centre plus 5 neighbours, below the minimum of 7
    m = icosahedron()
    pc = select_patch(m, 0, build_frame(m, 0))
    assert pc.patch.ring_parameter == 2
    assert len(pc.patch.member_vertices) >= MIN_PATCH_SIZE


def test_collinear_patch_fails_to_grow():
    # every vertex on one line: rank stays below 5 for every k
    x = np.linspace(0, 1, 12)
    v = np.stack([x, 0 * x, 0 * x], axis=1)
    v = np.vstack([v, [[0.5, 1e-3, 0.0]]])
    tris = [[i, i + 1, 12] for i in range(11)]
    m = SurfaceMesh(v, tris, validate=False)
    frame = build_frame(m, 5)
    with pytest.raises(PatchGrowthError) as exc:
        select_patch(m, 5, frame)
    assert exc.value.vertex == 5


def test_fit_reproduces_quadratic():
    rng = np.random.default_rng(0)
    z = rng.uniform(-1, 1, (12, 2))
    c = np.array([0.7, -1.1, 0.4, 2.0, -0.3])
    q = lambda p: 1.5 + c[0] * p[:, 0] + c[1] * p[:, 1] + c[2] * p[:, 0] ** 2 + c[3] * p[:, 0] * p[:, 1] + c[4] * p[:, 1] ** 2
    fit = fit_quadratic_value_preserving(z, q(z), 1.5, 1.0)
    assert np.allclose(fit.physical_coefficients, c, atol=1e-10)
    assert fit.residual_norm <= 1e-10
    probe = rng.uniform(-1, 1, (5, 2))
    assert np.allclose(fit(probe), q(probe), atol=1e-10)


def test_fit_scaled_coordinates_give_physical_gradient():
    rng = np.random.default_rng(1)
    z = 0.01 * rng.uniform(-1, 1, (10, 2))
    fit = fit_quadratic_value_preserving(z, 3.0 * z[:, 0] - 2.0 * z[:, 1], 0.0, 0.01)
    assert np.allclose(fit.gradient, [3.0, -2.0], atol=1e-10)


def test_fit_constant_data_is_zero_polynomial():
    rng = np.random.default_rng(2)
    z = rng.uniform(-1, 1, (9, 2))
    fit = fit_quadratic_value_preserving(z, np.full(9, 4.2), 4.2, 1.0)
    assert np.max(np.abs(fit.coefficients)) <= 1e-14


def test_fit_matches_normal_equations():
    rng = np.random.default_rng(3)
    z = rng.uniform(-1, 1, (15, 2))
    d = rng.standard_normal(15)
    fit = fit_quadratic_value_preserving(z, d, 0.25, 1.0)
    A = np.column_stack([z[:, 0], z[:, 1], z[:, 0] ** 2, z[:, 0] * z[:, 1], z[:, 1] ** 2])
    ref = np.linalg.solve(A.T @ A, A.T @ (d - 0.25))
    assert np.allclose(fit.coefficients, ref, atol=1e-12)
    assert fit(np.zeros(2))[0] == 0.25


def test_fit_rank_deficient():
    z = np.stack([np.linspace(-1, 1, 8), np.zeros(8)], axis=1)
    with pytest.raises(RankDeficiencyError):
        fit_quadratic_value_preserving(z, z[:, 0], 0.0, 1.0)
    with pytest.raises(RankDeficiencyError):
        fit_quadratic_value_preserving(z[:4], z[:4, 0], 0.0, 1.0)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_fit_value_preserving_property(seed):
    rng = np.random.default_rng(seed)
    z = rng.uniform(-1, 1, (int(rng.integers(6, 20)), 2))
    c0 = float(rng.standard_normal())
    fit = fit_quadratic_value_preserving(z, rng.standard_normal(len(z)), c0, 1.0)
    assert fit(np.zeros(2))[0] == c0


# -- recovery operators -------------------------------------------------------


def test_pppr_vectors_tangent_to_fitted_surface(torus, torus_u):
    G = recover_pppr(torus, torus_u)
    for i in range(0, torus.n_vertices, 29):
        frame = build_frame(torus, i)
        pc = select_patch(torus, i, frame)
        surf = fit_quadratic_value_preserving(pc.zeta[1:], pc.height[1:], 0.0, pc.scale)
        s1, s2 = surf.gradient
        n_fit = frame.basis.T @ np.array([-s1, -s2, 1.0])
        assert abs(G[i] @ n_fit) <= 1e-10 * np.linalg.norm(G[i]) * np.linalg.norm(n_fit)


def test_ppr_vectors_tangent_to_exact_normal(torus, torus_u):
    s = get_surface("torus")
    G = recover_ppr(torus, torus_u, surface=s)
    n = unit_normal(s, torus.vertices)
    assert np.max(np.abs(np.sum(G * n, axis=1))) <= 1e-12 * np.max(np.abs(G))


@pytest.mark.parametrize("method", RECOVERY_METHODS)
def test_recovery_bounded(torus, method):
    rng = np.random.default_rng(4)
    for _ in range(3):
        u = rng.standard_normal(torus.n_vertices)
        G = recover(method, torus, u, surface=get_surface("torus"))
        g = fem.fe_gradient(torus, u)
        assert np.max(np.linalg.norm(G, axis=1)) <= 10 * np.max(np.linalg.norm(g, axis=1))


@pytest.mark.parametrize("method", RECOVERY_METHODS)
def test_recovery_linear(torus, method):
    rng = np.random.default_rng(5)
    u, v = rng.standard_normal((2, torus.n_vertices))
    s = get_surface("torus")
    a, b = recover(method, torus, u, surface=s), recover(method, torus, v, surface=s)
    ab = recover(method, torus, 2.5 * u - v, surface=s)
    assert np.max(np.abs(ab - (2.5 * a - b))) <= 1e-12 * np.max(np.abs(ab))


@pytest.mark.parametrize("method", RECOVERY_METHODS)
def test_recovery_kills_constants(torus, method):
    G = recover(method, torus, np.full(torus.n_vertices, 3.0), surface=get_surface("torus"))
    assert np.max(np.abs(G)) <= 1e-12


def test_flat_pppr_equals_ppr():
    mesh, _, _ = flat_grid(seed=7)
    u = np.random.default_rng(7).standard_normal(mesh.n_vertices)
    assert np.max(np.abs(recover_pppr(mesh, u) - recover_ppr(mesh, u))) <= 1e-12


def test_planar_quadratic_recovered_exactly():
    mesh, interior, rot = flat_grid(seed=3)
    p, q = mesh.vertices @ rot[:, 0], mesh.vertices @ rot[:, 1]
    u = p * p - 2 * p * q + 0.5 * q + 1
    exact = (2 * p - 2 * q)[:, None] * rot[:, 0] + (-2 * p + 0.5)[:, None] * rot[:, 1]
    for G in (recover_pppr(mesh, u), recover_ppr(mesh, u), recover_ppr(mesh, u, value_preserving=False)):
        assert np.max(np.abs(G[interior] - exact[interior])) <= 1e-9


def test_plain_fit_differs_from_value_preserving(torus, torus_u):
    a = recover_ppr(torus, torus_u)
    b = recover_ppr(torus, torus_u, value_preserving=False)
    assert a.shape == b.shape
    assert np.max(np.abs(a - b)) > 1e-8


def test_averaging_linear_on_flat_mesh():
    mesh, interior, rot = flat_grid(seed=4)
    u = mesh.vertices @ (2 * rot[:, 0] - rot[:, 1])
    for w in ("simple", "area"):
        assert np.allclose(recover_averaging(mesh, u, w), 2 * rot[:, 0] - rot[:, 1], atol=1e-12)


def test_pppr_converges_on_sphere():
    p = get_problem("sphere_z")
    errs, dofs = [], []
    for level in (2, 3, 4):
        m = projected_icosphere(level, p.surface)
        G = recover_pppr(m, fem.interpolate(m, p))
        ref = fem.gradient_reference(m, p)
        errs.append(fem.l2_error_nodal(m, ref, G))
        dofs.append(m.dof)
    orders = np.log(np.array(errs[:-1]) / errs[1:]) / np.log(np.array(dofs[1:]) / dofs[:-1])
    assert orders[-1] >= 0.9


def test_registry_errors(torus, torus_u):
    with pytest.raises(ValueError):
        recover("nope", torus, torus_u)
    with pytest.raises(ValueError):
        recover("ppr-exact", torus, torus_u)
    with pytest.raises(ValueError):
        recover_pppr(torus, torus_u, normal_mode="exact")
    with pytest.raises(ValueError):
        recover_averaging(torus, torus_u, "median")
    with pytest.raises(FieldMismatchError):
        recover_pppr(torus, torus_u[:-1])


def test_thread_count_does_not_change_result(torus, torus_u, monkeypatch):
    monkeypatch.setenv("PPPR_THREADS", "1")
    a = recover_pppr(torus, torus_u)
    monkeypatch.setenv("PPPR_THREADS", "3")
    b = recover_pppr(torus, torus_u)
    monkeypatch.setenv("PPPR_THREADS", "not-a-number")
    c = recover_pppr(torus, torus_u)
    assert np.array_equal(a, b) and np.array_equal(a, c)
