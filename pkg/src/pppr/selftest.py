"""Invariant and oracle checks, runnable from the command line."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import fem
from .estimator import ErrorIndicator, dorfler_mark, estimate
from .mesh import SurfaceMesh, chevron_torus_mesh, projected_icosphere
from .recovery import (
    build_frame,
    build_frames,
    fit_quadratic_value_preserving,
    recover_ppr,
    recover_pppr,
    select_patch,
)
from .surfaces import (
    get_problem,
    gradient_via_chart,
    stereographic_chart,
    tangential_divergence_fd,
    tangential_gradient,
    tangential_laplacian,
    TORUS_R,
    TORUS_r,
    torus_point,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}: measured {self.measured:.3e}, tolerance {self.tolerance:.1e}{extra}"


def _check(name, measured, tol, detail=""):
    measured = float(measured)
    return CheckResult(name, bool(measured <= tol), measured, tol, detail)


# ---------------------------------------------------------------------------
# fixtures


def flat_grid(n=9, jitter=0.2, seed=0, angle=0.3):
    """Jittered flat triangulated square in a tilted plane (open mesh).

    Returns ``(mesh, interior, rot)``: ``interior`` are vertices at least three
    rings from the boundary and the plane is spanned by the first two columns
    of ``rot``.
    """
    rng = np.random.default_rng(seed)
    s = np.linspace(0.0, 1.0, n)
    X, Y = np.meshgrid(s, s, indexing="ij")
    h = 1.0 / (n - 1)
    inner = (X > 0) & (X < 1) & (Y > 0) & (Y < 1)
    X = X + inner * rng.uniform(-jitter, jitter, X.shape) * h
    Y = Y + inner * rng.uniform(-jitter, jitter, Y.shape) * h
    pts = np.stack([X.ravel(), Y.ravel(), np.zeros(X.size)], axis=1)
    c, s_ = np.cos(angle), np.sin(angle)
    rot = np.array([[1, 0, 0], [0, c, -s_], [0, s_, c]]) @ np.array([[c, 0, s_], [0, 1, 0], [-s_, 0, c]])
    pts = pts @ rot.T
    idx = np.arange(n * n).reshape(n, n)
    a, b, cc, d = idx[:-1, :-1], idx[1:, :-1], idx[1:, 1:], idx[:-1, 1:]
    tris = np.concatenate([np.stack([a, b, cc], -1).reshape(-1, 3), np.stack([a, cc, d], -1).reshape(-1, 3)])
    I, J = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    interior = np.flatnonzero(((I >= 3) & (I <= n - 4) & (J >= 3) & (J <= n - 4)).ravel())
    return SurfaceMesh(pts, tris, validate=False), interior, rot


def check_mesh_on_surface(mesh, surface, tol=1e-8):
    """Largest ``|phi|/|grad phi|`` over the vertices; reports the worst vertex."""
    x = mesh.vertices
    dist = np.abs(surface.phi(x)) / np.linalg.norm(surface.grad_phi(x), axis=1)
    worst = int(np.argmax(dist))
    return _check("mesh vertices on surface", dist[worst], tol, f"worst vertex {worst}")


# ---------------------------------------------------------------------------
# checks


def check_value_preservation(mesh, u):
    worst = 0.0
    frames = build_frames(mesh, "area_weighted")
    for i in range(0, mesh.n_vertices, max(1, mesh.n_vertices // 40)):
        frame = build_frame(mesh, i)
        pc = select_patch(mesh, i, frame)
        members = pc.patch.member_vertices
        fit = fit_quadratic_value_preserving(pc.zeta[1:], u[members[1:]], u[i], pc.scale)
        worst = max(worst, abs(fit(np.zeros(2))[0] - u[i]))
        assert np.allclose(frame.basis, frames[i])
    return _check("value preservation q(0) = u_h(x_i)", worst, 1e-14)


def check_planar_quadratic(seed):
    mesh, interior, rot = flat_grid(seed=seed)
    e1, e2 = rot[:, 0], rot[:, 1]
    p = mesh.vertices @ e1
    q = mesh.vertices @ e2
    u = 0.3 + 1.1 * p - 0.7 * q + 0.9 * p * p - 1.3 * p * q + 0.4 * q * q
    exact = (1.1 + 1.8 * p - 1.3 * q)[:, None] * e1 + (-0.7 - 1.3 * p + 0.8 * q)[:, None] * e2
    err = 0.0
    for G in (recover_pppr(mesh, u), recover_ppr(mesh, u)):
        err = max(err, np.max(np.linalg.norm(G[interior] - exact[interior], axis=1)))
    return _check("planar quadratic exactness", err, 1e-9)


def check_flat_pppr_equals_ppr(seed):
    mesh, interior, _ = flat_grid(seed=seed + 1)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(mesh.n_vertices)
    d = np.max(np.abs(recover_pppr(mesh, u) - recover_ppr(mesh, u)))
    return _check("flat mesh PPPR = PPR", d, 1e-12)


def check_parametrization_invariance(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    sph = get_problem("sphere_z")
    tor = get_problem("torus_product")
    for _ in range(5):
        xi = rng.uniform(-0.8, 0.8, 2)
        for pole in (1, -1):
            r, dr = stereographic_chart(pole)
            a = gradient_via_chart(sph.u, r, dr, xi)
            b = tangential_gradient(sph, r(xi))
            worst = max(worst, np.linalg.norm(a - b))
        uv = rng.uniform(0, 2 * np.pi, 2)

        def chart(w):
            return torus_point(w[0], w[1])

        def jac(w):
            u_, v_ = w
            ring = TORUS_R + TORUS_r * np.cos(v_)
            du = [-ring * np.sin(u_), ring * np.cos(u_), 0.0]
            dv = [-TORUS_r * np.sin(v_) * np.cos(u_), -TORUS_r * np.sin(v_) * np.sin(u_), TORUS_r * np.cos(v_)]
            return np.array([du, dv])

        a = gradient_via_chart(tor.u, chart, jac, uv)
        b = tangential_gradient(tor, chart(uv))
        worst = max(worst, np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b)))
    return _check("parametrization invariance of the tangential gradient", worst, 1e-8)


def check_tangential_operator_fd(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in ("torus_product", "highcurv_x1x2", "dziuk_peak"):
        prob = get_problem(name)
        base = projected_icosphere(1, prob.surface) if name != "torus_product" else chevron_torus_mesh(8, 4)
        x = base.vertices[rng.choice(base.n_vertices, 5, replace=False)]
        a = tangential_laplacian(prob, x)
        b = tangential_divergence_fd(prob, x)
        worst = max(worst, np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))
    return _check("tangential Laplacian vs finite-difference divergence", worst, 1e-6)


def check_local_matrices():
    tri = np.array([[[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]])
    K = fem.local_stiffness(tri)[0]
    M = fem.local_mass(tri)[0]
    K_ref = 0.5 * np.array([[2.0, -1, -1], [-1, 1, 0], [-1, 0, 1]])
    M_ref = np.array([[2.0, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24
    return _check("local stiffness and mass hand values", max(np.abs(K - K_ref).max(), np.abs(M - M_ref).max()), 1e-12)


def check_dorfler(seed):
    ind = ErrorIndicator(np.array([3.0, 2.0, 1.0, 1.0]), 0, 0)
    bad = 0 if list(dorfler_mark(ind, 0.3)) == [0] else 1
    rng = np.random.default_rng(seed)
    for _ in range(20):
        eta = rng.integers(0, 4, rng.integers(1, 12)).astype(float)
        if not eta.any():
            continue
        theta = rng.uniform(0.05, 0.95)
        order = sorted(range(len(eta)), key=lambda i: (-eta[i] ** 2, i))
        total, acc, ref = np.sum(eta**2), 0.0, []
        for i in order:
            ref.append(i)
            acc += eta[i] ** 2
            if acc >= theta * total:
                break
        bad += sorted(ref) != list(dorfler_mark(ErrorIndicator(eta, 0, 0), theta))
    return _check("Dörfler greedy oracle mismatches", bad, 0)


def check_galerkin_orthogonality(mesh, problem, seed):
    K = fem.assemble_stiffness(mesh)
    b = fem.assemble_load(mesh, problem)
    u = fem.solve_mean_zero(K, b, mass=fem.assemble_mass(mesh))
    r = K @ u - (b - b.mean())
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        v = rng.standard_normal(mesh.n_vertices)
        v -= v.mean()
        v /= np.linalg.norm(v)
        worst = max(worst, abs(v @ r) / np.linalg.norm(b))
    return _check("Galerkin orthogonality", worst, 1e-9), u


def check_estimator_consistency(mesh, u):
    G = recover_pppr(mesh, u)
    ind = estimate(mesh, u, G)
    g = fem.fe_gradient(mesh, u)
    # one-pass integral of |G - grad u_h|² with the 6-point rule (exact for quadratics)
    Gq = np.einsum("qa,fai->fqi", fem.QUAD_BARY, G[mesh.triangles]) - g[:, None, :]
    w = mesh.areas[:, None] * fem.QUAD_WEIGHTS
    total = np.sqrt(np.sum(w * np.sum(Gq * Gq, axis=-1)))
    return _check("estimator local/global consistency (relative)", abs(ind.eta - total) / total, 1e-12)


def check_scaling(mesh, u):
    a = recover_pppr(mesh, u)
    b = recover_pppr(mesh, 2.5 * u)
    return _check("recovery linearity under scaling", np.max(np.abs(b - 2.5 * a)) / np.max(np.abs(a)), 1e-13)


def run_selftest(seed=0, torus_mesh: Optional[SurfaceMesh] = None, out=print):
    """Run every check; returns the list of :class:`CheckResult`."""
    problem = get_problem("torus_xy")
    mesh = torus_mesh if torus_mesh is not None else chevron_torus_mesh(40, 20)
    results = [check_mesh_on_surface(mesh, problem.surface)]
    galerkin, u = check_galerkin_orthogonality(mesh, problem, seed)
    results += [
        galerkin,
        check_value_preservation(mesh, u),
        check_planar_quadratic(seed),
        check_flat_pppr_equals_ppr(seed),
        check_parametrization_invariance(seed),
        check_tangential_operator_fd(seed),
        check_local_matrices(),
        check_dorfler(seed),
        check_estimator_consistency(mesh, u),
        check_scaling(mesh, u),
    ]
    if out is not None:
        for r in results:
            out(r.line())
        n_fail = sum(not r.passed for r in results)
        out(f"{len(results) - n_fail}/{len(results)} checks passed")
    return results
