"""Linear finite elements for ``-Δ_g u + c u = f`` on triangulated surfaces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse

from .errors import DegenerateTriangleError, FieldMismatchError, SolverConvergenceError
from .surfaces import project_closest_point, tangential_gradient

# Symmetric 6-point rule, exact for degree 4 (barycentric coordinates, weights sum to 1).
_A1, _B1, _W1 = 0.445948490915965, 0.108103018168070, 0.223381589678011
_A2, _B2, _W2 = 0.091576213509771, 0.816847572980459, 0.109951743655322
QUAD_BARY = np.array(
    [
        [_B1, _A1, _A1], [_A1, _B1, _A1], [_A1, _A1, _B1],
        [_B2, _A2, _A2], [_A2, _B2, _A2], [_A2, _A2, _B2],
    ]
)
QUAD_WEIGHTS = np.array([_W1] * 3 + [_W2] * 3)


def _check_triangles(mesh):
    tiny = 1e-14 * mesh.bounding_box_diagonal**2
    if np.any(mesh.areas < tiny):
        raise DegenerateTriangleError(f"triangle {int(np.argmin(mesh.areas))} is degenerate")


def _check_nodal(mesh, u, what="nodal field"):
    u = np.asarray(u, dtype=float)
    if u.shape[0] != mesh.n_vertices:
        raise FieldMismatchError(f"{what} has {u.shape[0]} entries but the mesh has {mesh.n_vertices} vertices")
    return u


def hat_gradients(corners):
    """Surface gradients of the three hat functions per triangle, shape ``(F, 3, 3)``."""
    corners = np.asarray(corners, dtype=float)
    e = np.stack(
        [corners[:, 2] - corners[:, 1], corners[:, 0] - corners[:, 2], corners[:, 1] - corners[:, 0]], axis=1
    )
    cross = np.cross(e[:, 2], -e[:, 1])
    twice_area = np.linalg.norm(cross, axis=1)
    n = cross / twice_area[:, None]
    return np.cross(n[:, None, :], e) / twice_area[:, None, None]


def local_stiffness(corners):
    """Element stiffness ``area * grad(phi_a) . grad(phi_b)``, shape ``(F, 3, 3)``."""
    corners = np.asarray(corners, dtype=float).reshape(-1, 3, 3)
    g = hat_gradients(corners)
    area = 0.5 * np.linalg.norm(np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]), axis=1)
    return area[:, None, None] * np.einsum("fai,fbi->fab", g, g)


def local_mass(corners):
    corners = np.asarray(corners, dtype=float).reshape(-1, 3, 3)
    area = 0.5 * np.linalg.norm(np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]), axis=1)
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return area[:, None, None] * base


def _scatter(mesh, local):
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    return sparse.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def assemble_stiffness(mesh):
    _check_triangles(mesh)
    return _scatter(mesh, local_stiffness(mesh.corners))


def assemble_mass(mesh):
    _check_triangles(mesh)
    return _scatter(mesh, local_mass(mesh.corners))


def quadrature_points(mesh):
    """Physical quadrature points ``(F, 6, 3)`` and weights ``(F, 6)`` (area included)."""
    pts = np.einsum("qa,fai->fqi", QUAD_BARY, mesh.corners)
    w = mesh.areas[:, None] * QUAD_WEIGHTS[None, :]
    return pts, w


def assemble_load(mesh, problem):
    """``b_a = sum_T int_T f(P x) phi_a`` with ``P`` the closest-point projection."""
    pts, w = quadrature_points(mesh)
    fq = problem.f(project_closest_point(problem.surface, pts))
    local = np.einsum("fq,qa->fa", w * fq, QUAD_BARY)
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)


# ---------------------------------------------------------------------------
# solvers


def _pcg(A, b, tol, maxiter, deflate):
    n = len(b)
    diag = A.diagonal()
    inv_diag = np.where(diag != 0, 1.0 / np.where(diag != 0, diag, 1.0), 1.0)

    def project(v):
        return v - v.mean() if deflate else v

    b = project(b)
    bnorm = np.linalg.norm(b)
    x = np.zeros(n)
    if bnorm == 0.0:
        return x, 0
    r = b.copy()
    z = project(inv_diag * r)
    p = z.copy()
    rz = r @ z
    for it in range(1, maxiter + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        if deflate:
            x = project(x)
            r = project(r)
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return x, it
        z = project(inv_diag * r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    true_res = np.linalg.norm(project(b - A @ x)) / bnorm
    if true_res <= tol:
        return x, maxiter
    raise SolverConvergenceError(
        f"CG did not converge in {maxiter} iterations (relative residual {true_res:.3e})",
        residual=true_res,
        iterations=maxiter,
    )


def solve_mean_zero(K, b, mass=None, tol=1e-10, maxiter=None):
    """Solve the singular system ``K u = b`` on the complement of the constants.

    Jacobi-preconditioned CG with ``b`` and every iterate projected orthogonal
    to the constant vector; the result is shifted to have zero mean with
    respect to ``mass`` (Euclidean mean if omitted).
    """
    b = np.asarray(b, dtype=float)
    maxiter = maxiter or 10 * len(b)
    u, _ = _pcg(K, b, tol, maxiter, deflate=True)
    if mass is not None:
        w = mass @ np.ones(len(u))
        u = u - (w @ u) / w.sum()
    else:
        u = u - u.mean()
    return u


def solve_spd(A, b, tol=1e-10, maxiter=None):
    """Jacobi-preconditioned CG for a symmetric positive definite ``A``."""
    b = np.asarray(b, dtype=float)
    maxiter = maxiter or 10 * len(b)
    u, _ = _pcg(A, b, tol, maxiter, deflate=False)
    return u


def solve(mesh, problem):
    """Assemble and solve the discrete problem on ``mesh``."""
    K = assemble_stiffness(mesh)
    M = assemble_mass(mesh)
    b = assemble_load(mesh, problem)
    c = problem.zeroth_order_coefficient
    if c:
        return solve_spd(K + c * M, b)
    return solve_mean_zero(K, b, mass=M)


# ---------------------------------------------------------------------------
# fields and norms


def interpolate(mesh, problem):
    """Nodal interpolant ``u(P x_i)``."""
    return problem.u(project_closest_point(problem.surface, mesh.vertices))


def fe_gradient(mesh, u):
    """Piecewise-constant surface gradient of a P1 field, shape ``(F, 3)``."""
    u = _check_nodal(mesh, u)
    g = hat_gradients(mesh.corners)
    return np.einsum("fa,fai->fi", u[mesh.triangles], g)


@dataclass
class GradientReference:
    """Exact tangential gradient sampled where the error norms need it."""

    quad_weights: np.ndarray  # (F, 6)
    at_quadrature: np.ndarray  # (F, 6, 3)
    at_vertices: np.ndarray  # (V, 3)


def gradient_reference(mesh, problem, vertices=True):
    pts, w = quadrature_points(mesh)
    surf = problem.surface
    gq = tangential_gradient(problem, project_closest_point(surf, pts))
    gv = tangential_gradient(problem, project_closest_point(surf, mesh.vertices)) if vertices else None
    return GradientReference(w, gq, gv)


def l2_error_piecewise_constant(ref, face_field):
    d = ref.at_quadrature - np.asarray(face_field)[:, None, :]
    return float(np.sqrt(np.sum(ref.quad_weights * np.sum(d * d, axis=-1))))


def l2_error_nodal(mesh, ref, nodal_vectors):
    G = np.asarray(nodal_vectors)
    Gq = np.einsum("qa,fai->fqi", QUAD_BARY, G[mesh.triangles])
    d = ref.at_quadrature - Gq
    return float(np.sqrt(np.sum(ref.quad_weights * np.sum(d * d, axis=-1))))


def max_error_nodal(ref, nodal_vectors):
    return float(np.max(np.linalg.norm(ref.at_vertices - np.asarray(nodal_vectors), axis=1)))


@dataclass
class ErrorNorms:
    De: float
    De_I: float
    De_recovered: Optional[float]
    De_max_recovered: Optional[float]
    L2_of_exact_gradient: float


def error_norms(mesh, problem, u_h, recovered=None, ref=None):
    """Gradient error norms of ``u_h`` (and of a recovered nodal gradient)."""
    u_h = _check_nodal(mesh, u_h, "u_h")
    if ref is None:
        ref = gradient_reference(mesh, problem, vertices=recovered is not None)
    grad_h = fe_gradient(mesh, u_h)
    grad_I = fe_gradient(mesh, interpolate(mesh, problem))
    De = l2_error_piecewise_constant(ref, grad_h)
    De_I = float(np.sqrt(np.sum(mesh.areas * np.sum((grad_I - grad_h) ** 2, axis=1))))
    exact_norm = float(np.sqrt(np.sum(ref.quad_weights * np.sum(ref.at_quadrature**2, axis=-1))))
    De_rec = De_max = None
    if recovered is not None:
        recovered = _check_nodal(mesh, recovered, "recovered gradient")
        De_rec = l2_error_nodal(mesh, ref, recovered)
        De_max = max_error_nodal(ref, recovered)
    return ErrorNorms(De, De_I, De_rec, De_max, exact_norm)
