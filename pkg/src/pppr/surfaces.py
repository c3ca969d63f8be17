"""Analytic level-set surfaces, manufactured solutions and projection maps.

Every function here is vectorised: points are arrays of shape ``(..., 3)``
and scalar results have the leading shape ``(...)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateGradientError, PreconditionError, ProjectionError

Field = Callable[[np.ndarray], np.ndarray]

GRAD_EPS = 1e-12
ON_SURFACE_TOL = 1e-10


@dataclass(frozen=True)
class LevelSetSurface:
    """Closed surface ``{phi = 0}`` with closed-form first and second derivatives.

    ``tube_radius`` bounds the (first-order) distance from the surface at which
    projections are still attempted. ``center`` is the point the surface is
    star-shaped about; it is used for ray casting and radial quadrature.
    """

    name: str
    phi: Field
    grad_phi: Field
    hess_phi: Field
    bounding_box: tuple
    tube_radius: float
    center: tuple = (0.0, 0.0, 0.0)
    genus: int = 0
    exact_area: Optional[float] = None
    quadrature: Optional[Callable[[int], tuple]] = field(default=None, repr=False)
    sphere_map: Optional[tuple] = field(default=None, repr=False)

    def place_on_surface(self, directions):
        """Map unit directions onto the surface (closed-form map or ray cast)."""
        if self.sphere_map is not None:
            d = np.asarray(directions, dtype=float)
            return self.sphere_map[0](d / np.linalg.norm(d, axis=-1, keepdims=True))
        return ray_cast(self, directions)[0]


@dataclass(frozen=True)
class ManufacturedProblem:
    """``-Δ_g u + c u = f`` on ``surface`` with known exact solution ``u``.

    ``u``, ``grad_u`` and ``hess_u`` act on an ambient extension of the
    solution. ``rhs`` overrides the right-hand side derived from ``u`` through
    :func:`tangential_laplacian` (needed when the extension is not smooth).
    """

    name: str
    surface: LevelSetSurface
    u: Field
    grad_u: Field
    hess_u: Optional[Field] = None
    zeroth_order_coefficient: float = 0.0
    rhs: Optional[Field] = field(default=None, repr=False)
    params: dict = field(default_factory=dict)

    def f(self, x):
        x = np.asarray(x, dtype=float)
        if self.rhs is not None:
            return self.rhs(x)
        val = -tangential_laplacian(self, x)
        if self.zeroth_order_coefficient:
            val = val + self.zeroth_order_coefficient * self.u(x)
        return val


# ---------------------------------------------------------------------------
# projections and tangential calculus


def _checked_gradient(surface, x):
    g = surface.grad_phi(x)
    norm = np.linalg.norm(g, axis=-1)
    bad = ~(norm >= GRAD_EPS)
    if np.any(bad):
        where = np.argwhere(np.atleast_1d(bad))[0]
        raise DegenerateGradientError(
            f"|grad phi| < {GRAD_EPS:g} on surface {surface.name!r} at index {tuple(where)}"
        )
    return g, norm


def unit_normal(surface, x):
    """Outward unit normal ``grad phi / |grad phi|``."""
    x = np.asarray(x, dtype=float)
    g, norm = _checked_gradient(surface, x)
    return g / norm[..., None]


def project_first_order(surface, x):
    """One step ``x - phi grad phi / |grad phi|^2``; accurate to O(dist^2)."""
    x = np.asarray(x, dtype=float)
    g, norm = _checked_gradient(surface, x)
    p = surface.phi(x)
    dist = np.abs(p) / norm
    if np.any(dist > surface.tube_radius):
        raise ProjectionError(
            f"point at distance {np.max(dist):.3g} is outside the tube "
            f"({surface.tube_radius:g}) of surface {surface.name!r}"
        )
    return x - (p / norm**2)[..., None] * g


def project_closest_point(surface, x, tol=1e-12, max_iter=50):
    """Iterate :func:`project_first_order` until ``|phi| <= tol``."""
    x = np.array(x, dtype=float)
    flat = x.reshape(-1, 3)
    active = np.abs(surface.phi(flat)) > tol
    for _ in range(max_iter):
        if not active.any():
            return flat.reshape(x.shape)
        flat[active] = project_first_order(surface, flat[active])
        active[active] = np.abs(surface.phi(flat[active])) > tol
    if active.any():
        raise ProjectionError(
            f"closest-point projection did not reach |phi| <= {tol:g} after "
            f"{max_iter} iterations on surface {surface.name!r}"
        )
    return flat.reshape(x.shape)


def _require_on_surface(surface, x):
    res = np.abs(surface.phi(x))
    if np.any(res > ON_SURFACE_TOL):
        raise PreconditionError(
            f"point is not on surface {surface.name!r} (|phi| = {np.max(res):.3g})"
        )


def tangential_gradient(problem, x):
    """``(I - n n^T) grad u`` at surface points."""
    x = np.asarray(x, dtype=float)
    _require_on_surface(problem.surface, x)
    n = unit_normal(problem.surface, x)
    g = problem.grad_u(x)
    return g - np.sum(g * n, axis=-1)[..., None] * n


def normal_divergence(surface, x):
    """Ambient divergence of the extended unit normal (the mean curvature sum)."""
    g, norm = _checked_gradient(surface, x)
    H = surface.hess_phi(x)
    lap = np.trace(H, axis1=-2, axis2=-1)
    gHg = np.einsum("...i,...ij,...j->...", g, H, g)
    return (lap * norm**2 - gHg) / norm**3


def tangential_laplacian(problem, x):
    """Laplace-Beltrami of ``u`` from the ambient extension.

    ``Δ_e u - n^T D²u n - (n·∇u) div(n)``.
    """
    x = np.asarray(x, dtype=float)
    _require_on_surface(problem.surface, x)
    if problem.hess_u is None:
        raise PreconditionError(f"problem {problem.name!r} has no Hessian of u")
    surf = problem.surface
    n = unit_normal(surf, x)
    Hu = problem.hess_u(x)
    gu = problem.grad_u(x)
    lap = np.trace(Hu, axis1=-2, axis2=-1)
    nHn = np.einsum("...i,...ij,...j->...", n, Hu, n)
    return lap - nHn - np.sum(n * gu, axis=-1) * normal_divergence(surf, x)


# ---------------------------------------------------------------------------
# independent oracles (finite differences, charts)

_FD4 = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))


def tangential_divergence_fd(problem, x, step=1e-3):
    """Laplace-Beltrami by 4th-order central differences of the projected gradient.

    Evaluates ``tr(P D v)`` for ``v = (I - n n^T) grad u`` extended off the
    surface with the level-set normal. Used as an oracle only.
    """
    x = np.asarray(x, dtype=float)
    surf = problem.surface

    def v(y):
        n = unit_normal(surf, y)
        g = problem.grad_u(y)
        return g - np.sum(g * n, axis=-1)[..., None] * n

    Dv = np.zeros(x.shape + (3,))  # Dv[..., i, j] = d v_i / d x_j
    for j in range(3):
        e = np.zeros(3)
        e[j] = step
        acc = 0.0
        for k, w in _FD4:
            acc = acc + w * v(x + k * e)
        Dv[..., :, j] = acc / step
    n = unit_normal(surf, x)
    P = np.eye(3) - n[..., :, None] * n[..., None, :]
    return np.einsum("...ij,...ji->...", P, Dv)


def stereographic_chart(pole):
    """Inverse stereographic projection onto the unit sphere and its Jacobian.

    ``pole`` is +1 (project from the north pole) or -1 (from the south pole).
    Returns ``(r, dr)`` where ``dr(xi)`` has rows ``d r / d xi_k``.
    """
    sgn = float(pole)

    def r(xi):
        xi = np.asarray(xi, dtype=float)
        s = 1.0 + np.sum(xi**2, axis=-1)
        return np.stack([2 * xi[..., 0] / s, 2 * xi[..., 1] / s, sgn * (1 - 2 / s)], axis=-1)

    def dr(xi):
        xi = np.asarray(xi, dtype=float)
        a, b = xi[..., 0], xi[..., 1]
        s = 1.0 + a * a + b * b
        row1 = np.stack([2 / s - 4 * a * a / s**2, -4 * a * b / s**2, sgn * 4 * a / s**2], axis=-1)
        row2 = np.stack([-4 * a * b / s**2, 2 / s - 4 * b * b / s**2, sgn * 4 * b / s**2], axis=-1)
        return np.stack([row1, row2], axis=-2)

    return r, dr


def gradient_via_chart(u, chart, chart_jacobian, xi, step=1e-4):
    """Surface gradient through a chart: ``∇(u∘r) (∂r ∂r^T)^{-1} ∂r``.

    The planar gradient of the pull-back is taken by 4th-order differences, so
    the result is independent of any ambient extension of ``u``.
    """
    xi = np.asarray(xi, dtype=float)
    grad_bar = np.zeros(2)
    for k in range(2):
        e = np.zeros(2)
        e[k] = step
        grad_bar[k] = sum(w * u(chart(xi + m * e)) for m, w in _FD4) / step
    J = chart_jacobian(xi)
    g = J @ J.T
    return grad_bar @ np.linalg.solve(g, J)


def ray_cast(surface, directions, tol=1e-14, max_iter=200):
    """Intersect rays ``center + t d`` (t > 0) with ``{phi = 0}`` by bisection.

    The bracket starts at the centre (``phi < 0``) and ends at the bounding-box
    diagonal; a missing sign change raises :class:`RayMissError`.
    """
    from .errors import RayMissError

    d = np.asarray(directions, dtype=float)
    d = d / np.linalg.norm(d, axis=-1, keepdims=True)
    c = np.asarray(surface.center, dtype=float)
    lo_box, hi_box = (np.asarray(b, dtype=float) for b in surface.bounding_box)
    t_max = 2.0 * np.linalg.norm(hi_box - lo_box)
    if surface.phi(c) >= 0:
        raise RayMissError(f"ray origin is not inside surface {surface.name!r}")
    lo = np.zeros(d.shape[:-1])
    hi = np.full(d.shape[:-1], t_max)
    if np.any(surface.phi(c + hi[..., None] * d) <= 0):
        raise RayMissError(f"a ray does not leave surface {surface.name!r} within its bounding box")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        inside = surface.phi(c + mid[..., None] * d) < 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
        if np.max(hi - lo) <= tol * t_max:
            break
    t = 0.5 * (lo + hi)
    return c + t[..., None] * d, t


def _sphere_directions(n):
    """Gauss-Legendre in cos(theta) times trapezoid in azimuth; weights sum to 4 pi."""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    psi = 2 * np.pi * np.arange(2 * n) / (2 * n)
    ct, ps = np.meshgrid(nodes, psi, indexing="ij")
    st = np.sqrt(1 - ct**2)
    dirs = np.stack([st * np.cos(ps), st * np.sin(ps), ct], axis=-1).reshape(-1, 3)
    w = np.repeat(weights, 2 * n) * (2 * np.pi / (2 * n))
    return dirs, w


def _radial_quadrature(surface):
    def quad(n):
        dirs, w = _sphere_directions(n)
        pts, t = ray_cast(surface, dirs)
        g = surface.grad_phi(pts)
        gn = np.linalg.norm(g, axis=-1)
        jac = t**2 * gn / np.abs(np.sum(g * dirs, axis=-1))
        return pts, w * jac

    return quad


def _mapped_quadrature(surface):
    fmap, jac = surface.sphere_map

    def quad(n):
        dirs, w = _sphere_directions(n)
        # orthonormal tangents of the unit sphere at each direction
        axis = np.where(np.abs(dirs[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
        t1 = np.cross(dirs, axis)
        t1 /= np.linalg.norm(t1, axis=-1, keepdims=True)
        t2 = np.cross(dirs, t1)
        J = jac(dirs)
        area = np.linalg.norm(np.cross(np.einsum("nij,nj->ni", J, t1), np.einsum("nij,nj->ni", J, t2)), axis=-1)
        return fmap(dirs), w * area

    return quad


def surface_integral(surface, fn, n=200):
    """High-order quadrature of ``fn`` over the exact surface."""
    if surface.quadrature is not None:
        quad = surface.quadrature
    elif surface.sphere_map is not None:
        quad = _mapped_quadrature(surface)
    else:
        quad = _radial_quadrature(surface)
    pts, w = quad(n)
    return float(np.sum(w * fn(pts)))


# ---------------------------------------------------------------------------
# benchmark surfaces

TORUS_R, TORUS_r = 4.0, 1.0


def torus():
    """Torus with major radius 4 and minor radius 1, as a signed distance."""

    def rho(x):
        return np.sqrt(x[..., 0] ** 2 + x[..., 1] ** 2)

    def phi(x):
        x = np.asarray(x, dtype=float)
        return np.sqrt((TORUS_R - rho(x)) ** 2 + x[..., 2] ** 2) - TORUS_r

    def grad(x):
        x = np.asarray(x, dtype=float)
        r = rho(x)
        q = np.sqrt((TORUS_R - r) ** 2 + x[..., 2] ** 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = (r - TORUS_R) / (q * r)
            return np.stack([c * x[..., 0], c * x[..., 1], x[..., 2] / q], axis=-1)

    def hess(x):
        x = np.asarray(x, dtype=float)
        r = rho(x)
        z = x[..., 2]
        q = np.sqrt((TORUS_R - r) ** 2 + z**2)
        H = np.zeros(x.shape + (3,))
        with np.errstate(divide="ignore", invalid="ignore"):
            xy = x[..., :2]
            outer = xy[..., :, None] * xy[..., None, :]
            a = z**2 / (r**2 * q**3)
            b = (r - TORUS_R) / q
            H[..., :2, :2] = (
                a[..., None, None] * outer
                + b[..., None, None] * (np.eye(2) / r[..., None, None] - outer / r[..., None, None] ** 3)
            )
            cross = -(r - TORUS_R) * z / (q**3 * r)
            H[..., :2, 2] = cross[..., None] * xy
            H[..., 2, :2] = cross[..., None] * xy
            H[..., 2, 2] = (r - TORUS_R) ** 2 / q**3
        return H

    def quad(n):
        m = 2 * n
        u = 2 * np.pi * np.arange(2 * m) / (2 * m)
        v = 2 * np.pi * np.arange(m) / m
        uu, vv = np.meshgrid(u, v, indexing="ij")
        pts = torus_point(uu, vv).reshape(-1, 3)
        w = (TORUS_R + TORUS_r * np.cos(vv)).reshape(-1) * TORUS_r * (2 * np.pi / (2 * m)) * (2 * np.pi / m)
        return pts, w

    return LevelSetSurface(
        name="torus",
        phi=phi,
        grad_phi=grad,
        hess_phi=hess,
        bounding_box=((-5.0, -5.0, -1.0), (5.0, 5.0, 1.0)),
        tube_radius=0.5,
        center=(TORUS_R, 0.0, 0.0),
        genus=1,
        exact_area=4 * np.pi**2 * TORUS_R * TORUS_r,
        quadrature=quad,
    )


def torus_point(u, v):
    """Standard parametrisation of :func:`torus`."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    ring = TORUS_R + TORUS_r * np.cos(v)
    return np.stack([ring * np.cos(u), ring * np.sin(u), TORUS_r * np.sin(v)], axis=-1)


def sphere():
    """Unit sphere, ``phi = |x| - 1``."""

    def phi(x):
        return np.linalg.norm(x, axis=-1) - 1.0

    def grad(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return x / np.linalg.norm(x, axis=-1, keepdims=True)

    def hess(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)[..., None, None]
        xh = x[..., :, None] * x[..., None, :]
        return np.eye(3) / r - xh / r**3

    return LevelSetSurface(
        name="sphere",
        phi=phi,
        grad_phi=grad,
        hess_phi=hess,
        bounding_box=((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0)),
        tube_radius=0.5,
        genus=0,
        exact_area=4 * np.pi,
    )


def highcurv():
    """``x²/4 + y² + 4z²/(1 + sin(pi x)/2)² = 1``: a thin, wavy ellipsoid."""

    def parts(x):
        a = 1 + 0.5 * np.sin(np.pi * x[..., 0])
        da = 0.5 * np.pi * np.cos(np.pi * x[..., 0])
        dda = -0.5 * np.pi**2 * np.sin(np.pi * x[..., 0])
        return a, da, dda

    def phi(x):
        x = np.asarray(x, dtype=float)
        a, _, _ = parts(x)
        return 0.25 * x[..., 0] ** 2 + x[..., 1] ** 2 + 4 * x[..., 2] ** 2 / a**2 - 1

    def grad(x):
        x = np.asarray(x, dtype=float)
        a, da, _ = parts(x)
        z = x[..., 2]
        return np.stack(
            [0.5 * x[..., 0] - 8 * z**2 * da / a**3, 2 * x[..., 1], 8 * z / a**2], axis=-1
        )

    def hess(x):
        x = np.asarray(x, dtype=float)
        a, da, dda = parts(x)
        z = x[..., 2]
        H = np.zeros(x.shape + (3,))
        H[..., 0, 0] = 0.5 + 24 * z**2 * da**2 / a**4 - 8 * z**2 * dda / a**3
        H[..., 1, 1] = 2.0
        H[..., 2, 2] = 8 / a**2
        H[..., 0, 2] = H[..., 2, 0] = -16 * z * da / a**3
        return H

    def fmap(d):
        return np.stack(
            [2 * d[..., 0], d[..., 1], 0.5 * d[..., 2] * (1 + 0.5 * np.sin(2 * np.pi * d[..., 0]))],
            axis=-1,
        )

    def fjac(d):
        J = np.zeros(d.shape + (3,))
        J[..., 0, 0] = 2.0
        J[..., 1, 1] = 1.0
        J[..., 2, 0] = 0.5 * d[..., 2] * np.pi * np.cos(2 * np.pi * d[..., 0])
        J[..., 2, 2] = 0.5 * (1 + 0.5 * np.sin(2 * np.pi * d[..., 0]))
        return J

    return LevelSetSurface(
        name="highcurv",
        phi=phi,
        grad_phi=grad,
        hess_phi=hess,
        bounding_box=((-2.0, -1.0, -0.75), (2.0, 1.0, 0.75)),
        tube_radius=0.1,
        genus=0,
        sphere_map=(fmap, fjac),
    )


def dziuk():
    """``(x - z²)² + y² + z² = 1``."""

    def phi(x):
        x = np.asarray(x, dtype=float)
        w = x[..., 0] - x[..., 2] ** 2
        return w**2 + x[..., 1] ** 2 + x[..., 2] ** 2 - 1

    def grad(x):
        x = np.asarray(x, dtype=float)
        w = x[..., 0] - x[..., 2] ** 2
        z = x[..., 2]
        return np.stack([2 * w, 2 * x[..., 1], -4 * z * w + 2 * z], axis=-1)

    def hess(x):
        x = np.asarray(x, dtype=float)
        z = x[..., 2]
        H = np.zeros(x.shape + (3,))
        H[..., 0, 0] = 2.0
        H[..., 1, 1] = 2.0
        H[..., 2, 2] = -4 * x[..., 0] + 12 * z**2 + 2
        H[..., 0, 2] = H[..., 2, 0] = -4 * z
        return H

    return LevelSetSurface(
        name="dziuk",
        phi=phi,
        grad_phi=grad,
        hess_phi=hess,
        bounding_box=((-1.0, -1.0, -1.0), (1.25, 1.0, 1.0)),
        tube_radius=0.2,
        genus=0,
    )


SURFACES = {"torus": torus, "highcurv": highcurv, "sphere": sphere, "dziuk": dziuk}


def get_surface(name):
    try:
        return SURFACES[name]()
    except KeyError:
        raise KeyError(f"unknown surface {name!r}; choose from {sorted(SURFACES)}") from None


# ---------------------------------------------------------------------------
# manufactured problems


def _linear(a):
    a = np.asarray(a, dtype=float)

    def u(x):
        return np.asarray(x, dtype=float) @ a

    def grad(x):
        return np.broadcast_to(a, np.shape(x)).copy()

    def hess(x):
        return np.zeros(np.shape(x) + (3,))

    return u, grad, hess


def _product(i, j):
    def u(x):
        x = np.asarray(x, dtype=float)
        return x[..., i] * x[..., j]

    def grad(x):
        x = np.asarray(x, dtype=float)
        g = np.zeros_like(x)
        g[..., i] += x[..., j]
        g[..., j] += x[..., i]
        return g

    def hess(x):
        H = np.zeros(np.shape(x) + (3,))
        H[..., i, j] += 1.0
        H[..., j, i] += 1.0
        return H

    return u, grad, hess


def torus_xy():
    """Torus with ``u = x - y``."""
    u, g, h = _linear((1.0, -1.0, 0.0))
    return ManufacturedProblem("torus_xy", torus(), u, g, h)


def torus_product():
    """Torus with the non-linear ``u = x y``."""
    u, g, h = _product(0, 1)
    return ManufacturedProblem("torus_product", torus(), u, g, h)


def highcurv_x1x2():
    u, g, h = _product(0, 1)
    return ManufacturedProblem("highcurv_x1x2", highcurv(), u, g, h)


def sphere_z():
    u, g, h = _linear((0.0, 0.0, 1.0))
    return ManufacturedProblem("sphere_z", sphere(), u, g, h)


def sphere_singular(lam=0.6):
    """``u = sin^lam(theta) sin(psi)`` on the unit sphere.

    The extension ``y rho^(lam-1)`` (``rho`` the distance to the z-axis) is
    singular on the axis, so the right-hand side uses the spherical-coordinate
    Laplacian directly:
    ``-Δ u = -sin(psi) [(lam²-1) s^(lam-2) - (lam²+lam) s^lam]``, ``s = sin(theta)``.
    """
    lam = float(lam)

    def rho(x):
        return np.sqrt(x[..., 0] ** 2 + x[..., 1] ** 2)

    def u(x):
        x = np.asarray(x, dtype=float)
        r = rho(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = x[..., 1] * r ** (lam - 1)
        return np.where(r > 0, val, 0.0)

    def grad(x):
        x = np.asarray(x, dtype=float)
        r = rho(x)
        y = x[..., 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            c = (lam - 1) * y * r ** (lam - 3)
            g = np.stack([c * x[..., 0], c * y + r ** (lam - 1), np.zeros_like(y)], axis=-1)
        return g

    def rhs(x):
        x = np.asarray(x, dtype=float)
        r = rho(x)
        s = r / np.linalg.norm(x, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            sin_psi = np.where(r > 0, x[..., 1] / r, 0.0)
            lap = sin_psi * ((lam**2 - 1) * s ** (lam - 2) - (lam**2 + lam) * s**lam)
        return -lap

    return ManufacturedProblem(
        "sphere_singular", sphere(), u, grad, None, 0.0, rhs=rhs, params={"lam": lam}
    )


def dziuk_peak():
    """``-Δ u + u = f`` on the Dziuk surface with ``u = exp(1/(1.85-(x-0.2)²)) sin(y)``."""

    def parts(x):
        a = x[..., 0] - 0.2
        w = 1.85 - a**2
        g = np.exp(1.0 / w)
        dg = 2 * a * g / w**2
        ddg = 2 * g / w**2 + 4 * a**2 * g / w**4 + 8 * a**2 * g / w**3
        return g, dg, ddg

    def u(x):
        x = np.asarray(x, dtype=float)
        g, _, _ = parts(x)
        return g * np.sin(x[..., 1])

    def grad(x):
        x = np.asarray(x, dtype=float)
        g, dg, _ = parts(x)
        y = x[..., 1]
        return np.stack([dg * np.sin(y), g * np.cos(y), np.zeros_like(y)], axis=-1)

    def hess(x):
        x = np.asarray(x, dtype=float)
        g, dg, ddg = parts(x)
        y = x[..., 1]
        H = np.zeros(x.shape + (3,))
        H[..., 0, 0] = ddg * np.sin(y)
        H[..., 0, 1] = H[..., 1, 0] = dg * np.cos(y)
        H[..., 1, 1] = -g * np.sin(y)
        return H

    return ManufacturedProblem("dziuk_peak", dziuk(), u, grad, hess, 1.0)


PROBLEMS = {
    "torus_xy": torus_xy,
    "torus_product": torus_product,
    "highcurv_x1x2": highcurv_x1x2,
    "sphere_singular": sphere_singular,
    "sphere_z": sphere_z,
    "dziuk_peak": dziuk_peak,
}


def get_problem(name, **params):
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    return factory(**params)
