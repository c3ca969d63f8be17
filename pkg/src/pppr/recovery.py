"""Gradient recovery at mesh vertices.

All operators work on batches of vertices: local frames, patch growth and the
least-squares fits are vectorized over padded per-vertex arrays. The
single-vertex helpers (:func:`build_frame`, :func:`select_patch`,
:func:`fit_quadratic_value_preserving`) expose the same code paths.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateNormalError, PatchGrowthError, RankDeficiencyError
from .fem import _check_nodal, fe_gradient
from .mesh.core import VertexPatch, ball_patches
from .surfaces import project_closest_point, unit_normal

MIN_PATCH_SIZE = 7
MAX_RING = 10
COND_CAP = 1e8
DEGENERATE_NORMAL_TOL = 1e-8
FRAME_MODES = ("exact", "simple_average", "area_weighted")


@dataclass(frozen=True)
class LocalFrame:
    """Orthonormal right-handed frame; ``basis`` rows are (phi1, phi2, phi3)."""

    center: np.ndarray
    basis: np.ndarray
    source: str

    @property
    def normal(self):
        return self.basis[2]


@dataclass(frozen=True)
class PatchCoordinates:
    """A patch expressed in a local frame (centre first, at the origin)."""

    patch: VertexPatch
    zeta: np.ndarray
    height: np.ndarray
    scale: float


@dataclass(frozen=True)
class QuadraticFit:
    """``q(y) = c0 + a1 y1 + a2 y2 + a3 y1² + a4 y1 y2 + a5 y2²`` in scaled coordinates.

    ``y = zeta / scale``; ``c0`` is pinned to the centre datum.
    """

    coefficients: np.ndarray
    center_datum: float
    scale: float
    residual_norm: float

    @property
    def gradient(self):
        """``(dq/dzeta1, dq/dzeta2)`` at the origin in unscaled coordinates."""
        return self.coefficients[:2] / self.scale

    @property
    def physical_coefficients(self):
        s = self.scale
        return self.coefficients / np.array([s, s, s * s, s * s, s * s])

    def __call__(self, zeta):
        y = np.atleast_2d(np.asarray(zeta, dtype=float)) / self.scale
        return self.center_datum + _design(y) @ self.coefficients


# ---------------------------------------------------------------------------
# frames


def _complete_basis(normals):
    """Rows (phi1, phi2, phi3) with phi3 = normals, using the least aligned axis."""
    n3 = np.asarray(normals, dtype=float)
    axis = np.argmin(np.abs(n3), axis=1)
    e = np.zeros_like(n3)
    e[np.arange(len(n3)), axis] = 1.0
    t1 = e - np.sum(e * n3, axis=1, keepdims=True) * n3
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(n3, t1)
    return np.stack([t1, t2, n3], axis=1)


def vertex_normals(mesh, mode, surface=None, vertices=None):
    """Unit normals per vertex: exact (at the projected vertex) or averaged."""
    if mode not in FRAME_MODES:
        raise ValueError(f"unknown normal mode {mode!r}; choose from {FRAME_MODES}")
    if vertices is None:
        vertices = np.arange(mesh.n_vertices)
    vertices = np.asarray(vertices, dtype=np.int64)
    if mode == "exact":
        if surface is None:
            raise ValueError("exact normals need a surface")
        x = project_closest_point(surface, mesh.vertices[vertices])
        return unit_normal(surface, x)
    VT = mesh.vertex_triangle_matrix[vertices]
    if mode == "simple_average":
        s = VT @ mesh.face_normals
        norm = np.linalg.norm(s, axis=1) / np.asarray(VT.sum(axis=1)).ravel()
    else:
        s = VT @ mesh.face_cross
        norm = np.linalg.norm(s, axis=1) / (VT @ (2.0 * mesh.areas))
    bad = np.flatnonzero(norm < DEGENERATE_NORMAL_TOL)
    if len(bad):
        v = int(vertices[bad[0]])
        raise DegenerateNormalError(f"averaged normal vanishes (|n| = {norm[bad[0]]:.3g})", vertex=v)
    return s / np.linalg.norm(s, axis=1, keepdims=True)


def build_frames(mesh, mode, surface=None, vertices=None):
    """Frame bases ``(n, 3, 3)`` for many vertices."""
    return _complete_basis(vertex_normals(mesh, mode, surface, vertices))


def build_frame(mesh, i, mode="area_weighted", surface=None):
    basis = build_frames(mesh, mode, surface, [i])[0]
    source = "exact_normal" if mode == "exact" else "averaged_normal"
    return LocalFrame(center=mesh.vertices[i].copy(), basis=basis, source=source)


# ---------------------------------------------------------------------------
# least squares


def _design(y):
    """Value-preserving design rows (y1, y2, y1², y1 y2, y2²)."""
    y1, y2 = y[..., 0], y[..., 1]
    return np.stack([y1, y2, y1 * y1, y1 * y2, y2 * y2], axis=-1)


def _batched_lstsq(A, B):
    """Least squares per batch entry via QR. ``A (n, m, p)``, ``B (n, m, r)``."""
    Q, R = np.linalg.qr(A)
    coef = np.linalg.solve(R, np.einsum("nmp,nmr->npr", Q, B))
    res = np.linalg.norm(B - A @ coef, axis=1)
    return coef, res


def _accept(A, counts):
    s = np.linalg.svd(A, compute_uv=False)
    with np.errstate(divide="ignore"):
        cond = s[:, 0] / s[:, -1]
    return (counts + 1 >= MIN_PATCH_SIZE) & (s[:, -1] > 0) & (cond <= COND_CAP), cond


@dataclass
class PatchBatch:
    """Padded patch data for a batch of centre vertices (centre excluded)."""

    vertices: np.ndarray  # (n,)
    members: np.ndarray  # (n, m) vertex indices, -1 padding
    y: np.ndarray  # (n, m, 2) scaled tangential coordinates, 0 on padding
    height: np.ndarray  # (n, m) normal offsets, 0 on padding
    scale: np.ndarray  # (n,) = k h_i
    ring: np.ndarray  # (n,)

    @property
    def mask(self):
        return self.members >= 0


def _padded(P, centers):
    n = len(centers)
    rows = np.repeat(np.arange(n), np.diff(P.indptr))
    cols = P.indices
    keep = cols != centers[rows]
    rows, cols = rows[keep], cols[keep]
    counts = np.bincount(rows, minlength=n)
    width = max(int(counts.max()) if n else 0, 1)
    pos = np.arange(len(rows)) - np.repeat(np.cumsum(counts) - counts, counts)
    idx = np.full((n, width), -1, dtype=np.int64)
    idx[rows, pos] = cols
    return idx, counts


def select_patches(mesh, bases, vertices=None):
    """Grow ``k`` per vertex until the value-preserving design is acceptable."""
    if vertices is None:
        vertices = np.arange(mesh.n_vertices)
    vertices = np.asarray(vertices, dtype=np.int64)
    n = len(vertices)
    h = mesh.vertex_h[vertices]
    X = mesh.vertices
    done = [None] * n
    pending = np.arange(n)
    for k in range(1, MAX_RING + 1):
        if len(pending) == 0:
            break
        c = vertices[pending]
        idx, counts = _padded(ball_patches(mesh, k * h[pending], c), c)
        mask = idx >= 0
        d = np.where(mask[..., None], X[np.where(mask, idx, 0)] - X[c][:, None, :], 0.0)
        local = np.einsum("nmi,nji->nmj", d, bases[pending])
        scale = k * h[pending]
        y = local[..., :2] / scale[:, None, None]
        ok, _ = _accept(_design(y), counts)
        for j in np.flatnonzero(ok):
            done[pending[j]] = (idx[j], y[j], local[j, :, 2], scale[j], k)
        pending = pending[~ok]
    if len(pending):
        v = int(vertices[pending[0]])
        raise PatchGrowthError(f"no admissible patch with ring parameter <= {MAX_RING}", vertex=v)
    width = max(len(e[0]) for e in done) if n else 1
    members = np.full((n, width), -1, dtype=np.int64)
    y = np.zeros((n, width, 2))
    height = np.zeros((n, width))
    for j, (ix, yy, hh, _, _) in enumerate(done):
        members[j, : len(ix)] = ix
        y[j, : len(ix)] = yy
        height[j, : len(ix)] = hh
    scale = np.array([e[3] for e in done])
    ring = np.array([e[4] for e in done], dtype=np.int64)
    return PatchBatch(vertices, members, y, height, scale, ring)


def select_patch(mesh, i, frame):
    """Patch of vertex ``i`` with its coordinates in ``frame``."""
    b = select_patches(mesh, frame.basis[None], [i])
    m = b.mask[0]
    members = np.r_[i, np.sort(b.members[0][m])]
    order = np.argsort(b.members[0][m])
    s = b.scale[0]
    zeta = np.vstack([[0.0, 0.0], b.y[0][m][order] * s])
    height = np.r_[0.0, b.height[0][m][order]]
    patch = VertexPatch(center=int(i), ring_parameter=int(b.ring[0]), member_vertices=members, h_i=float(mesh.vertex_h[i]))
    return PatchCoordinates(patch=patch, zeta=zeta, height=height, scale=float(s))


def fit_quadratic_value_preserving(zeta, data, center_datum, scale):
    """Least-squares quadratic through ``(0, center_datum)`` fitting ``(zeta_j, data_j)``."""
    zeta = np.asarray(zeta, dtype=float).reshape(-1, 2)
    data = np.asarray(data, dtype=float).ravel()
    A = _design(zeta / scale)
    if len(zeta) < 5 or np.linalg.matrix_rank(A) < 5:
        raise RankDeficiencyError("value-preserving design matrix has rank < 5")
    coef, res = _batched_lstsq(A[None], (data - center_datum)[None, :, None])
    return QuadraticFit(coefficients=coef[0, :, 0], center_datum=float(center_datum), scale=float(scale), residual_norm=float(res[0, 0]))


# ---------------------------------------------------------------------------
# recovery operators


def _num_threads():
    try:
        return max(1, int(os.environ.get("PPPR_THREADS", "1")))
    except ValueError:
        return 1


def _chunked(fn, n):
    threads = _num_threads()
    if threads == 1 or n < 2 * threads:
        return fn(np.arange(n))
    parts = np.array_split(np.arange(n), threads)
    with ThreadPoolExecutor(threads) as pool:
        return np.concatenate(list(pool.map(fn, parts)))


def _data_differences(batch, u):
    mask = batch.mask
    du = u[np.where(mask, batch.members, 0)] - u[batch.vertices][:, None]
    return np.where(mask, du, 0.0)


def _tangent_gradients(mesh, u, bases, surface_fit, value_preserving=True):
    """Recovered vectors for all vertices given their frame bases."""
    def run(part):
        batch = select_patches(mesh, bases[part], part)
        A = _design(batch.y)
        du = _data_differences(batch, u)
        if value_preserving:
            rhs = np.stack([du, batch.height], axis=-1) if surface_fit else du[..., None]
            coef, _ = _batched_lstsq(A, rhs)
            p = coef[:, :2, 0] / batch.scale[:, None]
        else:
            # plain fit: free constant term and the centre's own row
            n, m = batch.members.shape
            A6 = np.zeros((n, m + 1, 6))
            A6[:, :m, 0] = batch.mask
            A6[:, :m, 1:] = A
            A6[:, m, 0] = 1.0
            vals = np.zeros((n, m + 1, 1))
            vals[:, :m, 0] = np.where(batch.mask, u[np.where(batch.mask, batch.members, 0)], 0.0)
            vals[:, m, 0] = u[part]
            coef, _ = _batched_lstsq(A6, vals)
            p = coef[:, 1:3, 0] / batch.scale[:, None]
        B = bases[part]
        if not surface_fit:
            return p[:, 0, None] * B[:, 0] + p[:, 1, None] * B[:, 1]
        s = coef[:, :2, 1] / batch.scale[:, None]
        # J = [[1,0],[0,1],[s1,s2]]; g_local = p (J^T J)^-1 J^T
        JtJ = np.eye(2)[None] + s[:, :, None] * s[:, None, :]
        c = np.linalg.solve(JtJ, p[..., None])[..., 0]
        g_local = np.concatenate([c, np.sum(c * s, axis=1, keepdims=True)], axis=1)
        return np.einsum("nk,nki->ni", g_local, B)

    return _chunked(run, mesh.n_vertices)


def recover_pppr(mesh, u_h, normal_mode="area_weighted"):
    """Parametric polynomial preserving recovery with averaged-normal frames."""
    if normal_mode not in ("simple_average", "area_weighted"):
        raise ValueError("PPPR frames use averaged normals: 'simple_average' or 'area_weighted'")
    u = _check_nodal(mesh, u_h)
    return _tangent_gradients(mesh, u, build_frames(mesh, normal_mode), surface_fit=True)


def recover_ppr(mesh, u_h, surface=None, normal_mode="area_weighted", value_preserving=True):
    """Tangent-plane polynomial preserving recovery.

    With ``surface`` given, frames use exact normals; otherwise averaged ones.
    """
    u = _check_nodal(mesh, u_h)
    bases = build_frames(mesh, "exact", surface) if surface is not None else build_frames(mesh, normal_mode)
    return _tangent_gradients(mesh, u, bases, surface_fit=False, value_preserving=value_preserving)


def recover_averaging(mesh, u_h, weighting="simple"):
    """Vertex average of the piecewise-constant gradient over incident triangles."""
    g = fe_gradient(mesh, u_h)
    VT = mesh.vertex_triangle_matrix
    if weighting == "simple":
        w = np.ones(mesh.n_triangles)
    elif weighting == "area":
        w = mesh.areas
    else:
        raise ValueError(f"unknown weighting {weighting!r}; choose 'simple' or 'area'")
    return (VT @ (w[:, None] * g)) / (VT @ w)[:, None]


RECOVERY_METHODS = ("pppr", "ppr-exact", "ppr-avg", "sa", "wa")


def recover(name, mesh, u_h, surface=None, **options):
    """Dispatch a recovery operator by its registered name."""
    if name == "pppr":
        return recover_pppr(mesh, u_h, **options)
    if name == "ppr-exact":
        if surface is None:
            raise ValueError("'ppr-exact' needs the exact surface")
        return recover_ppr(mesh, u_h, surface=surface, **options)
    if name == "ppr-avg":
        return recover_ppr(mesh, u_h, **options)
    if name == "sa":
        return recover_averaging(mesh, u_h, "simple")
    if name == "wa":
        return recover_averaging(mesh, u_h, "area")
    raise ValueError(f"unknown recovery method {name!r}; choose from {RECOVERY_METHODS}")
