"""Benchmark meshes: chevron torus, icosahedron, projected icospheres."""

from __future__ import annotations

import numpy as np

from ..surfaces import torus_point
from .core import build_mesh


def tetrahedron():
    """Regular tetrahedron inscribed in the unit sphere, outward oriented."""
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / np.sqrt(3)
    t = [[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]]
    return build_mesh(v, t)


def icosahedron():
    """Regular icosahedron with vertices on the unit sphere, outward oriented."""
    g = (1 + np.sqrt(5)) / 2
    v = np.array(
        [
            [-1, g, 0], [1, g, 0], [-1, -g, 0], [1, -g, 0],
            [0, -1, g], [0, 1, g], [0, -1, -g], [0, 1, -g],
            [g, 0, -1], [g, 0, 1], [-g, 0, -1], [-g, 0, 1],
        ],
        dtype=float,
    )
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    t = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
    return build_mesh(v, t)


def chevron_torus_mesh(n_u, n_v):
    """Doubly periodic ``n_u x n_v`` grid mapped onto the torus.

    Each cell is split by one diagonal; the diagonal direction alternates from
    one u-column to the next and is constant along the column, so element
    patches are not pointwise symmetric.
    """
    if n_u < 4 or n_v < 4 or n_u % 2 or n_v % 2:
        raise ValueError(f"n_u and n_v must be even and >= 4 (got {n_u}, {n_v})")
    i, j = np.meshgrid(np.arange(n_u), np.arange(n_v), indexing="ij")
    verts = torus_point(2 * np.pi * i / n_u, 2 * np.pi * j / n_v).reshape(-1, 3)

    def idx(a, b):
        return (a % n_u) * n_v + (b % n_v)

    A, B, C, D = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
    even = (i % 2 == 0)[..., None]
    # even columns: diagonal A-C; odd columns: diagonal B-D
    t1 = np.where(even, np.stack([A, B, C], -1), np.stack([A, B, D], -1))
    t2 = np.where(even, np.stack([A, C, D], -1), np.stack([B, C, D], -1))
    tris = np.stack([t1, t2], axis=2).reshape(-1, 3)
    return build_mesh(verts, tris)


def _subdivide_sphere(mesh):
    """One 1-to-4 split with the new vertices pushed to the unit sphere."""
    v = mesh.vertices
    e = mesh.edges
    mid = v[e[:, 0]] + v[e[:, 1]]
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    nv = len(v)
    te = mesh.triangle_edges + nv
    t = mesh.triangles
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    mab, mbc, mca = te[:, 2], te[:, 0], te[:, 1]
    tris = np.concatenate(
        [
            np.stack([a, mab, mca], 1),
            np.stack([mab, b, mbc], 1),
            np.stack([mca, mbc, c], 1),
            np.stack([mab, mbc, mca], 1),
        ]
    )
    return build_mesh(np.vstack([v, mid]), tris)


def unit_icosphere(level):
    m = icosahedron()
    for _ in range(level):
        m = _subdivide_sphere(m)
    return m


def projected_icosphere(level, surface=None):
    """Subdivided icosahedron placed on ``surface``.

    Directions are ray-cast from the surface centre (or mapped through the
    surface's closed-form sphere map when it has one). ``level`` L gives
    ``10 * 4**L + 2`` vertices.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    base = unit_icosphere(level)
    if surface is None:
        return base
    pts = surface.place_on_surface(base.vertices)
    return build_mesh(pts, base.triangles)
