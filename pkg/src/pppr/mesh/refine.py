"""Uniform (red) refinement and newest-vertex bisection with surface projection."""

from __future__ import annotations

import numpy as np

from ..errors import ClosureOverflowError
from ..surfaces import project_first_order
from .core import SurfaceMesh

# closure may split at most this many edges per triangle of the input mesh
CLOSURE_BUDGET_FACTOR = 10


def _place(points, surface):
    if surface is None:
        return points
    return project_first_order(surface, points)


def uniform_refine(mesh, surface=None):
    """Split every triangle into four at its edge midpoints.

    New vertices are moved onto ``surface`` by one first-order projection step,
    so they lie within O(h²) of it; existing vertices stay put.
    """
    v = mesh.vertices
    e = mesh.edges
    mid = _place(0.5 * (v[e[:, 0]] + v[e[:, 1]]), surface)
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
    return SurfaceMesh(np.vstack([v, mid]), tris, generation=mesh.generation + 1)


def _edge_keys(a, b, n):
    return np.minimum(a, b) * n + np.maximum(a, b)


def bisect_marked(mesh, marked, surface=None):
    """Newest-vertex bisection of ``marked`` triangles plus conforming closure.

    Every triangle carries a refinement edge. Marking a triangle marks its
    refinement edge; any triangle with a marked edge also gets its refinement
    edge marked until nothing changes, which leaves no hanging nodes. Marked
    edges are split at their midpoints (projected onto ``surface``) and the two
    children of a split triangle take the parent's remaining edges as their
    refinement edges.
    """
    marked = np.unique(np.asarray(list(marked) if not isinstance(marked, np.ndarray) else marked, dtype=np.int64))
    if marked.size == 0:
        return mesh
    F = mesh.n_triangles
    budget = CLOSURE_BUDGET_FACTOR * F
    roll = (mesh.refinement_edges.astype(np.int64)[:, None] + np.arange(3)) % 3
    T = np.take_along_axis(mesh.triangles, roll, axis=1)
    te = np.take_along_axis(mesh.triangle_edges, roll, axis=1)
    ref = te[:, 0]

    cut = np.zeros(mesh.n_edges, dtype=bool)
    cut[ref[marked]] = True
    while True:
        if cut.sum() > budget:
            raise ClosureOverflowError(f"closure exceeded {budget} edge splits")
        need = cut[te].any(axis=1) & ~cut[ref]
        if not need.any():
            break
        cut[ref[need]] = True

    nv = mesh.n_vertices
    cut_edges = mesh.edges[cut]
    V = mesh.vertices
    mid = _place(0.5 * (V[cut_edges[:, 0]] + V[cut_edges[:, 1]]), surface)
    n_total = nv + len(cut_edges)
    # key base must cover the new vertices too, otherwise keys alias
    keys = _edge_keys(cut_edges[:, 0], cut_edges[:, 1], n_total)
    order = np.argsort(keys)
    keys, cut_edges, mid = keys[order], cut_edges[order], mid[order]
    mid_ids = nv + np.arange(len(cut_edges))

    splits = 0
    while True:
        k = _edge_keys(T[:, 1], T[:, 2], n_total)
        pos = np.minimum(np.searchsorted(keys, k), len(keys) - 1)
        split = keys[pos] == k
        if not split.any():
            break
        splits += int(split.sum())
        if splits > budget:
            raise ClosureOverflowError(f"bisection exceeded {budget} triangle splits")
        m = mid_ids[pos[split]]
        v0, v1, v2 = T[split, 0], T[split, 1], T[split, 2]
        T = T.copy()
        T[split] = np.stack([m, v0, v1], axis=1)
        T = np.vstack([T, np.stack([m, v2, v0], axis=1)])

    return SurfaceMesh(
        np.vstack([V, mid]),
        T,
        refinement_edges=np.zeros(len(T), dtype=np.int8),
        generation=mesh.generation + 1,
    )
