"""Indexed triangle mesh of a closed, consistently oriented 2-manifold."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from ..errors import DegenerateTriangleError, MeshError, NonManifoldEdgeError, OrientationError

DEGENERATE_AREA_FACTOR = 1e-14


def _readonly(a):
    a.setflags(write=False)
    return a


class SurfaceMesh:
    """Closed oriented triangle mesh; immutable after construction.

    Edge ``k`` of a triangle is the one opposite its local vertex ``k``.
    ``refinement_edges[t]`` is the local index of the vertex opposite the edge
    that newest-vertex bisection splits next.
    """

    def __init__(self, vertices, triangles, refinement_edges=None, generation=0, validate=True):
        self.vertices = _readonly(np.array(vertices, dtype=float).reshape(-1, 3))
        self.triangles = _readonly(np.array(triangles, dtype=np.int64).reshape(-1, 3))
        t = self.triangles
        if t.size and (t.min() < 0 or t.max() >= len(self.vertices)):
            raise MeshError("triangle vertex index out of range")
        if refinement_edges is None:
            refinement_edges = self._longest_edge_index()
        self.refinement_edges = _readonly(np.array(refinement_edges, dtype=np.int8))
        self.generation = int(generation)
        if validate:
            self.validate()

    def __repr__(self):
        return (
            f"SurfaceMesh(vertices={self.n_vertices}, triangles={self.n_triangles}, "
            f"generation={self.generation})"
        )

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def dof(self):
        return self.n_vertices

    # -- geometry ---------------------------------------------------------

    @cached_property
    def corners(self):
        """Triangle corner coordinates, shape ``(F, 3, 3)``."""
        return self.vertices[self.triangles]

    @cached_property
    def face_cross(self):
        """``(b - a) x (c - a)`` per triangle: outward normal times twice the area."""
        c = self.corners
        return np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])

    @cached_property
    def areas(self):
        return 0.5 * np.linalg.norm(self.face_cross, axis=1)

    @cached_property
    def face_normals(self):
        return self.face_cross / (2.0 * self.areas[:, None])

    @cached_property
    def edge_lengths(self):
        """Per triangle, the length of the edge opposite each local vertex."""
        c = self.corners
        return np.stack(
            [
                np.linalg.norm(c[:, 2] - c[:, 1], axis=1),
                np.linalg.norm(c[:, 0] - c[:, 2], axis=1),
                np.linalg.norm(c[:, 1] - c[:, 0], axis=1),
            ],
            axis=1,
        )

    @property
    def total_area(self):
        return float(self.areas.sum())

    @property
    def h_max(self):
        return float(self.edge_lengths.max())

    @cached_property
    def vertex_h(self):
        """Longest edge incident to each vertex."""
        lengths = np.linalg.norm(self.vertices[self.edges[:, 0]] - self.vertices[self.edges[:, 1]], axis=1)
        h = np.zeros(self.n_vertices)
        np.maximum.at(h, self.edges[:, 0], lengths)
        np.maximum.at(h, self.edges[:, 1], lengths)
        return h

    @property
    def bounding_box_diagonal(self):
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def _longest_edge_index(self):
        if len(self.triangles) == 0:
            return np.zeros(0, dtype=np.int8)
        return np.argmax(self.edge_lengths, axis=1).astype(np.int8)

    # -- topology ---------------------------------------------------------

    @cached_property
    def _edge_topology(self):
        t = self.triangles
        # edge k is opposite local vertex k: (1,2), (2,0), (0,1)
        a = t[:, [1, 2, 0]].ravel()
        b = t[:, [2, 0, 1]].ravel()
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = lo * self.n_vertices + hi
        uniq, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
        edges = np.stack([uniq // self.n_vertices, uniq % self.n_vertices], axis=1)
        return edges, inverse.reshape(-1, 3), counts, (a < b).reshape(-1, 3)

    @cached_property
    def edges(self):
        return _readonly(self._edge_topology[0])

    @cached_property
    def triangle_edges(self):
        """Edge id of each triangle edge, shape ``(F, 3)``; column k opposite vertex k."""
        return _readonly(self._edge_topology[1])

    @cached_property
    def edge_map(self):
        """The two triangles incident to each edge, shape ``(E, 2)``."""
        te = self.triangle_edges.ravel()
        order = np.argsort(te, kind="stable")
        tri = np.repeat(np.arange(self.n_triangles), 3)[order]
        return _readonly(tri.reshape(-1, 2))

    @cached_property
    def _vertex_triangle_csr(self):
        F = self.n_triangles
        rows = self.triangles.ravel()
        cols = np.repeat(np.arange(F), 3)
        m = sparse.csr_matrix((np.ones(3 * F, dtype=np.int8), (rows, cols)), shape=(self.n_vertices, F))
        m.sort_indices()
        return m

    def vertex_triangles(self, i):
        """Indices of the triangles incident to vertex ``i``."""
        m = self._vertex_triangle_csr
        return m.indices[m.indptr[i] : m.indptr[i + 1]]

    @property
    def vertex_to_triangles(self):
        m = self._vertex_triangle_csr
        return [m.indices[m.indptr[i] : m.indptr[i + 1]] for i in range(self.n_vertices)]

    @cached_property
    def vertex_triangle_matrix(self):
        """Sparse incidence ``(V, F)`` with ones where a vertex touches a triangle."""
        return self._vertex_triangle_csr.astype(float)

    @cached_property
    def adjacency(self):
        """Symmetric sparse vertex adjacency (no diagonal)."""
        e = self.edges
        n = self.n_vertices
        data = np.ones(2 * len(e), dtype=np.int8)
        m = sparse.csr_matrix((data, (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])), shape=(n, n))
        m.sort_indices()
        return m

    def neighbors(self, i):
        a = self.adjacency
        return a.indices[a.indptr[i] : a.indptr[i + 1]]

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_triangles

    # -- validation -------------------------------------------------------

    def validate(self):
        t = self.triangles
        n = self.n_vertices
        if t.size and (t.min() < 0 or t.max() >= n):
            raise MeshError("triangle vertex index out of range")
        if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
            raise DegenerateTriangleError("triangle with repeated vertex")
        key = np.sort(t, axis=1)
        if len(np.unique(key, axis=0)) != len(t):
            raise MeshError("duplicate triangles")
        if len(self.refinement_edges) != len(t):
            raise MeshError("refinement_edges length does not match triangle count")
        edges, _, counts, forward = self._edge_topology
        if np.any(counts != 2):
            bad = edges[counts != 2][0]
            c = counts[counts != 2][0]
            raise NonManifoldEdgeError(f"edge {tuple(int(v) for v in bad)} has {c} incident triangles (expected 2)")
        fw = np.zeros(len(edges), dtype=np.int64)
        np.add.at(fw, self._edge_topology[1].ravel(), forward.ravel().astype(np.int64))
        if np.any(fw != 1):
            bad = edges[fw != 1][0]
            raise OrientationError(f"edge {tuple(int(v) for v in bad)} is traversed twice in the same direction")
        tiny = DEGENERATE_AREA_FACTOR * self.bounding_box_diagonal**2
        if np.any(self.areas < tiny):
            j = int(np.argmin(self.areas))
            raise DegenerateTriangleError(f"triangle {j} has area {self.areas[j]:.3g} < {tiny:.3g}")
        return self


def build_mesh(vertices, triangles, refinement_edges=None, generation=0):
    """Build and validate a :class:`SurfaceMesh`."""
    return SurfaceMesh(vertices, triangles, refinement_edges=refinement_edges, generation=generation)


@dataclass(frozen=True)
class VertexPatch:
    center: int
    ring_parameter: int
    member_vertices: np.ndarray
    h_i: float


def vertex_patch(mesh, i, k):
    """Vertices within Euclidean distance ``k * h_i`` of vertex ``i``.

    The search is a breadth-first sweep over edges that only admits vertices
    inside the ball, so the ball is never scanned globally.
    """
    if k < 1:
        raise ValueError("ring parameter k must be >= 1")
    i = int(i)
    h = float(mesh.vertex_h[i])
    radius = k * h
    x0 = mesh.vertices[i]
    seen = {i}
    frontier = [i]
    while frontier:
        nxt = []
        for v in frontier:
            for w in mesh.neighbors(v):
                w = int(w)
                if w in seen:
                    continue
                if np.linalg.norm(mesh.vertices[w] - x0) <= radius:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    seen.discard(i)
    members = np.array([i] + sorted(seen), dtype=np.int64)
    return VertexPatch(center=i, ring_parameter=int(k), member_vertices=members, h_i=h)


def ball_patches(mesh, radius, vertices=None):
    """Batched :func:`vertex_patch`: sparse ``(len(vertices), V)`` membership matrix.

    ``radius`` holds one admission radius per requested vertex. The centre is
    always a member.
    """
    if vertices is None:
        vertices = np.arange(mesh.n_vertices)
    vertices = np.asarray(vertices, dtype=np.int64)
    radius = np.asarray(radius, dtype=float)
    m, n = len(vertices), mesh.n_vertices
    A = (mesh.adjacency + sparse.identity(n, dtype=np.int8, format="csr")).astype(np.int32)
    R = sparse.csr_matrix((np.ones(m, dtype=np.int32), (np.arange(m), vertices)), shape=(m, n))
    X = mesh.vertices
    while True:
        grown = (R @ A).tocoo()
        d = np.linalg.norm(X[grown.col] - X[vertices[grown.row]], axis=1)
        keep = (d <= radius[grown.row]) | (grown.col == vertices[grown.row])
        new = sparse.csr_matrix(
            (np.ones(int(keep.sum()), dtype=np.int32), (grown.row[keep], grown.col[keep])), shape=(m, n)
        )
        if new.nnz == R.nnz:
            new.sort_indices()
            return new
        R = new
