"""Recovery-based error estimation, Dörfler marking and the adaptive loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fem
from .errors import FieldMismatchError, PPPRError, StageError
from .mesh.refine import bisect_marked
from .recovery import recover

# Edge-midpoint rule: exact for quadratics on a triangle (weights 1/3 each).
_MIDPOINTS = np.array([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])


@dataclass
class ErrorIndicator:
    eta_local: np.ndarray
    generation: int
    n_vertices: int

    @property
    def eta(self):
        return float(np.sqrt(np.sum(self.eta_local**2)))


def estimate(mesh, u_h, recovered):
    """``eta_T = ||G u_h - grad u_h||_{0,T}`` per triangle."""
    u_h = fem._check_nodal(mesh, u_h, "u_h")
    G = np.asarray(recovered, dtype=float)
    if G.shape != (mesh.n_vertices, 3):
        raise FieldMismatchError(f"recovered gradient has shape {G.shape}, expected ({mesh.n_vertices}, 3)")
    diff = np.einsum("qa,fai->fqi", _MIDPOINTS, G[mesh.triangles]) - fem.fe_gradient(mesh, u_h)[:, None, :]
    sq = mesh.areas * np.mean(np.sum(diff * diff, axis=-1), axis=1)
    return ErrorIndicator(np.sqrt(sq), mesh.generation, mesh.n_vertices)


def _check_generation(mesh, indicator):
    if indicator.generation != mesh.generation or indicator.n_vertices != mesh.n_vertices:
        raise FieldMismatchError("indicator was computed on a different mesh generation")


def dorfler_mark(indicator, theta):
    """Smallest greedy set carrying a ``theta`` share of ``sum eta²``."""
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    sq = indicator.eta_local**2
    order = np.lexsort((np.arange(len(sq)), -sq))
    csum = np.cumsum(sq[order])
    total = csum[-1] if len(csum) else 0.0
    if total == 0.0:
        return np.zeros(0, dtype=np.int64)
    count = int(np.searchsorted(csum, theta * total, side="left")) + 1
    return np.sort(order[: min(count, len(sq))])


def effectivity_index(mesh, problem, u_h, indicator, De=None):
    """Ratio of the estimated to the true gradient error."""
    _check_generation(mesh, indicator)
    if De is None:
        De = fem.error_norms(mesh, problem, u_h).De
    return indicator.eta / De if De > 0 else float("inf")


@dataclass
class AdaptiveStep:
    iteration: int
    mesh: object
    u_h: np.ndarray
    recovered: np.ndarray
    indicator: ErrorIndicator
    kappa: Optional[float]
    De: Optional[float]
    De_recovered: Optional[float]
    marked: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    wall_time_ms: float = 0.0

    @property
    def dof(self):
        return self.mesh.dof


def adaptive_solve(problem, initial_mesh, theta=0.3, max_dof=50000, recovery_method="pppr", compute_error=True,
                   max_iterations=200, callback=None):
    """Solve, recover, estimate, mark and bisect until ``Dof > max_dof``.

    Returns the list of :class:`AdaptiveStep` records (the mesh of each step
    is the one the quantities were computed on).
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    mesh = initial_mesh
    history = []
    for it in range(max_iterations):
        t0 = time.perf_counter()
        try:
            u_h = fem.solve(mesh, problem)
            G = recover(recovery_method, mesh, u_h, surface=problem.surface)
            ind = estimate(mesh, u_h, G)
            De = kappa = De_rec = None
            if compute_error:
                norms = fem.error_norms(mesh, problem, u_h, recovered=G)
                De, De_rec = norms.De, norms.De_recovered
                kappa = ind.eta / De if De > 0 else float("inf")
            last = mesh.dof > max_dof or it == max_iterations - 1
            marked = np.zeros(0, dtype=np.int64) if last else dorfler_mark(ind, theta)
        except PPPRError as exc:
            raise StageError(f"iteration {it}: {exc}", stage=it, cause=exc) from exc
        step = AdaptiveStep(it, mesh, u_h, G, ind, kappa, De, De_rec, marked,
                            1e3 * (time.perf_counter() - t0))
        history.append(step)
        if callback is not None:
            callback(step)
        if last:
            break
        try:
            mesh = bisect_marked(mesh, marked, surface=problem.surface)
        except PPPRError as exc:
            raise StageError(f"iteration {it}: {exc}", stage=it, cause=exc) from exc
    return history
