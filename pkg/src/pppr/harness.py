"""Experiment drivers: uniform convergence studies and adaptive runs."""

from __future__ import annotations

import csv
import math
import os
import time
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from . import fem
from .errors import ConfigError, PPPRError, StageError
from .estimator import adaptive_solve, estimate
from .mesh import chevron_torus_mesh, export_mesh, import_mesh, projected_icosphere, uniform_refine
from .recovery import RECOVERY_METHODS, recover
from .surfaces import PROBLEMS, get_problem

DEFAULT_METHODS = ("pppr", "ppr-exact", "ppr-avg", "sa", "wa")

# Initial icosphere level per surface for icosphere-based runs.
ICOSPHERE_BASE = {"highcurv": 3, "sphere": 2, "dziuk": 2}


@dataclass
class ExperimentConfig:
    problem: str = "torus_xy"
    mesh: str = "auto"
    levels: int = 5
    start_level: int = 0
    recovery: tuple = DEFAULT_METHODS
    estimator_recovery: str = "pppr"
    source: str = "fem"
    max_norm: bool = False
    theta: float = 0.3
    max_dof: int = 50000
    initial_level: Optional[int] = None
    out: str = "results"
    seed: int = 0
    compute_error: bool = True

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        if self.levels < 1:
            raise ConfigError("level range is empty (levels must be >= 1)")
        if self.start_level < 0:
            raise ConfigError("start_level must be >= 0")
        bad = [m for m in self.recovery if m not in RECOVERY_METHODS]
        if bad or not self.recovery:
            raise ConfigError(f"unknown recovery method(s) {bad}; choose from {list(RECOVERY_METHODS)}")
        if self.estimator_recovery not in RECOVERY_METHODS:
            raise ConfigError(f"unknown estimator recovery {self.estimator_recovery!r}")
        if self.source not in ("fem", "interpolant"):
            raise ConfigError("source must be 'fem' or 'interpolant'")
        if not 0.0 < self.theta < 1.0:
            raise ConfigError(f"theta must lie in (0, 1), got {self.theta}")
        if self.max_dof < 1:
            raise ConfigError("max_dof must be positive")
        return self

    @classmethod
    def from_mapping(cls, values):
        """Build from string values (config file or CLI), converting types."""
        kinds = {f.name: f.type for f in fields(cls)}
        out = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in kinds:
                raise ConfigError(f"unknown config key {key!r}")
            out[key] = _convert(key, kinds[key], raw)
        return cls(**out)

    @classmethod
    def from_file(cls, path, **overrides):
        values = read_config_file(path)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(values)

    def with_overrides(self, **overrides):
        extra = ExperimentConfig.from_mapping({k: v for k, v in overrides.items() if v is not None})
        given = {k.replace("-", "_") for k, v in overrides.items() if v is not None}
        return replace(self, **{k: getattr(extra, k) for k in given})


def _convert(key, kind, raw):
    if not isinstance(raw, str):
        return tuple(raw) if key == "recovery" else raw
    raw = raw.strip()
    try:
        if key == "recovery":
            return tuple(m.strip() for m in raw.split(",") if m.strip())
        if kind in ("bool", bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind in ("int", int):
            return int(raw)
        if kind in ("float", float):
            return float(raw)
        if kind == "Optional[int]":
            return None if raw.lower() in ("", "none") else int(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for config key {key!r}") from None
    return raw


def read_config_file(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


# ---------------------------------------------------------------------------
# meshes


def mesh_sequence(config):
    """Meshes for levels ``start_level .. start_level + levels - 1``."""
    problem = get_problem(config.problem)
    surf = problem.surface
    source = config.mesh
    first, last = config.start_level, config.start_level + config.levels
    if source == "auto":
        source = "chevron" if surf.name == "torus" else "icosphere"
    if source == "chevron":
        if surf.name != "torus":
            raise ConfigError("the chevron generator only produces torus meshes")
        # each level is generated directly; it is the uniform refinement of the previous one
        for level in range(first, last):
            yield level, chevron_torus_mesh(20 * 2**level, 10 * 2**level)
        return
    if source == "icosphere":
        base = config.initial_level if config.initial_level is not None else ICOSPHERE_BASE.get(surf.name, 2)
        mesh = projected_icosphere(base, surf)
    else:
        mesh = import_mesh(source)
    for level in range(last):
        if level >= first:
            yield level, mesh
        if level + 1 < last:
            mesh = uniform_refine(mesh, surf)


def initial_adaptive_mesh(config):
    problem = get_problem(config.problem)
    surf = problem.surface
    if config.mesh in ("auto", "icosphere"):
        level = config.initial_level if config.initial_level is not None else 2
        return projected_icosphere(level, surf)
    if config.mesh == "chevron":
        return chevron_torus_mesh(20 * 2**config.start_level, 10 * 2**config.start_level)
    return import_mesh(config.mesh)


# ---------------------------------------------------------------------------
# convergence


def compute_orders(errors, dofs):
    """Orders in Dof: ``log(e[l-1]/e[l]) / log(Dof[l]/Dof[l-1])``; first entry ``None``."""
    if len(errors) != len(dofs):
        raise ValueError("errors and dofs differ in length")
    if not errors:
        return []
    orders = [None]
    for l in range(1, len(errors)):
        e0, e1, d0, d1 = errors[l - 1], errors[l], dofs[l - 1], dofs[l]
        if e0 is None or e1 is None or e0 <= 0 or e1 <= 0 or d1 == d0:
            orders.append(None)
        else:
            orders.append(math.log(e0 / e1) / math.log(d1 / d0))
    return orders


@dataclass
class ConvergenceRecord:
    problem: str
    methods: tuple
    rows: list = field(default_factory=list)
    csv_path: Optional[str] = None

    def error_columns(self):
        cols = ["De", "De_I"] + [f"De_{m}" for m in self.methods]
        if self.rows and "Max_" + self.methods[0] in self.rows[0]:
            cols += [f"Max_{m}" for m in self.methods]
        return cols

    def column(self, name):
        return [r.get(name) for r in self.rows]

    def orders(self, name):
        return compute_orders(self.column(name), self.column("Dof"))

    @property
    def columns(self):
        cols = ["level", "Dof", "h_max"]
        for c in self.error_columns():
            cols += [c, f"{c}_order"]
        cols += ["eta", "kappa", "wall_time_ms"]
        return cols

    def table(self):
        """Rows with the order columns filled in."""
        out = [dict(r) for r in self.rows]
        for c in self.error_columns():
            for r, o in zip(out, self.orders(c)):
                r[f"{c}_order"] = o
        return out


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.10e}"


def write_csv(path, columns, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])


def convergence_row(level, mesh, problem, config):
    t0 = time.perf_counter()
    u_h = fem.solve(mesh, problem)
    data = fem.interpolate(mesh, problem) if config.source == "interpolant" else u_h
    ref = fem.gradient_reference(mesh, problem)
    norms = fem.error_norms(mesh, problem, u_h, ref=ref)
    row = {"level": level, "Dof": mesh.dof, "h_max": mesh.h_max, "De": norms.De, "De_I": norms.De_I}
    recovered = {}
    for m in config.recovery:
        G = recover(m, mesh, data, surface=problem.surface)
        recovered[m] = G
        row[f"De_{m}"] = fem.l2_error_nodal(mesh, ref, G)
        if config.max_norm:
            row[f"Max_{m}"] = fem.max_error_nodal(ref, G)
    est = config.estimator_recovery
    G = recovered[est] if (est in recovered and config.source == "fem") else recover(est, mesh, u_h, surface=problem.surface)
    eta = estimate(mesh, u_h, G).eta
    row["eta"] = eta
    row["kappa"] = eta / norms.De if norms.De > 0 else None
    row["wall_time_ms"] = 1e3 * (time.perf_counter() - t0)
    return row


def run_convergence(config, write=True, log=None):
    """Uniform refinement study; returns a :class:`ConvergenceRecord` and writes its CSV."""
    config.validate()
    problem = get_problem(config.problem)
    record = ConvergenceRecord(config.problem, tuple(config.recovery))
    for level, mesh in mesh_sequence(config):
        try:
            row = convergence_row(level, mesh, problem, config)
        except PPPRError as exc:
            raise StageError(f"level {level}: {exc}", stage=level, cause=exc) from exc
        record.rows.append(row)
        if log:
            log(f"level {level}: Dof={row['Dof']} De={row['De']:.4e} wall={row['wall_time_ms']:.0f} ms")
    if write:
        path = os.path.join(config.out, f"convergence_{config.problem}.csv")
        write_csv(path, record.columns, record.table())
        record.csv_path = path
    return record


def format_table(record):
    cols = ["Dof"]
    for c in record.error_columns():
        cols += [c, "order"]
    lines = ["  ".join(f"{c:>11}" for c in cols)]
    for r in record.table():
        cells = [f"{r['Dof']:>11d}"]
        for c in record.error_columns():
            o = r[f"{c}_order"]
            cells += [f"{r[c]:>11.3e}", f"{o:>11.2f}" if o is not None else " " * 11]
        lines.append("  ".join(cells))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# adaptive

ADAPT_COLUMNS = ["iteration", "Dof", "eta", "De", "kappa", "De_recovered", "marked_count", "wall_time_ms"]


def run_adaptive(config, write=True, log=None):
    """Adaptive loop; writes the per-iteration CSV and a VTK of the final mesh."""
    config.validate()
    problem = get_problem(config.problem)
    mesh = initial_adaptive_mesh(config)

    def cb(step):
        if log:
            k = f"{step.kappa:.4f}" if step.kappa is not None else "-"
            log(f"iter {step.iteration}: Dof={step.dof} eta={step.indicator.eta:.4e} kappa={k}")

    history = adaptive_solve(problem, mesh, theta=config.theta, max_dof=config.max_dof,
                             recovery_method=config.estimator_recovery,
                             compute_error=config.compute_error, callback=cb)
    rows = [
        {
            "iteration": s.iteration, "Dof": s.dof, "eta": s.indicator.eta, "De": s.De, "kappa": s.kappa,
            "De_recovered": s.De_recovered, "marked_count": len(s.marked), "wall_time_ms": s.wall_time_ms,
        }
        for s in history
    ]
    if write:
        base = os.path.join(config.out, f"adapt_{config.problem}")
        write_csv(base + ".csv", ADAPT_COLUMNS, rows)
        last = history[-1]
        export_mesh(last.mesh, base + "_final.vtk",
                    point_data={"u_h": last.u_h, "recovered_gradient": last.recovered},
                    cell_data={"eta": last.indicator.eta_local})
    return history, rows
