"""Command-line entry point: ``pppr {converge,adapt,selftest,export}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import PPPRError
from .harness import ExperimentConfig, format_table, run_adaptive, run_convergence
from .mesh import chevron_torus_mesh, export_mesh, import_mesh, projected_icosphere
from .selftest import run_selftest
from .surfaces import get_surface

log = logging.getLogger("pppr")


def _add_common(p):
    p.add_argument("--config", help="flat key = value config file; flags override it")
    p.add_argument("--problem")
    p.add_argument("--mesh", help="'auto', 'chevron', 'icosphere' or a path to an OFF/OBJ mesh")
    p.add_argument("--initial-level", dest="initial_level", help="icosphere level of the initial mesh")
    p.add_argument("--recovery", help="comma-separated methods: pppr, ppr-exact, ppr-avg, sa, wa")
    p.add_argument("--estimator-recovery", dest="estimator_recovery")
    p.add_argument("--out")
    p.add_argument("--seed")
    p.add_argument("--threads", type=int, help="worker threads for recovery (sets PPPR_THREADS)")


def build_parser():
    parser = argparse.ArgumentParser(prog="pppr", description="Gradient recovery on triangulated surfaces.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("converge", help="uniform refinement study, writes convergence_<problem>.csv")
    _add_common(conv)
    conv.add_argument("--levels")
    conv.add_argument("--start-level", dest="start_level")
    conv.add_argument("--source", choices=["fem", "interpolant"], help="recover from u_h or from the interpolant")
    conv.add_argument("--max-norm", dest="max_norm", action="store_const", const="true", help="add max-norm columns")

    ad = sub.add_parser("adapt", help="adaptive run, writes adapt_<problem>.csv and a final VTK")
    _add_common(ad)
    ad.add_argument("--theta")
    ad.add_argument("--max-dof", dest="max_dof")
    ad.add_argument("--no-error", dest="compute_error", action="store_const", const="false",
                    help="skip the exact error (timing runs)")

    st = sub.add_parser("selftest", help="run the invariant and oracle checks")
    st.add_argument("--seed", type=int, default=0)

    ex = sub.add_parser("export", help="convert or generate a mesh")
    ex.add_argument("--mesh", required=True,
                    help="OFF/OBJ path, 'chevron:NU:NV' or 'icosphere:LEVEL[:SURFACE]'")
    ex.add_argument("--format", choices=["off", "obj", "vtk"], help="default: from --out, else vtk")
    ex.add_argument("--out", help="output path (default: input stem with the new extension)")
    return parser


_CONFIG_KEYS = ("problem", "mesh", "initial_level", "recovery", "estimator_recovery", "out", "seed",
                "levels", "start_level", "source", "max_norm", "theta", "max_dof", "compute_error")


def _config_from_args(args):
    overrides = {k: getattr(args, k) for k in _CONFIG_KEYS if getattr(args, k, None) is not None}
    if args.config:
        return ExperimentConfig.from_file(args.config, **overrides)
    return ExperimentConfig.from_mapping(overrides)


def _load_mesh_arg(text):
    parts = text.split(":")
    if parts[0] == "chevron" and len(parts) == 3:
        return chevron_torus_mesh(int(parts[1]), int(parts[2])), f"chevron_{parts[1]}x{parts[2]}"
    if parts[0] == "icosphere" and len(parts) in (2, 3):
        surf = get_surface(parts[2]) if len(parts) == 3 else None
        name = f"icosphere{parts[1]}" + (f"_{parts[2]}" if surf else "")
        return projected_icosphere(int(parts[1]), surf), name
    return import_mesh(text), os.path.splitext(text)[0]


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "threads", None):
        os.environ["PPPR_THREADS"] = str(args.threads)
    try:
        if args.command == "converge":
            cfg = _config_from_args(args)
            record = run_convergence(cfg, log=log.info)
            print(format_table(record))
            print(f"wrote {record.csv_path}")
        elif args.command == "adapt":
            cfg = _config_from_args(args)
            history, _ = run_adaptive(cfg, log=log.info)
            last = history[-1]
            kappa = f"{last.kappa:.4f}" if last.kappa is not None else "-"
            print(f"{len(history)} iterations, final Dof {last.dof}, eta {last.indicator.eta:.4e}, kappa {kappa}")
            print(f"wrote {os.path.join(cfg.out, 'adapt_' + cfg.problem + '.csv')}")
        elif args.command == "selftest":
            results = run_selftest(seed=args.seed)
            return 0 if all(r.passed for r in results) else 1
        elif args.command == "export":
            mesh, stem = _load_mesh_arg(args.mesh)
            fmt = args.format
            if fmt is None:
                ext = os.path.splitext(args.out or "")[1].lower().lstrip(".")
                fmt = ext if ext in ("off", "obj", "vtk") else "vtk"
            out = args.out or f"{stem}.{fmt}"
            export_mesh(mesh, out, fmt=fmt)
            print(f"wrote {out} ({mesh.n_vertices} vertices, {mesh.n_triangles} triangles)")
    except (PPPRError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
