"""Command-line front end.

Exit codes: 0 all residuals within tolerance, 1 some residual out of
tolerance, 2 configuration problem, 3 the construction refused the input
on numerical grounds (branch locus hit, non-closing circulation).
"""

from __future__ import annotations

import argparse
import sys

from .gaussmap import BranchPointError
from .grid import MaskTopologyError, StencilError
from .immersion import IntegrationRefusal
from .pipeline import (ConfigError, make_config, parse_config_file,
                       run_converge, run_export_catalog, run_integrate,
                       run_verify)

EXIT_PASS = 0
EXIT_RESIDUAL = 1
EXIT_CONFIG = 2
EXIT_REFUSAL = 3


def _common_flags(p: argparse.ArgumentParser, with_example: bool = True) -> None:
    if with_example:
        p.add_argument("--example", help="catalog surface name")
        p.add_argument("--expr-g1", dest="expr_g1", metavar="EXPR",
                       help="first Gauss map as an expression in u, v, i")
        p.add_argument("--expr-g2", dest="expr_g2", metavar="EXPR",
                       help="second Gauss map as an expression in u, v, i")
        p.add_argument("--domain", help="u_min,u_max,v_min,v_max")
        p.add_argument("--mode",
                       help="gauss map range check: strict_disc or "
                            "extended_plane")
        p.add_argument("--anchor", help="u,v of the integration base point")
    p.add_argument("--theta", help="tilt angle for tilted_reaper")
    p.add_argument("--h", help="target mesh spacing")
    p.add_argument("--out-dir", dest="out_dir", help="artifact directory")
    p.add_argument("--force", action="store_true", default=None,
                   help="integrate even when circulation refuses")
    p.add_argument("--config", help="key = value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="translator-forge",
        description="Build translating-soliton surfaces from prescribed "
                    "Gauss map pairs and verify the construction by "
                    "finite-difference residuals.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify",
                       help="run the full residual suite on one surface")
    _common_flags(p)
    p = sub.add_parser("integrate",
                       help="integrate a surface patch and export mesh data")
    _common_flags(p)
    p = sub.add_parser("converge",
                       help="repeat the residual suite at h, h/2, h/4")
    _common_flags(p)
    p = sub.add_parser("export-catalog",
                       help="write mesh and Gauss-map data for every "
                            "built-in example")
    _common_flags(p, with_example=False)
    return parser


_RUNNERS = {
    "verify": run_verify,
    "integrate": run_integrate,
    "converge": run_converge,
    "export-catalog": run_export_catalog,
}


def _flag_dict(args: argparse.Namespace) -> dict:
    keys = ("example", "theta", "expr_g1", "expr_g2", "h", "domain", "mode",
            "anchor", "out_dir", "force")
    return {k: getattr(args, k, None) for k in keys}


def _print_report(art) -> None:
    rep = art.report
    if rep is None:
        return
    g = rep.grid
    print(f"{rep.example}: {g.n_u} x {g.n_v} nodes, "
          f"h = ({g.h_u:.6g}, {g.h_v:.6g})")
    failures = art.evaluation.failures if art.evaluation else {}
    for name in sorted(rep.residuals):
        s = rep.residuals[name]
        line = f"  {name:20s} max {s.max:.3e}  l2 {s.l2:.3e}  nodes {s.nodes}"
        if name in failures:
            line += f"  FAIL (tol {failures[name][1]:.3e})"
        print(line)
    for name in sorted(rep.convergence):
        print(f"  {name:20s} decay ratio {rep.convergence[name]:.2f} "
              f"per halving")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = (parse_config_file(args.config)
                       if getattr(args, "config", None) else None)
        cfg = make_config(file_values,
                          need_example=args.command != "export-catalog",
                          **_flag_dict(args))
        art = _RUNNERS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationRefusal, BranchPointError, StencilError,
            MaskTopologyError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSAL

    _print_report(art)
    for path in art.paths:
        print(f"wrote {path}")
    if art.evaluation is not None and not art.evaluation.passed:
        print("FAIL: residuals exceed tolerance", file=sys.stderr)
        return EXIT_RESIDUAL
    print("PASS" if art.evaluation is not None else "done")
    return EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
