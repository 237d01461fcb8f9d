"""Command-line front end.

Subcommands mirror the library layers: ``mesh`` writes the plain-text
triangulation, ``singular`` reports the discrete dual pair, ``solve2d`` /
``solve3d`` run single solves on the manufactured problems, and
``converge`` produces rate tables as CSV.

A ``--config`` file (one ``key = value`` per line, ``#`` comments) can
override the solver knobs c_star, alpha0 and tol.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from .fem import assemble
from .fourier import PrismSpec, fscm_solve
from .geometry import make_l_section
from .mesh import save_mesh, triangulate
from .scm import ScmConfig, fem_solve, scm_solve
from .singular import build_singular_basis
from .verify import (a_norm_error, fit_slope, l_stack, problem_modal3d,
                     problem_regular2d, problem_singular2d, problem_singular3d,
                     ps_self_convergence)

_CONFIG_KEYS = {"c_star": float, "alpha0": float, "tol": float}


def read_config(path) -> ScmConfig:
    """Parse a key = value file into an ScmConfig."""
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {raw.rstrip()}")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"unknown config key: {key}")
            values[key] = _CONFIG_KEYS[key](val.strip())
    return ScmConfig(**values)


def _config_from(args) -> ScmConfig:
    if getattr(args, "config", None):
        return read_config(args.config)
    return ScmConfig()


def _problem_2d(name: str):
    factory = {"regular2d": problem_regular2d,
               "singular2d": problem_singular2d}
    if name not in factory:
        raise SystemExit(f"unknown 2D problem {name!r} "
                         f"(choose from {sorted(factory)})")
    return factory[name]()


def cmd_mesh(args) -> int:
    section = make_l_section()
    mesh = triangulate(section, args.n)
    save_mesh(mesh, args.out)
    print(f"wrote {mesh.n_points} vertices, {mesh.n_triangles} triangles "
          f"(h = {mesh.h:.6g}) to {args.out}")
    return 0


def cmd_singular(args) -> int:
    system, basis = l_stack(args.n)
    print(f"beta_star = {basis.beta_star:.12g}")
    print(f"ps_norm_sq = {basis.ps_norm_sq:.12g}")

    ns = []
    n = 8
    while n < args.n:
        ns.append(n)
        n *= 2
    writer = csv.writer(sys.stdout)
    writer.writerow(["n", "h", "beta_star", "h1_diff", "beta_diff"])
    if ns:
        h1_rep, beta_rep = ps_self_convergence(ns, ref_n=args.n)
        for i, m in enumerate(ns):
            _, b = l_stack(m)
            writer.writerow([m, f"{h1_rep.hs[i]:.8g}", f"{b.beta_star:.12g}",
                             f"{h1_rep.errors[i]:.6e}",
                             f"{beta_rep.errors[i]:.6e}"])
    writer.writerow([args.n, f"{system.mesh.h:.8g}",
                     f"{basis.beta_star:.12g}", "", ""])
    return 0


def cmd_solve2d(args) -> int:
    config = _config_from(args)
    problem = _problem_2d(args.problem)
    system, basis = l_stack(args.n)
    sysmu = system.with_mu(args.mu)
    sol = scm_solve(sysmu, basis, problem.source(args.mu), config)
    record = {
        "problem": args.problem,
        "n": args.n,
        "h": system.mesh.h,
        "mu": args.mu,
        "cH": sol.c,
        "threshold_applied": sol.threshold_applied,
        "beta_star": basis.beta_star,
        "a_error": a_norm_error(sol, problem),
        "h1_error": a_norm_error(sol, problem, mu=0.0),
    }
    json.dump(record, sys.stdout, indent=2)
    print()
    return 0


def cmd_solve3d(args) -> int:
    config = _config_from(args)
    section = make_l_section()
    if args.problem == "singular3d":
        problem = problem_singular3d(length=args.L, section=section)
    elif args.problem == "modal3d":
        problem = problem_modal3d(24, length=args.L, section=section)
    else:
        raise SystemExit(f"unknown 3D problem {args.problem!r} "
                         "(choose from ['modal3d', 'singular3d'])")
    prism = PrismSpec(section, args.L)
    mesh = triangulate(section, args.n)
    system = assemble(mesh)
    basis = build_singular_basis(system, section)
    sol = fscm_solve(prism, problem.source(), args.n, args.modes,
                     config=config, system=system, basis=basis)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "mu", "cH", "thresholdApplied", "mode_a_error"])
        for k, mode in enumerate(sol.modes, start=1):
            exact = problem.modes.get(k)
            err = ("" if exact is None
                   else f"{a_norm_error(mode, exact, mu=mode.mu):.6e}")
            writer.writerow([k, f"{mode.mu:.8g}", f"{mode.c:.10e}",
                             int(mode.threshold_applied), err])
    print(f"wrote {len(sol.modes)} mode rows to {args.out}")
    return 0


def _converge_rows_2d(method: str, levels: int, config: ScmConfig):
    problem = problem_singular2d()
    mu = math.pi**2
    rows = []
    errs, hs = [], []
    for i in range(levels):
        n = 8 * 2**i
        system, basis = l_stack(n)
        sysmu = system.with_mu(mu)
        f = problem.source(mu)
        if method == "scm":
            sol = scm_solve(sysmu, basis, f, config)
        else:
            sol = fem_solve(sysmu, f)
        a_err = a_norm_error(sol, problem)
        h1_err = a_norm_error(sol, problem, mu=0.0)
        errs.append(a_err)
        hs.append(system.mesh.h)
        slope = "" if i == 0 else f"{fit_slope(hs, errs):.4f}"
        rows.append([i, f"{system.mesh.h:.8g}", "", f"{a_err:.6e}",
                     f"{h1_err:.6e}", f"{sol.c:.10e}", slope])
    return rows


def _converge_rows_3d(levels: int, config: ScmConfig):
    from .verify import h1_error_3d

    problem = problem_modal3d(48)
    prism = PrismSpec(problem.modes[1].section, problem.length)
    f = problem.source()
    rows = []
    errs, hs = [], []
    for i in range(levels):
        n = 8 * 2**i
        system, basis = l_stack(n)
        n_modes = math.ceil(1.0 / system.mesh.h)
        sol = fscm_solve(prism, f, n, n_modes, config=config,
                         system=system, basis=basis)
        err = h1_error_3d(sol, problem)
        errs.append(err)
        hs.append(system.mesh.h)
        slope = "" if i == 0 else f"{fit_slope(hs, errs):.4f}"
        rows.append([i, f"{system.mesh.h:.8g}", n_modes, f"{err:.6e}",
                     f"{err:.6e}", f"{sol.modes[0].c:.10e}", slope])
    return rows


def cmd_converge(args) -> int:
    config = _config_from(args)
    if args.suite == "scm2d":
        rows = _converge_rows_2d("scm", args.levels,
                                 ScmConfig(c_star=math.inf,
                                           alpha0=config.alpha0,
                                           tol=config.tol))
    elif args.suite == "fem2d":
        rows = _converge_rows_2d("fem", args.levels, config)
    else:
        rows = _converge_rows_3d(args.levels, config)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "h", "N", "a_error", "h1_error", "cH",
                         "slope_running"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} levels to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fscm",
        description="Singular complement solver for the prism Laplacian")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="triangulate the L-shaped section")
    p.add_argument("--n", type=int, required=True,
                   help="subdivisions per unit length")
    p.add_argument("--out", required=True, help="output mesh path")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("singular",
                       help="discrete dual singular pair diagnostics")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_singular)

    p = sub.add_parser("solve2d", help="one screened-Poisson mode solve")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--problem", default="singular2d")
    p.add_argument("--config")
    p.set_defaults(func=cmd_solve2d)

    p = sub.add_parser("solve3d", help="Fourier mode loop on the prism")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--modes", type=int, required=True)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--problem", default="singular3d")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_solve3d)

    p = sub.add_parser("converge", help="convergence-rate table")
    p.add_argument("--suite", choices=["scm2d", "fem2d", "fscm3d"],
                   required=True)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
