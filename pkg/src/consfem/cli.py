"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 precondition failure (bad mesh or
unsupported space), 3 solver failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import experiments as ex
from .mesh import MeshError, counts_and_layers, write_mesh
from .solvers import SolverError
from .spaces import BasisConsistencyError, SpaceError

EXIT_USAGE, EXIT_PRECONDITION, EXIT_SOLVER = 1, 2, 3
MESH_KINDS = ("appendix_hexagon", "square_crisscross", "square_diagonal", "example2", "perturbed")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p, pairs, default_pair, refine=3, gen="appendix_hexagon"):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--gen", choices=MESH_KINDS, default=None,
                     help=f"generated initial mesh (default {gen})")
    src.add_argument("--in", dest="input", metavar="PATH", help="read the initial mesh from PATH")
    p.set_defaults(default_gen=gen)
    p.add_argument("--n", type=int, default=2, help="subdivisions for square meshes")
    p.add_argument("--magnitude", type=float, default=0.1, help="vertex jitter for perturbed meshes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--refine", type=int, default=refine, help="number of uniform refinements")
    p.add_argument("--start", type=int, default=0, help="first refinement level reported")
    if pairs:
        p.add_argument("--pair", choices=pairs, default=default_pair)
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")


def build_parser():
    parser = _Parser(prog="consfem", description="Divergence-free finite element experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mesh", help="generate or read a mesh, refine it and report counts")
    _common(p, None, None, refine=0)

    p = sub.add_parser("stokes-solve", help="single Stokes solve with a manufactured solution")
    _common(p, ("el-p0", "sbdfm-p1"), "el-p0", refine=0, gen="square_crisscross")
    p.add_argument("--epsilon", type=float, default=1.0)

    p = sub.add_parser("stokes-conv", help="Stokes convergence study")
    _common(p, ("el-p0", "sbdfm-p1"), "el-p0", refine=3, gen="square_crisscross")
    p.add_argument("--epsilon", type=float, default=1.0)

    p = sub.add_parser("stokes-eig", help="smallest Stokes eigenvalues under refinement")
    _common(p, ("sbdfm-p1", "el-p0"), "sbdfm-p1", refine=3)
    p.add_argument("--k", type=int, default=6)

    p = sub.add_parser("infsup", help="discrete inf-sup constants under refinement")
    _common(p, ("p1-p0", "el-p0", "sbdfm-p1"), "p1-p0", refine=3)

    p = sub.add_parser("biharmonic", help="biharmonic convergence study")
    _common(p, None, None, refine=3, gen="square_crisscross")
    p.add_argument("--zero-load", action="store_true", help="use g = 0 (exact solution 0)")
    return parser


def _config(args):
    return ex.StudyConfig(
        command=args.command, gen=None if args.input else (args.gen or args.default_gen),
        input=args.input, n=args.n, magnitude=args.magnitude, seed=args.seed,
        refine=args.refine, start=args.start, pair=getattr(args, "pair", None) or "el-p0",
        epsilon=getattr(args, "epsilon", 1.0), k=getattr(args, "k", 6), out=args.out)


def _meta(cfg, base):
    c = counts_and_layers(base)
    src = f"file {cfg.input}" if cfg.input else f"generated {cfg.gen}"
    meta = {"command": cfg.command, "mesh": src, "refine": cfg.refine, "start": cfg.start,
            "base_vertices": c.n_vertices, "base_interior_vertices": c.n_interior_vertices,
            "base_edges": c.n_edges, "base_cells": c.n_cells,
            "interior_connectivity": "ok" if c.assumption1 else "violated"}
    if cfg.command in ("stokes-solve", "stokes-conv", "stokes-eig", "infsup"):
        meta["pair"] = cfg.pair
    if cfg.command in ("stokes-solve", "stokes-conv"):
        meta["epsilon"] = repr(cfg.epsilon)
    if cfg.command == "stokes-eig":
        meta["k"] = cfg.k
    return meta


def _mesh_report(cfg, base, args):
    tri = ex.levels(base, cfg.refine, cfg.refine)[0][1]
    c = counts_and_layers(tri)
    if cfg.out:
        write_mesh(tri, cfg.out)
    cols = ["level", "vertices", "interior_vertices", "edges", "interior_edges", "cells",
            "interior_cells", "layers", "cell_identity", "h", "interior_connectivity"]
    vals = [cfg.refine, c.n_vertices, c.n_interior_vertices, c.n_edges, c.n_interior_edges,
            c.n_cells, c.n_interior_cells, c.number_of_layers, int(c.cell_identity),
            f"{tri.h():.10g}", int(c.assumption1)]
    lines = [f"# {k}: {v}" for k, v in _meta(cfg, base).items()]
    if not c.assumption1:
        lines.append("# warning: interior connectivity violated; "
                     "divergence-free bases are unavailable on this mesh")
    lines += [",".join(cols), ",".join(str(v) for v in vals)]
    sys.stdout.write("\n".join(lines) + "\n")


def run(args):
    cfg = _config(args)
    base = ex.base_mesh(cfg)
    if cfg.command == "mesh":
        _mesh_report(cfg, base, args)
        return
    if cfg.command == "stokes-solve":
        tri = ex.levels(base, cfg.refine, cfg.refine)[0][1]
        ex.require_assumption1(tri)
        r = ex.stokes_single(tri, cfg.pair, cfg.epsilon)
        res = ex.StudyResult([dict(level=cfg.refine, h=tri.h(), u_h1=r["h1"], u_l2=r["l2"],
                                   div_l2=r["div"], p_l2=r["p_l2"], residual=r["residual"])],
                             ["level", "h", "u_h1", "u_l2", "div_l2", "p_l2", "residual"])
    elif cfg.command == "stokes-conv":
        res = ex.stokes_convergence(base, cfg.refine, cfg.pair, cfg.epsilon, cfg.start)
    elif cfg.command == "stokes-eig":
        res = ex.eigen_study(base, cfg.refine, cfg.pair, cfg.k, cfg.start)
    elif cfg.command == "infsup":
        res = ex.infsup_study(base, cfg.refine, cfg.pair, cfg.start)
    elif cfg.command == "biharmonic":
        res = ex.biharmonic_study(base, cfg.refine, cfg.start, zero=args.zero_load)
    text = ex.format_csv(res, _meta(cfg, base))
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code
    try:
        with np.errstate(all="ignore"):
            run(args)
    except ValueError as e:
        if isinstance(e, (MeshError, SpaceError)):
            print(f"consfem: precondition failed: {e}", file=sys.stderr)
            return EXIT_PRECONDITION
        print(f"consfem: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError,) as e:
        print(f"consfem: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, BasisConsistencyError) as e:
        print(f"consfem: solver failed: {e}", file=sys.stderr)
        return EXIT_SOLVER
    return 0


if __name__ == "__main__":
    sys.exit(main())
