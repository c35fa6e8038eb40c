"""Command line front end: ``confsphere <command> ...``.

Exit codes: 0 success, 2 parse/IO or usage, 3 validation, 4 solver failure,
5 certificate failure.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__
from .errors import ConfsphereError, ParseError
from .generators import random_factor
from .graph import Graph, isoperimetric_constant
from .io import (
    ProblemFile,
    dumps,
    fmt,
    lengths_from_positions,
    load_input,
    parse_marks,
    read_mesh,
    write_csv,
)
from .mesh import Flavor, MetricMesh, Triangulation
from .scaling import fd_jacobian_check
from .stereo import InscribedPolyhedron
from .surfaces import CSV_HEADER, convergence_experiment
from .uniformizer import uniformize

JACOBIAN_TOL = 1e-5


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            with open(path, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise ParseError(f"cannot write {path}: {exc.strerror}") from None


def parse_levels(text):
    """``a..b`` (inclusive) or a comma list."""
    try:
        if ".." in text:
            a, b = text.split("..")
            levels = list(range(int(a), int(b) + 1))
        else:
            levels = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level range {text!r}") from None
    if not levels:
        raise argparse.ArgumentTypeError(f"empty level range {text!r}")
    return levels


# -- commands ------------------------------------------------------------------


def cmd_uniformize(args):
    marks = parse_marks(args.marks) if args.marks else None
    if args.input.lower().endswith(".json"):
        pf = ProblemFile.load(args.input)
        problem, _ = pf.build(marks, args.length_interpretation)
        opts = pf.solver_options()
    else:
        problem, _ = load_input(args.input, marks, args.length_interpretation)
        opts = None
    result = uniformize(problem, method=args.method, options=opts)
    diag = dict(result.diagnostics)
    out = {
        "marks": {"X": problem.X, "Y": problem.Y, "Z": problem.Z},
        "u": result.u,
        "psi": result.psi,
        "diagnostics": diag,
    }
    _emit(dumps(out), args.out)
    return 0


def cmd_converge(args):
    table = convergence_experiment(
        args.phi, args.levels, mode=args.mode, method=args.method, samples=args.samples, jobs=args.jobs
    )
    rows = [r.as_csv_row() for r in table.rows]
    if args.out in (None, "-"):
        write_csv(sys.stdout, CSV_HEADER, rows)
    else:
        try:
            with open(args.out, "w", newline="") as fh:
                write_csv(fh, CSV_HEADER, rows)
        except OSError as exc:
            raise ParseError(f"cannot write {args.out}: {exc.strerror}") from None
    return 0


def _mesh_input(path):
    if path.lower().endswith(".json"):
        return ProblemFile.load(path).mesh_data()
    return read_mesh(path)


def cmd_verify(args):
    pos, faces = _mesh_input(args.input)
    P = InscribedPolyhedron(pos, Triangulation(faces, len(pos)))
    summary = P.certificates().summary()
    if args.json:
        _emit(dumps(summary), None)
    else:
        for name, ok in summary["checks"].items():
            print(f"{name:22s} {'PASS' if ok else 'FAIL'}")
        for key in ("norm_error", "min_dihedral_margin", "min_circumcircle_margin", "origin_margin", "dictionary_error"):
            print(f"{key:22s} {fmt(summary[key])}")
        print("overall", "PASS" if summary["ok"] else "FAIL")
    return 0 if summary["ok"] else 5


def cmd_jacobian_check(args):
    pos, faces = _mesh_input(args.input)
    tri = Triangulation(faces, len(pos))
    mesh = MetricMesh(tri, lengths_from_positions(tri, pos, "chord"), Flavor.EUCLIDEAN)
    rng = np.random.default_rng(args.seed)
    u = random_factor(rng, mesh, args.u_scale)
    err = fd_jacobian_check(mesh, u, args.h)
    ok = err < JACOBIAN_TOL
    if args.json:
        _emit(dumps({"max_relative_discrepancy": err, "h": args.h, "ok": ok}), None)
    else:
        print(f"max relative discrepancy {fmt(err)} ({'PASS' if ok else 'FAIL'} < {JACOBIAN_TOL:g})")
    return 0 if ok else 4


def _graph_input(path, unit):
    """Graph and edge lengths from a mesh file or a JSON graph
    ``{"n": 3, "edges": [[0, 1], ...], "lengths": [...]}``."""
    if path.lower().endswith(".json"):
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: {exc}") from None
        if "edges" in data:
            g = Graph(int(data["n"]), np.asarray(data["edges"], dtype=np.int64).reshape(-1, 2))
            lengths = np.asarray(data.get("lengths", np.ones(len(g.edges))), dtype=float)
            return g, (np.ones(len(g.edges)) if unit else lengths)
    pos, faces = _mesh_input(path)
    tri = Triangulation(faces, len(pos))
    g = Graph.from_triangulation(tri)
    lengths = np.ones(len(g.edges)) if unit else lengths_from_positions(tri, pos, "chord")
    return g, lengths


def cmd_isoperimetric(args):
    g, lengths = _graph_input(args.input, args.unit_lengths)
    mode = "exhaustive" if args.exhaustive else "sampled"
    C = isoperimetric_constant(g, lengths, mode=mode, n_samples=args.samples, seed=args.seed)
    if args.json:
        _emit(dumps({"C": C, "mode": mode, "n_vertices": g.n}), None)
    else:
        bound = "" if args.exhaustive else " (lower bound)"
        print(f"isoperimetric constant C = {fmt(C)}{bound}")
    return 0


# -- parser --------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="confsphere", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    u = sub.add_parser("uniformize", help="uniformize a marked spherical mesh")
    u.add_argument("--input", required=True, help="problem .json, or an .off/.obj mesh")
    u.add_argument("--marks", help="X,Y,Z vertex indices (overrides the problem file)")
    u.add_argument("--method", choices=["newton", "continuation"])
    u.add_argument("--length-interpretation", choices=["arc", "chord"])
    u.add_argument("--out", help="output JSON path (default stdout)")
    u.set_defaults(fn=cmd_uniformize)

    c = sub.add_parser("converge", help="convergence table on octasphere test surfaces")
    c.add_argument("--phi", required=True, help="affine expression in x, y, z")
    c.add_argument("--levels", required=True, type=parse_levels, help="a..b or a,b,c")
    c.add_argument("--mode", choices=["vertex_scaled", "integrated"], default="vertex_scaled")
    c.add_argument("--method", choices=["newton", "continuation"], default="newton")
    c.add_argument("--samples", type=int, default=8, help="samples per edge for integrated mode")
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--seed", type=int, default=0, help="unused; the experiment is deterministic")
    c.add_argument("--out", help="output CSV path (default stdout)")
    c.set_defaults(fn=cmd_converge)

    v = sub.add_parser("verify", help="certificates of an inscribed convex polyhedron")
    v.add_argument("--input", required=True)
    v.add_argument("--json", action="store_true")
    v.set_defaults(fn=cmd_verify)

    j = sub.add_parser("jacobian-check", help="finite-difference check of dK/du")
    j.add_argument("--input", required=True)
    j.add_argument("--seed", type=int, default=0)
    j.add_argument("--u-scale", type=float, default=0.2)
    j.add_argument("--h", type=float, default=1e-5)
    j.add_argument("--json", action="store_true")
    j.set_defaults(fn=cmd_jacobian_check)

    i = sub.add_parser("isoperimetric", help="isoperimetric constant of a mesh graph")
    i.add_argument("--input", required=True, help="mesh file or JSON graph")
    i.add_argument("--exhaustive", action="store_true")
    i.add_argument("--unit-lengths", action="store_true")
    i.add_argument("--samples", type=int, default=64)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--json", action="store_true")
    i.set_defaults(fn=cmd_isoperimetric)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfsphereError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
