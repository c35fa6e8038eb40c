"""Mesh files, problem files and deterministic JSON/CSV emission.

OFF is the canonical mesh format; OBJ is read only (``v`` and triangular
``f`` records). Floats are always written with 17 significant digits so
that output round-trips exactly and is byte-identical across runs.
"""

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CoincidentMarks, ParseError, ValidationError
from .mesh import Flavor, MetricMesh, Triangulation
from .surfaces import ConformalTestSurface, metric_lengths, octasphere, round_arcs
from .uniformizer import SolverOptions, UniformizationProblem


def fmt(x):
    return format(float(x), ".17g")


# -- OFF / OBJ ---------------------------------------------------------------


def _data_lines(text):
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            yield line


def parse_off(text):
    """``(positions, faces)`` from OFF text. Only triangles are accepted."""
    lines = list(_data_lines(text))
    if not lines or not lines[0].startswith("OFF"):
        raise ParseError("missing OFF header")
    head = lines[0][3:].split()
    rest = lines[1:]
    if not head:
        if not rest:
            raise ParseError("missing OFF counts line")
        head, rest = rest[0].split(), rest[1:]
    try:
        nv, nf = int(head[0]), int(head[1])
    except (ValueError, IndexError):
        raise ParseError(f"bad OFF counts line {' '.join(head)!r}") from None
    if nv < 0 or nf < 0 or len(rest) < nv + nf:
        raise ParseError(f"OFF declares {nv} vertices and {nf} faces, found {len(rest)} records")
    try:
        pos = np.array([[float(t) for t in rest[k].split()[:3]] for k in range(nv)], dtype=float)
    except ValueError as exc:
        raise ParseError(f"bad OFF vertex record: {exc}") from None
    if nv and pos.shape != (nv, 3):
        raise ParseError("OFF vertex records need three coordinates")
    faces = []
    for rec in rest[nv : nv + nf]:
        tok = rec.split()
        try:
            vals = [int(t) for t in tok[:4]]
        except ValueError:
            raise ParseError(f"bad OFF face record {rec!r}") from None
        if len(vals) < 4 or vals[0] != 3:
            raise ParseError(f"only triangular faces are supported, got {rec!r}")
        faces.append(vals[1:4])
    faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
    if faces.size and (faces.min() < 0 or faces.max() >= nv):
        raise ParseError("face index out of range")
    return pos.reshape(nv, 3), faces


def format_off(positions, faces):
    positions = np.asarray(positions, dtype=float)
    faces = np.asarray(faces, dtype=np.int64)
    out = ["OFF", f"{len(positions)} {len(faces)} 0"]
    out += [" ".join(fmt(c) for c in p) for p in positions]
    out += ["3 " + " ".join(str(int(i)) for i in f) for f in faces]
    return "\n".join(out) + "\n"


def parse_obj(text):
    pos, faces = [], []
    for line in _data_lines(text):
        tok = line.split()
        try:
            if tok[0] == "v":
                pos.append([float(t) for t in tok[1:4]])
            elif tok[0] == "f":
                if len(tok) != 4:
                    raise ParseError(f"only triangular faces are supported, got {line!r}")
                faces.append([int(t.split("/")[0]) - 1 for t in tok[1:]])
        except ValueError:
            raise ParseError(f"bad OBJ record {line!r}") from None
    pos = np.array(pos, dtype=float).reshape(-1, 3)
    faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
    if faces.size and (faces.min() < 0 or faces.max() >= len(pos)):
        raise ParseError("face index out of range")
    return pos, faces


def _read_text(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None


def read_mesh(path):
    """``(positions, faces)`` from an OFF or OBJ file (chosen by extension)."""
    text = _read_text(path)
    if str(path).lower().endswith(".obj"):
        return parse_obj(text)
    return parse_off(text)


def write_off(path, positions, faces):
    with open(path, "w") as fh:
        fh.write(format_off(positions, faces))


# -- JSON / CSV ----------------------------------------------------------------


def _encode(obj):
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt(x) if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj):
    """JSON text with every float at 17 significant digits; non-finite -> null."""
    return _encode(obj) + "\n"


def write_csv(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else fmt(v) if isinstance(v, float) else v for v in row])


# -- problem files -------------------------------------------------------------


LENGTH_SOURCES = ("from_positions", "explicit", "surface")


@dataclass
class ProblemFile:
    """Mesh source, one edge-length source, marks and solver options.

    JSON layout::

        {"mesh": {"path": "m.off"} | {"builtin": "octasphere", "level": 2},
         "lengths": {"from_positions": "arc" | "chord"}
                  | {"explicit": {"0-1": 1.57, ...}}
                  | {"surface": {"phi": "0.3*z", "mode": "vertex_scaled"}},
         "marks": [X, Y, Z],
         "solver": {"method": "newton", "tol": 1e-10, "max_iter": 100}}
    """

    mesh: dict
    lengths: dict = field(default_factory=lambda: {"from_positions": "arc"})
    marks: tuple = None
    solver: dict = field(default_factory=dict)
    base_dir: str = "."

    @classmethod
    def from_dict(cls, data, base_dir="."):
        if not isinstance(data, dict) or "mesh" not in data:
            raise ParseError("problem file needs a 'mesh' entry")
        lengths = data.get("lengths", {"from_positions": "arc"})
        if not isinstance(lengths, dict) or len(lengths) != 1 or next(iter(lengths)) not in LENGTH_SOURCES:
            raise ValidationError(f"exactly one length source of {LENGTH_SOURCES} required")
        marks = data.get("marks")
        if isinstance(marks, dict):
            marks = [marks.get(k) for k in "XYZ"]
        if marks is not None:
            marks = tuple(int(m) for m in marks)
        return cls(data["mesh"], lengths, marks, dict(data.get("solver", {})), base_dir)

    @classmethod
    def load(cls, path):
        text = _read_text(path)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from None
        return cls.from_dict(data, os.path.dirname(os.path.abspath(path)))

    def mesh_data(self):
        """``(positions, faces)`` of the mesh source."""
        m = self.mesh
        if "path" in m:
            return read_mesh(os.path.join(self.base_dir, m["path"]))
        if m.get("builtin") == "octasphere":
            tri, pos = octasphere(int(m.get("level", 0)))
            return pos, tri.faces
        raise ParseError(f"unknown mesh source {m!r}")

    def solver_options(self):
        known = {"method", "tol", "max_iter", "continuation_steps", "dense_limit", "max_halvings"}
        bad = set(self.solver) - known
        if bad:
            raise ParseError(f"unknown solver options {sorted(bad)}")
        return SolverOptions(**self.solver)

    def build(self, marks=None, length_interpretation=None):
        """``(UniformizationProblem, positions)``."""
        pos, faces = self.mesh_data()
        tri = Triangulation(faces, len(pos))
        kind, spec = next(iter(self.lengths.items()))
        surface = None
        if kind == "from_positions":
            lengths = lengths_from_positions(tri, pos, length_interpretation or spec)
        elif kind == "explicit":
            lengths = explicit_lengths(tri, spec)
        else:
            surface = ConformalTestSurface(spec.get("phi", "0"))
            mode = spec.get("mode", "vertex_scaled")
            lengths = metric_lengths(tri, pos, surface.phi, mode, int(spec.get("samples", 8)))
        marks = marks or self.marks
        if marks is None:
            if surface is None:
                raise ValidationError("marks X,Y,Z are required")
            marks = surface.marks(pos)
        X, Y, Z = marks
        problem = UniformizationProblem(MetricMesh(tri, lengths, Flavor.SPHERICAL), X, Y, Z)
        return problem, pos


def lengths_from_positions(tri, positions, interpretation="arc"):
    """Edge lengths as great-circle arcs between the normalized positions
    (``arc``) or as straight chords (``chord``)."""
    positions = np.asarray(positions, dtype=float)
    if interpretation == "arc":
        return round_arcs(tri, positions)
    if interpretation == "chord":
        d = positions[tri.edges[:, 0]] - positions[tri.edges[:, 1]]
        return np.linalg.norm(d, axis=1)
    raise ValidationError(f"unknown length interpretation {interpretation!r}")


def explicit_lengths(tri, table):
    """Per-edge lengths from a ``{"i-j": value}`` map with ``i < j``."""
    out = np.full(len(tri.edges), np.nan)
    lookup = tri.edge_lookup()
    for key, val in table.items():
        try:
            i, j = (int(t) for t in key.split("-"))
        except ValueError:
            raise ParseError(f"bad edge key {key!r}") from None
        if i >= j:
            raise ParseError(f"edge key {key!r} must have i < j")
        if (i, j) not in lookup:
            raise ValidationError(f"{key} is not an edge of the mesh")
        out[lookup[(i, j)]] = float(val)
    if np.isnan(out).any():
        missing = tri.edges[np.isnan(out)][0]
        raise ValidationError(f"no length given for edge {missing[0]}-{missing[1]}")
    return out


def parse_marks(text):
    try:
        marks = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise ParseError(f"bad marks {text!r}") from None
    if len(marks) != 3:
        raise ParseError("marks need three indices X,Y,Z")
    if len(set(marks)) != 3:
        raise CoincidentMarks(f"marks {text} are not distinct")
    return marks


def load_input(path, marks=None, length_interpretation=None):
    """Problem file (``.json``) or a bare OFF/OBJ mesh with lengths from positions."""
    if str(path).lower().endswith(".json"):
        return ProblemFile.load(path).build(marks, length_interpretation)
    pf = ProblemFile(
        {"path": os.path.abspath(path)}, {"from_positions": length_interpretation or "arc"}, marks
    )
    return pf.build()
