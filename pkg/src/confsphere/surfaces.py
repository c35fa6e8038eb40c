"""Test surfaces with known uniformization and the convergence harness.

A test surface is the round sphere with the conformal metric
``exp(2 phi) g_round``. With marks X = N, Y = (1, 0, 0), Z = S the identity
followed by stereographic projection already normalizes the marks, so the
exact uniformization factor is ``-phi``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ArcTooLong, LevelTooLarge, MarksNotVertices, ValidationError
from .expr import LinearPhi, parse_phi
from .mesh import Flavor, MetricMesh, Triangulation, regularity
from .uniformizer import SolverOptions, UniformizationProblem, uniformize

MAX_LEVEL = 7
MAX_AMPLITUDE = 0.5

NORTH = (0.0, 0.0, 1.0)
SOUTH = (0.0, 0.0, -1.0)
EAST = (1.0, 0.0, 0.0)

_OCTA_VERTS = np.array(
    [[0, 0, 1], [0, 0, -1], [1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]], dtype=float
)
# outward oriented
_OCTA_FACES = np.array(
    [[0, 2, 3], [0, 3, 4], [0, 4, 5], [0, 5, 2], [1, 3, 2], [1, 4, 3], [1, 5, 4], [1, 2, 5]]
)


def _subdivide(pos, faces, level):
    for _ in range(level):
        pos_list = list(pos)
        mids = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in mids:
                m = pos_list[a] + pos_list[b]
                pos_list.append(m / np.linalg.norm(m))
                mids[key] = len(pos_list) - 1
            return mids[key]

        new = []
        for a, b, c in faces.tolist():
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        faces = np.array(new, dtype=np.int64)
        pos = np.array(pos_list)
    return Triangulation(faces, len(pos)), pos


def octasphere(level):
    """Octahedron refined ``level`` times by midpoint subdivision, each new
    vertex pushed to the unit sphere. Returns ``(Triangulation, positions)``."""
    if not 0 <= level <= MAX_LEVEL:
        raise LevelTooLarge(f"level must be in [0, {MAX_LEVEL}]")
    return _subdivide(_OCTA_VERTS.copy(), _OCTA_FACES.copy(), level)


def _icosahedron():
    # poles at +-z, rings at z = +-1/sqrt(5); rotated so that from level 1 on
    # (1, 0, 0) is a vertex (midpoint of an upper-lower ring edge)
    h = 1 / np.sqrt(5)
    r = 2 * h
    off = -np.pi / 10
    up = [(r * np.cos(off + 2 * np.pi * k / 5), r * np.sin(off + 2 * np.pi * k / 5), h) for k in range(5)]
    lo = [
        (r * np.cos(off + np.pi / 5 + 2 * np.pi * k / 5), r * np.sin(off + np.pi / 5 + 2 * np.pi * k / 5), -h)
        for k in range(5)
    ]
    pos = np.array([(0, 0, 1), (0, 0, -1)] + up + lo, dtype=float)
    faces = []
    for k in range(5):
        u0, u1 = 2 + k, 2 + (k + 1) % 5
        l0, l1 = 7 + k, 7 + (k + 1) % 5
        faces += [(0, u0, u1), (u0, l0, u1), (u1, l0, l1), (1, l1, l0)]
    return pos, np.array(faces, dtype=np.int64)


def icosphere(level):
    """Icosahedron with poles at +-z refined ``level`` times like
    :func:`octasphere`; vertex count ``10 * 4**level + 2``."""
    if not 0 <= level <= MAX_LEVEL:
        raise LevelTooLarge(f"level must be in [0, {MAX_LEVEL}]")
    pos, faces = _icosahedron()
    return _subdivide(pos, faces, level)


def round_arcs(tri, positions):
    p, q = positions[tri.edges[:, 0]], positions[tri.edges[:, 1]]
    return np.arctan2(np.linalg.norm(np.cross(p, q), axis=1), np.einsum("ij,ij->i", p, q))


def _slerp(p, q, t, arc):
    s = np.sin(arc)[:, None]
    return (np.sin((1 - t) * arc)[:, None] * p + np.sin(t * arc)[:, None] * q) / s


def metric_lengths(tri, positions, phi, mode="vertex_scaled", samples=8):
    """Edge lengths of the metric ``exp(2 phi) g_round``.

    ``vertex_scaled``: ``exp((phi_i + phi_j)/2) d_round(i, j)``.
    ``integrated``: composite midpoint rule for ``int exp(phi) ds`` along the
    round great-circle arc with ``samples`` points.
    Both approximate the true geodesic length to third order in the edge length.
    """
    positions = np.asarray(positions, dtype=float)
    arc = round_arcs(tri, positions)
    p, q = positions[tri.edges[:, 0]], positions[tri.edges[:, 1]]
    if mode == "vertex_scaled":
        vals = phi(positions)
        lengths = np.exp(0.5 * (vals[tri.edges[:, 0]] + vals[tri.edges[:, 1]])) * arc
    elif mode == "integrated":
        acc = np.zeros(len(arc))
        for k in range(samples):
            acc += np.exp(phi(_slerp(p, q, (k + 0.5) / samples, arc)))
        lengths = arc * acc / samples
    else:
        raise ValueError(f"unknown length mode {mode!r}")
    if np.any(lengths >= np.pi):
        raise ArcTooLong("edge length >= pi")
    return lengths


def find_vertex(positions, point, tol=1e-12):
    d = np.linalg.norm(np.asarray(positions) - np.asarray(point), axis=1)
    k = int(np.argmin(d))
    if d[k] > tol:
        raise MarksNotVertices(f"{point} is not a mesh vertex")
    return k


@dataclass
class ConformalTestSurface:
    """Round sphere with metric ``exp(2 phi) g_round`` and marks at N, (1,0,0), S."""

    phi: LinearPhi

    def __post_init__(self):
        if isinstance(self.phi, str):
            self.phi = parse_phi(self.phi)
        if self.phi.amplitude > MAX_AMPLITUDE:
            raise ValidationError(f"phi amplitude {self.phi.amplitude:g} exceeds {MAX_AMPLITUDE}")

    def marks(self, positions):
        """Vertex indices ``(X, Y, Z)``."""
        return (
            find_vertex(positions, NORTH),
            find_vertex(positions, EAST),
            find_vertex(positions, SOUTH),
        )

    def problem(self, level, mode="vertex_scaled", samples=8, generator=None):
        tri, pos = (generator or octasphere)(level)
        lengths = metric_lengths(tri, pos, self.phi, mode, samples)
        X, Y, Z = self.marks(pos)
        return UniformizationProblem(MetricMesh(tri, lengths, Flavor.SPHERICAL), X, Y, Z), pos


def ground_truth_factor(surface, positions):
    """Exact uniformization factor ``-phi`` at the vertices."""
    surface.marks(positions)
    return -surface.phi(positions)


@dataclass
class ConvergenceRow:
    level: int
    max_edge: float
    epsilon: float
    err_inf: float
    ratio: float = None
    slope_so_far: float = None
    K_residual: float = None
    min_delaunay_margin: float = None
    min_certificate_margin: float = None
    iterations: int = None
    n_vertices: int = None

    def as_csv_row(self):
        return [
            self.level,
            self.max_edge,
            self.epsilon,
            self.err_inf,
            self.ratio,
            self.slope_so_far,
            self.K_residual,
        ]


CSV_HEADER = ["level", "|l|", "epsilon", "err_inf", "ratio", "slope_so_far", "K_residual"]


@dataclass
class ConvergenceTable:
    phi: LinearPhi
    rows: list = field(default_factory=list)

    @property
    def slope(self):
        return self.rows[-1].slope_so_far if self.rows else None

    @property
    def errors(self):
        return np.array([r.err_inf for r in self.rows])

    @property
    def ratios(self):
        return np.array([r.ratio for r in self.rows[1:]])


def loglog_slope(h, e):
    """Least-squares slope of ``log e`` against ``log h``."""
    if len(h) < 2:
        return None
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def _run_level(surface, level, mode, samples, options):
    problem, pos = surface.problem(level, mode, samples)
    result = uniformize(problem, options=options)
    truth = ground_truth_factor(surface, pos)
    d = result.diagnostics
    cert = d["certificates"]
    return ConvergenceRow(
        level=level,
        max_edge=float(problem.mesh.lengths.max()),
        epsilon=regularity(problem.mesh),
        err_inf=float(np.abs(result.u - truth).max()),
        K_residual=d["interior_residual"],
        min_delaunay_margin=d["min_delaunay_margin"],
        min_certificate_margin=min(cert["min_dihedral_margin"], cert["min_circumcircle_margin"]),
        iterations=d["iterations"],
        n_vertices=problem.mesh.tri.n_vertices,
    )


def convergence_experiment(
    phi, levels, mode="vertex_scaled", method="newton", samples=8, jobs=1, options=None
):
    """Uniformize the test surface at each level and tabulate ``|u - ubar|``."""
    surface = phi if isinstance(phi, ConformalTestSurface) else ConformalTestSurface(phi)
    levels = list(levels)
    if not levels:
        raise ValidationError("no levels requested")
    if levels != sorted(levels):
        raise ValidationError("levels must be ascending")
    opts = options or SolverOptions()
    opts.method = method
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda L: _run_level(surface, L, mode, samples, opts), levels))
    else:
        rows = [_run_level(surface, L, mode, samples, opts) for L in levels]
    for k, row in enumerate(rows):
        if k:
            row.ratio = row.err_inf / rows[k - 1].err_inf
            h = [r.max_edge for r in rows[: k + 1]]
            e = [r.err_inf for r in rows[: k + 1]]
            row.slope_so_far = loglog_slope(h, e)
    return ConvergenceTable(surface.phi, rows)
