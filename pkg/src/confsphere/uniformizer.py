"""Discrete uniformization of a spherical triangle mesh.

Pipeline: puncture the sphere at the mark X, prescribe boundary values on the
link of X, flatten the interior by zeroing its curvature, develop the flat
disk into the plane, normalize so that Z -> 0 and Y -> 1, lift back to an
inscribed polyhedron by inverse stereographic projection, and read off the
conformal factor on every vertex (including X).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from .errors import (
    CoincidentMarks,
    ConfsphereError,
    DegenerateLink,
    EdgeDictionaryMismatch,
    HolonomyResidualExceeded,
    InadmissibleLengths,
    InconsistentApex,
    LeftAdmissibleRegion,
    MarksNotVertices,
    MaxIterations,
    NoAdmissibleStart,
    NonConvexBoundary,
    NotPositiveDefinite,
    StuckLineSearch,
    UnsupportedTopology,
)
from .graph import DENSE_LIMIT, Graph, Laplacian, solve_spd
from .mesh import (
    Flavor,
    MetricMesh,
    _admissibility_problem,
    corner_angles,
    delaunay_margins,
    discrete_curvature,
    remove_open_star,
)
from .scaling import cotangent_weights, edge_factor, scale_euclidean, scale_spherical
from .stereo import (
    NORTH,
    PlanarLayout,
    lift_to_polyhedron,
    reverse_orientation,
    stereo_project,
)

LAYOUT_TOL = 1e-8
APEX_TOL = 1e-8
DICTIONARY_TOL = 1e-8
# Newton re-solves every iteration, so switch to CG earlier than solve_spd does
UNIFORMIZER_DENSE_LIMIT = 2000


@dataclass
class UniformizationProblem:
    """A closed spherical mesh with three marked vertices X, Y, Z."""

    mesh: MetricMesh
    X: int
    Y: int
    Z: int

    def validate(self):
        tri = self.mesh.tri
        if tri.topology != "sphere":
            raise UnsupportedTopology("uniformization needs a closed sphere")
        if self.mesh.flavor is not Flavor.SPHERICAL:
            raise InadmissibleLengths("uniformization takes spherical arc lengths")
        problem = _admissibility_problem(self.mesh.face_lengths(), True)
        if problem:
            raise InadmissibleLengths(problem)
        marks = (self.X, self.Y, self.Z)
        for m in marks:
            if not (0 <= m < tri.n_vertices) or not tri.active[m]:
                raise MarksNotVertices(f"mark {m} is not a vertex")
        if len(set(marks)) < 3:
            raise CoincidentMarks(f"marks X={self.X}, Y={self.Y}, Z={self.Z} must be distinct")
        if len(tri.link(self.X)) < 3:
            raise DegenerateLink("link of X has fewer than 3 vertices")


@dataclass
class SolverOptions:
    method: str = "newton"
    tol: float = 1e-10
    max_iter: int = 100
    continuation_steps: int = 10
    dense_limit: int = UNIFORMIZER_DENSE_LIMIT
    max_halvings: int = 30
    dirichlet_shift: float = 0.0
    geodesic_start: bool = True


@dataclass
class SolveStats:
    iterations: int = 0
    residual: float = np.inf
    history: list = field(default_factory=list)


@dataclass(eq=False)
class UniformizationResult:
    u: np.ndarray
    polyhedron: object
    layout: PlanarLayout
    diagnostics: dict

    @property
    def psi(self):
        return self.polyhedron.positions


def chord_lengths(arcs):
    """Chord lengths ``2 sin(l/2)`` of arcs on the unit sphere."""
    return 2.0 * np.sin(0.5 * np.asarray(arcs, dtype=float))


def dirichlet_data(problem, shift=0.0):
    """Boundary values ``log 2 - 2 log(2 sin(l_iX / 2))`` on the link of X.

    Returns ``(vertices, values)``. The constant term that depends on the
    unknown smooth factor at X is omitted; it only shifts the interior
    solution and is removed again by the Y-Z normalization.
    """
    tri = problem.mesh.tri
    X = problem.X
    link = tri.link(X)
    arcs = np.array([problem.mesh.lengths[tri.edge_index(X, i)] for i in link])
    chord = chord_lengths(arcs)
    if np.any(chord <= 0):
        raise InadmissibleLengths("zero length edge at X")
    return link, np.log(2.0) - 2.0 * np.log(chord) + shift


def _interior_system(disk, eta, interior):
    L = Laplacian(Graph.from_triangulation(disk), eta).tocsr()
    return (-L)[interior][:, interior]


def _boundary_coupling(disk, eta, interior, u):
    """``sum_{j not interior} eta_ij u_j`` for each interior vertex i."""
    e = disk.edges
    is_int = np.zeros(disk.n_vertices, dtype=bool)
    is_int[interior] = True
    out = np.zeros(disk.n_vertices)
    for a, b in ((0, 1), (1, 0)):
        m = is_int[e[:, a]] & ~is_int[e[:, b]]
        np.add.at(out, e[m, a], eta[m] * u[e[m, b]])
    return out[interior]


def _admissible(disk, lengths, u):
    fl = scale_euclidean(disk, lengths, u)[disk.face_edges]
    return _admissibility_problem(fl, False) is None


def _unfold_distances(tri, lengths, d, sweeps=None):
    """Improve shortest-edge-path distances by straight lines through faces:
    for each corner, unfold the face against its opposite edge and measure
    from the virtual source point. Jacobi sweeps until nothing changes."""
    fl = lengths[tri.face_edges]
    F = tri.faces
    sweeps = sweeps or tri.n_vertices
    for _ in range(sweeps):
        best = d.copy()
        for k in range(3):
            i, j = (k + 1) % 3, (k + 2) % 3
            a, b, c = F[:, i], F[:, j], F[:, k]
            lab, lac, lbc = fl[:, k], fl[:, j], fl[:, i]
            da, db = d[a], d[b]
            cosA = np.clip((lab**2 + lac**2 - lbc**2) / (2 * lab * lac), -1, 1)
            cx, cy = lac * cosA, -lac * np.sqrt(1 - cosA**2)
            sx = (da**2 - db**2 + lab**2) / (2 * lab)
            sy2 = da**2 - sx**2
            ok = np.isfinite(sy2) & (sy2 > 0)
            sy = np.sqrt(np.where(ok, sy2, 0.0))
            t = sy / (sy - cy)
            x = sx + t * (cx - sx)
            ok &= (x >= 0) & (x <= lab)
            cand = np.where(ok, np.hypot(sx - cx, sy - cy), np.inf)
            np.minimum.at(best, c, cand)
        if np.array_equal(best, d):
            break
        d = best
    return d


def geodesic_guess(problem, shift=0.0):
    """Factor that would be exact on the round sphere, ``log 2 - 2 log(2
    sin(d_X / 2))``, with the distance to X approximated by edge paths
    refined through face unfoldings."""
    tri = problem.mesh.tri
    G = sparse.coo_matrix(
        (problem.mesh.lengths, (tri.edges[:, 0], tri.edges[:, 1])),
        shape=(tri.n_vertices, tri.n_vertices),
    )
    d = dijkstra(G, directed=False, indices=problem.X)
    d = np.minimum(_unfold_distances(tri, problem.mesh.lengths, d), np.pi)
    with np.errstate(divide="ignore"):
        return np.log(2.0) - 2.0 * np.log(chord_lengths(d)) + shift


def initial_guess(
    disk, lengths, bverts, bvals, dense_limit=DENSE_LIMIT, max_halvings=60, guess=None
):
    """Boundary = Dirichlet data. The interior is ``guess`` if given and
    admissible, otherwise the cotangent-harmonic extension (weights of the
    unscaled mesh) blended toward the mean boundary value until the scaled
    mesh satisfies the triangle inequality."""
    u = np.zeros(disk.n_vertices)
    u[bverts] = bvals
    interior = disk.interior_vertices
    if guess is not None and len(interior):
        u[interior] = guess[interior]
        if np.all(np.isfinite(u[interior])) and _admissible(disk, lengths, u):
            return u
    mean = float(np.mean(bvals))
    u[interior] = mean
    if len(interior):
        eta = cotangent_weights(MetricMesh(disk, lengths, Flavor.EUCLIDEAN))
        A = _interior_system(disk, eta, interior)
        try:
            u[interior] = solve_spd(A, _boundary_coupling(disk, eta, interior, u), dense_limit)
        except (NotPositiveDefinite, ConfsphereError):
            u[interior] = mean
    harmonic = u[interior].copy()
    for k in range(max_halvings + 1):
        u[interior] = mean + (harmonic - mean) / 2**k
        if _admissible(disk, lengths, u):
            return u
    raise NoAdmissibleStart(f"no admissible start after {max_halvings} halvings")


class _FlatState:
    """Angles, curvature and Delaunay margins of ``(disk, u*l)``."""

    def __init__(self, disk, lengths, u, interior):
        self.u = u
        self.mesh = MetricMesh(disk, scale_euclidean(disk, lengths, u), Flavor.EUCLIDEAN)
        self.angles = corner_angles(self.mesh)
        self.K = discrete_curvature(self.mesh, self.angles)
        self.K_int = self.K[interior]
        margins = delaunay_margins(self.mesh, self.angles)
        self.min_margin = float(margins.min()) if len(margins) else np.inf

    @property
    def delaunay(self):
        return self.min_margin > 0


def _try_state(disk, lengths, u, interior):
    if not _admissible(disk, lengths, u):
        return None
    try:
        return _FlatState(disk, lengths, u, interior)
    except InadmissibleLengths:
        return None


def _newton(disk, lengths, state, interior, target, opts, stats):
    """Drive ``K_int`` to ``target`` from ``state`` by damped Newton steps."""
    for _ in range(opts.max_iter):
        r = state.K_int - target
        res = float(np.abs(r).max()) if len(r) else 0.0
        stats.history.append(res)
        if res <= opts.tol:
            stats.residual = res
            return state
        eta = cotangent_weights(state.mesh, state.angles)
        A = _interior_system(disk, eta, interior)
        delta = solve_spd(A, -r, opts.dense_limit)
        stats.iterations += 1
        s = 1.0
        for _ in range(opts.max_halvings):
            u_try = state.u.copy()
            u_try[interior] += s * delta
            trial = _try_state(disk, lengths, u_try, interior)
            if (
                trial is not None
                and (trial.delaunay or not state.delaunay)
                and np.abs(trial.K_int - target).max() < res
            ):
                state = trial
                break
            s *= 0.5
        else:
            raise StuckLineSearch(f"no decrease after {opts.max_halvings} halvings (residual {res:.3e})")
    r = state.K_int - target
    res = float(np.abs(r).max())
    if res <= opts.tol:
        stats.residual = res
        return state
    raise MaxIterations(f"residual {res:.3e} after {opts.max_iter} iterations")


def solve_curvature_bvp(disk, lengths, u0, method="newton", opts=None):
    """Zero the interior curvature of ``(disk, u*l)`` keeping boundary values.

    ``newton`` runs damped Newton on ``K_int = 0`` directly. ``continuation``
    follows ``K_int(u(t)) = (1 - t) K_int(u0)`` with implicit Euler steps,
    each corrected by Newton.
    """
    opts = opts or SolverOptions(method=method)
    interior = disk.interior_vertices
    stats = SolveStats()
    state = _try_state(disk, lengths, np.asarray(u0, dtype=float).copy(), interior)
    if state is None:
        raise LeftAdmissibleRegion("starting point violates the triangle inequality")
    if len(interior):
        if method == "newton":
            state = _newton(disk, lengths, state, interior, 0.0, opts, stats)
        elif method == "continuation":
            K0 = state.K_int.copy()
            M = opts.continuation_steps
            for m in range(1, M + 1):
                target = (1.0 - m / M) * K0
                eta = cotangent_weights(state.mesh, state.angles)
                A = _interior_system(disk, eta, interior)
                step = solve_spd(A, -K0 / M, opts.dense_limit)
                u_pred = state.u.copy()
                u_pred[interior] += step
                pred = _try_state(disk, lengths, u_pred, interior)
                if pred is not None and (pred.delaunay or not state.delaunay):
                    state = pred
                state = _newton(disk, lengths, state, interior, target, opts, stats)
        else:
            raise ValueError(f"unknown method {method!r}")
    else:
        stats.residual = 0.0
    if not state.delaunay:
        raise LeftAdmissibleRegion(f"solution is not Delaunay (margin {state.min_margin:.3e})")
    kb = state.K[disk.boundary_vertices]
    if kb.min() <= 0:
        raise LeftAdmissibleRegion(f"boundary curvature {kb.min():.3e} <= 0")
    state.stats = stats
    return state


def _place(zp, zq, l_pr, angle_p):
    """Third vertex of a counter-clockwise triangle (p, q, r)."""
    d = (zq - zp) / abs(zq - zp)
    return zp + l_pr * np.exp(1j * angle_p) * d


def layout_flat(tri, lengths, angles=None):
    """Isometric development of a flat disk into the plane.

    ``tri`` must be oriented counter-clockwise for the plane. Returns the
    layout and the consistency residual (largest spread of a vertex's
    position across its incident faces).
    """
    mesh = MetricMesh(tri, lengths, Flavor.EUCLIDEAN)
    if angles is None:
        angles = corner_angles(mesh)
    faces = tri.faces
    F = len(faces)
    fl = mesh.face_lengths()
    placed = np.full((F, 3), np.nan + 0j)
    seed = int(np.lexsort(np.sort(faces, axis=1)[:, ::-1].T)[0])
    a = int(np.argmin(faces[seed]))
    b = (a + 1) % 3
    c = (a + 2) % 3
    va, vb, vc = faces[seed, a], faces[seed, b], faces[seed, c]
    if vb < vc:
        # lowest edge (va, vb) on the positive real axis, face runs a -> b -> c
        placed[seed, a] = 0.0
        placed[seed, b] = fl[seed, c]
        placed[seed, c] = _place(0.0, fl[seed, c], fl[seed, b], angles[seed, a])
    else:
        # lowest edge (va, vc); going a -> c is clockwise, so c is placed first
        placed[seed, a] = 0.0
        placed[seed, c] = fl[seed, b]
        placed[seed, b] = _place(0.0, fl[seed, b], fl[seed, c], -angles[seed, a])
    queue = [seed]
    head = 0
    while head < len(queue):
        f = queue[head]
        head += 1
        for corner in range(3):
            e = tri.face_edges[f, corner]
            if tri.is_boundary_edge[e]:
                continue
            slot = 0 if tri.edge_faces[e, 0] == f else 1
            g = tri.edge_faces[e, 1 - slot]
            if not np.isnan(placed[g, 0].real):
                continue
            cg = tri.edge_corners[e, 1 - slot]
            # in g the shared edge runs from corner cg+1 to corner cg+2
            p, q = (cg + 1) % 3, (cg + 2) % 3
            vp, vq = faces[g, p], faces[g, q]
            zp = placed[f][faces[f] == vp][0]
            zq = placed[f][faces[f] == vq][0]
            placed[g, p] = zp
            placed[g, q] = zq
            # ccw triangle (p, q, r) with r = corner cg
            placed[g, cg] = _place(zp, zq, fl[g, q], angles[g, p])
            queue.append(g)
    if len(queue) != F:
        raise HolonomyResidualExceeded("disk is not face-connected")
    z = np.full(tri.n_vertices, np.nan + 0j)
    flat_v = faces.ravel()
    flat_z = placed.ravel()
    order = np.argsort(flat_v, kind="stable")
    first = np.ones(len(order), dtype=bool)
    first[1:] = flat_v[order][1:] != flat_v[order][:-1]
    z[flat_v[order][first]] = flat_z[order][first]
    spread = float(np.abs(flat_z - z[flat_v]).max())
    layout = PlanarLayout(z, tri)
    diam = layout.diameter()
    if spread > LAYOUT_TOL * diam:
        raise HolonomyResidualExceeded(f"layout residual {spread:.3e} (diameter {diam:.3e})")
    if not layout.boundary_is_convex():
        raise NonConvexBoundary("developed boundary polygon is not convex")
    return layout, spread


def normalize_layout(layout, Y, Z):
    """Similarity sending Z to 0 and Y to 1. Returns the layout and
    ``log |g0(Y) - g0(Z)|``."""
    if Y == Z:
        raise CoincidentMarks("Y and Z coincide")
    zY, zZ = layout.positions[Y], layout.positions[Z]
    d = zY - zZ
    if not np.isfinite(d) or abs(d) == 0:
        raise CoincidentMarks("Y and Z have the same position")
    return PlanarLayout((layout.positions - zZ) / d, layout.tri), float(np.log(abs(d)))


def assemble_factor(u_tilde, layout, problem, lengths_E, polyhedron=None):
    """Conformal factor on all of V(T) from the normalized flat solution.

    Returns ``(u, apex_spread, polyhedron, edge_mismatch)``.
    """
    tri = problem.mesh.tri
    X = problem.X
    disk_v = layout.tri.vertices
    g = layout.positions
    u = np.full(tri.n_vertices, np.nan)
    w_prime = np.log((np.abs(g[disk_v]) ** 2 + 1.0) / 2.0)
    u[disk_v] = u_tilde[disk_v] - w_prime
    link = tri.link(X)
    eidx = np.array([tri.edge_index(X, i) for i in link])
    candidates = np.log(2.0) - 2.0 * np.log(lengths_E[eidx]) - u_tilde[link]
    spread = float(candidates.max() - candidates.min())
    if spread > APEX_TOL:
        raise InconsistentApex(f"u_X estimates spread by {spread:.3e}")
    u[X] = float(candidates.mean())
    if polyhedron is None:
        polyhedron = lift_to_polyhedron(layout, apex=X)
    target = polyhedron.chord_lengths()
    got = scale_euclidean(tri, lengths_E, u)
    mismatch = float(np.max(np.abs(got - target) / target))
    if mismatch > DICTIONARY_TOL:
        raise EdgeDictionaryMismatch(f"relative edge mismatch {mismatch:.3e}")
    return u, spread, polyhedron, mismatch


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfsphereError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def uniformize(problem, method=None, options=None):
    """Discrete uniformization factor of ``problem`` with X -> infinity,
    Y -> 1, Z -> 0."""
    opts = options or SolverOptions()
    if method is not None:
        opts.method = method
    _stage("validate", problem.validate)
    tri = problem.mesh.tri
    lE = chord_lengths(problem.mesh.lengths)

    disk = _stage("remove_open_star", remove_open_star, tri, problem.X)
    lE_disk = lE[tri.edge_indices(disk.edges)]
    bverts, bvals = _stage("dirichlet_data", dirichlet_data, problem, opts.dirichlet_shift)
    guess = geodesic_guess(problem, opts.dirichlet_shift) if opts.geodesic_start else None
    u0 = _stage(
        "initial_guess", initial_guess, disk, lE_disk, bverts, bvals, opts.dense_limit, guess=guess
    )
    state = _stage("solve_curvature_bvp", solve_curvature_bvp, disk, lE_disk, u0, opts.method, opts)
    u1 = state.u

    plane = reverse_orientation(disk)
    lprime = scale_euclidean(disk, lE_disk, u1)
    layout0, layout_residual = _stage("layout_flat", layout_flat, plane, lprime)
    layout, log_d = _stage("normalize_layout", normalize_layout, layout0, problem.Y, problem.Z)
    u_tilde = u1 - log_d
    P = _stage("lift_to_polyhedron", lift_to_polyhedron, layout, problem.X)
    u, apex_spread, P, mismatch = _stage(
        "assemble_factor", assemble_factor, u_tilde, layout, problem, lE, P
    )

    psi = P.positions
    report = P.certificates()
    # both notions of uniformization agree edge-wise
    sph = scale_spherical(tri, problem.mesh.lengths, u)
    bridge = float(np.max(np.abs(2 * np.sin(sph / 2) - edge_factor(tri, u) * lE)))
    interior = disk.interior_vertices
    diagnostics = {
        "interior_residual": float(np.abs(state.K_int).max()) if len(interior) else 0.0,
        "min_delaunay_margin": state.min_margin,
        "min_boundary_curvature": float(state.K[disk.boundary_vertices].min()),
        "layout_residual": layout_residual,
        "layout_diameter": layout0.diameter(),
        "apex_spread": apex_spread,
        "iterations": state.stats.iterations,
        "residual_history": state.stats.history,
        "log_dYZ": log_d,
        "edge_mismatch": mismatch,
        "dictionary_bridge_error": bridge,
        "normalization_error": float(
            max(abs(stereo_project(psi[problem.Z])), abs(stereo_project(psi[problem.Y]) - 1))
        ),
        "pole_error": float(np.linalg.norm(psi[problem.X] - NORTH)),
        "certificates": report.summary(),
        "n_interior": int(len(interior)),
        "method": opts.method,
    }
    return UniformizationResult(u=u, polyhedron=P, layout=layout, diagnostics=diagnostics)
