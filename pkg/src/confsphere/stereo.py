"""Stereographic and central projection, and the correspondence between
convex polyhedra inscribed in the unit sphere and Delaunay triangulations of
convex planar polygons.

Orientation conventions: sphere triangulations are oriented outward
(counter-clockwise seen from outside); planar layouts are counter-clockwise
in the plane. Stereographic projection from the north pole reverses
orientation, so flattening reverses face order and lifting reverses it back.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AtPole,
    BoundaryNotConvex,
    CertificateFailure,
    InadmissibleLengths,
    NotDelaunay,
    NotInscribed,
    PoleNotVertex,
    ZeroVector,
)
from .mesh import (
    Flavor,
    MetricMesh,
    Triangulation,
    corner_angles,
    delaunay_margins,
    discrete_curvature,
    edge_lengths_from_positions,
    remove_open_star,
)

NORTH = np.array([0.0, 0.0, 1.0])
PREDICATE_TOL = 1e-12
UNIT_TOL = 1e-10


def stereo_project(p):
    """``(x, y, z) -> x/(1-z) + i y/(1-z)``; works on (3,) or (n, 3)."""
    p = np.asarray(p, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    d = 1.0 - z
    if np.any(d <= 1e-15):
        raise AtPole("cannot project the north pole")
    return (x + 1j * y) / d


def stereo_unproject(z):
    """Inverse of :func:`stereo_project` onto the unit sphere."""
    z = np.asarray(z, dtype=complex)
    r2 = (z * z.conjugate()).real
    out = np.stack([2 * z.real, 2 * z.imag, r2 - 1.0], axis=-1)
    return out / (r2 + 1.0)[..., None]


def central_project(p):
    p = np.asarray(p, dtype=float)
    n = np.linalg.norm(p, axis=-1)
    if np.any(n == 0):
        raise ZeroVector("cannot normalize the zero vector")
    return p / n[..., None]


def projection_factor(positions):
    """``w_i = log(2 / |p_i - N|^2)``, the factor with ``l_Q = w * l_P``."""
    p = np.asarray(positions, dtype=float)
    d2 = np.sum((p - NORTH) ** 2, axis=-1)
    if np.any(d2 <= 1e-30):
        raise AtPole("projection factor is undefined at the north pole")
    return np.log(2.0 / d2)


def reverse_orientation(tri):
    return Triangulation(tri.faces[:, ::-1], tri.n_vertices)


# -- planar layouts ---------------------------------------------------------


@dataclass(eq=False)
class PlanarLayout:
    """Complex vertex positions of a disk triangulation (NaN on inactive labels)."""

    positions: np.ndarray
    tri: Triangulation

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=complex)

    def lengths(self):
        return edge_lengths_from_positions(self.tri, self.positions)

    def metric(self):
        return MetricMesh(self.tri, self.lengths(), Flavor.EUCLIDEAN)

    def signed_areas(self):
        z = self.positions[self.tri.faces]
        return 0.5 * np.imag(np.conj(z[:, 1] - z[:, 0]) * (z[:, 2] - z[:, 0]))

    def boundary_polygon(self):
        return self.positions[self.tri.boundary_loop]

    def boundary_turns(self):
        """Signed exterior angle at each boundary vertex (positive = left turn)."""
        z = self.boundary_polygon()
        e_in = z - np.roll(z, 1)
        e_out = np.roll(z, -1) - z
        return np.angle(e_out / e_in)

    def boundary_is_convex(self, tol=PREDICATE_TOL):
        turns = self.boundary_turns()
        return bool(np.all(turns > tol) and abs(turns.sum() - 2 * np.pi) < 1e-8)

    def diameter(self):
        z = self.boundary_polygon()
        return float(np.abs(z[:, None] - z[None, :]).max())


# -- inscribed polyhedra ----------------------------------------------------


@dataclass(eq=False)
class InscribedPolyhedron:
    positions: np.ndarray
    tri: Triangulation
    _report: object = field(default=None, repr=False)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)

    def chord_lengths(self):
        return edge_lengths_from_positions(self.tri, self.positions)

    def certificates(self):
        if self._report is None:
            self._report = verify_inscribed(self)
        return self._report


@dataclass
class InscribedReport:
    norm_error: float
    dihedral_margins: np.ndarray
    circumcircle_margins: np.ndarray
    origin_margin: float
    dictionary_error: float
    closed: bool

    @property
    def min_dihedral(self):
        return float(self.dihedral_margins.min())

    @property
    def min_circumcircle(self):
        return float(self.circumcircle_margins.min())

    def checks(self):
        return {
            "closed": self.closed,
            "unit_norm": self.norm_error <= UNIT_TOL,
            "convex": self.min_dihedral > PREDICATE_TOL,
            "empty_circumcircles": self.min_circumcircle > PREDICATE_TOL,
            "origin_inside": self.origin_margin > PREDICATE_TOL,
            "chord_arc_dictionary": self.dictionary_error <= 1e-12,
        }

    @property
    def ok(self):
        return all(self.checks().values())

    def summary(self):
        return {
            "norm_error": self.norm_error,
            "min_dihedral_margin": self.min_dihedral,
            "min_circumcircle_margin": self.min_circumcircle,
            "origin_margin": self.origin_margin,
            "dictionary_error": self.dictionary_error,
            "checks": self.checks(),
            "ok": self.ok,
        }


def _face_normals(p, faces):
    a, b, c = p[faces[:, 0]], p[faces[:, 1]], p[faces[:, 2]]
    n = np.cross(b - a, c - a)
    return n / np.linalg.norm(n, axis=1)[:, None]


def verify_inscribed(P, chunk=512):
    """Certificates for membership of ``P`` in the class of inscribed convex
    polyhedra with triangular faces containing the origin.

    Dihedral margins are signed distances of the opposite vertex of each
    neighboring face from a face plane (inner side positive). Circumcircle
    margins are, per face, the least angular distance of any other vertex
    from the face's spherical circumcircle (outside positive).
    """
    tri = P.tri
    p = P.positions
    act = tri.vertices
    norm_error = float(np.abs(np.linalg.norm(p[act], axis=1) - 1.0).max())
    closed = tri.topology == "sphere"
    faces = tri.faces
    normals = _face_normals(p, faces)
    a = p[faces[:, 0]]
    volume = np.sum(np.einsum("ij,ij->i", a, np.cross(p[faces[:, 1]], p[faces[:, 2]])))
    outward = normals if volume >= 0 else -normals

    ie = tri.interior_edges
    f0, f1 = tri.edge_faces[ie, 0], tri.edge_faces[ie, 1]
    k0 = faces[f0, tri.edge_corners[ie, 0]]
    k1 = faces[f1, tri.edge_corners[ie, 1]]
    d01 = -np.einsum("ij,ij->i", outward[f0], p[k1] - p[faces[f0, 0]])
    d10 = -np.einsum("ij,ij->i", outward[f1], p[k0] - p[faces[f1, 0]])
    dihedral = np.minimum(d01, d10)

    origin_margin = float(np.einsum("ij,ij->i", outward, a).min())

    centers = outward
    rho = np.arccos(np.clip(np.einsum("ij,ij->i", centers, a), -1.0, 1.0))
    pv = p[act]
    circ = np.empty(len(faces))
    for s in range(0, len(faces), chunk):
        sl = slice(s, s + chunk)
        dots = np.clip(centers[sl] @ pv.T, -1.0, 1.0)
        dist = np.arccos(dots) - rho[sl, None]
        own = faces[sl][:, :, None] == act[None, None, :]
        dist[own.any(axis=1)] = np.inf
        circ[sl] = dist.min(axis=1)

    e = tri.edges
    q0, q1 = p[e[:, 0]], p[e[:, 1]]
    chord = np.linalg.norm(q0 - q1, axis=1)
    u0, u1 = central_project(q0), central_project(q1)
    arc = np.arctan2(np.linalg.norm(np.cross(u0, u1), axis=1), np.einsum("ij,ij->i", u0, u1))
    dictionary_error = float(np.max(np.abs(chord - 2 * np.sin(arc / 2)) / chord))

    return InscribedReport(
        norm_error=norm_error,
        dihedral_margins=dihedral,
        circumcircle_margins=circ,
        origin_margin=origin_margin,
        dictionary_error=dictionary_error,
        closed=closed,
    )


def flatten_polyhedron(P, vN):
    """Stereographic image of ``P`` with the open star of the pole removed.

    Returns the layout and the factor ``w`` (NaN at inactive labels) with
    ``l_Q = w * l_P`` on the remaining edges.
    """
    p = P.positions
    if np.abs(np.linalg.norm(p[P.tri.vertices], axis=1) - 1.0).max() > UNIT_TOL:
        raise NotInscribed("vertex off the unit sphere")
    if np.linalg.norm(p[vN] - NORTH) > UNIT_TOL:
        raise PoleNotVertex(f"vertex {vN} is not at the north pole")
    report = P.certificates()
    if not report.ok:
        failed = [k for k, v in report.checks().items() if not v]
        raise NotInscribed(f"failed certificates: {failed}")
    disk = reverse_orientation(remove_open_star(P.tri, vN))
    z = np.full(P.tri.n_vertices, np.nan + 0j)
    w = np.full(P.tri.n_vertices, np.nan)
    keep = disk.vertices
    z[keep] = stereo_project(p[keep])
    w[keep] = projection_factor(p[keep])
    return PlanarLayout(z, disk), w


def lift_to_polyhedron(layout, apex=None):
    """Inverse stereographic lift of a strictly Delaunay convex layout, closed
    by a fan of faces to the north pole (labelled ``apex``)."""
    tri = layout.tri
    if tri.topology != "disk":
        raise CertificateFailure("layout must triangulate a disk")
    if np.any(layout.signed_areas() <= 0):
        raise CertificateFailure("layout faces must be positively oriented")
    mesh = layout.metric()
    try:
        angles = corner_angles(mesh)
    except InadmissibleLengths as exc:
        raise CertificateFailure(str(exc)) from None
    margins = delaunay_margins(mesh, angles)
    if len(margins) and margins.min() <= PREDICATE_TOL:
        raise NotDelaunay(f"minimum Delaunay margin {margins.min():.3e}")
    K = discrete_curvature(mesh, angles)
    kb = K[tri.boundary_vertices]
    if kb.min() <= PREDICATE_TOL:
        raise BoundaryNotConvex(f"minimum boundary curvature {kb.min():.3e}")
    poly = layout.boundary_polygon()
    edges = np.roll(poly, -1) - poly
    side = np.imag(np.conj(edges) * (0 - poly)) / np.abs(edges)
    if side.min() <= PREDICATE_TOL:
        raise CertificateFailure("origin is not strictly inside the polygon")

    if apex is None:
        free = np.flatnonzero(~tri.active)
        apex = int(free[0]) if len(free) else tri.n_vertices
    n = max(tri.n_vertices, apex + 1)
    loop = tri.boundary_loop
    fan = np.stack([loop, np.roll(loop, -1), np.full(len(loop), apex)], axis=1)
    faces = np.concatenate([tri.faces[:, ::-1], fan])
    sphere = Triangulation(faces, n)
    pos = np.full((n, 3), np.nan)
    act = tri.vertices
    pos[act] = stereo_unproject(layout.positions[act])
    pos[apex] = NORTH
    P = InscribedPolyhedron(pos, sphere)
    report = P.certificates()
    if not report.ok:
        failed = [k for k, v in report.checks().items() if not v]
        raise CertificateFailure(f"lifted polyhedron failed {failed}")
    return P


# -- circle intersection angles ---------------------------------------------


def _signed_angle_plane(origin, toward, target, side):
    """Angle at ``origin`` from direction ``toward`` to ``target``, positive
    when ``target`` lies on the same side of the line as ``side``."""
    e = toward - origin
    t = target - origin
    s = side - origin
    ang = np.angle(t / e)
    ref = np.angle(s / e)
    return ang if ref > 0 else -ang


def _circumcenter_plane(a, b, c):
    d = 2 * np.imag(np.conj(b - a) * (c - a))
    ab, ac = b - a, c - a
    num = 1j * (abs(ac) ** 2 * ab - abs(ab) ** 2 * ac)
    return a + num / d


def _tangent(at, toward):
    v = toward - at
    return v - np.dot(v, at) * at


def _signed_angle_sphere(at, toward, target, side):
    te, tt, ts = _tangent(at, toward), _tangent(at, target), _tangent(at, side)
    cr = np.cross(te, tt)
    ang = np.arctan2(np.linalg.norm(cr), np.dot(te, tt))
    return ang if np.dot(cr, np.cross(te, ts)) > 0 else -ang


def circumcircle_intersection_angle(pi, pj, pk, pk2, geometry="plane"):
    """Intersection angle ``Theta_ij`` of the circumcircles of triangles
    ``ijk`` and ``ijk'`` (sharing edge ``ij``).

    Computed from the circle geometry: twice the angle at ``i`` between the
    radius toward the ``k``-side center and the radius toward the ``k'``-side
    center, each measured from the edge direction. ``Theta = 0`` when the
    four points are co-circular.
    """
    if geometry == "plane":
        pi, pj, pk, pk2 = (complex(x) for x in (pi, pj, pk, pk2))
        for a, b, c in ((pi, pj, pk), (pi, pj, pk2)):
            if abs(np.imag(np.conj(b - a) * (c - a))) <= PREDICATE_TOL:
                raise InadmissibleLengths("degenerate triangle")
        c1 = _circumcenter_plane(pi, pj, pk)
        c2 = _circumcenter_plane(pi, pj, pk2)
        a1 = _signed_angle_plane(pi, pj, c1, pk)
        a2 = _signed_angle_plane(pi, pj, c2, pk2)
    elif geometry == "sphere":
        pi, pj, pk, pk2 = (np.asarray(x, dtype=float) for x in (pi, pj, pk, pk2))
        centers = []
        for k in (pk, pk2):
            n = np.cross(pj - pi, k - pi)
            if np.linalg.norm(n) <= PREDICATE_TOL:
                raise InadmissibleLengths("degenerate triangle")
            n /= np.linalg.norm(n)
            centers.append(n if np.dot(n, pi) > 0 else -n)
        a1 = _signed_angle_sphere(pi, pj, centers[0], pk)
        a2 = _signed_angle_sphere(pi, pj, centers[1], pk2)
    else:
        raise ValueError(f"unknown geometry {geometry!r}")
    return float(2 * (a1 + a2))
