"""Random meshes for tests and the command line checks.

scipy's Delaunay and ConvexHull are used here only to produce inputs; the
package's own predicates are what get tested on them.
"""

import numpy as np
from scipy.spatial import ConvexHull, Delaunay

from .mesh import Flavor, MetricMesh, Triangulation, edge_lengths_from_positions, regularity
from .stereo import PlanarLayout, lift_to_polyhedron


def _spread_points(rng, n, radius, min_dist):
    """Up to ``n`` uniform points in the disk of ``radius`` kept at least
    ``min_dist`` apart (dart throwing)."""
    pts = []
    for _ in range(200 * n):
        if len(pts) == n:
            break
        r = radius * np.sqrt(rng.uniform())
        p = r * np.exp(2j * np.pi * rng.uniform())
        if all(abs(p - q) >= min_dist for q in pts):
            pts.append(p)
    return np.array(pts, dtype=complex)


def random_disk_layout(rng, n_vertices=40, radius=1.0, min_regularity=0.01, max_tries=500):
    """Delaunay triangulation of points in a disk with a convex boundary on
    the circle of ``radius`` around the origin, counter-clockwise faces.

    Resampled until the flat mesh is ``min_regularity``-regular.
    """
    n_b = max(6, int(round(2.2 * np.sqrt(n_vertices))))
    n_i = max(1, n_vertices - n_b)
    for _ in range(max_tries):
        t = 2 * np.pi * (np.arange(n_b) + 0.4 * rng.uniform(-1, 1, n_b)) / n_b
        bnd = radius * np.exp(1j * t)
        spacing = radius * np.sqrt(np.pi / (n_i + n_b)) * 0.7
        inner = _spread_points(rng, n_i, radius - 0.6 * spacing, spacing)
        z = np.concatenate([bnd, inner])
        faces = Delaunay(np.column_stack([z.real, z.imag])).simplices.astype(np.int64)
        a, b, c = z[faces[:, 0]], z[faces[:, 1]], z[faces[:, 2]]
        flip = np.imag(np.conj(b - a) * (c - a)) < 0
        faces[flip] = faces[flip][:, ::-1]
        layout = PlanarLayout(z, Triangulation(faces, len(z)))
        mesh = MetricMesh(layout.tri, layout.lengths(), Flavor.EUCLIDEAN)
        if layout.tri.topology == "disk" and regularity(mesh) >= min_regularity:
            return layout
    raise RuntimeError("could not generate a regular layout")


def random_inscribed_polyhedron(rng, n_vertices=40):
    """Lift of a random layout; the apex (last label) sits at the north pole."""
    radius = np.exp(rng.uniform(-1.0, 1.0))
    layout = random_disk_layout(rng, n_vertices - 1, radius)
    return lift_to_polyhedron(layout), layout


def random_closed_mesh(rng, n_vertices=30, jitter=0.3):
    """Hull triangulation of random unit vectors, outward oriented, with the
    vertices then moved radially into ``[1 - jitter, 1 + jitter]`` (so the
    surface need not be convex). Euclidean lengths from the positions."""
    p = rng.normal(size=(n_vertices, 3))
    p /= np.linalg.norm(p, axis=1)[:, None]
    faces = ConvexHull(p).simplices.astype(np.int64)
    a, b, c = p[faces[:, 0]], p[faces[:, 1]], p[faces[:, 2]]
    # the centroid is inside the hull even when the origin is not
    inward = np.einsum("ij,ij->i", np.cross(b - a, c - a), a - p.mean(0)) < 0
    faces[inward] = faces[inward][:, ::-1]
    p = p * rng.uniform(1 - jitter, 1 + jitter, size=(n_vertices, 1))
    tri = Triangulation(faces, n_vertices)
    return MetricMesh(tri, edge_lengths_from_positions(tri, p), Flavor.EUCLIDEAN), p


def random_factor(rng, mesh, scale=0.2, max_halvings=20):
    """Random ``u`` keeping every scaled triangle strictly admissible with
    relative slack at least 1e-2."""
    from .scaling import scale_mesh

    u = rng.uniform(-scale, scale, mesh.tri.n_vertices)
    for _ in range(max_halvings):
        fl = scale_mesh(mesh, u).face_lengths()
        slack = (fl.sum(1) - 2 * fl.max(1)) / fl.sum(1)
        if slack.min() > 1e-2:
            return u
        u = 0.5 * u
    return np.zeros_like(u)
