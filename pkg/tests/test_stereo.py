import numpy as np
import pytest

from confsphere.errors import (
    AtPole,
    BoundaryNotConvex,
    CertificateFailure,
    NotDelaunay,
    NotInscribed,
    PoleNotVertex,
    ZeroVector,
)
from confsphere.generators import random_disk_layout, random_inscribed_polyhedron
from confsphere.mesh import Triangulation, triangle_angles
from confsphere.stereo import (
    InscribedPolyhedron,
    PlanarLayout,
    central_project,
    circumcircle_intersection_angle,
    flatten_polyhedron,
    lift_to_polyhedron,
    projection_factor,
    stereo_project,
    stereo_unproject,
    verify_inscribed,
)
from confsphere.surfaces import icosphere, octasphere

PI = np.pi
SIGNED_BASIS = np.array([[0, 0, 1], [0, 0, -1], [1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]], float)


def square_layout():
    # labels as in the octahedron: 1 = south (center), 2..5 = equator
    faces = [(1, 2, 3), (1, 3, 4), (1, 4, 5), (1, 5, 2)]
    z = np.array([np.nan, 0, 1, 1j, -1, -1j], dtype=complex)
    return PlanarLayout(z, Triangulation(faces, 6))


def octahedron():
    tri, pos = octasphere(0)
    return InscribedPolyhedron(pos, tri)


class TestProjections:
    def test_stereo_examples(self):
        assert stereo_project([0, 0, -1]) == 0
        assert stereo_project([1, 0, 0]) == 1
        assert stereo_project([0, 1, 0]) == 1j

    def test_at_pole(self):
        with pytest.raises(AtPole):
            stereo_project([0, 0, 1])

    def test_unproject_examples(self):
        np.testing.assert_allclose(stereo_unproject(0), [0, 0, -1])
        np.testing.assert_allclose(stereo_unproject(1), [1, 0, 0])

    def test_round_trip(self, rng):
        z = rng.normal(size=1000) * 3 + 1j * rng.normal(size=1000) * 3
        np.testing.assert_allclose(stereo_project(stereo_unproject(z)), z, atol=1e-12, rtol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(stereo_unproject(z), axis=1), 1, atol=1e-15)

    def test_central(self):
        np.testing.assert_allclose(central_project([0, 0, 2]), [0, 0, 1])
        np.testing.assert_allclose(central_project([3, 4, 0]), [0.6, 0.8, 0])
        np.testing.assert_allclose(central_project([0.6, 0.8, 0]), [0.6, 0.8, 0])
        with pytest.raises(ZeroVector):
            central_project([0, 0, 0])

    def test_projection_factor(self):
        assert projection_factor([0, 0, -1]) == pytest.approx(np.log(0.5))
        assert projection_factor([1, 0, 0]) == pytest.approx(0, abs=1e-15)
        assert projection_factor(stereo_unproject(2)) == pytest.approx(np.log(2.5))

    def test_projection_factor_both_forms(self, rng):
        p = stereo_unproject(rng.normal(size=50) + 1j * rng.normal(size=50))
        w1 = np.log(2 / np.sum((p - [0, 0, 1]) ** 2, axis=1))
        np.testing.assert_allclose(projection_factor(p), w1, atol=1e-12)


class TestFlattenLift:
    def test_octahedron_flatten(self):
        layout, w = flatten_polyhedron(octahedron(), 0)
        np.testing.assert_allclose(layout.positions[1:], [0, 1, 1j, -1, -1j], atol=1e-15)
        t = layout.tri
        lq = layout.lengths()
        np.testing.assert_allclose(lq[t.edge_index(2, 3)], np.sqrt(2))
        np.testing.assert_allclose(lq[t.edge_index(1, 2)], 1)
        assert w[1] == pytest.approx(np.log(0.5)) and w[2] == pytest.approx(0, abs=1e-15)
        lp = octahedron().chord_lengths()[octahedron().tri.edge_indices(t.edges)]
        np.testing.assert_allclose(lq, np.exp(0.5 * (w[t.edges[:, 0]] + w[t.edges[:, 1]])) * lp, rtol=1e-14)
        assert layout.boundary_is_convex()

    def test_square_lift(self):
        P = lift_to_polyhedron(square_layout(), apex=0)
        np.testing.assert_allclose(P.positions, SIGNED_BASIS, atol=1e-15)
        assert P.certificates().ok

    def test_diagonal_split_not_delaunay(self):
        z = np.array([-1, 1j, 1, -1j]) * (1 + 0j)
        # square split by one diagonal, shifted so the origin is inside a face
        layout = PlanarLayout(z + 0.1, Triangulation([(0, 3, 2), (0, 2, 1)]))
        with pytest.raises(NotDelaunay):
            lift_to_polyhedron(layout)

    def test_nonconvex_boundary(self):
        # fan around 0 whose rim has a reflex corner at 3
        z = np.array([0, 1, 1j, -0.2 + 0.2j, -1, -1j])
        faces = [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 5, 1)]
        with pytest.raises((BoundaryNotConvex, NotDelaunay)):
            lift_to_polyhedron(PlanarLayout(z, Triangulation(faces)))

    def test_origin_outside(self):
        layout = square_layout()
        shifted = PlanarLayout(layout.positions + 5, layout.tri)
        with pytest.raises(CertificateFailure):
            lift_to_polyhedron(shifted)

    def test_random_round_trips(self, rng):
        for _ in range(20):
            P, layout = random_inscribed_polyhedron(rng, int(rng.integers(20, 60)))
            apex = P.tri.n_vertices - 1
            back, w = flatten_polyhedron(P, apex)
            act = layout.tri.vertices
            np.testing.assert_allclose(back.positions[act], layout.positions[act], atol=1e-10)
            assert np.array_equal(np.sort(back.tri.faces, 1), np.sort(layout.tri.faces, 1))
            lp = P.chord_lengths()[P.tri.edge_indices(back.tri.edges)]
            e = back.tri.edges
            lq = back.lengths()
            np.testing.assert_allclose(lq, np.exp(0.5 * (w[e[:, 0]] + w[e[:, 1]])) * lp, rtol=1e-10)

    def test_flatten_errors(self):
        P = octahedron()
        with pytest.raises(PoleNotVertex):
            flatten_polyhedron(P, 2)
        bad = P.positions.copy()
        bad[3] *= 0.5
        with pytest.raises(NotInscribed):
            flatten_polyhedron(InscribedPolyhedron(bad, P.tri), 0)


class TestCertificates:
    def test_octahedron(self):
        r = verify_inscribed(octahedron())
        assert r.ok
        assert r.min_dihedral > 0 and r.min_circumcircle > 0
        assert r.dictionary_error < 1e-15
        assert 2 * np.sin(PI / 4) == pytest.approx(np.sqrt(2))

    def test_icosahedron(self):
        tri, pos = icosphere(0)
        assert verify_inscribed(InscribedPolyhedron(pos, tri)).ok

    def test_pulled_vertex(self):
        P = octahedron()
        pos = P.positions.copy()
        pos[2] *= 0.5
        r = verify_inscribed(InscribedPolyhedron(pos, P.tri))
        assert not r.checks()["unit_norm"] and not r.ok

    def test_nonconvex_detected(self):
        # octahedron with the south pole pushed inward past the equator plane
        P = octahedron()
        pos = P.positions.copy()
        pos[1] = [0, 0, 0.3]
        assert not verify_inscribed(InscribedPolyhedron(pos, P.tri)).checks()["convex"]

    def test_random_hulls_are_delaunay(self, rng):
        from scipy.spatial import ConvexHull

        for _ in range(20):
            p = rng.normal(size=(int(rng.integers(6, 60)), 3))
            p /= np.linalg.norm(p, axis=1)[:, None]
            faces = ConvexHull(p).simplices
            r = verify_inscribed(InscribedPolyhedron(p, Triangulation(_orient(p, faces), len(p))))
            assert r.min_circumcircle > 0 and r.ok

    def test_lifted_pass(self, rng):
        for _ in range(10):
            P, _ = random_inscribed_polyhedron(rng, 40)
            assert verify_inscribed(P).ok


def _cap_contains_north(a, b, c, margin=0.05):
    """Whether the circumcircle cap of a spherical triangle reaches the pole
    (stereographic projection would then swap its inside and outside)."""
    n = np.cross(b - a, c - a)
    n /= np.linalg.norm(n)
    if n @ a < 0:
        n = -n
    return n[2] > n @ a - margin


def _orient(p, faces):
    faces = faces.copy()
    a, b, c = p[faces[:, 0]], p[faces[:, 1]], p[faces[:, 2]]
    bad = np.einsum("ij,ij->i", np.cross(b - a, c - a), a) < 0
    faces[bad] = faces[bad][:, ::-1]
    return faces


class TestIntersectionAngle:
    def test_equilateral_pair(self):
        th = circumcircle_intersection_angle(0, 1, np.exp(1j * PI / 3), np.exp(-1j * PI / 3))
        assert th == pytest.approx(2 * PI / 3, abs=1e-14)

    def test_cocircular(self):
        assert circumcircle_intersection_angle(0, 1 + 1j, 1, 1j) == pytest.approx(0, abs=1e-14)

    def test_plane_identity(self, rng):
        for _ in range(100):
            pi, pj = 0j, 1 + 0j
            pk = rng.uniform(0, 1) + 1j * rng.uniform(0.2, 1.5)
            pk2 = rng.uniform(0, 1) - 1j * rng.uniform(0.2, 1.5)
            phi_k = abs(np.angle((pi - pk) / (pj - pk)))
            phi_k2 = abs(np.angle((pi - pk2) / (pj - pk2)))
            th = circumcircle_intersection_angle(pi, pj, pk, pk2)
            assert th == pytest.approx(2 * PI - 2 * (phi_k + phi_k2), abs=1e-10)

    def test_sphere_identity_and_conformality(self, rng):
        for _ in range(100):
            c = rng.normal(size=3)
            c[2] = -abs(c[2]) - 0.5
            c /= np.linalg.norm(c)
            pts = []
            for _ in range(4):
                v = c + 0.4 * rng.normal(size=3)
                pts.append(v / np.linalg.norm(v))
            pi, pj, pk, pk2 = pts
            # k and k' on opposite sides of the great circle through i, j
            n = np.cross(pi, pj)
            if np.dot(n, pk) * np.dot(n, pk2) >= 0 or abs(np.dot(n, pk)) < 0.05 or abs(np.dot(n, pk2)) < 0.05:
                continue
            arc = lambda a, b: np.arccos(np.clip(a @ b, -1, 1))
            A1 = triangle_angles([arc(pj, pk), arc(pi, pk), arc(pi, pj)], spherical=True)
            A2 = triangle_angles([arc(pj, pk2), arc(pi, pk2), arc(pi, pj)], spherical=True)
            ident = A1[0] + A1[1] + A2[0] + A2[1] - A1[2] - A2[2]
            th = circumcircle_intersection_angle(pi, pj, pk, pk2, geometry="sphere")
            assert th == pytest.approx(ident, abs=1e-10)
            if any(_cap_contains_north(pi, pj, k) for k in (pk, pk2)):
                continue
            zs = stereo_project(np.array(pts))
            assert circumcircle_intersection_angle(*zs) == pytest.approx(th, abs=1e-8)
