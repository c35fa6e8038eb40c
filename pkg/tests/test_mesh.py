import numpy as np
import pytest
from conftest import TET, hex_fan, icosahedron_faces

from confsphere.errors import (
    BadLink,
    DegenerateLink,
    InadmissibleLengths,
    NonManifoldEdge,
    NonSimplicial,
    NotClosed,
    UnsupportedTopology,
)
from confsphere.mesh import (
    Flavor,
    MetricMesh,
    Triangulation,
    build_triangulation,
    corner_angles,
    delaunay_margins,
    discrete_curvature,
    edge_lengths_from_positions,
    regularity,
    remove_open_star,
    triangle_angles,
    vertex_cuts,
)
from confsphere.surfaces import octasphere

PI = np.pi


def square_with_diagonal():
    tri = Triangulation([(0, 1, 2), (0, 2, 3)])
    pos = np.array([0, 1, 1 + 1j, 1j])
    return MetricMesh(tri, edge_lengths_from_positions(tri, pos), Flavor.EUCLIDEAN)


def two_equilateral():
    tri = Triangulation([(0, 1, 2), (0, 3, 1)])
    return MetricMesh(tri, np.ones(tri.n_edges), Flavor.EUCLIDEAN)


def spherical_octahedron():
    tri, _ = octasphere(0)
    return MetricMesh(tri, np.full(tri.n_edges, PI / 2), Flavor.SPHERICAL)


class TestTriangulation:
    def test_tetrahedron_counts(self):
        t = build_triangulation(TET)
        assert (t.n_vertices, t.n_edges, t.n_faces) == (4, 6, 4)
        assert t.euler_characteristic == 2 and t.topology == "sphere"

    def test_single_face_is_disk(self):
        t = build_triangulation([(0, 1, 2)])
        assert t.topology == "disk"
        assert set(t.boundary_vertices) == {0, 1, 2}

    def test_duplicate_face(self):
        with pytest.raises(NonSimplicial):
            build_triangulation([(0, 1, 2), (0, 1, 2)])

    def test_repeated_vertex(self):
        with pytest.raises(NonSimplicial):
            build_triangulation([(0, 0, 1)])

    def test_nonmanifold_edge(self):
        with pytest.raises(NonManifoldEdge):
            build_triangulation([(0, 1, 2), (1, 0, 3), (0, 1, 4)])

    def test_inconsistent_orientation(self):
        with pytest.raises(BadLink):
            build_triangulation([(0, 1, 2), (0, 1, 3)])

    def test_bowtie_vertex_link(self):
        # two triangles sharing only vertex 0
        with pytest.raises((BadLink, UnsupportedTopology)):
            build_triangulation([(0, 1, 2), (0, 3, 4)])

    def test_torus_rejected(self):
        n = 4
        faces = []
        for i in range(n):
            for j in range(n):
                a, b = i * n + j, i * n + (j + 1) % n
                c, d = ((i + 1) % n) * n + j, ((i + 1) % n) * n + (j + 1) % n
                faces += [(a, b, d), (a, d, c)]
        with pytest.raises(UnsupportedTopology):
            build_triangulation(faces)

    def test_links_are_cycles(self):
        t = Triangulation(icosahedron_faces())
        for v in t.vertices:
            link = t.link(v)
            assert len(link) == 5
            for a, b in zip(link, np.roll(link, -1)):
                t.edge_index(a, b)

    def test_boundary_loop_ccw(self):
        tri, pos = hex_fan()
        z = pos[tri.boundary_loop]
        area = 0.5 * np.sum(np.imag(np.conj(z) * np.roll(z, -1)))
        assert area > 0


class TestRemoveOpenStar:
    def test_octahedron(self):
        tri, _ = octasphere(0)
        d = remove_open_star(tri, 0)
        assert d.n_faces == 4 and d.topology == "disk"
        assert set(d.boundary_vertices) == {2, 3, 4, 5}
        assert list(d.interior_vertices) == [1]

    def test_icosahedron(self):
        tri = Triangulation(icosahedron_faces())
        for v in range(12):
            d = remove_open_star(tri, v)
            assert d.n_faces == 15
            assert len(d.boundary_vertices) == 5 and len(d.interior_vertices) == 6
            assert set(d.boundary_vertices) == set(tri.link(v))

    def test_tetrahedron(self):
        d = remove_open_star(Triangulation(TET), 3)
        assert d.n_faces == 1 and len(d.interior_vertices) == 0

    def test_labels_preserved(self):
        tri, _ = octasphere(1)
        d = remove_open_star(tri, 0)
        kept = set(map(tuple, tri.faces.tolist())) - {tuple(f) for f in tri.faces[tri.vertex_faces(0)].tolist()}
        assert kept == set(map(tuple, d.faces.tolist()))

    def test_needs_closed(self):
        with pytest.raises(NotClosed):
            remove_open_star(Triangulation([(0, 1, 2)]), 0)


class TestAngles:
    def test_equilateral(self):
        np.testing.assert_allclose(triangle_angles([1, 1, 1]), PI / 3, atol=1e-15)

    def test_right_triangle(self):
        assert triangle_angles([3, 4, 5])[2] == pytest.approx(PI / 2, abs=1e-15)

    def test_octant(self):
        np.testing.assert_allclose(triangle_angles([PI / 2] * 3, spherical=True), PI / 2, atol=1e-15)

    def test_against_coordinates(self, rng):
        # oracle: angles between edge vectors of explicit planar triangles
        for _ in range(200):
            p = rng.normal(size=(3, 2))
            l = [np.linalg.norm(p[(k + 1) % 3] - p[(k + 2) % 3]) for k in range(3)]
            ref = []
            for k in range(3):
                u, v = p[(k + 1) % 3] - p[k], p[(k + 2) % 3] - p[k]
                ref.append(np.arctan2(abs(u[0] * v[1] - u[1] * v[0]), u @ v))
            np.testing.assert_allclose(triangle_angles(l), ref, atol=1e-8)

    def test_spherical_against_vectors(self, rng):
        for _ in range(200):
            p = rng.normal(size=(3, 3))
            p /= np.linalg.norm(p, axis=1)[:, None]
            c = p.mean(0)
            if np.linalg.norm(c) < 0.7:
                continue
            l = [np.arccos(np.clip(p[(k + 1) % 3] @ p[(k + 2) % 3], -1, 1)) for k in range(3)]
            ref = []
            for k in range(3):
                t1 = p[(k + 1) % 3] - (p[(k + 1) % 3] @ p[k]) * p[k]
                t2 = p[(k + 2) % 3] - (p[(k + 2) % 3] @ p[k]) * p[k]
                ref.append(np.arccos(np.clip(t1 @ t2 / np.linalg.norm(t1) / np.linalg.norm(t2), -1, 1)))
            np.testing.assert_allclose(triangle_angles(l, spherical=True), ref, atol=1e-7)

    def test_triangle_inequality(self):
        with pytest.raises(InadmissibleLengths):
            triangle_angles([1, 1, 3])

    def test_spherical_edge_too_long(self):
        with pytest.raises(InadmissibleLengths):
            triangle_angles([PI, 0.2, 3.1], spherical=True)

    def test_angle_sums(self, rng):
        l = rng.uniform(1, 2, size=(100, 3))
        np.testing.assert_allclose(triangle_angles(l).sum(1), PI, atol=1e-12)
        s = rng.uniform(0.3, 0.5, size=(100, 3))
        assert np.all(triangle_angles(s, spherical=True).sum(1) > PI)


class TestCurvature:
    def test_regular_tetrahedron(self):
        m = MetricMesh(Triangulation(TET), np.ones(6), Flavor.EUCLIDEAN)
        np.testing.assert_allclose(discrete_curvature(m), PI, atol=1e-14)

    def test_spherical_octahedron(self):
        np.testing.assert_allclose(discrete_curvature(spherical_octahedron()), 0, atol=1e-14)

    def test_hex_fan(self):
        tri, _ = hex_fan()
        K = discrete_curvature(MetricMesh(tri, np.ones(tri.n_edges), Flavor.EUCLIDEAN))
        assert K[0] == pytest.approx(0, abs=1e-14)
        np.testing.assert_allclose(K[1:], PI / 3, atol=1e-14)


class TestDelaunay:
    def test_two_equilateral(self):
        m = two_equilateral()
        np.testing.assert_allclose(delaunay_margins(m), 2 * PI / 3, atol=1e-14)
        assert regularity(m) == pytest.approx(PI / 3, abs=1e-14)

    def test_square_diagonal(self):
        m = square_with_diagonal()
        np.testing.assert_allclose(delaunay_margins(m), 0, atol=1e-14)
        assert regularity(m) == pytest.approx(0, abs=1e-14)

    def test_spherical_octahedron(self):
        m = spherical_octahedron()
        np.testing.assert_allclose(delaunay_margins(m), PI, atol=1e-14)
        assert regularity(m) == pytest.approx(0, abs=1e-14)

    def test_euclidean_margin_identity(self, rng):
        from confsphere.generators import random_disk_layout

        m = random_disk_layout(rng, 30).metric()
        A = corner_angles(m)
        e = m.tri.interior_edges
        opp = sum(A[m.tri.edge_faces[e, s], m.tri.edge_corners[e, s]] for s in range(2))
        np.testing.assert_allclose(delaunay_margins(m, A), 2 * (PI - opp), atol=1e-12)

    def test_orientation_independent(self, rng):
        from confsphere.generators import random_disk_layout

        m = random_disk_layout(rng, 30).metric()
        flipped = MetricMesh(Triangulation(m.tri.faces[:, ::-1]), m.lengths, m.flavor)
        np.testing.assert_allclose(delaunay_margins(m), delaunay_margins(flipped), atol=1e-14)

    def test_regularity_scale_invariant(self, rng):
        from confsphere.generators import random_disk_layout

        m = random_disk_layout(rng, 30).metric()
        assert regularity(m.with_lengths(7.5 * m.lengths)) == pytest.approx(regularity(m), abs=1e-12)


def test_vertex_cuts():
    tri, _ = octasphere(0)
    assert vertex_cuts(tri) == []
    # two tetrahedra glued along a face minus that face: the shared triangle is a 3-cut
    faces = [(0, 1, 3), (1, 2, 3), (2, 0, 3), (0, 2, 4), (2, 1, 4), (1, 0, 4)]
    cuts = vertex_cuts(Triangulation(faces))
    assert (0, 1, 2) in [tuple(c) for c in cuts]
