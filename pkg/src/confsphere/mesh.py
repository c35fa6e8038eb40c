"""Triangulations, metric meshes and the quantities measured on them.

Corner conventions: for a face ``(a, b, c)`` corner 0 sits at ``a`` and is
opposite the edge ``bc``; ``Triangulation.face_edges[f, c]`` is the index of
the edge opposite corner ``c``. Angles are returned as ``(F, 3)`` arrays in the
same layout.
"""

from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np

from .errors import (
    BadLink,
    DegenerateLink,
    InadmissibleLengths,
    NonManifoldEdge,
    NonSimplicial,
    NotClosed,
    UnsupportedTopology,
)

CLAMP_TOL = 1e-9


class Triangulation:
    """Validated simplicial triangulation of a sphere or a disk.

    Vertex labels need not be contiguous: a label below ``n_vertices`` that no
    face references is *inactive* (this is how a punctured sphere keeps the
    labels of the surviving vertices).
    """

    def __init__(self, faces, n_vertices=None):
        faces = np.asarray(faces, dtype=np.int64)
        if faces.ndim != 2 or faces.shape[1] != 3 or len(faces) == 0:
            raise NonSimplicial("need a nonempty list of vertex triples")
        if faces.min() < 0:
            raise NonSimplicial("negative vertex index")
        if n_vertices is None:
            n_vertices = int(faces.max()) + 1
        if faces.max() >= n_vertices:
            raise NonSimplicial("vertex index out of range")
        self.faces = faces
        self.n_vertices = int(n_vertices)
        self._build()

    # -- construction -----------------------------------------------------
    def _build(self):
        f = self.faces
        F = len(f)
        if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
            raise NonSimplicial("face with a repeated vertex")
        if len(np.unique(np.sort(f, axis=1), axis=0)) != F:
            raise NonSimplicial("duplicate face")

        # half-edge opposite corner c runs from corner c+1 to corner c+2
        tail = f[:, [1, 2, 0]].ravel()
        head = f[:, [2, 0, 1]].ravel()
        lo = np.minimum(tail, head)
        hi = np.maximum(tail, head)
        keys = lo * self.n_vertices + hi
        ukeys, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
        if np.any(counts > 2):
            raise NonManifoldEdge("edge shared by more than two faces")
        directed = tail * self.n_vertices + head
        if len(np.unique(directed)) != len(directed):
            raise BadLink("inconsistent face orientation")

        self.edges = np.stack([ukeys // self.n_vertices, ukeys % self.n_vertices], axis=1)
        E = len(self.edges)
        self.face_edges = inv.reshape(F, 3)
        self.edge_faces = np.full((E, 2), -1, dtype=np.int64)
        self.edge_corners = np.full((E, 2), -1, dtype=np.int64)
        hf = np.repeat(np.arange(F), 3)
        hc = np.tile(np.arange(3), F)
        order = np.argsort(inv, kind="stable")
        first = np.ones(len(order), dtype=bool)
        first[1:] = inv[order][1:] != inv[order][:-1]
        slot = np.where(first, 0, 1)
        self.edge_faces[inv[order], slot] = hf[order]
        self.edge_corners[inv[order], slot] = hc[order]
        self.is_boundary_edge = counts == 1
        self.interior_edges = np.flatnonzero(~self.is_boundary_edge)
        self.boundary_edges = np.flatnonzero(self.is_boundary_edge)

        self.active = np.zeros(self.n_vertices, dtype=bool)
        self.active[f.ravel()] = True
        self.is_boundary_vertex = np.zeros(self.n_vertices, dtype=bool)
        self.is_boundary_vertex[self.edges[self.is_boundary_edge].ravel()] = True

        self._build_links()

        V = int(self.active.sum())
        self.euler_characteristic = V - E + F
        if not self._connected():
            raise UnsupportedTopology("triangulation is not connected")
        if self.euler_characteristic == 2 and not self.is_boundary_edge.any():
            self.topology = "sphere"
        elif self.euler_characteristic == 1 and self.is_boundary_edge.any():
            self.topology = "disk"
        else:
            raise UnsupportedTopology(f"Euler characteristic {self.euler_characteristic}")
        self.boundary_loop = self._trace_boundary() if self.topology == "disk" else None

    def _build_links(self):
        succ = [dict() for _ in range(self.n_vertices)]
        face_of = [dict() for _ in range(self.n_vertices)]
        for fi, (a, b, c) in enumerate(self.faces.tolist()):
            for v, x, y in ((a, b, c), (b, c, a), (c, a, b)):
                succ[v][x] = y
                face_of[v][x] = fi
        self._links = [None] * self.n_vertices
        self._vertex_faces = [None] * self.n_vertices
        for v in np.flatnonzero(self.active).tolist():
            nxt = succ[v]
            if self.is_boundary_vertex[v]:
                starts = set(nxt) - set(nxt.values())
                if len(starts) != 1:
                    raise BadLink(f"link of boundary vertex {v} is not a single path")
                start = starts.pop()
            else:
                start = min(nxt)
            link = [start]
            fans = []
            cur = start
            while cur in nxt:
                fans.append(face_of[v][cur])
                cur = nxt[cur]
                if cur == start:
                    break
                link.append(cur)
                if len(link) > len(nxt) + 1:
                    break
            if len(fans) != len(nxt):
                kind = "path" if self.is_boundary_vertex[v] else "cycle"
                raise BadLink(f"link of vertex {v} is not a single {kind}")
            self._links[v] = np.array(link, dtype=np.int64)
            self._vertex_faces[v] = np.array(fans, dtype=np.int64)

    def _connected(self):
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import connected_components

        n = self.n_vertices
        adj = coo_matrix(
            (np.ones(len(self.edges)), (self.edges[:, 0], self.edges[:, 1])), shape=(n, n)
        )
        _, labels = connected_components(adj, directed=False)
        return len(np.unique(labels[self.active])) == 1

    def _trace_boundary(self):
        # boundary half-edges, oriented by their face
        nxt = {}
        for e in self.boundary_edges:
            f, c = self.edge_faces[e, 0], self.edge_corners[e, 0]
            a, b = self.faces[f, (c + 1) % 3], self.faces[f, (c + 2) % 3]
            nxt[int(a)] = int(b)
        start = min(nxt)
        loop = [start]
        cur = nxt[start]
        while cur != start:
            loop.append(cur)
            cur = nxt[cur]
        if len(loop) != len(nxt):
            raise UnsupportedTopology("more than one boundary component")
        return np.array(loop, dtype=np.int64)

    # -- queries ----------------------------------------------------------
    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def vertices(self):
        return np.flatnonzero(self.active)

    @property
    def interior_vertices(self):
        return np.flatnonzero(self.active & ~self.is_boundary_vertex)

    @property
    def boundary_vertices(self):
        return np.flatnonzero(self.is_boundary_vertex)

    def link(self, v):
        """Neighbors of ``v`` in rotational order (a cycle or a path)."""
        return self._links[v]

    def vertex_faces(self, v):
        """Faces around ``v`` in the rotational order induced by orientation."""
        return self._vertex_faces[v]

    def edge_index(self, i, j):
        lo, hi = min(i, j), max(i, j)
        key = lo * self.n_vertices + hi
        keys = self.edges[:, 0] * self.n_vertices + self.edges[:, 1]
        k = np.searchsorted(keys, key)
        if k >= len(keys) or keys[k] != key:
            raise KeyError((i, j))
        return int(k)

    def edge_indices(self, pairs):
        """Vectorized :meth:`edge_index` for an (m, 2) array of vertex pairs."""
        pairs = np.sort(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), axis=1)
        key = pairs[:, 0] * self.n_vertices + pairs[:, 1]
        keys = self.edges[:, 0] * self.n_vertices + self.edges[:, 1]
        k = np.minimum(np.searchsorted(keys, key), len(keys) - 1)
        if np.any(keys[k] != key):
            raise KeyError("pair is not an edge")
        return k

    def edge_lookup(self):
        return {(int(a), int(b)): k for k, (a, b) in enumerate(self.edges)}

    def __repr__(self):
        return (
            f"Triangulation({self.topology}, V={int(self.active.sum())}, "
            f"E={self.n_edges}, F={self.n_faces})"
        )


def build_triangulation(faces, n_vertices=None):
    return Triangulation(faces, n_vertices)


def remove_open_star(tri, v):
    """Delete ``v`` and every open cell incident to it.

    The result is a disk whose boundary is the link of ``v``. Surviving
    vertices keep their labels; ``v`` becomes inactive.
    """
    if tri.topology != "sphere":
        raise NotClosed("open star removal needs a closed sphere")
    if not tri.active[v]:
        raise DegenerateLink(f"vertex {v} is not in the triangulation")
    if len(tri.link(v)) < 3:
        raise DegenerateLink(f"link of {v} has fewer than 3 vertices")
    keep = ~np.any(tri.faces == v, axis=1)
    return Triangulation(tri.faces[keep], tri.n_vertices)


def vertex_cuts(tri, max_size=3, max_vertices=200):
    """Vertex sets of size <= ``max_size`` whose removal disconnects the
    1-skeleton. Exhaustive, so only run on small meshes."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    verts = tri.vertices
    if len(verts) > max_vertices:
        raise ValueError(f"vertex cut scan limited to {max_vertices} vertices")
    n = tri.n_vertices
    cuts = []
    for size in range(1, max_size + 1):
        for cut in combinations(verts.tolist(), size):
            alive = tri.active.copy()
            alive[list(cut)] = False
            mask = alive[tri.edges[:, 0]] & alive[tri.edges[:, 1]]
            e = tri.edges[mask]
            adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
            _, labels = connected_components(adj, directed=False)
            if len(np.unique(labels[alive])) > 1:
                cuts.append(cut)
    return cuts


class Flavor(str, Enum):
    EUCLIDEAN = "euclidean"
    SPHERICAL = "spherical"


@dataclass(frozen=True, eq=False)
class MetricMesh:
    tri: Triangulation
    lengths: np.ndarray
    flavor: Flavor = Flavor.EUCLIDEAN

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=float)
        if lengths.shape != (self.tri.n_edges,):
            raise InadmissibleLengths(
                f"expected {self.tri.n_edges} edge lengths, got {lengths.shape}"
            )
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "flavor", Flavor(self.flavor))

    @property
    def spherical(self):
        return self.flavor is Flavor.SPHERICAL

    def face_lengths(self):
        """(F, 3) lengths of the edge opposite each corner."""
        return self.lengths[self.tri.face_edges]

    def with_lengths(self, lengths):
        return MetricMesh(self.tri, lengths, self.flavor)


def admissible(mesh):
    """True when every face satisfies the flavor's admissibility test."""
    return not _admissibility_problem(mesh.face_lengths(), mesh.spherical)


def _admissibility_problem(fl, spherical):
    a, b, c = fl[:, 0], fl[:, 1], fl[:, 2]
    if not np.all(np.isfinite(fl)) or np.any(fl <= 0):
        return "nonpositive or nonfinite edge length"
    if np.any((a + b <= c) | (b + c <= a) | (c + a <= b)):
        return "triangle inequality violated"
    if spherical:
        if np.any(fl >= np.pi):
            return "spherical edge of length >= pi"
        if np.any(a + b + c >= 2 * np.pi):
            return "spherical face perimeter >= 2 pi"
    return None


def triangle_angles(fl, spherical=False):
    """Angles of triangles with opposite side lengths ``fl`` (shape (..., 3))."""
    fl = np.asarray(fl, dtype=float)
    shape = fl.shape
    fl2 = fl.reshape(-1, 3)
    problem = _admissibility_problem(fl2, spherical)
    if problem:
        raise InadmissibleLengths(problem)
    a = fl2
    b = np.roll(fl2, -1, axis=1)
    c = np.roll(fl2, -2, axis=1)
    if spherical:
        cos = (np.cos(a) - np.cos(b) * np.cos(c)) / (np.sin(b) * np.sin(c))
    else:
        cos = (b * b + c * c - a * a) / (2 * b * c)
    excess = np.abs(cos) - 1.0
    if np.any(excess > CLAMP_TOL):
        raise InadmissibleLengths("law of cosines left [-1, 1]")
    return np.arccos(np.clip(cos, -1.0, 1.0)).reshape(shape)


def corner_angles(mesh):
    """(F, 3) corner angles of ``mesh`` in radians."""
    return triangle_angles(mesh.face_lengths(), mesh.spherical)


def angle_sums(tri, angles):
    return np.bincount(tri.faces.ravel(), angles.ravel(), minlength=tri.n_vertices)


def discrete_curvature(mesh, angles=None):
    """Angle defect per vertex; inactive vertices get 0."""
    tri = mesh.tri
    if angles is None:
        angles = corner_angles(mesh)
    total = np.where(tri.is_boundary_vertex, np.pi, 2 * np.pi)
    K = total - angle_sums(tri, angles)
    K[~tri.active] = 0.0
    return K


def _edge_angle_pairs(tri, angles):
    """For interior edges: opposite angles (theta_k, theta_k') and the four
    angles at the edge's endpoints."""
    ie = tri.interior_edges
    f = tri.edge_faces[ie]
    c = tri.edge_corners[ie]
    opp = angles[f, c]
    at_ends = angles[f, (c + 1) % 3] + angles[f, (c + 2) % 3]
    return opp, at_ends


def delaunay_margins(mesh, angles=None):
    """Delaunay margin of every interior edge, aligned with ``tri.interior_edges``.

    The margin is the endpoint-angle sum minus the opposite-angle sum; the
    mesh is strictly Delaunay iff all margins are positive.
    """
    if angles is None:
        angles = corner_angles(mesh)
    opp, at_ends = _edge_angle_pairs(mesh.tri, angles)
    return at_ends.sum(axis=1) - opp.sum(axis=1)


def regularity(mesh, angles=None):
    """Largest eps for which the mesh is eps-regular (<= 0 if it is not)."""
    if angles is None:
        angles = corner_angles(mesh)
    eps = angles.min()
    if len(mesh.tri.interior_edges):
        opp, _ = _edge_angle_pairs(mesh.tri, angles)
        eps = min(eps, (np.pi - opp.sum(axis=1)).min())
    return float(eps)


def face_areas(fl):
    """Heron's formula, in the numerically stable ordering."""
    s = np.sort(np.asarray(fl, dtype=float), axis=-1)[..., ::-1]
    a, b, c = s[..., 0], s[..., 1], s[..., 2]
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.maximum(prod, 0.0))


def edge_lengths_from_positions(tri, positions):
    """Straight-line edge lengths; ``positions`` is (n, d) real or (n,) complex."""
    p = np.asarray(positions)
    d = p[tri.edges[:, 0]] - p[tri.edges[:, 1]]
    if p.ndim == 1:
        return np.abs(d)
    return np.linalg.norm(d, axis=1)
