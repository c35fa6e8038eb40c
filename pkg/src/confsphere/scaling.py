"""Vertex scaling of edge lengths, cotangent weights, and the derivative of
discrete curvature with respect to the conformal factor."""

import numpy as np

from .errors import OutOfRange
from .graph import Graph, Laplacian
from .mesh import Flavor, MetricMesh, corner_angles, discrete_curvature


def edge_factor(tri, u):
    """``exp((u_i + u_j) / 2)`` on every edge."""
    u = np.asarray(u, dtype=float)
    return np.exp(0.5 * (u[tri.edges[:, 0]] + u[tri.edges[:, 1]]))


def scale_euclidean(tri, lengths, u):
    """``u * l``. Admissibility of the result is the caller's problem."""
    return edge_factor(tri, u) * np.asarray(lengths, dtype=float)


def scale_spherical(tri, lengths, u):
    """``u *_s l``: ``sin(l'/2) = exp((u_i+u_j)/2) sin(l/2)``."""
    s = edge_factor(tri, u) * np.sin(0.5 * np.asarray(lengths, dtype=float))
    if np.any(s >= 1.0):
        raise OutOfRange("exp((u_i+u_j)/2) sin(l_ij/2) >= 1")
    return 2.0 * np.arcsin(s)


def scale_mesh(mesh, u):
    if mesh.spherical:
        return mesh.with_lengths(scale_spherical(mesh.tri, mesh.lengths, u))
    return mesh.with_lengths(scale_euclidean(mesh.tri, mesh.lengths, u))


def cotangent_weights(mesh, angles=None):
    """Half the sum of cotangents of the angles opposite each edge."""
    if mesh.flavor is not Flavor.EUCLIDEAN:
        raise ValueError("cotangent weights are defined for Euclidean meshes")
    if angles is None:
        angles = corner_angles(mesh)
    tri = mesh.tri
    return 0.5 * np.bincount(
        tri.face_edges.ravel(), 1.0 / np.tan(angles.ravel()), minlength=tri.n_edges
    )


def curvature_at(mesh, u):
    """Discrete curvature of ``(T, u*l)``."""
    return discrete_curvature(scale_mesh(mesh, u))


def curvature_jacobian(mesh, u):
    """``dK/du = -Laplacian(eta(u))`` as a sparse symmetric matrix."""
    scaled = scale_mesh(mesh, u)
    eta = cotangent_weights(scaled)
    return -Laplacian(Graph.from_triangulation(mesh.tri), eta).tocsr()


def fd_jacobian_check(mesh, u, h=1e-5):
    """Max over entries of ``|analytic - central difference| / (1 + |analytic|)``."""
    u = np.asarray(u, dtype=float)
    J = curvature_jacobian(mesh, u).toarray()
    active = mesh.tri.vertices
    worst = 0.0
    for j in active:
        up = u.copy()
        dn = u.copy()
        up[j] += h
        dn[j] -= h
        col = (curvature_at(mesh, up) - curvature_at(mesh, dn)) / (2 * h)
        err = np.abs(J[active, j] - col[active]) / (1.0 + np.abs(J[active, j]))
        worst = max(worst, float(err.max()))
    return worst


def euclidean_mesh(tri, lengths):
    return MetricMesh(tri, lengths, Flavor.EUCLIDEAN)

