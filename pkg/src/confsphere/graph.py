"""Discrete calculus on graphs: flows, gradient, divergence, Laplacian, SPD
solves, and the isoperimetric constant of a graph with edge lengths.

Edge vectors (weights and flows) are stored once per undirected edge ``(i, j)``
with ``i < j``. For a flow the stored value is ``x_ij``; ``x_ji = -x_ij`` is
implied, so antisymmetry holds by construction.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import NotPositiveDefinite, SolverError, TooLargeForExhaustive

DENSE_LIMIT = 5000
MAX_EXHAUSTIVE = 22


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        e = np.sort(e, axis=1)
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_triangulation(cls, tri):
        return cls(tri.n_vertices, tri.edges)

    def subgraph(self, vertices):
        """Induced subgraph on ``vertices`` (kept with global labels) and the
        mask of retained edges."""
        keep = np.zeros(self.n, dtype=bool)
        keep[vertices] = True
        mask = keep[self.edges[:, 0]] & keep[self.edges[:, 1]]
        return Graph(self.n, self.edges[mask]), mask


def gradient(graph, eta, x):
    """Flow ``eta_ij (x_j - x_i)`` on each canonically oriented edge."""
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    return eta * (x[j] - x[i])


def divergence(graph, flow):
    """``div(x)_i = sum_j x_ij``."""
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    return np.bincount(i, flow, minlength=graph.n) - np.bincount(j, flow, minlength=graph.n)


class Laplacian:
    """The weighted graph Laplacian ``(Lx)_i = sum_j eta_ij (x_j - x_i)``.

    Application is literally ``divergence(gradient(x))``; ``tocsr`` gives the
    same operator as a sparse matrix for factorization.
    """

    def __init__(self, graph, eta):
        self.graph = graph
        self.eta = np.asarray(eta, dtype=float)
        self.shape = (graph.n, graph.n)

    def __matmul__(self, x):
        return divergence(self.graph, gradient(self.graph, self.eta, np.asarray(x)))

    def tocsr(self):
        i, j = self.graph.edges[:, 0], self.graph.edges[:, 1]
        n = self.graph.n
        off = sp.coo_matrix(
            (np.concatenate([self.eta, self.eta]), (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(n, n),
        ).tocsr()
        diag = np.asarray(off.sum(axis=1)).ravel()
        return (off - sp.diags(diag)).tocsr()

    def toarray(self):
        return self.tocsr().toarray()


def laplacian_matrix(graph, eta):
    return Laplacian(graph, eta)


def _as_matrix(A):
    if isinstance(A, Laplacian):
        return A.tocsr()
    if sp.issparse(A):
        return A.tocsr()
    return np.asarray(A, dtype=float)


def solve_spd(A, b, dense_limit=DENSE_LIMIT, rtol=1e-12, maxiter=None):
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    Systems with at most ``dense_limit`` unknowns are Cholesky factored;
    larger ones go through Jacobi-preconditioned conjugate gradients.
    """
    A = _as_matrix(A)
    b = np.asarray(b, dtype=float)
    n = len(b)
    if n == 0:
        return b.copy()
    if n <= dense_limit:
        dense = A.toarray() if sp.issparse(A) else A
        try:
            factor = scipy.linalg.cho_factor(dense, lower=True, check_finite=True)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from None
        x = scipy.linalg.cho_solve(factor, b)
    else:
        x = conjugate_gradient(A, b, rtol=rtol, maxiter=maxiter)
    bound = 1e-10 * (1.0 + np.abs(b).max())
    res = np.abs(A @ x - b).max()
    if not np.isfinite(res) or res > bound:
        raise SolverError(f"SPD solve residual {res:.3e} exceeds {bound:.3e}")
    return x


def conjugate_gradient(A, b, rtol=1e-12, maxiter=None):
    """Jacobi-preconditioned CG; a nonpositive curvature direction means the
    matrix is not positive definite."""
    n = len(b)
    diag = A.diagonal() if sp.issparse(A) else np.diag(A).copy()
    if np.any(diag <= 0):
        raise NotPositiveDefinite("nonpositive diagonal entry")
    inv_diag = 1.0 / diag
    maxiter = maxiter or 10 * n
    x = np.zeros(n)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    target = rtol * np.linalg.norm(b)
    for _ in range(maxiter):
        if np.linalg.norm(r) <= target:
            break
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise NotPositiveDefinite("CG breakdown: p^T A p <= 0")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x


# -- isoperimetry -----------------------------------------------------------


def _area_perimeter(graph, lengths, inside):
    """l-area and l-perimeter of vertex subsets given as a boolean matrix
    ``inside`` of shape (m, n)."""
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    a, b = inside[:, i], inside[:, j]
    area = (a & b) @ (lengths * lengths)
    perim = (a ^ b) @ lengths
    return area, perim


def _ratios(area, perim, total):
    # on a connected graph only the empty and the full set have no boundary
    num = np.minimum(area, total - area)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(perim > 0, num / perim**2, 0.0)


def isoperimetric_constant(graph, lengths, mode="exhaustive", n_samples=64, seed=0):
    """Smallest ``C`` with ``min(|V0|, |V| - |V0|) <= C |dV0|^2`` on a connected graph.

    ``exhaustive`` scans every vertex subset (at most 22 vertices).
    ``sampled`` grows BFS balls from random seeds and also tries their
    complements; the result is a lower bound on the true constant.
    """
    lengths = np.asarray(lengths, dtype=float)
    n = graph.n
    total = float(np.sum(lengths * lengths))
    if mode == "exhaustive":
        if n > MAX_EXHAUSTIVE:
            raise TooLargeForExhaustive(f"{n} vertices > {MAX_EXHAUSTIVE}")
        best = 0.0
        bits = np.arange(n, dtype=np.int64)
        chunk = 1 << 15
        for start in range(0, 1 << n, chunk):
            masks = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
            inside = ((masks[:, None] >> bits) & 1).astype(bool)
            area, perim = _area_perimeter(graph, lengths, inside)
            best = max(best, float(_ratios(area, perim, total).max()))
        return best
    if mode == "sampled":
        return _sampled_isoperimetric(graph, lengths, total, n_samples, seed)
    raise ValueError(f"unknown mode {mode!r}")


def _sampled_isoperimetric(graph, lengths, total, n_samples, seed):
    from scipy.sparse.csgraph import breadth_first_order

    rng = np.random.default_rng(seed)
    n = graph.n
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    adj = sp.coo_matrix((np.ones(len(i)), (i, j)), shape=(n, n))
    adj = (adj + adj.T).tocsr()
    best = 0.0
    for s in rng.integers(0, n, size=n_samples):
        order = breadth_first_order(adj, int(s), directed=False, return_predecessors=False)
        inside = np.zeros((len(order), n), dtype=bool)
        for k in range(len(order)):
            inside[k:, order[k]] = True
        both = np.concatenate([inside, ~inside])
        area, perim = _area_perimeter(graph, lengths, both)
        best = max(best, float(_ratios(area, perim, total).max()))
    return best


def elliptic_ratio(u, lengths):
    """``|u|_inf / (|l|_inf * |V|_l^(1/2))``, reported as a diagnostic only."""
    lengths = np.asarray(lengths, dtype=float)
    return float(np.abs(u).max() / (lengths.max() * np.sqrt(np.sum(lengths**2))))
