"""Comparison estimates for single triangles.

Each function measures a quantity directly (angles from the law of cosines,
areas from Heron, the affine map from explicit coordinates) and reports it
next to the corresponding a-priori bound. Length triples are ``(a, b, c)``
with ``a`` opposite corner ``A`` and so on.
"""

from dataclasses import dataclass

import numpy as np

from .errors import HypothesisViolated, InadmissibleLengths
from .mesh import face_areas, triangle_angles

# measured quantities carry floating-point error even when the bound is 0
ROUNDOFF = 1e-12


def relative_perturbation(l, lp):
    l = np.asarray(l, dtype=float)
    lp = np.asarray(lp, dtype=float)
    return float(np.max(np.abs(lp - l) / l))


@dataclass
class AnglePerturbationReport:
    delta: float
    eps: float
    max_angle_change: float
    rel_area_change: float
    angle_bound: float
    area_bound: float

    @property
    def angle_ok(self):
        return self.max_angle_change <= self.angle_bound + ROUNDOFF

    @property
    def area_ok(self):
        return self.rel_area_change <= self.area_bound + ROUNDOFF

    @property
    def ok(self):
        return self.angle_ok and self.area_ok


def angle_perturbation_bound(l, lp, eps):
    """Angle and area change of a triangle under a relative length
    perturbation ``delta < eps^2 / 48``, against ``24 delta / eps`` and
    ``576 delta / eps^2``."""
    A = triangle_angles(l)
    if A.min() < eps:
        raise HypothesisViolated(f"minimum angle {A.min():.6g} < eps={eps}")
    delta = relative_perturbation(l, lp)
    if delta >= eps**2 / 48:
        raise HypothesisViolated(f"delta={delta:.3e} >= eps^2/48")
    Ap = triangle_angles(lp)
    area = face_areas(l)
    return AnglePerturbationReport(
        delta=delta,
        eps=eps,
        max_angle_change=float(np.abs(Ap - A).max()),
        rel_area_change=float(abs(face_areas(lp) - area) / area),
        angle_bound=24 * delta / eps,
        area_bound=576 * delta / eps**2,
    )


def _layout(l):
    a, b, c = l
    A = triangle_angles(l)[0]
    return np.array([[0.0, 0.0], [c, 0.0], [b * np.cos(A), b * np.sin(A)]])


def singular_values_of_map(l, lp):
    """Singular values (descending) of the linear map taking the triangle
    with sides ``l`` to the one with sides ``lp``, vertex to vertex."""
    P = _layout(np.asarray(l, dtype=float))
    Q = _layout(np.asarray(lp, dtype=float))
    src = np.column_stack([P[1] - P[0], P[2] - P[0]])
    dst = np.column_stack([Q[1] - Q[0], Q[2] - Q[0]])
    M = dst @ np.linalg.inv(src)
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[0]), float(s[1])


@dataclass
class DistortionReport:
    delta: float
    eps: float
    singular_values: tuple
    area_ratio: float
    bound: float

    @property
    def ok(self):
        return all(abs(s - 1.0) <= self.bound + ROUNDOFF for s in self.singular_values)


def map_distortion_bound(l, lp, eps):
    """Singular values of the vertex-matching map against ``1 +- 1e4 delta / eps^4``
    (hypothesis ``delta < eps^2 / 576``)."""
    A = triangle_angles(l)
    if A.min() < eps:
        raise HypothesisViolated(f"minimum angle {A.min():.6g} < eps={eps}")
    delta = relative_perturbation(l, lp)
    if delta >= eps**2 / 576:
        raise HypothesisViolated(f"delta={delta:.3e} >= eps^2/576")
    return DistortionReport(
        delta=delta,
        eps=eps,
        singular_values=singular_values_of_map(l, lp),
        area_ratio=float(face_areas(lp) / face_areas(l)),
        bound=1e4 * delta / eps**4,
    )


@dataclass
class AngleGapReport:
    gaps: np.ndarray
    bound: float

    @property
    def max_gap(self):
        return float(self.gaps.max())

    @property
    def ok(self):
        return bool(np.all(self.gaps <= self.bound + ROUNDOFF))


def spherical_euclidean_angle_gap(l):
    """Corner-wise difference between the spherical and the Euclidean
    triangle with side lengths ``l``, against ``2 (a + b + c)^2``."""
    l = np.asarray(l, dtype=float)
    if l.max() >= np.pi / 3:
        raise InadmissibleLengths("spherical diameter must be below pi/3")
    flat = triangle_angles(l)
    sph = triangle_angles(l, spherical=True)
    return AngleGapReport(gaps=np.abs(sph - flat), bound=2 * l.sum() ** 2)
