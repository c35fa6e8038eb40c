"""Discrete uniformization of genus-zero triangle meshes by vertex scaling."""

from .errors import ConfsphereError
from .mesh import (
    Flavor,
    MetricMesh,
    Triangulation,
    build_triangulation,
    corner_angles,
    delaunay_margins,
    discrete_curvature,
    regularity,
    remove_open_star,
)
from .surfaces import ConformalTestSurface, convergence_experiment, octasphere
from .uniformizer import SolverOptions, UniformizationProblem, uniformize

__version__ = "0.1.0"
