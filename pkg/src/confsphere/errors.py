"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end
(2 parse/IO, 3 validation, 4 solver failure, 5 certificate failure) and an
optional ``stage`` naming the pipeline step that raised it.
"""


class ConfsphereError(Exception):
    exit_code = 1

    def __init__(self, message="", stage=None):
        super().__init__(message)
        self.stage = stage

    def __str__(self):
        msg = super().__str__()
        if self.stage:
            return f"[{self.stage}] {type(self).__name__}: {msg}"
        return f"{type(self).__name__}: {msg}"


class ParseError(ConfsphereError):
    exit_code = 2


class ValidationError(ConfsphereError):
    exit_code = 3


class SolverError(ConfsphereError):
    exit_code = 4


class CertificateError(ConfsphereError):
    exit_code = 5


# combinatorics
class NonSimplicial(ValidationError):
    pass


class NonManifoldEdge(ValidationError):
    pass


class BadLink(ValidationError):
    pass


class UnsupportedTopology(ValidationError):
    pass


class NotClosed(ValidationError):
    pass


class DegenerateLink(ValidationError):
    pass


# metric
class InadmissibleLengths(ValidationError):
    pass


class HypothesisViolated(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


# graph calculus
class NotPositiveDefinite(SolverError):
    pass


class TooLargeForExhaustive(ValidationError):
    pass


# stereographic bridge
class AtPole(ValidationError):
    pass


class ZeroVector(ValidationError):
    pass


class NotInscribed(ValidationError):
    pass


class PoleNotVertex(ValidationError):
    pass


class NotDelaunay(CertificateError):
    pass


class BoundaryNotConvex(CertificateError):
    pass


class CertificateFailure(CertificateError):
    pass


# uniformizer
class CoincidentMarks(ValidationError):
    pass


class NoAdmissibleStart(SolverError):
    pass


class StuckLineSearch(SolverError):
    pass


class MaxIterations(SolverError):
    pass


class LeftAdmissibleRegion(SolverError):
    pass


class HolonomyResidualExceeded(SolverError):
    pass


class NonConvexBoundary(SolverError):
    pass


class InconsistentApex(CertificateError):
    pass


class EdgeDictionaryMismatch(CertificateError):
    pass


# surfaces
class LevelTooLarge(ValidationError):
    pass


class ArcTooLong(ValidationError):
    pass


class MarksNotVertices(ValidationError):
    pass
