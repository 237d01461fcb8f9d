"""Exception types shared across the solver."""


class FscmError(Exception):
    """Base class for solver errors."""


class UnsupportedGeometry(FscmError):
    """Cross-section is not an axis-aligned rectilinear polygon."""


class OutsideWedge(FscmError):
    """Polar angle at the corner falls outside the wedge [0, pi/alpha]."""


class OutsideDomain(FscmError):
    """Evaluation point lies outside the closure of the domain."""


class DegenerateTriangle(FscmError):
    """Triangle with (near-)zero area encountered during assembly."""


class CornerSingularity(FscmError):
    """Singular function evaluated at the corner itself (rho = 0)."""


class NotIntegrable(FscmError):
    """Requested corner power is too strong to be absolutely integrable."""


class NoConvergence(FscmError):
    """Iterative solver hit its iteration cap.

    Carries the final relative residual in ``residual``.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
