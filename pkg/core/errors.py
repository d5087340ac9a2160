"""
Exception hierarchy for the solver engine
"""

from typing import Any, Dict, Optional


class SaddleError(Exception):
    """Base class for all solver errors"""

    module = "core"
    exit_code = 1

    def __init__(self, message: str, witness: Optional[Dict[str, Any]] = None):
        """
        Initialize the error

        Args:
            message: Human readable description
            witness: Optional data pinpointing the failure (point, value, bound)
        """
        super().__init__(message)
        self.witness = witness or {}

    @property
    def code(self) -> str:
        """Module-qualified error code, e.g. 'spectral.ResonantLambda'"""
        return f"{self.module}.{type(self).__name__}"


class PreconditionError(SaddleError, ValueError):
    """Inputs violate a documented precondition"""
    exit_code = 2


class ConvergenceError(SaddleError, RuntimeError):
    """An iterative method did not reach its tolerance"""
    exit_code = 3


# mesh
class DegenerateMesh(PreconditionError):
    module = "mesh"


class NonFiniteIntegrand(PreconditionError):
    module = "mesh"


# spectral
class ResonantLambda(PreconditionError):
    module = "spectral"


# functionals
class InvalidParameters(PreconditionError):
    module = "functionals"


class ZeroDenominator(PreconditionError):
    module = "functionals"


# minimax
class NoGap(PreconditionError):
    module = "minimax"


class EnergyOutOfRange(PreconditionError):
    module = "minimax"


class GeometryBroken(PreconditionError):
    module = "minimax"


class MaxIterInner(ConvergenceError):
    module = "minimax"


class MaxIterOuter(ConvergenceError):
    module = "minimax"


class UnboundedAscent(ConvergenceError):
    module = "minimax"


class CollapseToZero(ConvergenceError):
    module = "minimax"


class SingularJacobian(ConvergenceError):
    module = "minimax"


class NoProgress(ConvergenceError):
    module = "minimax"


class EndpointNotFound(ConvergenceError):
    module = "minimax"


class MaxIter(ConvergenceError):
    module = "minimax"


# continuation
class NotCauchy(ConvergenceError):
    module = "continuation"


class AllFailed(ConvergenceError):
    module = "continuation"


# verify
class EmptyTrace(PreconditionError):
    module = "verify"


# cli
class ConfigError(PreconditionError):
    module = "cli"
