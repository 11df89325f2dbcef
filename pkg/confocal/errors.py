"""Exception hierarchy for confocal computations"""

from typing import Any, Dict, List, Optional


class ConfocalError(Exception):
    """Base error; carries keyword context for structured logging"""

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = context

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": type(self).__name__,
            "message": self.message,
            "context": {k: _plain(v) for k, v in self.context.items()},
        }


def _plain(value: Any) -> Any:
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


# Core geometry
class PoleError(ConfocalError):
    """Parameter z coincides with an axis value"""


class OffQuadricError(ConfocalError):
    """Point does not lie on the requested quadric"""


class ZeroNormalError(ConfocalError):
    """Reflection requested against a zero normal"""


class DegenerateLineError(ConfocalError):
    """Tangency polynomial of a line vanishes identically"""


# Complex algebra
class BranchPoleError(ConfocalError):
    """I - zA is singular on some block"""


class HypothesisError(ConfocalError):
    """A sample violates the hypotheses of an identity"""


# Elliptic coordinates
class InterlacingError(ConfocalError):
    """Elliptic coordinates do not interlace with the axes"""


class CoordinatePlaneError(ConfocalError):
    """Point lies on a coordinate plane; use a boundary chart"""


class RangeError(ConfocalError):
    """Free coordinate of a boundary chart out of range"""


# Quadrature
class IntervalError(ConfocalError):
    """Integration interval is not inside one positivity interval"""


class SeparationError(ConfocalError):
    """Roots of the radical are not separated"""


class NotFound(ConfocalError):
    """Closure search found no root; carries the sampled residual grid"""

    def __init__(self, message: str, grid: Optional[List[Any]] = None, **context: Any):
        super().__init__(message, **context)
        self.grid = grid or []


# Geodesics
class StiffnessError(ConfocalError):
    """ODE integration failed"""


# Billiards and threads
class NoRealTangentError(ConfocalError):
    """No real common tangent line through the point"""


class ConeDegeneracyError(ConfocalError):
    """Tangent cones coincide or the point is on a focal conic"""


class InfeasibleThreadError(ConfocalError):
    """Thread cannot be assembled for this pen position"""

    def __init__(self, message: str, regime: str = "never", **context: Any):
        super().__init__(message, regime=regime, **context)
        self.regime = regime


class ClosureResidualError(ConfocalError):
    """Budgets cannot absorb the closure residual"""


# Command line
class ConfigError(ConfocalError):
    """Invalid experiment configuration"""

    def __init__(self, message: str, errors: Optional[List[Dict[str, Any]]] = None, **context: Any):
        super().__init__(message, **context)
        self.errors = errors or []


class EmptySceneError(ConfocalError):
    """Scene has nothing to draw"""
