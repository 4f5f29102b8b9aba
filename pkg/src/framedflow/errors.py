"""Exception hierarchy.

Numerical failures carry the offending node index and time when known so the
CLI can report them, and the flow engine attaches the partial run result.
"""


class FramedFlowError(Exception):
    """Base class for all package errors."""


class InvalidCurve(FramedFlowError, ValueError):
    """Curve violates its structural invariants (too few nodes, duplicates)."""


class ConfigError(FramedFlowError, ValueError):
    """Malformed or out-of-range configuration."""


class NumericError(FramedFlowError):
    """A numerical precondition failed at some node and time."""

    def __init__(self, message, node=None, t=None):
        self.node = node
        self.t = t
        self.result = None
        where = []
        if node is not None:
            where.append(f"node {node}")
        if t is not None:
            where.append(f"t={t:.6g}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class FrenetUndefined(NumericError):
    pass


class CurvatureTooSmall(NumericError):
    pass


class Psi2TooSmall(NumericError):
    pass


class NonFinite(NumericError):
    pass


class NearSelfIntersection(NumericError):
    pass


class InsufficientHistory(NumericError):
    pass


class Unsupported(FramedFlowError):
    """Operation not defined for the given boundary type."""


class OracleError(FramedFlowError, ValueError):
    """Oracle evaluated outside its domain (past the terminal time, bad angle)."""
