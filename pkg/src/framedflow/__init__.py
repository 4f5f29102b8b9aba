"""Framed curvature flow of space curves.

Curves carry an angle field that rotates the Frenet normal frame; the curve
moves with velocity ``kappa nu_theta`` while the angle follows a chosen law.
The package integrates the flow, records the swept trajectory surface and
its curvature fields, monitors global quantities, and provides analytic and
reduced-ODE oracles for symmetric configurations.
"""

__version__ = "0.1.0"

from .curve_core import (FramedCurve, GeometryField, compute_geometry, make_circle, make_helix,
                         read_curve, write_curve)
from .errors import (ConfigError, CurvatureTooSmall, FramedFlowError, FrenetUndefined,
                     InvalidCurve, NearSelfIntersection, NonFinite, NumericError, OracleError,
                     Psi2TooSmall, Unsupported)
from .flow_engine import FlowConfig, RunResult, SingularityReport, run, step
from .theta_laws import ThetaLaw

__all__ = [
    "FramedCurve", "GeometryField", "compute_geometry", "make_circle", "make_helix",
    "read_curve", "write_curve", "ConfigError", "CurvatureTooSmall", "FramedFlowError",
    "FrenetUndefined", "InvalidCurve", "NearSelfIntersection", "NonFinite", "NumericError",
    "OracleError", "Psi2TooSmall", "Unsupported", "FlowConfig", "RunResult",
    "SingularityReport", "run", "step", "ThetaLaw", "__version__",
]
