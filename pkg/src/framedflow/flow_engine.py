"""Time integration of the framed curvature flow.

The state ``(gamma, theta)`` is advanced by explicit RK4 with a parabolic
step restriction.  Two running integrals ride along in the same RK4 stages:
the swept area ``A(t) = int_0^t oint kappa ds dt'`` and the Gaussian
curvature integral ``int_0^t oint K kappa ds dt'`` of the trajectory surface.
Optionally a tangential velocity keeps the parametrization uniform in arc
length, with the angle transported by the material points.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from . import _fd
from . import theta_laws as laws
from .curve_core import compute_geometry, velocity_field
from .errors import ConfigError, InsufficientHistory, NonFinite, NumericError
from .surface_builder import TrajectorySurface, gaussian_rate

FLAT_TOL = 0.05
PINCH_TOL = 0.05
EXTENT_FACTOR = 10.0
FIT_WINDOW = 10.0
BLOWUP_R2 = 0.98
TYPE_I_SLOPE = -1.25


@dataclass
class FlowConfig:
    """Time stepping and stopping parameters.

    Parameters
    ----------
    t_end : float
        Final time.
    cfl : float
        Safety factor in ``dt = cfl * min(h_s^2, 1/max(kappa)^2, h_s^2/alpha)``.
    kappa_stop : float
        Stop (and classify the singularity) once ``max kappa`` reaches this.
    length_stop : float
        Stop once the length falls below this.
    tangential : bool
        Enable uniform tangential redistribution.
    v0 : float
        Base tangential speed.
    record_every : int
        Record a slice every this many steps.
    record_dt : float, optional
        Record at multiples of this time instead; steps are shortened to hit
        the record times exactly.
    spectral_cutoff : int, optional
        After each step discard Fourier modes above this wavenumber in the
        periodic parts of positions and angle.  A regularization for the
        CMC/CGC laws, whose angle equation is a Cauchy problem for an
        elliptic surface equation and amplifies wavenumber ``k`` at a rate
        proportional to ``k``.
    method : {"fd", "spectral"}
        Derivative backend passed to :func:`compute_geometry`.
    """

    t_end: float = 1.0
    cfl: float = 0.5
    kappa_stop: float = 1e3
    length_stop: float = 0.0
    tangential: bool = False
    v0: float = 0.0
    record_every: int = 1
    record_dt: float = None
    spectral_cutoff: int = None
    method: str = "fd"
    max_steps: int = 10_000_000
    flat_tol: float = FLAT_TOL
    pinch_tol: float = PINCH_TOL
    extent_factor: float = EXTENT_FACTOR

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError("cfl must lie in (0, 1]")
        if not self.kappa_stop > 0:
            raise ConfigError("kappa_stop must be positive")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if self.record_every < 1:
            raise ConfigError("record_every must be at least 1")
        if self.record_dt is not None and not self.record_dt > 0:
            raise ConfigError("record_dt must be positive")
        if self.spectral_cutoff is not None and self.spectral_cutoff < 1:
            raise ConfigError("spectral_cutoff must be at least 1")
        if self.method not in ("fd", "spectral"):
            raise ConfigError(f"unknown derivative method {self.method!r}")


@dataclass
class SingularityReport:
    """Outcome of the singularity classification.

    ``kind`` is one of ``None``, ``Flat``, ``Cone``, ``Pinch``,
    ``InfinitePinch``; ``blowup_type`` is ``TypeI``, ``TypeII`` or
    ``Unknown``.
    """

    kind: str = "None"
    Theta: float = float("nan")
    blowup_type: str = "Unknown"
    t_detect: float = float("nan")
    theta_spread: float = float("nan")
    t_bar: float = float("nan")
    blowup_slope: float = float("nan")
    apex: tuple = (float("nan"),) * 3
    extent: float = float("nan")
    extent_extrapolated: float = float("nan")
    tolerances: dict = field(default_factory=dict)

    def as_text(self):
        lines = [
            f"kind={self.kind}",
            f"Theta={self.Theta:.6f}",
            f"type={self.blowup_type}",
            f"t_detect={self.t_detect:.6f}",
            f"t_bar={self.t_bar:.6f}",
            f"theta_spread={self.theta_spread:.3e}",
            f"blowup_slope={self.blowup_slope:.4f}",
            "apex=" + " ".join(f"{a:.6f}" for a in self.apex),
            f"extent={self.extent:.6f}",
            f"extent_extrapolated={self.extent_extrapolated:.6g}",
        ]
        lines += [f"{k}={v}" for k, v in sorted(self.tolerances.items())]
        return "\n".join(lines) + "\n"


@dataclass
class Slice:
    """A recorded time sample with the data diagnostics need."""

    t: float
    curve: object
    geom: object
    upsilon: np.ndarray
    swept_area: float
    K_area: float


@dataclass
class RunResult:
    slices: list
    surface: TrajectorySurface
    history: dict
    report: SingularityReport
    stop_reason: str
    t: float
    curve: object
    steps: int
    theta_bound_exceeded: bool = False
    monitors: dict = field(default_factory=dict)


def tangential_velocity(geom, v0=0.0):
    """Tangential speed keeping ``g / L`` constant in time.

    ``v_T(s) = v0 + int_0^s kappa psi1 - (s / L) oint kappa psi1``.  The
    cumulative integrals are evaluated spectrally (exact for resolved
    trigonometric data), so ``v_T`` is periodic by construction.
    """
    f = geom.kappa * geom.psi1 * geom.g
    I = _fd.antiderivative(f)
    total = geom.h * np.sum(f)
    s = _fd.antiderivative(geom.g)
    return v0 + I - s / geom.length * total


class _Dynamics:
    """Right-hand side of the augmented ODE system."""

    def __init__(self, law, config, kappa_min, psi2_min):
        self.law = law
        self.config = config
        self.kappa_min = kappa_min
        self.psi2_min = psi2_min

    def __call__(self, curve, t):
        geom = compute_geometry(curve, method=self.config.method)
        ups = laws.evaluate(self.law, curve, geom, t, self.kappa_min, self.psi2_min)
        V = velocity_field(curve, geom)
        thdot = ups
        if self.config.tangential:
            vT = tangential_velocity(geom, self.config.v0)
            V = V + vT[:, None] * geom.T
            thdot = ups + vT * geom.ds_theta
        area_rate = geom.integrate(geom.kappa)
        K_rate = gaussian_rate(geom, ups, self.kappa_min)
        if not (np.isfinite(V).all() and np.isfinite(thdot).all()):
            bad = ~(np.isfinite(V).all(axis=1) & np.isfinite(thdot))
            raise NonFinite("non-finite velocity", node=int(np.flatnonzero(bad)[0]), t=t)
        return V, thdot, area_rate, K_rate, geom, ups


def _advance(dyn, curve, t, dt, integrals, first=None):
    """One RK4 step; ``first`` reuses an already evaluated first stage."""
    X0, a0 = curve.positions, curve.angles
    k1 = first if first is not None else dyn(curve, t)
    stages = [k1]
    for c in (0.5, 0.5, 1.0):
        prev = stages[-1]
        trial = curve.replace(X0 + c * dt * prev[0], a0 + c * dt * prev[1], check=False)
        stages.append(dyn(trial, t + c * dt))
    w = (1.0, 2.0, 2.0, 1.0)
    X = X0 + dt / 6.0 * sum(wi * s[0] for wi, s in zip(w, stages))
    a = a0 + dt / 6.0 * sum(wi * s[1] for wi, s in zip(w, stages))
    A = integrals[0] + dt / 6.0 * sum(wi * s[2] for wi, s in zip(w, stages))
    KA = integrals[1] + dt / 6.0 * sum(wi * s[3] for wi, s in zip(w, stages))
    cut = dyn.config.spectral_cutoff
    if cut is not None:
        X = _fd.lowpass(X, cut, curve.position_jump)
        a = _fd.lowpass(a, cut, curve.angle_jump)
    if not (np.isfinite(X).all() and np.isfinite(a).all()):
        raise NonFinite("non-finite state after step", t=t + dt)
    return curve.replace(X, a), (A, KA)


def stable_dt(geom, law, config):
    """Parabolic step bound ``cfl * min(h_s^2, 1/max kappa^2, h_s^2/alpha)``."""
    hs = float(np.min(geom.g) * geom.h)
    bound = hs * hs
    kmax = float(np.max(geom.kappa))
    if kmax > 0:
        bound = min(bound, 1.0 / kmax ** 2)
    if law.kind == laws.DIFFUSIVE:
        bound = min(bound, hs * hs / law.alpha)
    return config.cfl * bound


def step(curve, law, config, dt, t=0.0, kappa_min=None, psi2_min=None):
    """Advance ``curve`` by one RK4 step of size ``dt``."""
    L = compute_geometry(curve, method=config.method).length
    kmin = laws.POLE_TOL_FACTOR / L if kappa_min is None else kappa_min
    pmin = laws.POLE_TOL_FACTOR / L if psi2_min is None else psi2_min
    dyn = _Dynamics(law, config, kmin, pmin)
    new, _ = _advance(dyn, curve, t, dt, (0.0, 0.0))
    return new


def _periodic_angle(curve):
    u, _ = _fd.grid(curve.N)
    return curve.angles - curve.degree * u


def run(curve0, law, config):
    """Integrate the flow from ``curve0`` until a stopping criterion fires.

    Returns a :class:`RunResult`.  Numerical failures raise the matching
    :class:`~framedflow.errors.NumericError` subclass with the partial
    result attached as ``err.result``.
    """
    geom0 = compute_geometry(curve0, method=config.method)
    L0 = geom0.length
    kmin = laws.POLE_TOL_FACTOR / L0
    pmin = laws.POLE_TOL_FACTOR / L0
    dyn = _Dynamics(law, config, kmin, pmin)
    surface = TrajectorySurface(curve0.boundary, curve0.pitch, kmin)
    c0 = curve0.positions.mean(axis=0)
    diameter0 = 2.0 * float(np.max(np.linalg.norm(curve0.positions - c0, axis=1)))
    theta_sup0 = float(np.max(np.abs(curve0.angles)))

    hist = {k: [] for k in ("t", "length", "max_kappa", "theta_mean", "theta_spread",
                            "centroid")}
    slices = []
    curve, t, integrals = curve0, 0.0, (0.0, 0.0)
    nstep = 0
    stop = "t_end"
    theta_exceeded = False
    next_record = config.record_dt
    result = RunResult(slices, surface, hist, SingularityReport(), stop, t, curve, 0)

    def record(state):
        V, thdot, ar, kr, geom, ups = state
        slices.append(Slice(t, curve, geom, ups, integrals[0], integrals[1]))
        surface.append_slice(t, curve, geom, ups)

    try:
        state = dyn(curve, t)
        record(state)
        while True:
            geom = state[4]
            th = _periodic_angle(curve)
            hist["t"].append(t)
            hist["length"].append(geom.length)
            hist["max_kappa"].append(float(np.max(geom.kappa)))
            hist["theta_mean"].append(float(np.arctan2(np.mean(np.sin(curve.angles)),
                                                       np.mean(np.cos(curve.angles)))))
            hist["theta_spread"].append(float(np.ptp(th)))
            hist["centroid"].append(curve.positions.mean(axis=0))
            if law.kind == laws.DIFFUSIVE and np.max(np.abs(curve.angles)) > theta_sup0 + 1e-6:
                theta_exceeded = True
            if t >= config.t_end * (1.0 - 1e-14):
                stop = "t_end"
                break
            if hist["max_kappa"][-1] >= config.kappa_stop:
                stop = "kappa_stop"
                break
            if geom.length <= config.length_stop:
                stop = "length_stop"
                break
            if nstep >= config.max_steps:
                stop = "max_steps"
                break
            dt = stable_dt(geom, law, config)
            target = config.t_end
            if next_record is not None:
                target = min(target, next_record)
            hit = False
            if t + dt >= target * (1.0 - 1e-12):
                dt = target - t
                hit = True
            curve, integrals = _advance(dyn, curve, t, dt, integrals, first=state)
            t = target if hit else t + dt
            nstep += 1
            state = dyn(curve, t)
            if next_record is not None:
                due = hit and abs(t - next_record) <= 1e-12 * max(1.0, t)
                if due:
                    next_record += config.record_dt
            else:
                due = nstep % config.record_every == 0
            if due or t >= config.t_end * (1.0 - 1e-14):
                record(state)
        if slices[-1].t != t:
            record(state)
    except NumericError as err:
        result.stop_reason = "error"
        result.t, result.curve, result.steps = t, curve, nstep
        result.theta_bound_exceeded = theta_exceeded
        err.result = result
        raise

    result.stop_reason = stop
    result.t, result.curve, result.steps = t, curve, nstep
    result.theta_bound_exceeded = theta_exceeded
    result.monitors = {"kappa_min": kmin, "psi2_min": pmin, "diameter0": diameter0,
                       "length0": L0}
    if stop in ("kappa_stop", "length_stop"):
        try:
            result.report = classify_singularity(
                hist, diameter0=diameter0, flat_tol=config.flat_tol,
                pinch_tol=config.pinch_tol, extent_factor=config.extent_factor)
        except InsufficientHistory:
            result.report = SingularityReport(kind="None", t_detect=t)
    return result


def _fit_terminal_time(t, L):
    """Fit ``L = c (t_bar - t)^p`` by least squares in log form.

    Initialised from a linear extrapolation of ``L^2``, which is exact for
    shrinking circles.
    """
    t_last = t[-1]
    span = max(t_last - t[0], 1e-300)
    beta, alpha = np.polyfit(t[-min(len(t), 6):], L[-min(len(t), 6):] ** 2, 1)
    tb0 = -alpha / beta if beta < 0 else t_last + 0.1 * span
    if not tb0 > t_last:
        tb0 = t_last + 1e-3 * span
    q0 = math.log(tb0 - t_last)
    p0 = 0.5

    def resid(x):
        tb = t_last + math.exp(x[0])
        return np.log(L) - x[1] - x[2] * np.log(tb - t)

    a0 = float(np.mean(np.log(L) - p0 * np.log(tb0 - t)))
    sol = least_squares(resid, [q0, a0, p0], method="lm", xtol=1e-14, ftol=1e-14)
    tb = t_last + math.exp(sol.x[0])
    return tb, float(sol.x[2])


def classify_singularity(history, diameter0=None, flat_tol=FLAT_TOL, pinch_tol=PINCH_TOL,
                         extent_factor=EXTENT_FACTOR, window=FIT_WINDOW):
    """Classify a curvature blow-up from the run history.

    Parameters
    ----------
    history : dict
        Per-step arrays ``t``, ``length``, ``max_kappa``, ``theta_mean``,
        ``theta_spread`` and ``centroid``.
    diameter0 : float, optional
        Initial diameter used by the infinite-pinch test.
    window : float
        Samples with ``L <= window * L_end`` are used for the fits.

    Notes
    -----
    The terminal time comes from a power-law fit of the length.  TypeI vs
    TypeII is decided by the log-log slope of ``max kappa^2`` against
    ``t_bar - t`` (about -1 for TypeI).  A pinch is promoted to an infinite
    pinch when the axial excursion of the curve, extrapolated from its
    growth over the last two decades of ``t_bar - t``, exceeds
    ``extent_factor * diameter0``.
    """
    t = np.asarray(history["t"], dtype=float)
    L = np.asarray(history["length"], dtype=float)
    if len(t) < 8:
        raise InsufficientHistory(f"only {len(t)} samples")
    sel = L <= window * L[-1]
    if sel.sum() < 8:
        sel = np.zeros_like(sel)
        sel[-8:] = True
    tw, Lw = t[sel], L[sel]
    t_bar, _ = _fit_terminal_time(tw, Lw)

    theta = np.asarray(history["theta_mean"], dtype=float)
    Theta = float(theta[-1])
    spread = float(history["theta_spread"][-1])
    a = abs(Theta)
    if a < flat_tol:
        kind = "Flat"
    elif abs(a - np.pi / 2) < pinch_tol:
        kind = "Pinch"
    elif a < np.pi / 2:
        kind = "Cone"
    else:
        kind = "None"

    # blow-up rate
    s = t_bar - t
    M = np.asarray(history["max_kappa"], dtype=float) ** 2
    use = sel & (s > 0)
    slope = float("nan")
    btype = "Unknown"
    if use.sum() >= 4:
        x, y = np.log(s[use]), np.log(M[use])
        slope, icpt = np.polyfit(x, y, 1)
        r = y - (slope * x + icpt)
        r2 = 1.0 - np.sum(r ** 2) / max(np.sum((y - y.mean()) ** 2), 1e-300)
        if r2 > BLOWUP_R2:
            btype = "TypeI" if slope > TYPE_I_SLOPE else "TypeII"

    # apex: extrapolate the centroid linearly in L to L = 0
    C = np.asarray(history["centroid"], dtype=float)
    apex = tuple(float(np.polyfit(Lw, C[sel][:, j], 1)[1]) for j in range(3))

    D = np.linalg.norm(C - C[0], axis=1)
    extent = float(np.max(D))
    extrap = extent
    if kind == "Pinch" and diameter0:
        s_end = s[-1]
        pts = s_end * np.array([100.0, 10.0, 1.0])
        if pts[0] <= s[0]:
            Ds = np.interp(-pts, -s, np.maximum.accumulate(D))
            d1, d2 = Ds[1] - Ds[0], Ds[2] - Ds[1]
            if d1 > 0:
                r = d2 / d1
                extrap = float("inf") if r >= 1.0 else Ds[2] + d2 * r / (1.0 - r)
            if extrap > extent_factor * diameter0:
                kind = "InfinitePinch"
    return SingularityReport(
        kind=kind, Theta=Theta, blowup_type=btype, t_detect=float(t[-1]),
        theta_spread=spread, t_bar=float(t_bar), blowup_slope=float(slope), apex=apex,
        extent=extent, extent_extrapolated=float(extrap),
        tolerances={"flat_tol": flat_tol, "pinch_tol": pinch_tol,
                    "extent_factor": extent_factor, "fit_window": window,
                    "blowup_r2": BLOWUP_R2, "type_i_slope": TYPE_I_SLOPE})
