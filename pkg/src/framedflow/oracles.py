"""Analytic solutions and reduced ODE integrators for symmetric data.

Circle oracles track a circle of radius ``rho`` in a plane shifted by ``z``
along its binormal, with uniform angle ``theta``; the flow reduces to

    rho' = -cos(theta) / rho,    z' = sin(theta) / rho.

Helical oracles track ``(rho cos(u + ups), rho sin(u + ups), w u + omega)``
with ``g^2 = rho^2 + w^2`` and

    CMC:  theta' = (sin(theta) + rho H) / g^2
    CGC:  theta' = -(K g^4 + w^2 cos^2(theta)) / (g^4 sin(theta))
    rho' = -rho cos(theta) / g^2,  omega' = rho^2 sin(theta) / g^3,
    ups' = -w sin(theta) / g^3.

``H`` is the trace (sum of principal curvatures) convention.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import _fd
from .curve_core import HELICAL
from .errors import ConfigError, OracleError

RTOL = 1e-10
ATOL = 1e-12
POLE_TOL = 1e-4
CSV_COLUMNS = ("source", "t", "theta", "rho", "z", "upsilon")


@dataclass
class CircleState:
    rho: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    t: np.ndarray


@dataclass
class HelicalState:
    theta: np.ndarray
    rho: np.ndarray
    omega: np.ndarray
    upsilon: np.ndarray
    t: np.ndarray
    w: float = 0.0


@dataclass
class OracleTrajectory:
    """Sampled oracle solution with a dense evaluator.

    ``states`` maps ``theta, rho, z, upsilon`` to arrays over ``t``; ``z`` is
    the axial shift (``omega`` for helical states).  ``info`` holds
    oracle-specific diagnostics such as terminal values or breakdown data.
    """

    name: str
    params: dict
    t: np.ndarray
    states: dict
    info: dict = field(default_factory=dict)
    dense: object = None

    def at(self, t):
        """States at arbitrary times inside the integrated interval."""
        t = np.asarray(t, dtype=float)
        if self.dense is not None:
            return self.dense(t)
        return {k: np.interp(t, self.t, v) for k, v in self.states.items()}

    @property
    def last(self):
        return {k: float(v[-1]) for k, v in self.states.items()}


def _check_phi(phi):
    if not -np.pi / 2 < phi < np.pi / 2:
        raise OracleError(f"phi must lie in (-pi/2, pi/2), got {phi}")


def cone_terminal_time(rho0, phi):
    return rho0 ** 2 / (2.0 * np.cos(phi))


def cone_oracle(rho0, phi, t, terminal_ok=False):
    """Shrinking circle with constant angle ``phi`` and zero angle velocity.

    ``rho = (rho0^2 - 2 t cos(phi))^{1/2}``, ``z = (rho0 - rho) tan(phi)``.

    Raises
    ------
    OracleError
        For ``t >= t_bar`` (``t > t_bar`` if ``terminal_ok``).
    """
    _check_phi(phi)
    if not rho0 > 0:
        raise OracleError("rho0 must be positive")
    t = np.asarray(t, dtype=float)
    tb = cone_terminal_time(rho0, phi)
    bad = t > tb if terminal_ok else t >= tb
    if np.any(bad):
        raise OracleError(f"t must be below the terminal time {tb!r}")
    rho = np.sqrt(np.maximum(rho0 ** 2 - 2.0 * t * np.cos(phi), 0.0))
    return CircleState(rho, (rho0 - rho) * np.tan(phi), np.full_like(t, phi), t)


def cone_trajectory(rho0, phi, n=201):
    """Cone solution on ``n`` uniform times up to and including ``t_bar``."""
    tb = cone_terminal_time(rho0, phi)
    t = np.linspace(0.0, tb, n)
    s = cone_oracle(rho0, phi, t, terminal_ok=True)

    def dense(tt):
        c = cone_oracle(rho0, phi, tt, terminal_ok=True)
        return {"theta": c.theta, "rho": c.rho, "z": c.z, "upsilon": np.zeros_like(c.t)}

    states = {"theta": s.theta, "rho": s.rho, "z": s.z, "upsilon": np.zeros(n)}
    info = {"t_bar": float(tb), "z_terminal": float(rho0 * np.tan(phi))}
    return OracleTrajectory("cone", {"rho0": rho0, "phi": phi}, t, states, info, dense)


def pinch_terminal_time(rho0, phi):
    """``t_bar = rho0^2 / sin^2(phi)``, the time at which the ansatz
    ``rho = sin(theta) (t_bar - t)^{1/2}`` matches ``rho(0) = rho0``."""
    return rho0 ** 2 / np.sin(phi) ** 2


def pinch_oracle(rho0, phi, rtol=RTOL, atol=ATOL, ansatz_tol=1e-6):
    """Integrate the circle system under the pinch angle velocity

        theta' = (tan(theta) - 2 kappa (t_bar - t)^{1/2}) / (2 (t_bar - t)),

    with ``kappa = 1 / rho``, from ``(rho0, 0, phi)`` towards ``t_bar``.

    The ansatz ``rho = sin(theta) sqrt(t_bar - t)`` is preserved, and on it
    ``d theta / d sigma = (sin^2 theta - 2 cos theta) / sin(2 theta)`` with
    ``sigma = -ln(t_bar - t)``.  Its only interior equilibrium
    ``cos(theta) = sqrt 2 - 1`` is repelling: below it ``theta`` reaches 0
    and the circle collapses before ``t_bar``; above it ``theta`` reaches
    ``pi/2`` in finite time.  ``info`` reports the terminal ``z / sqrt(t_bar)``
    actually reached, the first time the ansatz residual exceeds
    ``ansatz_tol * rho0`` and the reason the integration stopped.
    """
    if not 0.0 < phi < np.pi / 2:
        raise OracleError(f"phi must lie in (0, pi/2), got {phi}")
    if not rho0 > 0:
        raise OracleError("rho0 must be positive")
    tb = pinch_terminal_time(rho0, phi)

    def rhs(t, y):
        th, rho, _ = y
        eps = tb - t
        return [(np.tan(th) - 2.0 * np.sqrt(eps) / rho) / (2.0 * eps),
                -np.cos(th) / rho, np.sin(th) / rho]

    def collapse(t, y):
        return y[1] - 1e-6 * rho0
    collapse.terminal = True

    def pole(t, y):
        return np.pi / 2 - abs(y[0]) - 1e-6
    pole.terminal = True

    sol = solve_ivp(rhs, (0.0, tb * (1.0 - 1e-12)), [phi, rho0, 0.0], method="DOP853",
                    rtol=rtol, atol=atol, events=(collapse, pole), dense_output=True)
    th, rho, z = sol.y
    resid = np.abs(rho - np.sin(th) * np.sqrt(np.maximum(tb - sol.t, 0.0)))
    off = np.flatnonzero(resid > ansatz_tol * rho0)
    if sol.status == 1:
        reason = "rho collapsed" if sol.t_events[0].size else "theta reached pi/2"
    elif sol.status == -1:
        reason = f"integrator failed: {sol.message}"
    else:
        reason = "reached t_bar"
    info = {
        "t_bar": float(tb),
        "theta_equilibrium": float(np.arccos(np.sqrt(2.0) - 1.0)),
        "t_end": float(sol.t[-1]),
        "z_terminal": float(z[-1]),
        "z_ratio": float(z[-1] / np.sqrt(tb)),
        "theta_end": float(th[-1]),
        "rho_end": float(rho[-1]),
        "stop_reason": reason,
        "ansatz_max_residual": float(resid.max()),
        "t_ansatz_break": float(sol.t[off[0]]) if off.size else None,
        "breakdown": bool(sol.t[-1] < tb * (1.0 - 1e-6)),
    }

    def dense(tt):
        y = sol.sol(tt)
        return {"theta": y[0], "rho": y[1], "z": y[2], "upsilon": np.zeros_like(y[0])}

    states = {"theta": th, "rho": rho, "z": z, "upsilon": np.zeros_like(th)}
    return OracleTrajectory("pinch", {"rho0": rho0, "phi": phi}, sol.t, states, info, dense)


def infinite_pinch_closed_form(rho0, t):
    """``theta = 2 t / rho0^2``, ``rho = rho0 (1 - sin(theta))^{1/2}`` and

        z = (rho0 / sqrt 2) [ln tan(pi/8) - ln tan(x/2) + sqrt 2 - 2 cos x],

    ``x = pi/4 - theta/2``, the quadrature of ``sin(theta) / rho``.
    """
    t = np.asarray(t, dtype=float)
    th = 2.0 * t / rho0 ** 2
    rho = rho0 * np.sqrt(np.maximum(1.0 - np.sin(th), 0.0))
    x = np.pi / 4 - th / 2
    with np.errstate(divide="ignore"):
        z = rho0 / np.sqrt(2.0) * (np.log(np.tan(np.pi / 8)) - np.log(np.tan(x / 2))
                                   + np.sqrt(2.0) - 2.0 * np.cos(x))
    return CircleState(rho, z, th, t)


def infinite_pinch_oracle(rho0, n=2001, eps_min=1e-12, rtol=RTOL, atol=ATOL):
    """Infinite pinch from ``theta' = 2 / rho0^2`` starting at ``theta = 0``.

    The closed form is sampled on times approaching ``t_bar = pi rho0^2 / 4``
    geometrically down to ``t_bar - eps_min t_bar``.  ``info`` carries an
    independent solve of ``(rho^2)' = -2 cos(2 t / rho0^2)`` and of
    ``z' = sin(theta) / rho`` against the closed forms.
    """
    if not rho0 > 0:
        raise OracleError("rho0 must be positive")
    tb = np.pi * rho0 ** 2 / 4.0
    tt = tb * (1.0 - np.geomspace(1.0, eps_min, n))
    tt[0] = 0.0
    cf = infinite_pinch_closed_form(rho0, tt)

    sol = solve_ivp(lambda t, y: [-2.0 * np.cos(2.0 * t / rho0 ** 2)], (0.0, tb), [rho0 ** 2],
                    method="DOP853", rtol=rtol, atol=atol * rho0 ** 2, dense_output=True)
    r2 = sol.sol(tt)[0]
    rho2_err = float(np.max(np.abs(r2 - cf.rho ** 2)) / rho0 ** 2)

    t_mid = tb * 0.99
    zsol = solve_ivp(lambda t, y: [np.sin(2 * t / rho0 ** 2)
                                   / infinite_pinch_closed_form(rho0, t).rho],
                     (0.0, t_mid), [0.0], method="DOP853", rtol=rtol, atol=atol * rho0)
    z_err = abs(float(zsol.y[0, -1]) - float(infinite_pinch_closed_form(rho0, t_mid).z))
    info = {
        "t_bar": float(tb),
        "rho_at_t_bar": float(infinite_pinch_closed_form(rho0, tb).rho),
        "rho2_ode_error": rho2_err,
        "z_quadrature_error": z_err / rho0,
        "z_last": float(cf.z[-1]),
        "z_exceeds_10rho0": bool(cf.z[-1] > 10.0 * rho0),
    }

    def dense(t):
        c = infinite_pinch_closed_form(rho0, t)
        return {"theta": c.theta, "rho": c.rho, "z": c.z, "upsilon": np.zeros_like(c.t)}

    states = {"theta": cf.theta, "rho": cf.rho, "z": cf.z, "upsilon": np.zeros(n)}
    return OracleTrajectory("infinite-pinch", {"rho0": rho0}, tt, states, info, dense)


def _helical(name, theta_rate, theta0, rho0, w, t_end, params, rtol, atol, pole_check):
    if not rho0 > 0:
        raise OracleError("rho0 must be positive")

    def rhs(t, y):
        th, rho = y[0], y[1]
        g2 = rho * rho + w * w
        g3 = g2 * np.sqrt(g2)
        s = np.sin(th)
        return [theta_rate(th, rho, g2), -rho * np.cos(th) / g2, rho * rho * s / g3,
                -w * s / g3]

    def collapse(t, y):
        return y[1] - 1e-8 * rho0
    collapse.terminal = True
    events = [collapse]
    if pole_check:
        if abs(np.sin(theta0)) < POLE_TOL:
            raise OracleError(f"sin(theta0) = {np.sin(theta0):.3e} is at the CGC pole")

        def pole(t, y):
            return abs(np.sin(y[0])) - POLE_TOL
        pole.terminal = True
        events.append(pole)

    sol = solve_ivp(rhs, (0.0, t_end), [theta0, rho0, 0.0, 0.0], method="DOP853",
                    rtol=rtol, atol=atol, events=events, dense_output=True)
    stop = "t_end"
    if sol.status == 1:
        stop = "rho collapsed" if sol.t_events[0].size else "pole approach"
    elif sol.status == -1:
        stop = f"integrator failed: {sol.message}"
    th, rho, om, up = sol.y
    info = {"t_end": float(sol.t[-1]), "stop_reason": stop,
            "min_abs_sin_theta": float(np.min(np.abs(np.sin(th)))),
            "min_rho": float(rho.min())}

    def dense(t):
        y = sol.sol(t)
        return {"theta": y[0], "rho": y[1], "z": y[2], "upsilon": y[3]}

    states = {"theta": th, "rho": rho, "z": om, "upsilon": up}
    return OracleTrajectory(name, params, sol.t, states, info, dense)


def helical_cmc_oracle(theta0, rho0, w, H, t_end=1.0, rtol=RTOL, atol=ATOL):
    """Reduced CMC system for a uniformly framed helix (``w = 0``: circle)."""
    def rate(th, rho, g2):
        return (np.sin(th) + rho * H) / g2
    params = {"theta0": theta0, "rho0": rho0, "w": w, "H": H}
    return _helical("helical-cmc", rate, theta0, rho0, w, t_end, params, rtol, atol, False)


def helical_cgc_oracle(theta0, rho0, w, K, t_end=1.0, rtol=RTOL, atol=ATOL):
    """Reduced CGC system for a uniformly framed helix (``w = 0``: circle).

    Stops with ``stop_reason = "pole approach"`` once ``|sin(theta)|`` drops
    below ``POLE_TOL``.
    """
    def rate(th, rho, g2):
        return -(K * g2 * g2 + w * w * np.cos(th) ** 2) / (g2 * g2 * np.sin(th))
    params = {"theta0": theta0, "rho0": rho0, "w": w, "K": K}
    return _helical("helical-cgc", rate, theta0, rho0, w, t_end, params, rtol, atol, True)


def _circular_mean(a):
    return float(np.arctan2(np.mean(np.sin(a)), np.mean(np.cos(a))))


def simulation_states(slices):
    """Symmetric-ansatz states of recorded slices.

    Closed curves: ``rho`` is the mean distance to the centroid and ``z`` the
    centroid shift along the initial binormal ``+z``.  Helical curves:
    ``rho`` is the mean distance to the axis, ``z`` the mean of
    ``z_i - w u_i`` and ``upsilon`` the mean phase ``atan2(y, x) - u``.
    """
    s0 = slices[0]
    u, _ = _fd.grid(s0.curve.N)
    helical = s0.curve.boundary == HELICAL
    w = s0.curve.pitch / _fd.TWO_PI
    c0 = s0.curve.positions.mean(axis=0)
    out = {k: [] for k in ("t", "theta", "rho", "z", "upsilon")}
    for sl in slices:
        X = sl.curve.positions
        out["t"].append(sl.t)
        out["theta"].append(_circular_mean(sl.curve.angles))
        if helical:
            out["rho"].append(float(np.mean(np.hypot(X[:, 0], X[:, 1]))))
            out["z"].append(float(np.mean(X[:, 2] - w * u)))
            out["upsilon"].append(_circular_mean(np.arctan2(X[:, 1], X[:, 0]) - u))
        else:
            c = X.mean(axis=0)
            out["rho"].append(float(np.mean(np.linalg.norm(X - c, axis=1))))
            out["z"].append(float(c[2] - c0[2]))
            out["upsilon"].append(0.0)
    return {k: np.asarray(v) for k, v in out.items()}


def compare_to_simulation(oracle, slices, quantities=("theta", "rho", "z", "upsilon"),
                          t_max=None):
    """Sup-norm error over time between an oracle and recorded slices.

    Returns
    -------
    dict
        ``errors`` per quantity, ``sup`` over quantities, and the matched
        ``times``.
    """
    helical_oracle = oracle.name.startswith("helical") and oracle.params.get("w", 0) != 0
    helical_sim = slices[0].curve.boundary == HELICAL
    if helical_oracle != helical_sim:
        raise ConfigError(f"oracle {oracle.name} does not match a "
                          f"{slices[0].curve.boundary} simulation")
    sim = simulation_states(slices)
    t = sim["t"]
    keep = t <= min(oracle.t[-1], np.inf if t_max is None else t_max) + 1e-12
    ref = oracle.at(t[keep])
    errors = {}
    for q in quantities:
        d = sim[q][keep] - ref[q]
        if q in ("theta", "upsilon"):
            d = np.angle(np.exp(1j * d))
        errors[q] = float(np.max(np.abs(d)))
    return {"errors": errors, "sup": max(errors.values()), "times": t[keep]}


def write_trajectory_csv(traj, path, source=None):
    """Write ``source,t,theta,rho,z,upsilon`` rows to a path or open stream;
    ``source`` defaults to ``oracle:<name>``."""
    src = source or f"oracle:{traj.name}"
    if hasattr(path, "write"):
        _write_rows(traj, path, src)
    else:
        with open(path, "w", newline="") as fh:
            _write_rows(traj, fh, src)


def _write_rows(traj, fh, src):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for i in range(len(traj.t)):
        w.writerow([src, repr(float(traj.t[i]))]
                   + [repr(float(traj.states[k][i])) for k in CSV_COLUMNS[2:]])


def simulation_trajectory(slices, name="simulation"):
    """Wrap :func:`simulation_states` as an :class:`OracleTrajectory` so it
    can be exported in the same schema."""
    s = simulation_states(slices)
    states = {k: s[k] for k in CSV_COLUMNS[2:]}
    return OracleTrajectory(name, {}, s["t"], states)
