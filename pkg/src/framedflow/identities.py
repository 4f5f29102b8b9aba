"""Closed-form evolution rates of local quantities under the framed flow.

Given the geometry of a slice and the applied angle velocity, these return
the instantaneous time derivatives predicted by the flow equations with no
tangential motion.  They are used as finite-difference oracles.

With ``w_N = d_s psi1 - tau psi2`` and ``w_B = d_s psi2 + tau psi1`` the
tangent moves as ``d_t T = w_N N + w_B B`` and

    xi3 = (d_s^2 psi2 + psi1 d_s tau + 2 tau d_s psi1 - tau^2 psi2) / kappa
    d_t kappa = kappa^2 psi1 + d_s^2 psi1 - d_s tau psi2 - 2 tau d_s psi2 - tau^2 psi1
    d_t tau   = kappa d_s psi2 + 2 kappa psi1 tau + d_s xi3
"""

import numpy as np

from .errors import FrenetUndefined


def _require_frenet(geom):
    if not geom.frenet_ok.all():
        i = int(np.flatnonzero(~geom.frenet_ok)[0])
        raise FrenetUndefined("evolution rates need a Frenet frame", node=i)


def frame_rates(geom, upsilon):
    """Frame-evolution coefficients.

    Returns
    -------
    dict
        ``xi1, xi2, xi3`` for the Frenet frame (``d_t T = xi1 N - xi2 B``,
        ``<d_t N, B> = xi3``) and ``zeta1, zeta2, zeta3`` for the theta frame
        (``<d_t T, nu> = zeta1``, ``<d_t T, beta> = -zeta2``,
        ``<d_t nu, beta> = zeta3``).
    """
    _require_frenet(geom)
    k, tau = geom.kappa, geom.tau
    p1, p2 = geom.psi1, geom.psi2
    ds = geom.ds
    dp1, dp2 = ds(p1), ds(p2)
    xi3 = (ds(dp2) + p1 * ds(tau) + 2.0 * tau * dp1 - tau ** 2 * p2) / k
    return {
        "xi1": dp1 - tau * p2,
        "xi2": -dp2 - tau * p1,
        "xi3": xi3,
        "zeta1": geom.ds_kappa,
        "zeta2": -geom.psi3 * k,
        "zeta3": upsilon + xi3,
    }


def curvature_rates(geom, upsilon):
    """Predicted ``d_t`` of ``g, kappa, tau, psi1, psi2, psi3`` at fixed ``u``."""
    _require_frenet(geom)
    k, tau = geom.kappa, geom.tau
    p1, p2 = geom.psi1, geom.psi2
    ds = geom.ds
    dp1, dp2, dtau = ds(p1), ds(p2), ds(tau)
    xi3 = (ds(dp2) + p1 * dtau + 2.0 * tau * dp1 - tau ** 2 * p2) / k
    dk = k ** 2 * p1 + ds(dp1) - dtau * p2 - 2.0 * tau * dp2 - tau ** 2 * p1
    dtau_t = k * dp2 + 2.0 * k * p1 * tau + ds(xi3)
    c, s = np.cos(geom.theta), np.sin(geom.theta)
    return {
        "g": -k * p1 * geom.g,
        "kappa": dk,
        "tau": dtau_t,
        "psi1": dk * c - p2 * upsilon,
        "psi2": dk * s + p1 * upsilon,
        "psi3": dtau_t + ds(upsilon) + k * p1 * geom.ds_theta,
    }


def global_rates(geom, upsilon):
    """Predicted time derivatives of global integrals.

    ``dL/dt = -oint kappa psi1``, ``dA/dt = oint kappa``,
    ``d/dt oint tau = oint (kappa psi1 tau - psi2 d_s kappa)``,
    ``dA_p/dt = -oint kappa beta``.
    """
    it = geom.integrate
    out = {
        "length": -it(geom.kappa * geom.psi1),
        "swept_area": it(geom.kappa),
        "Ap": -it(geom.kappa[:, None] * geom.beta),
    }
    if geom.frenet_ok.all():
        out["total_torsion"] = it(geom.kappa * geom.psi1 * geom.tau - geom.psi2 * geom.ds_kappa)
    return out
