"""Angle velocity laws ``upsilon_theta`` for the framed curvature flow.

Five laws are supported: zero, constant rate, diffusive, and the two
generators whose trajectory surfaces have prescribed constant mean (CMC) or
Gaussian (CGC) curvature.  The CMC/CGC expressions are the algebraic
inverses of the closed-form H and K of the trajectory surface.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, CurvatureTooSmall, FrenetUndefined, Psi2TooSmall

ZERO = "zero"
CONSTANT = "constant"
DIFFUSIVE = "diffusive"
CMC = "cmc"
CGC = "cgc"
KINDS = (ZERO, CONSTANT, DIFFUSIVE, CMC, CGC)

#: kappa_min and psi2_min are this factor over the initial length
POLE_TOL_FACTOR = 1e-4


@dataclass(frozen=True)
class ThetaLaw:
    """Angle velocity rule.

    Parameters
    ----------
    kind : str
        One of ``zero``, ``constant``, ``diffusive``, ``cmc``, ``cgc``.
    rate : float
        Constant angular rate (``constant``).
    alpha, beta, f4 : float, 3-vector, float
        Diffusivity, drift vector and constant source (``diffusive``).
    H, K : float
        Target mean curvature (trace convention) or Gaussian curvature.
    """

    kind: str = ZERO
    rate: float = 0.0
    alpha: float = 1.0
    beta: tuple = (0.0, 0.0, 0.0)
    f4: float = 0.0
    H: float = 0.0
    K: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown law {self.kind!r}")
        if self.kind == DIFFUSIVE and not self.alpha > 0:
            raise ConfigError("diffusive law needs alpha > 0")
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))

    @classmethod
    def zero(cls):
        return cls(ZERO)

    @classmethod
    def constant(cls, rate):
        return cls(CONSTANT, rate=rate)

    @classmethod
    def diffusive(cls, alpha, beta=(0.0, 0.0, 0.0), f4=0.0):
        return cls(DIFFUSIVE, alpha=alpha, beta=beta, f4=f4)

    @classmethod
    def cmc(cls, H):
        return cls(CMC, H=H)

    @classmethod
    def cgc(cls, K):
        return cls(CGC, K=K)


def eval_zero_or_constant(law, geom):
    rate = law.rate if law.kind == CONSTANT else 0.0
    return np.full(geom.kappa.shape, float(rate))


def eval_diffusive(law, curve, geom, t=None):
    """``alpha d_s^2 theta + kappa <beta, N> + f4``."""
    d2theta = geom.ds(geom.ds_theta)
    beta = np.asarray(law.beta, dtype=float)
    drift = np.zeros_like(geom.kappa)
    if np.any(beta != 0.0):
        if not geom.frenet_ok.all():
            i = int(np.flatnonzero(~geom.frenet_ok)[0])
            raise FrenetUndefined("Frenet normal undefined with nonzero beta", node=i, t=t)
        drift = geom.kappa * (geom.N @ beta)
    return law.alpha * d2theta + drift + law.f4


def _check_kappa(geom, kappa_min, t):
    bad = geom.kappa < kappa_min
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise CurvatureTooSmall(
            f"curvature {geom.kappa[i]:.3e} below kappa_min {kappa_min:.3e}", node=i, t=t)
    if not geom.frenet_ok.all():
        i = int(np.flatnonzero(~geom.frenet_ok)[0])
        raise FrenetUndefined("torsion undefined", node=i, t=t)


def _geodesic_terms(geom):
    """The psi1-part shared by both generators, and the d_s^2 kappa part."""
    k = geom.kappa
    a = (k * geom.ds_psi3 + 2.0 * geom.ds_kappa * geom.psi3) * geom.psi1 / k ** 2
    return k, a


def eval_cmc(law, geom, kappa_min=None, t=None):
    """Angle velocity producing a trajectory surface with mean curvature ``H``.

    ``kappa H - (kappa d_s psi3 + 2 d_s kappa psi3) psi1 / kappa^2
    + (kappa^3 + kappa psi3^2 - d_s^2 kappa) psi2 / kappa^2``.
    """
    if kappa_min is None:
        kappa_min = POLE_TOL_FACTOR / geom.length
    _check_kappa(geom, kappa_min, t)
    k, a = _geodesic_terms(geom)
    p2, p3 = geom.psi2, geom.psi3
    return k * law.H - a + (k ** 3 + k * p3 ** 2 - geom.ds2_kappa) * p2 / k ** 2


def eval_cgc(law, geom, kappa_min=None, psi2_min=None, t=None):
    """Angle velocity producing a trajectory surface with Gaussian curvature ``K``.

    ``-kappa K / psi2 - (kappa d_s psi3 + 2 d_s kappa psi3) psi1 / kappa^2
    - kappa psi3^2 / psi2 - (d_s^2 kappa - kappa psi3^2) psi2 / kappa^2``.
    """
    if kappa_min is None:
        kappa_min = POLE_TOL_FACTOR / geom.length
    if psi2_min is None:
        psi2_min = POLE_TOL_FACTOR / geom.length
    small = np.abs(geom.psi2) < psi2_min
    if small.any():
        i = int(np.flatnonzero(small)[0])
        raise Psi2TooSmall(
            f"|psi2| = {abs(geom.psi2[i]):.3e} below psi2_min {psi2_min:.3e}", node=i, t=t)
    _check_kappa(geom, kappa_min, t)
    k, a = _geodesic_terms(geom)
    p2, p3 = geom.psi2, geom.psi3
    return (-k * law.K / p2 - a - k * p3 ** 2 / p2
            - (geom.ds2_kappa - k * p3 ** 2) * p2 / k ** 2)


def evaluate(law, curve, geom, t=None, kappa_min=None, psi2_min=None):
    """Dispatch to the evaluator for ``law.kind``."""
    if law.kind in (ZERO, CONSTANT):
        return eval_zero_or_constant(law, geom)
    if law.kind == DIFFUSIVE:
        return eval_diffusive(law, curve, geom, t)
    if law.kind == CMC:
        return eval_cmc(law, geom, kappa_min, t)
    return eval_cgc(law, geom, kappa_min, psi2_min, t)
