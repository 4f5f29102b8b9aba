"""Global quantities and residual monitors for recorded slices.

Conventions
-----------
* ``Ap = 1/2 oint gamma x d_s gamma ds`` is the projected-area vector.
* Writhe is the Gauss double integral, twists are ``(1/2 pi) oint psi3 ds``
  (theta frame) and ``(1/2 pi) oint tau ds`` (Frenet frame), so that
  ``Tw_theta - Tw_frenet = deg(theta)``.
* ``flux_residual`` uses the mean curvature in the trace convention, for
  which the conserved boundary flux is ``(H/2) oint <gamma x T, a> ds +
  oint <nu, a> ds``.
* ``gb_residual = iint K dA - (oint psi1 ds|_t - oint psi1 ds|_0)``.
"""

import csv
from dataclasses import dataclass, fields

import numpy as np

from . import _fd
from .curve_core import CLOSED, cross, interpolant
from .errors import FrenetUndefined, NearSelfIntersection, Unsupported

CSV_HEADER = (
    "t,length,swept_area,total_torsion,total_psi3,Ap_x,Ap_y,Ap_z,writhe,twist_theta,"
    "twist_frenet,selflink_theta,deg_theta,max_kappa,theta_mean,theta_spread,g_uniformity,"
    "length_bound_residual,area_lower_residual,flux_residual,gb_residual"
)

EMBED_TOL_FACTOR = 1e-3
NAN = float("nan")


def global_scalars(geom):
    """Arc-length integrals of the slice.

    Returns
    -------
    dict
        ``length, int_kappa, int_kappa_psi1, int_tau, int_psi3, int_psi1``;
        the torsion integrals are NaN where the Frenet frame is undefined.
    """
    it = geom.integrate
    return {
        "length": geom.length,
        "int_kappa": float(it(geom.kappa)),
        "int_kappa_psi1": float(it(geom.kappa * geom.psi1)),
        "int_tau": float(it(geom.tau)),
        "int_psi3": float(it(geom.psi3)),
        "int_psi1": float(it(geom.psi1)),
    }


def projected_area(curve):
    """Projected-area vector ``1/2 oint gamma x d_u gamma du`` (spectral)."""
    if curve.boundary != CLOSED:
        raise Unsupported("projected area needs a closed curve")
    X = curve.positions
    _, h = _fd.grid(curve.N)
    Xu = _fd.spectral(X, 1)
    return 0.5 * h * np.sum(cross(X, Xu), axis=0)


def writhe(curve, block=512):
    """Gauss double integral over the node torus, skipping ``|i - j| <= 1``.

    Raises
    ------
    NearSelfIntersection
        If two non-adjacent nodes are closer than ``1e-3 L / N``.
    """
    if curve.boundary != CLOSED:
        raise Unsupported("writhe needs a closed curve")
    X = curve.positions
    N = curve.N
    _, h = _fd.grid(N)
    Xu = _fd.d1(X, h)
    L = h * np.sum(np.linalg.norm(Xu, axis=1))
    tol = EMBED_TOL_FACTOR * L / N
    idx = np.arange(N)
    total = 0.0
    dmin = np.inf
    for start in range(0, N, block):
        rows = idx[start:start + block]
        r = X[rows, None, :] - X[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", r, r)
        sep = np.abs(rows[:, None] - idx[None, :])
        sep = np.minimum(sep, N - sep)
        mask = sep > 1
        d2m = np.where(mask, d2, np.inf)
        dmin = min(dmin, float(np.sqrt(d2m.min())))
        tri = np.einsum("ijk,ijk->ij", r, cross(Xu[rows, None, :], Xu[None, :, :]))
        total += float(np.sum(np.where(mask, tri / d2m ** 1.5, 0.0)))
    if dmin < tol:
        raise NearSelfIntersection(f"non-adjacent nodes {dmin:.3e} apart (embed_tol {tol:.3e})")
    return total * h * h / (4.0 * np.pi)


def twist(curve, geom, frame="theta"):
    """Normalized twist of the theta frame or the Frenet frame."""
    if not geom.frenet_ok.all():
        i = int(np.flatnonzero(~geom.frenet_ok)[0])
        raise FrenetUndefined("twist needs a Frenet frame", node=i)
    f = geom.psi3 if frame == "theta" else geom.tau
    return float(geom.integrate(f)) / _fd.TWO_PI


def twist_degree_defect(curve, geom):
    """``|Tw_theta - Tw_frenet - deg(theta)|``; telescopes to round-off."""
    return abs(twist(curve, geom, "theta") - twist(curve, geom, "frenet") - curve.degree)


def selflink(wr, tw):
    """``S_Lk = Wr + Tw`` with its nearest integer and the distance to it."""
    s = wr + tw
    n = int(np.rint(s))
    return s, n, abs(s - n)


def terminal_time_bound(L0, K_I):
    """Upper bound ``L0^2 / (8 pi^2 K_I)`` on the extinction time."""
    return L0 ** 2 / (8.0 * np.pi ** 2 * K_I)


def bound_monitors(times, lengths, areas, K_I=None, knotted=False, K_II=None):
    """Length-bound and swept-area lower-bound residuals.

    ``K_II`` is accepted for configuration symmetry; it enters no residual.

    ``L(t)^2 - (L(0)^2 - 8 pi^2 K_I t)`` is NaN (not applicable) when
    ``K_I`` is missing or not in ``(0, 1]``; ``A(t) - 2 pi t`` (``4 pi t``
    when knotted).
    """
    t = np.asarray(times, dtype=float)
    L = np.asarray(lengths, dtype=float)
    A = np.asarray(areas, dtype=float)
    if K_I is not None and 0.0 < K_I <= 1.0:
        lb = L ** 2 - (L[0] ** 2 - 8.0 * np.pi ** 2 * K_I * t)
    else:
        lb = np.full_like(t, np.nan)
    return lb, A - (4.0 if knotted else 2.0) * np.pi * t


def boundary_flux(curve, geom, H):
    """``(H/2) oint gamma x T ds + oint nu ds`` (vector form)."""
    X = curve.positions
    return 0.5 * H * geom.integrate(cross(X, geom.T)) + geom.integrate(geom.nu)


def flux_residual(curve0, geom0, curve_t, geom_t, H, directions=None):
    """Maximum over ``directions`` of the flux imbalance between Γ_0 and Γ_t,
    divided by ``L(Γ_0)``.  The Γ_0 term enters with reversed orientation."""
    if curve0.boundary != CLOSED:
        raise Unsupported("flux theorem needs closed boundary curves")
    a = np.eye(3) if directions is None else np.atleast_2d(np.asarray(directions, dtype=float))
    d = boundary_flux(curve_t, geom_t, H) - boundary_flux(curve0, geom0, H)
    return float(np.max(np.abs(a @ d))) / geom0.length


def dAp_identity(curve_a, curve_b, dt, geom_mid):
    """Finite-difference ``dAp/dt`` across two slices vs ``-oint kappa beta ds``."""
    fd = (projected_area(curve_b) - projected_area(curve_a)) / dt
    rhs = -geom_mid.integrate(geom_mid.kappa[:, None] * geom_mid.beta)
    return float(np.linalg.norm(fd - rhs))


def _one_sided_distance(points, curve, newton_iter=8):
    # distance from each point to the trigonometric interpolant of curve
    f = interpolant(curve)
    X = curve.positions
    u, _ = _fd.grid(curve.N)
    d2 = np.einsum("ijk,ijk->ij", points[:, None, :] - X[None], points[:, None, :] - X[None])
    v = u[np.argmin(d2, axis=1)]
    for _ in range(newton_iter):
        r = f(v)[0] - points
        X1 = f(v, 1)[0]
        X2 = f(v, 2)[0]
        num = np.einsum("ij,ij->i", X1, r)
        den = np.einsum("ij,ij->i", X2, r) + np.einsum("ij,ij->i", X1, X1)
        v = v - num / den
    return np.linalg.norm(f(v)[0] - points, axis=1)


def hausdorff_distance(curve_a, curve_b):
    """Symmetric Hausdorff distance between two closed curves, using the
    trigonometric interpolant of each as the continuous target."""
    da = _one_sided_distance(curve_a.positions, curve_b)
    db = _one_sided_distance(curve_b.positions, curve_a)
    return float(max(da.max(), db.max()))


@dataclass
class DiagnosticsRecord:
    t: float
    length: float
    swept_area: float
    total_torsion: float
    total_psi3: float
    Ap_x: float
    Ap_y: float
    Ap_z: float
    writhe: float
    twist_theta: float
    twist_frenet: float
    selflink_theta: float
    deg_theta: int
    max_kappa: float
    theta_mean: float
    theta_spread: float
    g_uniformity: float
    length_bound_residual: float
    area_lower_residual: float
    flux_residual: float
    gb_residual: float

    @property
    def selflink_integer(self):
        return int(np.rint(self.selflink_theta)) if np.isfinite(self.selflink_theta) else None


class DiagnosticsContext:
    """Run-level inputs to the per-slice diagnostics.

    Parameters
    ----------
    slice0 : Slice
        The initial slice.
    H : float, optional
        Target mean curvature; enables ``flux_residual``.
    K_I : float, optional
        Length-bound constant ``cos(sup |theta|)``.
    knotted : bool
    flux_directions : array, optional
    with_writhe : bool
        Skip the O(N^2) writhe when False.
    """

    def __init__(self, slice0, H=None, K_I=None, knotted=False, flux_directions=None,
                 with_writhe=True):
        self.slice0 = slice0
        self.H = H
        self.K_I = K_I
        self.knotted = knotted
        self.flux_directions = flux_directions
        self.with_writhe = with_writhe
        self.L0 = slice0.geom.length
        self.psi1_0 = float(slice0.geom.integrate(slice0.geom.psi1))


def compute_record(sl, ctx):
    """All global diagnostics of one recorded slice."""
    curve, geom, t = sl.curve, sl.geom, sl.t
    sc = global_scalars(geom)
    closed = curve.boundary == CLOSED
    Ap = projected_area(curve) if closed else np.full(3, NAN)
    wr = NAN
    if closed and ctx.with_writhe:
        try:
            wr = writhe(curve)
        except NearSelfIntersection:
            wr = NAN
    frenet = bool(geom.frenet_ok.all())
    tw_t = sc["int_psi3"] / _fd.TWO_PI if frenet else NAN
    tw_f = sc["int_tau"] / _fd.TWO_PI if frenet else NAN
    u, _ = _fd.grid(curve.N)
    per = curve.angles - curve.degree * u
    gref = geom.length / _fd.TWO_PI
    if ctx.K_I is not None and 0.0 < ctx.K_I <= 1.0:
        lb = geom.length ** 2 - (ctx.L0 ** 2 - 8.0 * np.pi ** 2 * ctx.K_I * t)
    else:
        lb = NAN
    area_lb = sl.swept_area - (4.0 if ctx.knotted else 2.0) * np.pi * t
    flux = NAN
    if ctx.H is not None and closed:
        flux = flux_residual(ctx.slice0.curve, ctx.slice0.geom, curve, geom, ctx.H,
                             ctx.flux_directions)
    gb = sl.K_area - (sc["int_psi1"] - ctx.psi1_0)
    return DiagnosticsRecord(
        t=float(t), length=float(geom.length), swept_area=float(sl.swept_area),
        total_torsion=sc["int_tau"], total_psi3=sc["int_psi3"],
        Ap_x=float(Ap[0]), Ap_y=float(Ap[1]), Ap_z=float(Ap[2]),
        writhe=float(wr), twist_theta=float(tw_t), twist_frenet=float(tw_f),
        selflink_theta=float(wr + tw_t), deg_theta=int(curve.degree),
        max_kappa=float(np.max(geom.kappa)),
        theta_mean=float(np.arctan2(np.mean(np.sin(curve.angles)), np.mean(np.cos(curve.angles)))),
        theta_spread=float(np.ptp(per)),
        g_uniformity=float(np.max(np.abs(geom.g - gref)) / gref),
        length_bound_residual=float(lb), area_lower_residual=float(area_lb),
        flux_residual=float(flux), gb_residual=float(gb))


def records_for_run(result, H=None, K_I=None, knotted=False, flux_directions=None,
                    with_writhe=True):
    """Diagnostics for every recorded slice of a :class:`RunResult`."""
    ctx = DiagnosticsContext(result.slices[0], H, K_I, knotted, flux_directions, with_writhe)
    return [compute_record(sl, ctx) for sl in result.slices]


def write_csv(records, path):
    """Write records with the fixed header; floats at full precision."""
    names = [f.name for f in fields(DiagnosticsRecord)]
    assert ",".join(names) == CSV_HEADER
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for r in records:
            row = []
            for n in names:
                v = getattr(r, n)
                row.append(str(v) if isinstance(v, int) else repr(float(v)))
            w.writerow(row)


def read_csv(path):
    """Read a diagnostics CSV back as a dict of float arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]} if rows else {}
