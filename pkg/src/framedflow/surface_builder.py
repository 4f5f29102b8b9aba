"""Trajectory surfaces swept by a framed curvature flow.

The surface ``sigma(u, t) = gamma(t, u)`` has unit normal ``beta_theta`` and,
in the normal-velocity parametrization, the fundamental forms

    E = g^2,  F = 0,  G = kappa^2,
    L = -g^2 psi2,   M = g kappa psi3,
    N = kappa upsilon + psi1 (kappa d_s psi3 + 2 d_s kappa psi3) / kappa
        + psi2 (d_s^2 kappa - kappa psi3^2) / kappa.

With ``chi = N / kappa^2`` this gives ``H = -psi2 + chi`` (trace of the
shape operator, i.e. the *sum* of principal curvatures) and
``K = -psi3^2 - psi2 chi``.  The principal curvatures are
``H/2 +- sqrt(zeta)`` with ``zeta = (psi2 + chi)^2 / 4 + psi3^2 >= 0``.
"""

import numpy as np

from . import _fd
from .curve_core import CLOSED
from .errors import FramedFlowError, InvalidCurve
from .theta_laws import POLE_TOL_FACTOR

FIELDS = ("E", "F", "G", "Lf", "Mf", "Nf", "chi", "zeta", "H", "K", "kappa1", "kappa2")


def _chi(geom, upsilon, kappa_min):
    k = geom.kappa
    ok = k >= kappa_min
    if not geom.frenet_ok.all():
        ok &= geom.frenet_ok
    if ok.all():
        ks, p3, dsp3 = k, geom.psi3, geom.ds_psi3
    else:
        ks = np.where(ok, k, 1.0)
        p3 = np.where(ok, geom.psi3, 0.0)
        dsp3 = np.where(ok, geom.ds_psi3, 0.0)
    Nf = (ks * upsilon + geom.psi1 * (ks * dsp3 + 2.0 * geom.ds_kappa * p3) / ks
          + geom.psi2 * (geom.ds2_kappa - ks * p3 ** 2) / ks)
    return ok, ks, p3, Nf, Nf / ks ** 2


def gaussian_rate(geom, upsilon, kappa_min):
    """``oint K kappa ds`` over defined vertices (rate of ``iint K dA``)."""
    ok, ks, p3, Nf, chi = _chi(geom, upsilon, kappa_min)
    K = -p3 ** 2 - geom.psi2 * chi
    if not ok.all():
        K = np.where(ok, K, 0.0)
    return geom.integrate(K * geom.kappa)


def surface_forms(geom, upsilon, kappa_min=None):
    """Closed-form fundamental forms and curvatures along one slice.

    Parameters
    ----------
    geom : GeometryField
    upsilon : (N,) array
        Angle velocity applied at this slice.
    kappa_min : float, optional
        Vertices with smaller curvature are flagged undefined (NaN).

    Returns
    -------
    dict
        Arrays for each name in ``FIELDS`` plus a boolean ``defined``.
    """
    if kappa_min is None:
        kappa_min = POLE_TOL_FACTOR / geom.length
    k = geom.kappa
    ok, ks, p3, Nf, chi = _chi(geom, upsilon, kappa_min)
    p2 = geom.psi2
    H = -p2 + chi
    K = -p3 ** 2 - p2 * chi
    zeta = 0.25 * (p2 + chi) ** 2 + p3 ** 2
    root = np.sqrt(zeta)
    out = {
        "E": geom.g ** 2, "F": np.zeros_like(k), "G": k ** 2,
        "Lf": -geom.g ** 2 * p2, "Mf": geom.g * k * p3, "Nf": Nf,
        "chi": chi, "zeta": zeta, "H": H, "K": K,
        "kappa1": 0.5 * H + root, "kappa2": 0.5 * H - root,
    }
    for name in FIELDS:
        if name not in ("E", "F", "G"):
            out[name] = np.where(ok, out[name], np.nan)
    out["defined"] = ok
    return out


class TrajectorySurface:
    """Time-indexed vertex grid with per-vertex curvature fields."""

    def __init__(self, boundary=CLOSED, pitch=0.0, kappa_min=None):
        self.boundary = boundary
        self.pitch = pitch
        self.kappa_min = kappa_min
        self.times = []
        self.vertices = []
        self.fields = {name: [] for name in FIELDS + ("defined",)}
        self.psi1_integrals = []
        self.K_rates = []

    def __len__(self):
        return len(self.times)

    @property
    def N(self):
        return self.vertices[0].shape[0] if self.vertices else 0

    def append_slice(self, t, curve, geom, upsilon):
        """Store the slice at time ``t`` and its closed-form fields."""
        if self.vertices and curve.N != self.N:
            raise InvalidCurve(f"slice has {curve.N} nodes, surface has {self.N}")
        f = surface_forms(geom, upsilon, self.kappa_min)
        self.times.append(float(t))
        self.vertices.append(np.array(curve.positions))
        for name in self.fields:
            self.fields[name].append(f[name])
        self.psi1_integrals.append(float(geom.integrate(geom.psi1)))
        self.K_rates.append(float(geom.integrate(np.where(f["defined"], f["K"], 0.0) * geom.kappa)))
        return self

    def array(self, name):
        """Field ``name`` as an (M, N) array (or vertices as (M, N, 3))."""
        if name == "V":
            return np.array(self.vertices)
        return np.array(self.fields[name])


def mesh_curvature_estimate(surface):
    """Estimate H (trace convention) and K from the vertex grid alone.

    For every interior slice a quadratic in ``(u, t)`` is least-squares
    fitted over the 3x3 parameter stencil, and the fundamental forms are
    formed from the fitted derivatives with normal ``sigma_u x sigma_t``.

    Returns
    -------
    H_est, K_est : (M, N) arrays
        NaN on the first and last slice, at helical ends, and wherever the
        closed-form fields are undefined.
    """
    M = len(surface)
    if M < 3:
        raise FramedFlowError("mesh curvature estimate needs at least 3 slices")
    V = surface.array("V")
    N = V.shape[1]
    _, h = _fd.grid(N)
    t = np.asarray(surface.times)
    jump = np.array([0.0, 0.0, surface.pitch]) if surface.boundary != CLOSED else np.zeros(3)
    H_est = np.full((M, N), np.nan)
    K_est = np.full((M, N), np.nan)
    du = np.array([-h, 0.0, h])
    for k in range(1, M - 1):
        dt = t[k - 1:k + 2] - t[k]
        U, Tt = np.meshgrid(du, dt, indexing="xy")
        U, Tt = U.ravel(), Tt.ravel()
        A = np.stack([np.ones(9), U, Tt, 0.5 * U ** 2, U * Tt, 0.5 * Tt ** 2], axis=1)
        P = np.linalg.pinv(A)
        # stencil values: rows over t (k-1, k, k+1), columns over u (i-1, i, i+1)
        S = np.empty((9, N, 3))
        for r, kk in enumerate((k - 1, k, k + 1)):
            row = V[kk]
            S[3 * r + 0] = np.roll(row, 1, axis=0)
            S[3 * r + 0][0] -= jump
            S[3 * r + 1] = row
            S[3 * r + 2] = np.roll(row, -1, axis=0)
            S[3 * r + 2][-1] += jump
        c = np.einsum("pq,qnd->pnd", P, S)
        su, st, suu, sut, stt = c[1], c[2], c[3], c[4], c[5]
        n = np.cross(su, st)
        n /= np.linalg.norm(n, axis=1)[:, None]
        E = np.sum(su * su, 1)
        F = np.sum(su * st, 1)
        G = np.sum(st * st, 1)
        Lf = np.sum(suu * n, 1)
        Mf = np.sum(sut * n, 1)
        Nf = np.sum(stt * n, 1)
        det = E * G - F ** 2
        H_est[k] = (E * Nf - 2.0 * F * Mf + G * Lf) / det
        K_est[k] = (Lf * Nf - Mf ** 2) / det
        if surface.boundary != CLOSED:
            H_est[k, [0, -1]] = np.nan
            K_est[k, [0, -1]] = np.nan
    undefined = ~surface.array("defined").astype(bool)
    H_est[undefined] = np.nan
    K_est[undefined] = np.nan
    return H_est, K_est


def gauss_bonnet_balance(surface, psi1_integrals=None):
    """Running Gauss-Bonnet balance of the annulus between Γ_0 and Γ_t.

    ``residual(t) = iint K dA - (oint psi1 ds |_t - oint psi1 ds |_0)`` with
    ``dA = g kappa du dt``; the area integral is accumulated from the stored
    slices by the trapezoidal rule in time.
    """
    if psi1_integrals is None:
        psi1_integrals = surface.psi1_integrals
    t = np.asarray(surface.times)
    rates = np.asarray(surface.K_rates)
    KA = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (rates[1:] + rates[:-1]))])
    p = np.asarray(psi1_integrals)
    return KA - (p - p[0])


def export_obj(surface, path):
    """Write the vertex grid as a triangulated ASCII OBJ (1-based indices)."""
    M, N = len(surface), surface.N
    if M < 2:
        raise FramedFlowError("OBJ export needs at least 2 slices")
    closed = surface.boundary == CLOSED
    with open(path, "w") as fh:
        for row in surface.vertices:
            for x, y, z in row.tolist():
                fh.write(f"v {x!r} {y!r} {z!r}\n")
        ncol = N if closed else N - 1
        for k in range(M - 1):
            for i in range(ncol):
                j = (i + 1) % N
                a = k * N + i + 1
                b = k * N + j + 1
                c = (k + 1) * N + j + 1
                d = (k + 1) * N + i + 1
                fh.write(f"f {a} {b} {c}\nf {a} {c} {d}\n")


def export_fields_csv(surface, path):
    """Write per-vertex fields with header ``k,i,x,y,z,H,K,kappa1,kappa2,defined``."""
    if len(surface) < 2:
        raise FramedFlowError("field export needs at least 2 slices")
    with open(path, "w") as fh:
        fh.write("k,i,x,y,z,H,K,kappa1,kappa2,defined\n")
        for k, row in enumerate(surface.vertices):
            H = surface.fields["H"][k].tolist()
            K = surface.fields["K"][k].tolist()
            k1 = surface.fields["kappa1"][k].tolist()
            k2 = surface.fields["kappa2"][k].tolist()
            ok = surface.fields["defined"][k].tolist()
            for i, (x, y, z) in enumerate(row.tolist()):
                fh.write(f"{k},{i},{x!r},{y!r},{z!r},{H[i]!r},{K[i]!r},"
                         f"{k1[i]!r},{k2[i]!r},{int(ok[i])}\n")


def save_surface(surface, path):
    """Store a surface as ``.npz`` for later re-export."""
    arrays = {f"field_{k}": np.array(v) for k, v in surface.fields.items()}
    np.savez(path, times=np.array(surface.times), vertices=surface.array("V"),
             psi1_integrals=np.array(surface.psi1_integrals), K_rates=np.array(surface.K_rates),
             boundary=np.array(surface.boundary), pitch=np.array(surface.pitch),
             kappa_min=np.array(np.nan if surface.kappa_min is None else surface.kappa_min),
             **arrays)


def load_surface(path):
    """Inverse of :func:`save_surface`."""
    with np.load(path) as z:
        km = float(z["kappa_min"])
        s = TrajectorySurface(str(z["boundary"]), float(z["pitch"]),
                              None if np.isnan(km) else km)
        s.times = z["times"].tolist()
        s.vertices = list(z["vertices"])
        s.psi1_integrals = z["psi1_integrals"].tolist()
        s.K_rates = z["K_rates"].tolist()
        for name in s.fields:
            s.fields[name] = list(z[f"field_{name}"])
    return s
