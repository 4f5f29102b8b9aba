"""Discrete framed space curves and their local differential geometry.

A framed curve is a closed (or screw-periodic) polyline sampled on a
uniform parameter grid ``u_i = 2 pi i / N`` together with an unwrapped angle
lift ``theta``.  The angle rotates the Frenet normal/binormal pair about the
tangent,

    nu_theta   =  cos(theta) N + sin(theta) B
    beta_theta = -sin(theta) N + cos(theta) B,

and the frame coefficients are ``psi1 = kappa cos(theta)``,
``psi2 = kappa sin(theta)`` and ``psi3 = tau + d_s theta``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _fd
from .errors import InvalidCurve, NonFinite

CLOSED = "closed"
HELICAL = "helical"
MIN_NODES = 8
FRENET_TOL_FACTOR = 1e-6


def degree_from_lift(angles):
    """Integer winding of an angle lift sampled on a closed loop.

    The value at the (virtual) node ``N`` is extrapolated linearly from the
    last two samples, so smooth periodic perturbations of the lift do not
    change the result.
    """
    a = np.asarray(angles, dtype=float)
    end = 2.0 * a[-1] - a[-2]
    return int(np.rint((end - a[0]) / _fd.TWO_PI))


@dataclass(frozen=True)
class FramedCurve:
    """Closed or helical polyline with an unwrapped angle lift.

    Parameters
    ----------
    positions : (N, 3) array
        Node coordinates.
    angles : (N,) array
        Frame angle lift in radians.  For closed curves
        ``angles[i + N] = angles[i] + 2 pi degree``.
    boundary : {"closed", "helical"}
    pitch : float
        Axial advance per parameter period (helical boundary only).
    degree : int, optional
        Winding of the lift; inferred from the samples when omitted.
    """

    positions: np.ndarray
    angles: np.ndarray
    boundary: str = CLOSED
    pitch: float = 0.0
    degree: int = None

    def __post_init__(self):
        X = np.array(self.positions, dtype=float)
        th = np.array(self.angles, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[1] != 3:
            raise InvalidCurve("positions must have shape (N, 3)")
        if X.shape[0] != th.shape[0]:
            raise InvalidCurve("positions and angles differ in length")
        if X.shape[0] < MIN_NODES:
            raise InvalidCurve(f"need at least {MIN_NODES} nodes, got {X.shape[0]}")
        if self.boundary not in (CLOSED, HELICAL):
            raise InvalidCurve(f"unknown boundary {self.boundary!r}")
        if not (np.isfinite(X).all() and np.isfinite(th).all()):
            raise NonFinite("non-finite coordinates or angles")
        if self.boundary == HELICAL and self.pitch == 0.0:
            raise InvalidCurve("helical boundary needs a nonzero pitch")
        deg = self.degree
        if self.boundary == HELICAL:
            deg = 0
        elif deg is None:
            deg = degree_from_lift(th)
        X.setflags(write=False)
        th.setflags(write=False)
        object.__setattr__(self, "positions", X)
        object.__setattr__(self, "angles", th)
        object.__setattr__(self, "degree", int(deg))
        object.__setattr__(self, "pitch", float(self.pitch))
        seg = np.linalg.norm(np.diff(X, axis=0, append=X[:1] + self.position_jump), axis=1)
        if seg.min() <= 0.0:
            i = int(np.argmin(seg))
            raise InvalidCurve(f"duplicate consecutive nodes at index {i}")

    @property
    def N(self):
        return self.positions.shape[0]

    @property
    def position_jump(self):
        return np.array([0.0, 0.0, self.pitch if self.boundary == HELICAL else 0.0])

    @property
    def angle_jump(self):
        return _fd.TWO_PI * self.degree

    def replace(self, positions=None, angles=None, check=True):
        """Copy with new state arrays, keeping boundary data and degree.

        ``check=False`` skips validation; used for intermediate RK stages.
        """
        X = self.positions if positions is None else positions
        a = self.angles if angles is None else angles
        if check:
            return FramedCurve(X, a, self.boundary, self.pitch, self.degree)
        new = object.__new__(FramedCurve)
        for name, val in (("positions", X), ("angles", a), ("boundary", self.boundary),
                          ("pitch", self.pitch), ("degree", self.degree)):
            object.__setattr__(new, name, val)
        return new


@dataclass
class GeometryField:
    """Per-node differential geometry of a framed curve.

    ``frenet_ok`` flags nodes where the curvature exceeds the Frenet
    threshold; elsewhere ``tau``, ``N``, ``B``, ``nu``, ``beta`` and
    ``psi3`` hold NaN.
    """

    h: float
    g: np.ndarray
    T: np.ndarray
    kN: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray
    N: np.ndarray
    B: np.ndarray
    nu: np.ndarray
    beta: np.ndarray
    theta: np.ndarray
    ds_theta: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    psi3: np.ndarray
    ds_kappa: np.ndarray
    ds2_kappa: np.ndarray
    ds_psi3: np.ndarray
    frenet_ok: np.ndarray
    length: float
    frenet_tol: float
    method: str = "fd"
    extra: dict = field(default_factory=dict)

    def ds(self, f, jump=0.0):
        """Arc-length derivative of a nodal field."""
        d = _fd.derivative(f, self.h, 1, jump, self.method)
        return d / (self.g if np.ndim(f) == 1 else self.g[:, None])

    def integrate(self, f):
        """Trapezoidal integral of a nodal field with respect to arc length."""
        return self.h * np.dot(self.g, f)


def cross(a, b):
    """Row-wise cross product of (N, 3) arrays (faster than ``np.cross``)."""
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def make_circle(radius, N, theta0=0.0):
    """Positively oriented circle in the plane z = 0 with a constant lift."""
    if not radius > 0:
        raise InvalidCurve("radius must be positive")
    if N < MIN_NODES:
        raise InvalidCurve(f"need at least {MIN_NODES} nodes, got {N}")
    u, _ = _fd.grid(N)
    X = np.stack([radius * np.cos(u), radius * np.sin(u), np.zeros(N)], axis=1)
    return FramedCurve(X, np.full(N, float(theta0)), CLOSED, degree=0)


def make_helix(radius, w, N, theta0=0.0):
    """Helix ``(rho cos u, rho sin u, w u)``; ``w = 0`` gives a circle."""
    if w == 0:
        return make_circle(radius, N, theta0)
    if not radius > 0:
        raise InvalidCurve("radius must be positive")
    if N < MIN_NODES:
        raise InvalidCurve(f"need at least {MIN_NODES} nodes, got {N}")
    u, _ = _fd.grid(N)
    X = np.stack([radius * np.cos(u), radius * np.sin(u), w * u], axis=1)
    return FramedCurve(X, np.full(N, float(theta0)), HELICAL, pitch=_fd.TWO_PI * w)


def theta_rotate(Nvec, Bvec, theta):
    """Rotate the normal/binormal pair by ``theta`` about the tangent."""
    c = np.cos(theta)[..., None] if np.ndim(theta) else np.cos(theta)
    s = np.sin(theta)[..., None] if np.ndim(theta) else np.sin(theta)
    return c * Nvec + s * Bvec, -s * Nvec + c * Bvec


def compute_geometry(curve, frenet_tol=None, method="fd"):
    """Differential geometry of ``curve`` by fourth-order periodic differences.

    Parameters
    ----------
    curve : FramedCurve
    frenet_tol : float, optional
        Curvature below which the Frenet frame and torsion are flagged as
        undefined; defaults to ``1e-6 / L``.
    method : {"fd", "spectral"}
        Derivative backend.  ``"fd"`` (default) uses fourth-order central
        differences; ``"spectral"`` uses Fourier differentiation and serves
        as a high-accuracy reference.

    Returns
    -------
    GeometryField
    """
    X = curve.positions
    th = curve.angles
    N = curve.N
    h = _fd.TWO_PI / N
    jx = curve.position_jump

    def D(f, jump=0.0):
        return _fd.derivative(f, h, 1, jump, method)

    Xu, Xuu, Xuuu = _fd.derivatives123(X, h, jx, method)
    g = np.sqrt(np.einsum("ij,ij->i", Xu, Xu))
    if not np.all(g > 0):
        raise InvalidCurve("degenerate parametrization speed")
    T = Xu / g[:, None]
    # d_u of (T, theta) in one pass; the curvature vector is d_s T
    # projected normal to T
    dY = D(np.column_stack((T, th)), np.array([0.0, 0.0, 0.0, curve.angle_jump]))
    kN = dY[:, :3] / g[:, None]
    kN -= np.einsum("ij,ij->i", kN, T)[:, None] * T
    kappa = np.sqrt(np.einsum("ij,ij->i", kN, kN))
    ds_theta = dY[:, 3] / g
    L = float(h * g.sum())
    tol = FRENET_TOL_FACTOR / L if frenet_tol is None else frenet_tol
    ok = kappa > tol

    c = cross(Xu, Xuu)
    cc = np.einsum("ij,ij->i", c, c)
    if ok.all():
        tau = np.einsum("ij,ij->i", c, Xuuu) / cc
        Nvec = kN / kappa[:, None]
    else:
        tau = np.where(ok, np.einsum("ij,ij->i", c, Xuuu) / np.where(ok, cc, 1.0), np.nan)
        Nvec = np.where(ok[:, None], kN / np.where(ok, kappa, 1.0)[:, None], np.nan)
    Bvec = cross(T, Nvec)
    cth, sth = np.cos(th)[:, None], np.sin(th)[:, None]
    nu = cth * Nvec + sth * Bvec
    beta = cth * Bvec - sth * Nvec

    psi3 = tau + ds_theta
    dk = D(np.column_stack((kappa, psi3))) / g[:, None]
    ds_kappa, ds_psi3 = dk[:, 0], dk[:, 1]
    ds2_kappa = D(ds_kappa) / g
    return GeometryField(
        h=h, g=g, T=T, kN=kN, kappa=kappa, tau=tau, N=Nvec, B=Bvec,
        nu=nu, beta=beta, theta=th, ds_theta=ds_theta,
        psi1=kappa * cth[:, 0], psi2=kappa * sth[:, 0], psi3=psi3,
        ds_kappa=ds_kappa, ds2_kappa=ds2_kappa, ds_psi3=ds_psi3,
        frenet_ok=ok, length=L, frenet_tol=tol, method=method)


def velocity_field(curve, geom):
    """Normal velocity ``kappa nu_theta`` in Frenet-free form.

    Uses ``cos(theta) d_s^2 gamma + sin(theta) d_s gamma x d_s^2 gamma``,
    which stays finite where the curvature vanishes.
    """
    th = curve.angles
    return (np.cos(th)[:, None] * geom.kN
            + np.sin(th)[:, None] * cross(geom.T, geom.kN))


def interpolant(curve):
    """Trigonometric interpolant of a framed curve.

    Returns a function ``f(u, order=0) -> (positions, angles)`` evaluating
    the ``order``-th parameter derivative at arbitrary ``u``.
    """
    N = curve.N
    u, _ = _fd.grid(N)
    jx = curve.position_jump
    ja = curve.angle_jump
    px = _fd.trig_interpolant(curve.positions - np.outer(u / _fd.TWO_PI, jx))
    pa = _fd.trig_interpolant(curve.angles - ja * u / _fd.TWO_PI)

    def evaluate(v, order=0):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        X = px(v, order)
        a = pa(v, order)
        if order == 0:
            X = X + np.outer(v / _fd.TWO_PI, jx)
            a = a + ja * v / _fd.TWO_PI
        elif order == 1:
            X = X + jx / _fd.TWO_PI
            a = a + ja / _fd.TWO_PI
        return X, a

    return evaluate


def reparametrize_uniform(curve, newton_iter=30):
    """Resample ``curve`` so that nodes are equally spaced in arc length.

    Arc length of the trigonometric interpolant is obtained spectrally and
    inverted by Newton iteration, so the result is accurate to roughly the
    spectral resolution of the input.
    """
    N = curve.N
    f = interpolant(curve)
    M = 8 * N
    v, hv = _fd.grid(M)
    speed = np.linalg.norm(f(v, 1)[0], axis=1)
    s_fine = _fd.antiderivative(speed)
    L = hv * speed.sum()
    speed_interp = _fd.trig_interpolant(speed)
    target = L * np.arange(N) / N
    u = np.interp(target, np.append(s_fine, L), np.append(v, _fd.TWO_PI))
    # s(u) - target, with s(u) = mean*u + periodic part evaluated spectrally
    cs = np.fft.rfft(speed) / M
    k = np.arange(cs.shape[0], dtype=float)
    for _ in range(newton_iter):
        ph = np.exp(1j * np.outer(u, k[1:]))
        per = (ph - 1.0) @ (cs[1:] / (1j * k[1:]))
        s = cs[0].real * u + 2.0 * per.real
        r = s - target
        du = r / speed_interp(u)
        u = u - du
        if np.max(np.abs(du)) < 1e-15:
            break
    X, a = f(u)
    return curve.replace(positions=X, angles=a)


def write_curve(path, curve):
    """Write the plain-text polyline + angle format."""
    with open(path, "w") as fh:
        if curve.boundary == HELICAL:
            fh.write(f"# framedcurve helical {curve.pitch!r} {curve.N}\n")
        else:
            fh.write(f"# framedcurve closed {curve.N}\n")
        for (x, y, z), a in zip(curve.positions.tolist(), curve.angles.tolist()):
            fh.write(f"{x!r} {y!r} {z!r} {a!r}\n")


def read_curve(path):
    """Read a curve written by :func:`write_curve`."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("# framedcurve"):
        raise InvalidCurve(f"{path}: missing '# framedcurve' header")
    head = lines[0].split()[2:]
    try:
        if head[0] == CLOSED and len(head) == 2:
            boundary, pitch, n = CLOSED, 0.0, int(head[1])
        elif head[0] == HELICAL and len(head) == 3:
            boundary, pitch, n = HELICAL, float(head[1]), int(head[2])
        else:
            raise ValueError
    except (ValueError, IndexError):
        raise InvalidCurve(f"{path}: malformed header {lines[0]!r}") from None
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        if ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) != 4:
            raise InvalidCurve(f"{path}:{lineno}: expected 'x y z theta'")
        rows.append([float(p) for p in parts])
    data = np.array(rows, dtype=float)
    if data.shape[0] != n:
        raise InvalidCurve(f"{path}: header says {n} nodes, found {data.shape[0]}")
    return FramedCurve(data[:, :3], data[:, 3], boundary, pitch)
