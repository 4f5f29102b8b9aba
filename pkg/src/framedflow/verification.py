"""Named property suites run by ``framedflow verify``.

Each suite returns a list of :class:`Check` rows (residual vs tolerance).
The suites are kept short enough to run in seconds to a minute; the
acceptance tests exercise the same properties at full resolution.
"""

from dataclasses import dataclass

import numpy as np

from . import _fd
from . import diagnostics as diag
from . import oracles
from .curve_core import FramedCurve, compute_geometry, make_circle, make_helix
from .errors import Psi2TooSmall
from .flow_engine import FlowConfig, run, step
from .identities import curvature_rates
from .surface_builder import mesh_curvature_estimate
from .theta_laws import ThetaLaw


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self):
        return bool(np.isfinite(self.residual) and self.residual < self.tolerance)

    def row(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name:<48s} {self.residual:11.3e} {self.tolerance:11.3e}  {status}"


def random_analytic_curve(rng, N=256, eps=0.1, min_kappa=0.25, tail_tol=1e-8):
    """Random low-mode perturbation of the unit circle with a smooth angle.

    Returns ``(curve, upsilon)``, redrawing until ``min kappa > min_kappa``
    and the torsion is resolved: its Fourier modes above ``N/4`` must stay
    below ``tail_tol`` relative to the largest one.
    """
    u, _ = _fd.grid(N)
    while True:
        X = np.stack([np.cos(u), np.sin(u), np.zeros(N)], axis=1)
        for k in range(1, 4):
            a, b = rng.normal(size=3), rng.normal(size=3)
            X = X + eps * (np.outer(np.cos(k * u), a) + np.outer(np.sin(k * u), b)) / k
        th = rng.uniform(-1.0, 1.0) + eps * np.sin(u + rng.uniform(0.0, _fd.TWO_PI))
        c = FramedCurve(X, th)
        g = compute_geometry(c, method="spectral")
        ct = np.abs(np.fft.rfft(g.tau)) if g.frenet_ok.all() else np.full(N // 2 + 1, np.inf)
        if g.kappa.min() > min_kappa and ct[N // 4:].max() <= tail_tol * ct.max():
            return c, float(rng.uniform(-1.0, 1.0))


def identity_residuals(curve, rate, dt=1e-4, quantities=("kappa", "tau", "psi1")):
    """Fourth-order central time differences of local quantities against the
    closed-form rates, with spectral geometry.

    Returns ``{q: (residual, tolerance)}`` with tolerance
    ``10 (dt + N^-4) max(1, max |rate_q|)``.
    """
    law = ThetaLaw.constant(rate)
    cfg = FlowConfig(method="spectral")
    g = {}
    for m in (-2, -1, 1, 2):
        g[m] = compute_geometry(step(curve, law, cfg, m * dt), method="spectral")
    g0 = compute_geometry(curve, method="spectral")
    pred = curvature_rates(g0, np.full(curve.N, rate))
    out = {}
    for q in quantities:
        f = {m: getattr(g[m], q) for m in g}
        fd = (f[-2] - 8.0 * f[-1] + 8.0 * f[1] - f[2]) / (12.0 * dt)
        scale = max(1.0, float(np.max(np.abs(pred[q]))))
        out[q] = (float(np.max(np.abs(fd - pred[q]))), 10.0 * (dt + curve.N ** -4.0) * scale)
    return out


def suite_evolution_identities(seed=0, count=20, N=256):
    rng = np.random.default_rng(seed)
    checks = []
    for i in range(count):
        c, rate = random_analytic_curve(rng, N)
        for q, (r, tol) in identity_residuals(c, rate).items():
            checks.append(Check(f"curve {i:2d} d_t {q}", r, tol))
    return checks


def _perturbed(N, amp=0.1, mode=3):
    u, _ = _fd.grid(N)
    r = 1.0 + amp * np.cos(mode * u)
    X = np.stack([r * np.cos(u), r * np.sin(u), amp * np.sin(2 * u)], axis=1)
    return FramedCurve(X, np.zeros(N))


def suite_geometry_convergence(seed=0):
    checks = []
    errs = []
    Ns = (64, 128, 256)
    for N in Ns:
        h = make_helix(3.0, 4.0, N)
        g = compute_geometry(h)
        errs.append(max(np.max(np.abs(g.kappa - 3.0 / 25.0)), np.max(np.abs(g.tau - 4.0 / 25.0))))
    for (n1, e1), (n2, e2) in zip(zip(Ns, errs), zip(Ns[1:], errs[1:])):
        checks.append(Check(f"helix kappa/tau error ratio N={n1}->{n2} (>12 means 4th order)",
                            12.0 / (e1 / e2), 1.0))
    c = make_circle(2.0, 128)
    g = compute_geometry(c)
    checks.append(Check("circle kappa = 1/rho", float(np.max(np.abs(g.kappa - 0.5))), 1e-6))
    lens = [compute_geometry(_perturbed(N)).length for N in (64, 128, 256, 512)]
    checks.append(Check("perturbed length self-convergence N=256 vs 512",
                        abs(lens[2] - lens[3]), 1e-6))
    return checks


def suite_tangential(seed=0, N=256):
    c = _perturbed(N, 0.05, 3)
    t_end = 0.05
    a = run(c, ThetaLaw.zero(), FlowConfig(t_end=t_end, tangential=True, record_dt=0.025))
    b = run(c, ThetaLaw.zero(), FlowConfig(t_end=t_end, record_dt=0.025))
    lam = a.slices[0].geom.length / _fd.TWO_PI
    g0 = a.slices[0].geom.g / lam
    unif = max(float(np.max(np.abs(s.geom.g / (s.geom.length / _fd.TWO_PI) - g0)))
               for s in a.slices)
    hd = max(diag.hausdorff_distance(sa.curve, sb.curve) / sb.geom.length
             for sa, sb in zip(a.slices, b.slices))
    return [Check("g/L preserved under tangential motion", unif, 1e-6),
            Check("Hausdorff to normal-only run / L", hd, 1e-6)]


def trefoil(N):
    u, _ = _fd.grid(N)
    X = np.stack([(2 + np.cos(3 * u)) * np.cos(2 * u), (2 + np.cos(3 * u)) * np.sin(2 * u),
                  np.sin(3 * u)], axis=1)
    return FramedCurve(X, np.zeros(N))


def suite_topology(seed=0):
    checks = []
    N = 256
    u, _ = _fd.grid(N)
    base = make_circle(1.0, N)
    for d in range(-2, 4):
        c = FramedCurve(base.positions, 0.2 + d * u)
        g = compute_geometry(c)
        s, n, dev = diag.selflink(diag.writhe(c), diag.twist(c, g))
        checks.append(Check(f"circle d={d:+d}: S_Lk integer (= {n})", dev + abs(n - d), 1e-6))
    c = FramedCurve(base.positions, d * u + 0.1 * np.sin(u))
    res = run(c, ThetaLaw.constant(0.5), FlowConfig(t_end=0.05, record_every=20))
    degs = {s.curve.degree for s in res.slices}
    checks.append(Check("degree constant along a run", float(len(degs) - 1), 0.5))
    w1, w2 = diag.writhe(trefoil(512)), diag.writhe(trefoil(4096))
    checks.append(Check("trefoil writhe N=512 vs 4096", abs(w1 - w2), 1e-3))
    tc = trefoil(512)
    tg = compute_geometry(tc)
    s, n, dev = diag.selflink(w1, diag.twist(tc, tg, "frenet"))
    checks.append(Check("trefoil Frenet S_Lk near integer", dev, 1e-2))
    checks.append(Check("CWF rounding identity", abs(s - w1 - diag.twist(tc, tg, "frenet")), 1e-6))
    return checks


def suite_cmc(seed=0, N=128):
    c = _perturbed(N, 0.01, 3)
    res = run(c, ThetaLaw.cmc(1.0), FlowConfig(t_end=0.05, record_dt=0.005, spectral_cutoff=16))
    H = res.surface.array("H")
    ok = np.isfinite(H)
    recs = diag.records_for_run(res, H=1.0, with_writhe=False)
    est, _ = mesh_curvature_estimate(res.surface)
    fin = np.isfinite(est)
    return [Check("closed-form H = 1", float(np.max(np.abs(H[ok] - 1.0))), 1e-8),
            Check("mesh H median relative error", float(np.median(np.abs(est[fin] - 1.0))), 0.02),
            Check("flux residual (max over slices)", max(r.flux_residual for r in recs), 1e-3)]


def suite_cgc(seed=0, N=128):
    c = make_circle(1.0, N, 0.6)
    res = run(c, ThetaLaw.cgc(0.0), FlowConfig(t_end=0.2, record_dt=0.02))
    p = [float(s.geom.integrate(s.geom.psi1)) for s in res.slices]
    K = res.surface.array("K")
    checks = [Check("oint psi1 conserved (relative)", max(abs(x - p[0]) for x in p) / abs(p[0]),
                    1e-4),
              Check("closed-form K = 0", float(np.nanmax(np.abs(K))), 1e-8)]
    try:
        run(make_circle(1.0, 64, 0.0), ThetaLaw.cgc(0.0), FlowConfig(t_end=0.01))
        checks.append(Check("theta0 = 0 raises Psi2TooSmall", 1.0, 0.5))
    except Psi2TooSmall as e:
        checks.append(Check("theta0 = 0 raises Psi2TooSmall at node 0", float(e.node != 0), 0.5))
    return checks


def suite_singularities(seed=0):
    cone = oracles.cone_trajectory(1.0, np.pi / 3)
    ip = oracles.infinite_pinch_oracle(1.0)
    pin = oracles.pinch_oracle(1.0, 0.5)
    checks = [
        Check("cone oracle terminal z = tan(pi/3)", abs(cone.info["z_terminal"] - np.tan(np.pi / 3)),
              1e-12),
        Check("infinite pinch rho(t_bar)/rho0", ip.info["rho_at_t_bar"], 1e-6),
        Check("infinite pinch rho^2 ODE vs closed form", ip.info["rho2_ode_error"], 1e-8),
        Check("infinite pinch z exceeds 10 rho0", float(not ip.info["z_exceeds_10rho0"]), 0.5),
        Check("pinch oracle |z/sqrt(t_bar) - 2| (phi=0.5)", abs(pin.info["z_ratio"] - 2.0), 0.01),
    ]
    res = run(make_circle(1.0, 64, np.pi / 3), ThetaLaw.zero(),
              FlowConfig(t_end=2.0, kappa_stop=30.0))
    rep = res.report
    checks.append(Check("cone run classified Cone (0 if so)", float(rep.kind != "Cone"), 0.5))
    checks.append(Check("cone run Theta - pi/3", abs(rep.Theta - np.pi / 3), 1e-3))
    checks.append(Check("cone run apex z - tan(pi/3)", abs(rep.apex[2] - np.tan(np.pi / 3)), 1e-2))
    return checks


SUITES = {
    "geometry-convergence": suite_geometry_convergence,
    "evolution-identities": suite_evolution_identities,
    "tangential": suite_tangential,
    "topology": suite_topology,
    "cmc": suite_cmc,
    "cgc": suite_cgc,
    "singularities": suite_singularities,
}
