import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from framedflow import _fd
from framedflow import diagnostics as diag
from framedflow.curve_core import FramedCurve, compute_geometry, make_circle, make_helix
from framedflow.errors import FrenetUndefined, NearSelfIntersection, Unsupported
from framedflow.flow_engine import FlowConfig, run, step
from framedflow.theta_laws import ThetaLaw
from framedflow.verification import random_analytic_curve, trefoil


def fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = np.pi * (1 + 5 ** 0.5) * i
    r = np.sqrt(1 - z ** 2)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def shoelace(curve, a):
    # algebraic area of the projection onto the plane orthogonal to a
    a = a / np.linalg.norm(a)
    e1 = np.cross(a, [1.0, 0, 0] if abs(a[0]) < 0.9 else [0, 1.0, 0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    x, y = curve.positions @ e1, curve.positions @ e2
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


# -- global scalars and projected area ----------------------------------------

def test_global_scalars_unit_circle():
    s = diag.global_scalars(compute_geometry(make_circle(1.0, 256)))
    assert s["length"] == pytest.approx(2 * np.pi, rel=1e-7)  # stencil error h^4 / 30
    assert s["int_kappa"] == pytest.approx(2 * np.pi, rel=1e-7)
    assert s["int_kappa_psi1"] == pytest.approx(2 * np.pi, rel=1e-7)
    assert s["int_psi1"] == pytest.approx(2 * np.pi, rel=1e-7)


def test_global_scalars_helix_torsion():
    s = diag.global_scalars(compute_geometry(make_helix(3.0, 4.0, 256)))
    assert s["int_tau"] == pytest.approx(2 * np.pi * 0.8, rel=1e-7)
    assert s["int_psi3"] == pytest.approx(s["int_tau"], rel=1e-12)


@pytest.mark.parametrize("rho", [1.0, 2.5])
def test_projected_area_circle(rho):
    c = make_circle(rho, 64)
    np.testing.assert_allclose(diag.projected_area(c), [0, 0, np.pi * rho ** 2], atol=1e-12)
    moved = FramedCurve(c.positions + [5, 7, -2], c.angles)
    np.testing.assert_allclose(diag.projected_area(moved), diag.projected_area(c), atol=1e-12)


def test_projected_area_helix_unsupported():
    with pytest.raises(Unsupported):
        diag.projected_area(make_helix(1.0, 1.0, 32))


def test_trefoil_projected_area_is_largest_projection():
    c = trefoil(512)
    Ap = diag.projected_area(c)
    dirs = fibonacci_sphere(4096)
    areas = np.array([shoelace(c, a) for a in dirs[:1024]])
    # shoelace is linear in the direction too; use it for the full sweep
    best = np.max(np.abs(dirs @ Ap))
    assert np.max(np.abs(areas - dirs[:1024] @ Ap)) < 1e-3 * np.linalg.norm(Ap)
    assert abs(best - np.linalg.norm(Ap)) < 5e-3 * np.linalg.norm(Ap)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_projection_bound(seed):
    rng = np.random.default_rng(seed)
    c, _ = random_analytic_curve(rng, N=64, tail_tol=1.0)
    Ap = diag.projected_area(c)
    a = rng.normal(size=(4096, 3))
    a /= np.linalg.norm(a, axis=1)[:, None]
    p = np.abs(a @ Ap)
    n = np.linalg.norm(Ap)
    assert np.all(p <= n * (1 + 1e-12))
    assert abs(np.abs(Ap / n @ Ap) - n) < 1e-12 * n


# -- writhe, twist, self-linking ------------------------------------------------

def test_writhe_planar_curves():
    assert abs(diag.writhe(make_circle(1.0, 128))) < 1e-6
    u, _ = _fd.grid(128)
    r = 1 + 0.3 * np.cos(3 * u)
    c = FramedCurve(np.stack([r * np.cos(u), r * np.sin(u), 0 * u], axis=1), 0 * u)
    assert abs(diag.writhe(c)) < 1e-6


def test_writhe_trefoil_self_convergence():
    assert abs(diag.writhe(trefoil(512)) - diag.writhe(trefoil(4096))) < 1e-3


def test_writhe_mirror_flips_sign():
    c = trefoil(256)
    m = FramedCurve(c.positions * [1, 1, -1], c.angles)
    assert diag.writhe(m) == pytest.approx(-diag.writhe(c), abs=1e-10)


def test_writhe_near_self_intersection():
    u, _ = _fd.grid(64)
    # two lobes pass within 1e-7 of each other
    X = np.stack([np.cos(u), 0.5 * np.sin(2 * u), 1e-7 * np.sin(u)], axis=1)
    with pytest.raises(NearSelfIntersection):
        diag.writhe(FramedCurve(X, 0 * u))


def test_twist_examples():
    c = make_circle(1.0, 128, 0.3)
    g = compute_geometry(c)
    assert abs(diag.twist(c, g)) < 1e-12 and abs(diag.twist(c, g, "frenet")) < 1e-12
    u, _ = _fd.grid(128)
    c = FramedCurve(c.positions, u)
    g = compute_geometry(c)
    assert diag.twist(c, g) == pytest.approx(1.0, abs=1e-10)
    assert abs(diag.twist(c, g, "frenet")) < 1e-12
    h = make_helix(3.0, 4.0, 256)
    assert diag.twist(h, compute_geometry(h), "frenet") == pytest.approx(0.8, abs=1e-7)


def test_twist_needs_frenet():
    u, _ = _fd.grid(64)
    c = FramedCurve(np.stack([np.cos(u), 0.5 * np.sin(2 * u), 0 * u], axis=1), 0 * u)
    with pytest.raises(FrenetUndefined):
        diag.twist(c, compute_geometry(c))


@pytest.mark.parametrize("d", [-2, 0, 3])
def test_selflink_wound_circle(d):
    u, _ = _fd.grid(128)
    c = FramedCurve(make_circle(1.0, 128).positions, 0.2 + d * u)
    g = compute_geometry(c)
    s, n, dev = diag.selflink(diag.writhe(c), diag.twist(c, g))
    assert n == d and dev < 1e-6
    assert diag.twist_degree_defect(c, g) < 1e-8


def test_selflink_trefoil_frenet_near_integer():
    c = trefoil(512)
    s, n, dev = diag.selflink(diag.writhe(c), diag.twist(c, compute_geometry(c), "frenet"))
    assert dev < 1e-2


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(-3, 3))
def test_total_torsion_vs_psi3(seed, d):
    c, _ = random_analytic_curve(np.random.default_rng(seed), N=128, tail_tol=1.0)
    u, _ = _fd.grid(128)
    c = FramedCurve(c.positions, c.angles + d * u)
    s = diag.global_scalars(compute_geometry(c))
    assert abs(s["int_psi3"] - s["int_tau"] - 2 * np.pi * d) < 1e-8


# -- bounds, flux, dAp -------------------------------------------------------

def test_bound_monitors_circle_exact():
    t = np.linspace(0, 0.49, 50)
    L = 2 * np.pi * np.sqrt(1 - 2 * t)
    A = np.pi * (1 - (1 - 2 * t))
    lb, al = diag.bound_monitors(t, L, A, K_I=1.0)
    assert np.max(np.abs(lb)) < 1e-12 and np.max(np.abs(al)) < 1e-12
    _, al4 = diag.bound_monitors(t, L, A, K_I=1.0, knotted=True)
    np.testing.assert_allclose(al4, -2 * np.pi * t, atol=1e-12)


@pytest.mark.parametrize("K_I", [None, 0.0, 1.5])
def test_bound_monitors_not_applicable(K_I):
    lb, _ = diag.bound_monitors([0, 1], [1, 1], [0, 0], K_I=K_I)
    assert np.isnan(lb).all()


def test_terminal_time_bound():
    assert diag.terminal_time_bound(2 * np.pi, 1.0) == pytest.approx(0.5)


def test_flux_residual_t0_cancels():
    c, _ = random_analytic_curve(np.random.default_rng(1), N=128, tail_tol=1.0)
    g = compute_geometry(c)
    assert diag.flux_residual(c, g, c, g, 1.0) < 1e-12


def test_flux_residual_csf_circle():
    res = run(make_circle(1.0, 128), ThetaLaw.zero(), FlowConfig(t_end=0.3, record_dt=0.1))
    s0 = res.slices[0]
    for s in res.slices:
        assert diag.flux_residual(s0.curve, s0.geom, s.curve, s.geom, 0.0) < 1e-8


def test_flux_residual_custom_directions_and_helix():
    c = make_circle(1.0, 32)
    g = compute_geometry(c)
    assert diag.flux_residual(c, g, c, g, 1.0, [[0, 0, 1.0], [1.0, 0, 0]]) < 1e-12
    h = make_helix(1.0, 1.0, 32)
    with pytest.raises(Unsupported):
        diag.flux_residual(h, compute_geometry(h), h, compute_geometry(h), 1.0)


def _dap(curve, law, dt):
    a, b = step(curve, law, FlowConfig(), -dt / 2), step(curve, law, FlowConfig(), dt / 2)
    return diag.dAp_identity(a, b, dt, compute_geometry(curve))


def test_dAp_identity_vfe_and_csf():
    c = make_circle(1.0, 128, np.pi / 2)
    assert _dap(c, ThetaLaw.zero(), 1e-3) < 1e-8
    assert np.linalg.norm(diag.projected_area(step(c, ThetaLaw.zero(), FlowConfig(), 0.1))
                          - diag.projected_area(c)) < 1e-8
    c = make_circle(1.0, 256, 0.0)
    assert _dap(c, ThetaLaw.zero(), 1e-3) < 1e-6


def test_dAp_identity_random():
    c, rate = random_analytic_curve(np.random.default_rng(5), N=256)
    assert _dap(c, ThetaLaw.constant(rate), 1e-5) < 1e-4


# -- records and CSV ----------------------------------------------------------

def test_csv_header_exact():
    assert diag.CSV_HEADER == (
        "t,length,swept_area,total_torsion,total_psi3,Ap_x,Ap_y,Ap_z,writhe,twist_theta,"
        "twist_frenet,selflink_theta,deg_theta,max_kappa,theta_mean,theta_spread,"
        "g_uniformity,length_bound_residual,area_lower_residual,flux_residual,gb_residual")


@pytest.fixture(scope="module")
def csf_records():
    res = run(make_circle(1.0, 64), ThetaLaw.zero(), FlowConfig(t_end=0.4, record_dt=0.05))
    return res, diag.records_for_run(res, K_I=1.0)


def test_records_csf(csf_records):
    res, recs = csf_records
    assert len(recs) == len(res.slices) == 9
    for r in recs:
        assert r.length > 0 and r.deg_theta == 0
        assert abs(r.length_bound_residual) < 1e-4 * (2 * np.pi) ** 2
        assert abs(r.area_lower_residual) < 1e-4 * np.pi
        assert abs(r.gb_residual) < 1e-10
        assert abs(r.writhe) < 1e-6 and r.selflink_integer == 0
        assert r.g_uniformity < 1e-10 and np.isnan(r.flux_residual)
    assert all(b.swept_area >= a.swept_area for a, b in zip(recs, recs[1:]))


def test_csv_roundtrip(tmp_path, csf_records):
    _, recs = csf_records
    p = tmp_path / "d.csv"
    diag.write_csv(recs, p)
    text = p.read_text()
    assert text.splitlines()[0] == diag.CSV_HEADER
    back = diag.read_csv(p)
    np.testing.assert_array_equal(back["t"], [r.t for r in recs])
    np.testing.assert_array_equal(back["swept_area"], [r.swept_area for r in recs])
    assert back["deg_theta"].dtype == float and set(back["deg_theta"]) == {0.0}


def test_records_helical_skip_closed_only_fields():
    res = run(make_helix(1.0, 0.3, 64, 0.6), ThetaLaw.cmc(1.0),
              FlowConfig(t_end=0.02, record_dt=0.01, spectral_cutoff=8))
    recs = diag.records_for_run(res, H=1.0)
    assert all(np.isnan(r.writhe) and np.isnan(r.Ap_x) and np.isnan(r.flux_residual)
               for r in recs)
    assert all(np.isfinite(r.twist_frenet) for r in recs)


def test_hausdorff():
    c = make_circle(1.0, 64)
    u, _ = _fd.grid(64)
    # same circle sampled at shifted parameters
    v = u + 0.37 * (u[1] - u[0])
    d = FramedCurve(np.stack([np.cos(v), np.sin(v), 0 * v], axis=1), 0 * v)
    assert diag.hausdorff_distance(c, d) < 1e-12
    e = make_circle(1.1, 64)
    assert diag.hausdorff_distance(c, e) == pytest.approx(0.1, abs=1e-12)
