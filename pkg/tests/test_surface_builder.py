import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from framedflow import FlowConfig, ThetaLaw, make_circle, make_helix, run
from framedflow.curve_core import FramedCurve, compute_geometry
from framedflow.errors import FramedFlowError, InvalidCurve
from framedflow.surface_builder import (
    TrajectorySurface, export_fields_csv, export_obj, gauss_bonnet_balance, load_surface,
    mesh_curvature_estimate, save_surface, surface_forms)
from framedflow.verification import random_analytic_curve


def _slice_fields(curve, upsilon=None):
    g = compute_geometry(curve)
    return surface_forms(g, np.zeros(curve.N) if upsilon is None else upsilon)


def test_csf_slice_flat():
    f = _slice_fields(make_circle(1.0, 64, 0.0))
    assert np.max(np.abs(f["H"])) < 1e-12 and np.max(np.abs(f["K"])) < 1e-12


@pytest.mark.parametrize("rho,phi", [(1.0, np.pi / 3), (0.7, 0.4)])
def test_cone_slice(rho, phi):
    f = _slice_fields(make_circle(rho, 128, phi))
    assert np.max(np.abs(f["K"])) < 1e-9  # round-off of d_s^2 kappa
    np.testing.assert_allclose(f["H"], -np.sin(phi) / rho, rtol=1e-7)


def test_vfe_slice_cylinder():
    f = _slice_fields(make_circle(2.0, 128, np.pi / 2))
    assert np.max(np.abs(f["K"])) < 1e-9  # round-off of d_s^2 kappa
    np.testing.assert_allclose(f["H"], -0.5, rtol=1e-7)
    np.testing.assert_allclose(f["kappa2"], -0.5, rtol=1e-7)
    assert np.max(np.abs(f["kappa1"])) < 1e-7


def test_form_structure():
    c, _ = random_analytic_curve(np.random.default_rng(1), N=64, tail_tol=1.0)
    g = compute_geometry(c)
    f = surface_forms(g, np.zeros(64))
    np.testing.assert_allclose(f["E"], g.g ** 2)
    np.testing.assert_allclose(f["G"], g.kappa ** 2)
    assert np.all(f["F"] == 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(["closed", "helix"]))
def test_two_paths_and_principal_curvatures_agree(seed, kind):
    rng = np.random.default_rng(seed)
    if kind == "helix":
        c = make_helix(rng.uniform(0.5, 2), rng.uniform(0.1, 1), 64, rng.uniform(-1.5, 1.5))
    else:
        c, _ = random_analytic_curve(rng, N=64, tail_tol=1.0)
    g = compute_geometry(c)
    ups = rng.normal(size=3) @ np.stack([np.ones(64), np.cos(_u(64)), np.sin(_u(64))])
    f = surface_forms(g, ups)
    ok = f["defined"]
    assert ok.all()
    scale = max(np.nanmax(np.abs(f["H"])), np.nanmax(np.abs(f["K"])), 1.0 / g.length)
    Hf = f["Lf"] / f["E"] + f["Nf"] / f["G"]
    Kf = (f["Lf"] * f["Nf"] - f["Mf"] ** 2) / (f["E"] * f["G"])
    assert np.max(np.abs(f["H"] - Hf)) < 1e-8 * scale
    assert np.max(np.abs(f["K"] - Kf)) < 1e-8 * scale
    k1, k2 = f["kappa1"], f["kappa2"]
    assert np.max(np.abs(k1 + k2 - f["H"])) < 1e-10 * scale
    assert np.max(np.abs(k1 * k2 - f["K"])) < 1e-10 * scale ** 2
    assert np.all(f["zeta"] >= 0)


def _u(N):
    return 2 * np.pi * np.arange(N) / N


def test_undefined_vertices_flagged():
    u = _u(64)
    c = FramedCurve(np.stack([np.cos(u), 0.5 * np.sin(2 * u), 0 * u], axis=1), 0 * u)
    f = _slice_fields(c)
    assert not f["defined"][16] and f["defined"].sum() == 62
    assert np.isnan(f["H"][16]) and np.isnan(f["K"][16])
    assert np.isfinite(f["E"][16])


def test_append_slice_node_mismatch():
    s = TrajectorySurface()
    c = make_circle(1.0, 16)
    s.append_slice(0.0, c, compute_geometry(c), np.zeros(16))
    c2 = make_circle(1.0, 32)
    with pytest.raises(InvalidCurve):
        s.append_slice(0.1, c2, compute_geometry(c2), np.zeros(32))


@pytest.fixture(scope="module")
def csf_run():
    return run(make_circle(1.0, 64), ThetaLaw.zero(), FlowConfig(t_end=0.3, record_dt=0.02))


@pytest.fixture(scope="module")
def cone_run():
    return run(make_circle(1.0, 64, np.pi / 3), ThetaLaw.zero(),
               FlowConfig(t_end=0.6, record_dt=0.02))


def test_mesh_estimate_flat_annulus(csf_run):
    H, K = mesh_curvature_estimate(csf_run.surface)
    L = 2 * np.pi
    assert np.nanmax(np.abs(H)) < 1e-3 / L and np.nanmax(np.abs(K)) < 1e-3 / L


def test_mesh_estimate_cone_strip(cone_run):
    surf = cone_run.surface
    H, K = mesh_curvature_estimate(surf)
    assert np.nanmax(np.abs(K)) < 1e-3
    rho = np.array([np.mean(np.linalg.norm(v[:, :2], axis=1)) for v in surf.vertices])
    exact = -np.sin(np.pi / 3) / rho[:, None]
    rel = np.abs(H[1:-1] - exact[1:-1]) / np.abs(exact[1:-1])
    assert np.nanmax(rel) < 0.01


def test_mesh_estimate_needs_three_slices():
    s = TrajectorySurface()
    c = make_circle(1.0, 16)
    for t in (0.0, 0.1):
        s.append_slice(t, c, compute_geometry(c), np.zeros(16))
    with pytest.raises(FramedFlowError):
        mesh_curvature_estimate(s)


def test_gauss_bonnet_csf(csf_run):
    assert np.max(np.abs(gauss_bonnet_balance(csf_run.surface))) < 1e-6


def test_gauss_bonnet_cgc_negative():
    res = run(make_circle(1.0, 128, 0.6), ThetaLaw.cgc(-1.0),
              FlowConfig(t_end=0.1, record_dt=0.01, spectral_cutoff=16))
    s = res.surface
    rates = np.asarray(s.K_rates)
    KA = np.sum(0.5 * np.diff(s.times) * (rates[1:] + rates[:-1]))
    assert abs(KA) > 0.1
    assert np.max(np.abs(gauss_bonnet_balance(s))) < 1e-3 * abs(KA)
    K = s.array("K")
    assert np.nanmax(np.abs(K + 1.0)) < 1e-8


def _obj_counts(path):
    lines = path.read_text().splitlines()
    v = [ln for ln in lines if ln.startswith("v ")]
    f = [ln for ln in lines if ln.startswith("f ")]
    idx = np.array([[int(x) for x in ln.split()[1:]] for ln in f])
    return len(v), idx


def _two_slice_surface(curve):
    s = TrajectorySurface(curve.boundary, curve.pitch)
    for t in (0.0, 0.1):
        s.append_slice(t, curve, compute_geometry(curve), np.zeros(curve.N))
    return s


def test_export_obj_closed(tmp_path):
    N = 12
    p = tmp_path / "s.obj"
    export_obj(_two_slice_surface(make_circle(1.0, N, 0.3)), p)
    nv, idx = _obj_counts(p)
    assert nv == 2 * N and idx.shape == (2 * N, 3)
    assert idx.min() == 1 and idx.max() == 2 * N
    # the seam quad joins node N-1 back to node 0
    assert [N, 1, N + 1] in idx.tolist()


def test_export_obj_helical(tmp_path):
    N = 12
    p = tmp_path / "h.obj"
    export_obj(_two_slice_surface(make_helix(1.0, 0.2, N, 0.3)), p)
    nv, idx = _obj_counts(p)
    assert nv == 2 * N and idx.shape == (2 * (N - 1), 3)
    assert [N, 1, N + 1] not in idx.tolist()


def test_export_obj_consistent_winding(tmp_path):
    # every interior edge is used once in each direction
    p = tmp_path / "w.obj"
    s = _two_slice_surface(make_circle(1.0, 10, 0.3))
    export_obj(s, p)
    _, idx = _obj_counts(p)
    edges = {}
    for a, b, c in idx.tolist():
        for e in ((a, b), (b, c), (c, a)):
            edges[e] = edges.get(e, 0) + 1
    assert all(v == 1 for v in edges.values())
    interior = [e for e in edges if (e[1], e[0]) in edges]
    assert len(interior) == 2 * 10 + 2 * 10  # diagonals and rungs, both directions


def test_export_empty_errors(tmp_path):
    s = TrajectorySurface()
    with pytest.raises(FramedFlowError):
        export_obj(s, tmp_path / "e.obj")
    with pytest.raises(FramedFlowError):
        export_fields_csv(s, tmp_path / "e.csv")


def test_fields_csv(tmp_path, csf_run):
    p = tmp_path / "f.csv"
    export_fields_csv(csf_run.surface, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "k,i,x,y,z,H,K,kappa1,kappa2,defined"
    assert len(lines) == 1 + len(csf_run.surface) * 64
    assert lines[1].startswith("0,0,1.0,0.0,0.0,")


def test_save_load_roundtrip(tmp_path, cone_run):
    p = tmp_path / "s.npz"
    save_surface(cone_run.surface, p)
    s = load_surface(p)
    assert s.times == cone_run.surface.times and s.boundary == cone_run.surface.boundary
    np.testing.assert_array_equal(s.array("V"), cone_run.surface.array("V"))
    np.testing.assert_array_equal(s.array("H"), cone_run.surface.array("H"))
    np.testing.assert_array_equal(gauss_bonnet_balance(s), gauss_bonnet_balance(cone_run.surface))
