import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from framedflow import _fd
from framedflow.curve_core import (FramedCurve, compute_geometry, make_circle, make_helix,
                                   velocity_field)
from framedflow.errors import ConfigError, CurvatureTooSmall, FrenetUndefined, Psi2TooSmall
from framedflow.surface_builder import surface_forms
from framedflow.theta_laws import (ThetaLaw, eval_cgc, eval_cmc, eval_diffusive,
                                   eval_zero_or_constant, evaluate)
from framedflow.verification import random_analytic_curve


def test_zero_and_constant():
    g = compute_geometry(make_circle(1.5, 32))
    assert np.all(eval_zero_or_constant(ThetaLaw.zero(), g) == 0.0)
    rate = 2.0 / 1.5 ** 2
    np.testing.assert_array_equal(eval_zero_or_constant(ThetaLaw.constant(rate), g), rate)
    np.testing.assert_array_equal(evaluate(ThetaLaw.constant(0.0), None, g),
                                  evaluate(ThetaLaw.zero(), None, g))


def test_law_validation():
    with pytest.raises(ConfigError):
        ThetaLaw("willmore")
    with pytest.raises(ConfigError):
        ThetaLaw.diffusive(0.0)
    with pytest.raises(ConfigError):
        ThetaLaw.diffusive(-1.0)


def test_diffusive_constant_theta():
    c = make_circle(1.0, 64, 0.4)
    assert np.max(np.abs(eval_diffusive(ThetaLaw.diffusive(1.0), c, compute_geometry(c)))) < 1e-12


def test_diffusive_sine_on_unit_circle():
    N = 256
    u, _ = _fd.grid(N)
    c = FramedCurve(make_circle(1.0, N).positions, np.sin(u))
    ups = eval_diffusive(ThetaLaw.diffusive(1.0), c, compute_geometry(c))
    assert np.max(np.abs(ups + np.sin(u))) < 1e-6


def test_diffusive_beta_normal_to_plane():
    c = make_circle(1.0, 64, 0.2)
    ups = eval_diffusive(ThetaLaw.diffusive(1.0, (0, 0, 1)), c, compute_geometry(c))
    assert np.max(np.abs(ups)) < 1e-12


def test_diffusive_beta_and_f4():
    c = make_circle(2.0, 64)
    law = ThetaLaw.diffusive(1.0, (1.0, 0.0, 0.0), f4=0.25)
    ups = eval_diffusive(law, c, compute_geometry(c))
    u, _ = _fd.grid(64)
    # N = -(cos u, sin u, 0), kappa = 1/2
    np.testing.assert_allclose(ups, -0.5 * np.cos(u) + 0.25, atol=1e-8)


def test_diffusive_beta_needs_frenet():
    u, _ = _fd.grid(64)
    c = FramedCurve(np.stack([np.cos(u), 0.5 * np.sin(2 * u), 0 * u], axis=1), 0 * u)
    g = compute_geometry(c)
    with pytest.raises(FrenetUndefined) as e:
        eval_diffusive(ThetaLaw.diffusive(1.0, (1, 0, 0)), c, g)
    assert e.value.node == 16
    eval_diffusive(ThetaLaw.diffusive(1.0), c, g)  # beta = 0 is fine


def test_cmc_planar_circle_zero():
    g = compute_geometry(make_circle(1.0, 64))
    assert np.max(np.abs(eval_cmc(ThetaLaw.cmc(0.0), g))) < 1e-12


@pytest.mark.parametrize("rho,phi,H", [(1.0, 0.3, 1.0), (2.0, -0.7, 0.5), (0.5, 1.2, -2.0)])
def test_cmc_circle_constant_angle(rho, phi, H):
    g = compute_geometry(make_circle(rho, 128, phi))
    ups = eval_cmc(ThetaLaw.cmc(H), g)
    np.testing.assert_allclose(ups, H / rho + np.sin(phi) / rho ** 2, rtol=1e-7)


def test_cmc_flat_node_raises():
    u, _ = _fd.grid(64)
    c = FramedCurve(np.stack([np.cos(u), 0.5 * np.sin(2 * u), 0 * u], axis=1), 0 * u + 0.2)
    with pytest.raises(CurvatureTooSmall) as e:
        eval_cmc(ThetaLaw.cmc(1.0), compute_geometry(c), t=0.25)
    assert e.value.node == 16 and e.value.t == 0.25


@pytest.mark.parametrize("phi", [0.2, 0.6, 1.3])
def test_cgc_cone_circle_zero(phi):
    g = compute_geometry(make_circle(1.0, 128, phi))
    assert np.max(np.abs(eval_cgc(ThetaLaw.cgc(0.0), g))) < 1e-7


def test_cgc_theta_zero_raises_at_node_zero():
    with pytest.raises(Psi2TooSmall) as e:
        eval_cgc(ThetaLaw.cgc(0.0), compute_geometry(make_circle(1.0, 64, 0.0)), t=0.0)
    assert e.value.node == 0


def test_cgc_partial_zero_names_first_node():
    u, _ = _fd.grid(64)
    c = FramedCurve(make_circle(1.0, 64).positions, 0.5 * np.sin(u) + 0.5)
    with pytest.raises(Psi2TooSmall) as e:
        eval_cgc(ThetaLaw.cgc(0.0), compute_geometry(c))
    assert e.value.node == 48  # sin(u) = -1


def test_cgc_vfe_circle_zero():
    g = compute_geometry(make_circle(1.0, 128, np.pi / 2))
    assert np.max(np.abs(eval_cgc(ThetaLaw.cgc(0.0), g))) < 1e-7


def _random_state(seed, helix=False):
    rng = np.random.default_rng(seed)
    if helix:
        c = make_helix(1.0, rng.uniform(0.2, 1.0), 128, rng.uniform(0.2, 1.2))
        return c, compute_geometry(c)
    c, _ = random_analytic_curve(rng, N=128, tail_tol=1.0)
    th = c.angles
    if np.min(np.abs(np.sin(th))) < 0.2:
        c = c.replace(angles=th + 0.5 * np.pi)
    return c, compute_geometry(c)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(-3, 3), st.booleans())
def test_cmc_law_inverts_surface_H(seed, H, helix):
    c, g = _random_state(seed, helix)
    f = surface_forms(g, eval_cmc(ThetaLaw.cmc(H), g))
    assert f["defined"].all()
    assert np.max(np.abs(f["H"] - H)) < 1e-8 * max(1.0, abs(H))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(-3, 3), st.booleans())
def test_cgc_law_inverts_surface_K(seed, K, helix):
    c, g = _random_state(seed, helix)
    if np.min(np.abs(g.psi2)) < 0.05:
        return
    f = surface_forms(g, eval_cgc(ThetaLaw.cgc(K), g))
    scale = max(1.0, abs(K), float(np.max(g.kappa ** 2)))
    assert np.max(np.abs(f["K"] - K)) < 1e-8 * scale


def test_zero_law_reduction_csf_and_vfe():
    c, _ = random_analytic_curve(np.random.default_rng(11), N=128, tail_tol=1.0)
    for theta, field in ((0.0, "N"), (np.pi / 2, "B")):
        ct = c.replace(angles=np.full(c.N, theta))
        g = compute_geometry(ct)
        V = velocity_field(ct, g)
        np.testing.assert_allclose(V, g.kappa[:, None] * getattr(g, field), atol=1e-12)
