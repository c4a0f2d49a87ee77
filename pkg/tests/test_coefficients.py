import json

import numpy as np
import pytest
from scipy.integrate import quad

from deltaloop import coefficients as co
from deltaloop.coefficients import (CurvilinearFields, ModelParams, StripField, SupNorms,
                                    effective_potential_V, scaling_probe, sup_norm_records,
                                    sup_norms, theta)
from deltaloop.errors import DomainError
from deltaloop.geometry import circle, ellipse, tubular_map

C0, B = 0.3, 1.0


def c_of(u):
    return C0 / (1 - u) ** 2 + 0.5 * B


def k_of(u):
    return C0 * (1 / (1 - u) - 1) + 0.5 * B * u


def residual_closed_form(s, u):
    """W + 1/4 on the unit circle for c0 = 0.3, B = 1."""
    c, k = c_of(u), k_of(u)
    return (0.25 * (1 - (1 - u) ** -2) + c ** 2 * (1 - u) ** 2 - c ** 2 * np.cos(2 * s) ** 2
            + 4 * np.sin(2 * s) ** 2 * k ** 2 / (1 - u) ** 2)


@pytest.fixture(scope="module")
def circle_fields(unit_circle, params):
    f = CurvilinearFields(unit_circle, params, 0.2)
    ss, uu = np.meshgrid(f.s, f.u, indexing="ij")
    return f, ss, uu


def test_params_validation():
    with pytest.raises(DomainError):
        ModelParams(0.0, 1.0)
    with pytest.raises(DomainError):
        ModelParams(0.5, -1.0)
    with pytest.raises(DomainError):
        ModelParams(0.5, 1.0, beta=0.0)
    with pytest.raises(DomainError):
        ModelParams(float("nan"), 1.0, test_only=True)
    assert ModelParams(0.0, 0.0, test_only=True).B == 0.0


def test_theta_circle(circle_fields):
    f, _, uu = circle_fields
    assert np.max(np.abs(f.theta.values - (1 - uu) ** -2)) < 1e-12


def test_theta_on_loop_radius_two(circle_r2):
    assert theta(circle_r2, np.linspace(0, 4 * np.pi, 9), 0.0) == pytest.approx(0.25, abs=1e-12)


def test_theta_is_inverse_squared_distance(ellipse21):
    s = np.linspace(0, ellipse21.length, 23)
    u = np.linspace(-0.2, 0.2, 23)
    pts = tubular_map(ellipse21, s, u)
    assert np.allclose(theta(ellipse21, s, u) * np.sum(pts ** 2, axis=1), 1.0, atol=1e-12)


def test_alphas_circle(circle_fields):
    f, ss, uu = circle_fields
    a1, a2, a3 = (x.values for x in f.alphas)
    c = c_of(uu)
    assert np.max(np.abs(a1 - c ** 2 * (1 - uu) ** 2)) < 1e-12
    assert np.max(np.abs(a2 - 2 * c * (1 - uu) * np.sin(ss))) < 1e-12
    assert np.max(np.abs(a3 - 2 * c * (1 - uu) * np.cos(ss))) < 1e-12


def test_alphas_without_flux(ellipse21):
    p = ModelParams(0.0, 1.4, test_only=True)
    f = CurvilinearFields(ellipse21, p, 0.1)
    a1, _, _ = f.alphas
    assert np.allclose(a1.values, 0.25 * 1.4 ** 2 / f.theta.values, rtol=1e-12)


def test_omegas_circle(circle_fields):
    f, ss, uu = circle_fields
    o1, o2 = (x.values for x in f.omegas)
    assert np.max(np.abs(o1)) < 1e-12
    assert np.max(np.abs(o2 - 2 * c_of(uu) * np.cos(2 * ss))) < 1e-12


def test_omegas_on_loop_at_start(ellipse21, params):
    """At s = 0 the tangent angle vanishes, so the rotation is the identity."""
    f = CurvilinearFields(ellipse21, params, 0.1)
    mid = f.u.size // 2
    a1, a2, a3 = (x.values[0, mid] for x in f.alphas)
    o1, o2 = (x.values[0, mid] for x in f.omegas)
    assert (o1, o2) == pytest.approx((a2, a3), abs=1e-12)


def test_omegas_linear_in_field_strengths(ellipse21):
    f1 = CurvilinearFields(ellipse21, ModelParams(0.3, 0.7), 0.1)
    f2 = CurvilinearFields(ellipse21, ModelParams(0.6, 1.4), 0.1)
    for x1, x2 in zip(f1.omegas, f2.omegas):
        assert np.allclose(x2.values, 2 * x1.values, atol=1e-12)


def test_gauge_circle(circle_fields):
    f, ss, uu = circle_fields
    K, K_s, K_u = (x.values for x in f.gauge)
    assert np.max(np.abs(K - np.cos(2 * ss) * k_of(uu))) < 1e-12
    assert np.max(np.abs(K_s + 2 * np.sin(2 * ss) * k_of(uu))) < 1e-11
    assert np.max(np.abs(K_u - 0.5 * f.omegas[1].values)) == 0.0


def test_gauge_vanishes_on_loop(ellipse21, params):
    f = CurvilinearFields(ellipse21, params, 0.2)
    assert np.max(np.abs(f.gauge[0].values[:, f.u.size // 2])) < 1e-14


def test_gauge_against_adaptive_quadrature(ellipse21, params):
    s0, u0 = 1.3, 0.17
    cs = co._CurveSamples(ellipse21, np.array([s0]))
    integrand = lambda v: co._omegas(cs, v, params)[1][0]
    ref = 0.5 * quad(integrand, 0, u0, epsabs=1e-14)[0]
    assert co._gauge(cs, np.array([u0]), params)[0] == pytest.approx(ref, abs=1e-12)


def test_gauge_s_derivative_by_differences(ellipse21, params):
    f = CurvilinearFields(ellipse21, params, 0.2, n_s=256)
    h = 1e-5
    i, j = 37, 5
    s, u = f.s[i], np.array([f.u[j]])
    plus = co._gauge(co._CurveSamples(ellipse21, np.array([s + h])), u, params)[0]
    minus = co._gauge(co._CurveSamples(ellipse21, np.array([s - h])), u, params)[0]
    assert f.gauge[1].values[i, j] == pytest.approx((plus - minus) / (2 * h), abs=1e-8)


def test_potential_circle(circle_fields):
    f, _, uu = circle_fields
    assert np.max(np.abs(f.potential.values + 0.25 * (1 - uu) ** -2)) < 1e-12


def test_potential_on_loop(ellipse21):
    V = effective_potential_V(ellipse21, 0.2)
    g = ellipse21.curvature(V.s)
    assert np.max(np.abs(V.column(0.0) + 0.25 * g ** 2)) < 1e-12


def test_potential_flattens_for_large_circles():
    V = effective_potential_V(circle(1000.0), 0.5)
    assert V.max_abs() < 1e-6


def test_W_without_fields_is_V(ellipse21):
    f = CurvilinearFields(ellipse21, ModelParams(0.0, 0.0, test_only=True), 0.2)
    assert np.max(np.abs(f.W.values - f.potential.values)) < 1e-12


def test_W_circle(circle_fields):
    f, ss, uu = circle_fields
    assert np.max(np.abs(f.potential_residual.values - residual_closed_form(ss, uu))) < 1e-10
    assert np.max(np.abs(f.W.values + 0.25 - residual_closed_form(ss, uu))) < 1e-10


def test_tangential_residual_circle(circle_fields):
    f, ss, uu = circle_fields
    expected = -4 * np.sin(2 * ss) * k_of(uu) / (1 - uu) ** 2
    assert np.max(np.abs(f.tangential_residual.values - expected)) < 1e-10


@pytest.mark.parametrize("a", [0.2, 0.1, 0.05, 0.025])
def test_sup_norms_circle(unit_circle, params, a):
    sn = sup_norms(unit_circle, params, a)
    s = np.linspace(0, np.pi, 2001)
    u = np.linspace(-a, a, 4001)
    ss, uu = np.meshgrid(s, u)
    m_ref = np.abs(residual_closed_form(ss, uu)).max()
    assert sn.N == pytest.approx(4 * k_of(a) / (1 - a) ** 2, rel=1e-9)
    assert sn.M == pytest.approx(m_ref, rel=1e-6)


def test_sup_norms_limit_is_field_energy(unit_circle, params):
    """Both residuals are continuous in a; M keeps the on-loop value (c0 + B/2)^2."""
    sn = sup_norms(unit_circle, params, 1e-4)
    assert sn.M == pytest.approx((C0 + 0.5 * B) ** 2, rel=1e-3)
    assert sn.N < 1e-3


def test_sup_norms_monotone_in_width(ellipse21, params):
    vals = [sup_norms(ellipse21, params, a) for a in (0.2, 0.1, 0.05)]
    assert vals[0].N >= vals[1].N >= vals[2].N
    assert vals[0].M >= vals[1].M >= vals[2].M


def test_supnorms_reject_negative():
    with pytest.raises(ValueError):
        SupNorms(0.1, -1.0, 0.0)


def test_scaling_probe_recovers_linear_law():
    probe = scaling_probe(None, None, [0.2, 0.1, 0.05, 0.025], lambda a: (2 * a, 3 * a))
    assert probe.slope_through_origin == pytest.approx(5.0, rel=1e-12)
    assert probe.intercept == pytest.approx(0.0, abs=1e-12)
    assert not probe.intercept_flag
    assert probe.halving_ratios == pytest.approx([0.5] * 3)


def test_scaling_probe_flags_intercept():
    probe = scaling_probe(None, None, [0.2, 0.1, 0.05], lambda a: (a, 0.5 + a))
    assert probe.intercept == pytest.approx(0.5, abs=1e-12)
    assert probe.intercept_flag


def test_scaling_probe_unit_circle(unit_circle, params, tmp_path):
    probe = scaling_probe(unit_circle, params, [0.1, 0.05, 0.025])
    assert probe.intercept_flag
    records = sup_norm_records(probe, tmp_path / "norms.json")
    assert [r["a"] for r in records] == [0.1, 0.05, 0.025]
    assert json.loads((tmp_path / "norms.json").read_text()) == records


def test_scaling_probe_requires_decreasing_widths():
    with pytest.raises(ValueError):
        scaling_probe(None, None, [0.1, 0.2], lambda a: (a, a))


def test_strip_field_round_trips(circle_fields, tmp_path):
    f, _, _ = circle_fields
    W = f.W
    back = StripField.from_npz(W.to_npz(tmp_path / "W.npz"))
    assert back.name == "W" and back.meta == W.meta
    assert np.array_equal(back.values, W.values)
    table = np.loadtxt(W.to_csv(tmp_path / "W.csv"), delimiter=",", skiprows=1)
    assert table.shape == (W.s.size * W.u.size, 3)
    assert np.array_equal(table[:, 2].reshape(W.values.shape), W.values)


def test_width_beyond_halfwidth(unit_circle, params):
    with pytest.raises(DomainError):
        CurvilinearFields(unit_circle, params, 0.6)


def test_origin_outside_loop(params):
    with pytest.raises(DomainError):
        CurvilinearFields(circle(1.0, center=(3.0, 0.0)), params, 0.1)


def test_origin_too_close_to_loop(params):
    with pytest.raises(DomainError):
        CurvilinearFields(circle(1.0, center=(0.9, 0.0)), params, 0.2)


def test_grid_too_coarse(unit_circle, params):
    with pytest.raises(ValueError):
        CurvilinearFields(unit_circle, params, 0.1, n_s=32)
