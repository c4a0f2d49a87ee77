import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from deltaloop.errors import CurveError, DomainError
from deltaloop.geometry import (build_arclength_curve, circle, conventional_curvature, ellipse,
                                gamma_plus, injectivity_halfwidth, load_curve_spec,
                                parse_curve_spec, signed_curvature, tabulated, tangent_angle,
                                tubular_map)


def ellipse_perimeter(a, b):
    return quad(lambda t: math.hypot(a * math.sin(t), b * math.cos(t)), 0, 2 * math.pi,
                epsabs=1e-13, epsrel=1e-13)[0]


@pytest.mark.parametrize("radius", [1.0, 2.0, 0.5])
def test_circle_length(radius):
    assert circle(radius).length == pytest.approx(2 * math.pi * radius, rel=1e-12)


def test_ellipse_length_against_quadrature(ellipse21):
    assert ellipse21.length == pytest.approx(ellipse_perimeter(2.0, 1.0), rel=1e-11)


def test_unit_speed_between_grid_points(ellipse21):
    s = np.linspace(0, ellipse21.length, 1777)
    speed = np.hypot(*ellipse21.tangent(s).T)
    assert np.max(np.abs(speed - 1.0)) < 1e-9


def test_closure(ellipse21):
    ends = ellipse21.position(np.array([0.0, ellipse21.length]))
    assert np.allclose(ends[0], ends[1], atol=1e-12)


@pytest.mark.parametrize("radius", [1.0, 2.0])
def test_circle_curvature_sign(radius):
    c = circle(radius)
    s = np.linspace(0, c.length, 50)
    assert np.allclose(signed_curvature(c, s), -1.0 / radius, atol=1e-10)
    assert np.allclose(conventional_curvature(c, s), 1.0 / radius, atol=1e-10)


def test_ellipse_curvature_at_vertices(ellipse21):
    L = ellipse21.length
    # (2, 0) and (0, 1) sit at s = 0 and s = L/4
    k = conventional_curvature(ellipse21, np.array([0.0, L / 4]))
    assert k == pytest.approx([2.0, 0.25], abs=1e-9)


def test_frenet_relation(ellipse21):
    """Second derivative equals gamma times the rotated tangent, by finite differences."""
    h = 1e-4
    s = np.linspace(0.1, ellipse21.length - 0.1, 37)
    d1 = ellipse21.tangent(s)
    d2 = (ellipse21.tangent(s + h) - ellipse21.tangent(s - h)) / (2 * h)
    g = signed_curvature(ellipse21, s)
    expected = g[:, None] * np.column_stack([d1[:, 1], -d1[:, 0]])
    assert np.max(np.abs(d2 - expected)) < 1e-6


def test_tangent_angle_circle(unit_circle):
    h = tangent_angle(unit_circle, np.array([0.0, math.pi, 2 * math.pi]))
    assert h == pytest.approx([0.0, math.pi, 2 * math.pi], abs=1e-10)


def test_tangent_angle_total_turning(ellipse21):
    h = tangent_angle(ellipse21, np.array([0.0, ellipse21.length]))
    assert h == pytest.approx([0.0, 2 * math.pi], abs=1e-9)


def test_tangent_angle_rotates_initial_tangent(ellipse21):
    s = np.linspace(0, ellipse21.length, 41)
    h = tangent_angle(ellipse21, s)
    t0 = ellipse21.tangent(np.array([0.0]))[0]
    rot = np.column_stack([np.cos(h) * t0[0] - np.sin(h) * t0[1],
                           np.sin(h) * t0[0] + np.cos(h) * t0[1]])
    assert np.max(np.abs(rot - ellipse21.tangent(s))) < 1e-9


def test_tubular_map_circle(unit_circle):
    s = np.linspace(0, 2 * math.pi, 17)
    for u in (-0.3, 0.0, 0.4):
        pts = tubular_map(unit_circle, s, np.full_like(s, u))
        assert np.allclose(pts, (1 - u) * np.column_stack([np.cos(s), np.sin(s)]), atol=1e-12)


def test_tubular_map_inward_shrinks_radius(circle_r2):
    pts = tubular_map(circle_r2, np.array([0.3, 2.0]), np.array([0.5, 0.5]))
    assert np.hypot(*pts.T) == pytest.approx([1.5, 1.5], abs=1e-12)


def test_tubular_map_rejects_wide_offsets(unit_circle):
    with pytest.raises(DomainError):
        tubular_map(unit_circle, np.array([0.0]), np.array([0.6]))


def test_gamma_plus():
    assert gamma_plus(circle(1.0)) == pytest.approx(1.0, abs=1e-10)
    assert gamma_plus(circle(2.0)) == pytest.approx(0.5, abs=1e-10)
    assert gamma_plus(ellipse(2.0, 1.0)) == pytest.approx(2.0, abs=1e-8)


@pytest.mark.parametrize("curve, cap", [(circle(1.0), 0.5), (circle(2.0), 1.0),
                                        (ellipse(2.0, 1.0), 0.25)])
def test_injectivity_halfwidth_cap(curve, cap):
    a = injectivity_halfwidth(curve)
    assert 0 < a <= cap
    assert a > 0.9 * cap


def test_offsets_separated_at_halfwidth(ellipse21):
    """Points far apart along the loop stay apart in the strip image."""
    a = ellipse21.halfwidth
    s = np.linspace(0, ellipse21.length, 300, endpoint=False)
    pts = np.concatenate([tubular_map(ellipse21, s, np.full_like(s, u))
                          for u in np.linspace(-0.999 * a, 0.999 * a, 5)])
    ss = np.tile(s, 5)
    sep = np.abs(np.subtract.outer(ss, ss))
    sep = np.minimum(sep, ellipse21.length - sep)
    dist = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
    far = sep > math.pi / ellipse21.gamma_plus
    assert dist[far].min() > 0.05


def test_reparametrization_is_idempotent(ellipse21):
    pts = ellipse21.points
    again = tabulated(ellipse21.s, pts[:, 0], pts[:, 1], grid_size=ellipse21.n,
                      period=ellipse21.length)
    assert again.length == pytest.approx(ellipse21.length, rel=1e-12)
    assert np.max(np.abs(again.points - pts)) < 1e-9


def test_tabulated_matches_analytic_ellipse(ellipse21):
    t = np.linspace(0, 2 * math.pi, 256, endpoint=False)
    c = tabulated(t, 2 * np.cos(t), np.sin(t), grid_size=1024)
    assert c.length == pytest.approx(ellipse21.length, rel=1e-12)


def test_tabulated_accepts_repeated_endpoint():
    t = np.linspace(0, 2 * math.pi, 129)
    c = tabulated(t, np.cos(t), np.sin(t))
    assert c.length == pytest.approx(2 * math.pi, rel=1e-12)


@pytest.mark.parametrize("parametric, message", [
    (lambda t: (np.cos(t), -np.sin(t)), "clockwise"),
    (lambda t: (np.sin(t), 0.5 * np.sin(2 * t)), "self-intersection"),
    (lambda t: (np.cos(t) + 0.1 * t, np.sin(t)), "not closed"),
    (lambda t: (np.cos(t) ** 3, np.sin(t) ** 3), "zero speed"),
])
def test_invalid_curves(parametric, message):
    with pytest.raises(CurveError, match=message):
        build_arclength_curve(parametric, 256)


def test_grid_too_small():
    with pytest.raises(ValueError):
        circle(1.0, grid_size=32)


def test_parse_circle_spec():
    c = parse_curve_spec("# a circle\nkind = circle\nradius = 2\ngrid = 256\n")
    assert c.length == pytest.approx(4 * math.pi, rel=1e-12)
    assert c.n == 256


def test_parse_table_spec(tmp_path):
    t = np.arange(128) * (2 * math.pi / 128)
    rows = "\n".join(f"{a:.17g} {x:.17g} {y:.17g}" for a, x, y in zip(t, 1.5 * np.cos(t), np.sin(t)))
    path = tmp_path / "loop.curve"
    path.write_text(f"kind = table\ngrid = 512\ndata:\n{rows}\n")
    c = load_curve_spec(path)
    assert c.length == pytest.approx(ellipse_perimeter(1.5, 1.0), rel=1e-10)


def test_parse_center_offsets_curve():
    c = parse_curve_spec("kind = ellipse\na = 2\nb = 1\ncenter = 0.5, -0.25\n")
    assert c.points.mean(axis=0) == pytest.approx([0.5, -0.25], abs=1e-9)


@pytest.mark.parametrize("text", ["kind = spiral\n", "radius 2\n", "kind = table\ndata:\n1 2\n"])
def test_bad_curve_specs(text):
    with pytest.raises((CurveError, ValueError)):
        parse_curve_spec(text)


@settings(max_examples=12, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.5, 3.0))
def test_random_ellipses_turn_once(a, b):
    c = ellipse(a, b)
    assert c.length == pytest.approx(ellipse_perimeter(a, b), rel=1e-10)
    assert tangent_angle(c, np.array([c.length]))[0] == pytest.approx(2 * math.pi, abs=1e-8)
