"""Arc-length parametrized closed planar curves and their differential geometry.

Curves are stored as uniform arc-length samples of the position and every
derivative comes from the trigonometric interpolant of those samples.

Sign convention: the signed curvature is ``gamma = x'' y' - y'' x'``, which is
``-1/R`` for a counter-clockwise circle of radius ``R``. The tangent angle is
``H(s) = -int_0^s gamma`` with ``H(0) = 0``; it differs from the polar angle of
``Gamma'(s)`` by the constant angle of ``Gamma'(0)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar
from shapely.geometry import LinearRing, Point, Polygon

from ._fourier import TrigInterpolant
from .errors import CurveError, DomainError

Parametric = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]

ARCLENGTH_TOL = 1e-10


@dataclass(frozen=True)
class CurveJet:
    """Pointwise geometric data at arc length ``s``."""

    s: float
    position: np.ndarray
    tangent: np.ndarray
    gamma: float
    dgamma: float
    d2gamma: float


@dataclass(frozen=True, eq=False)
class LoopCurve:
    """Closed counter-clockwise curve sampled uniformly in arc length.

    ``points[i]`` is the position at ``s_i = i * length / n``; the seam point
    ``s = length`` is not repeated.
    """

    length: float
    points: np.ndarray
    counter_clockwise: bool = True
    name: str = "curve"
    _x: TrigInterpolant = field(init=False, repr=False)
    _y: TrigInterpolant = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise CurveError("points must have shape (n, 2)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        # roundoff-level modes are dropped; they dominate the fourth derivative in gamma''
        object.__setattr__(self, "_x", TrigInterpolant(pts[:, 0], self.length).denoised())
        object.__setattr__(self, "_y", TrigInterpolant(pts[:, 1], self.length).denoised())

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def s(self) -> np.ndarray:
        return np.arange(self.n) * (self.length / self.n)

    def derivative(self, s, order: int = 0) -> np.ndarray:
        """``order``-th arc-length derivative of the position, shape ``(..., 2)``."""
        return np.stack([self._x(s, order), self._y(s, order)], axis=-1)

    def position(self, s) -> np.ndarray:
        return self.derivative(s, 0)

    def tangent(self, s) -> np.ndarray:
        return self.derivative(s, 1)

    def grid_derivative(self, order: int = 0, m: int | None = None) -> np.ndarray:
        """Derivative sampled on the uniform grid of size ``m`` (default ``n``)."""
        return np.stack([self._x.on_grid(m, order), self._y.on_grid(m, order)], axis=-1)

    @cached_property
    def _gamma(self) -> TrigInterpolant:
        d1 = self.grid_derivative(1)
        d2 = self.grid_derivative(2)
        gamma = d2[:, 0] * d1[:, 1] - d2[:, 1] * d1[:, 0]
        return TrigInterpolant(gamma, self.length).denoised()

    @cached_property
    def _angle(self) -> tuple[float, TrigInterpolant]:
        return self._gamma.antiderivative()

    def curvature(self, s, order: int = 0) -> np.ndarray:
        """Signed curvature (or its ``order``-th derivative) at ``s``."""
        return self._gamma(s, order)

    def curvature_on_grid(self, m: int | None = None, order: int = 0) -> np.ndarray:
        return self._gamma.on_grid(m, order)

    def angle(self, s) -> np.ndarray:
        mean, prim = self._angle
        s = np.asarray(s, dtype=float)
        return -(mean * s + prim(s) - prim(np.zeros(1))[0])

    def jet(self, s: float) -> CurveJet:
        s_arr = np.array([float(s)])
        return CurveJet(
            s=float(s),
            position=self.position(s_arr)[0],
            tangent=self.tangent(s_arr)[0],
            gamma=float(self.curvature(s_arr)[0]),
            dgamma=float(self.curvature(s_arr, 1)[0]),
            d2gamma=float(self.curvature(s_arr, 2)[0]),
        )

    @cached_property
    def polygon(self) -> Polygon:
        return Polygon(self.grid_derivative(0, max(4 * self.n, 2048)))

    def origin_clearance(self) -> float:
        """Distance from the flux origin to the curve; negative when outside."""
        dense = self.grid_derivative(0, max(4 * self.n, 2048))
        dist = float(np.min(np.hypot(dense[:, 0], dense[:, 1])))
        return dist if self.polygon.contains(Point(0.0, 0.0)) else -dist

    @cached_property
    def gamma_plus(self) -> float:
        return gamma_plus(self)

    @cached_property
    def halfwidth(self) -> float:
        return injectivity_halfwidth(self)


def _check_closed(parametric: Parametric, period: float, scale: float) -> None:
    x0, y0 = parametric(np.array([0.0]))
    x1, y1 = parametric(np.array([period]))
    gap = math.hypot(float(x1[0] - x0[0]), float(y1[0] - y0[0]))
    if gap > 1e-8 * max(scale, 1.0):
        raise CurveError(f"curve is not closed: |c(T) - c(0)| = {gap:.3e}")


def build_arclength_curve(parametric: Parametric, grid_size: int = 512,
                          period: float = 2 * np.pi, name: str = "curve") -> LoopCurve:
    """Reparametrize a smooth closed curve ``t -> (x(t), y(t))`` by arc length.

    The speed is integrated spectrally and ``s(t) = s_i`` is inverted by Newton
    iteration from a monotone-interpolation guess.
    """
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    m = max(8 * grid_size, 4096)
    while True:
        t = np.arange(m) * (period / m)
        x, y = (np.asarray(v, dtype=float) for v in parametric(t))
        scale = float(np.max(np.hypot(x - x.mean(), y - y.mean())))
        ix, iy = TrigInterpolant(x, period), TrigInterpolant(y, period)
        if max(ix.tail(), iy.tail()) < 1e-14 * max(scale, 1.0) or m >= 2 ** 18:
            break
        m *= 2
    _check_closed(parametric, period, scale)
    speed = np.hypot(ix.on_grid(order=1), iy.on_grid(order=1))
    if speed.min() < 1e-8 * speed.mean():
        raise CurveError("degenerate parametrization: zero speed encountered")
    area = 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
    if not LinearRing(np.column_stack([x, y])).is_simple:
        raise CurveError("self-intersection detected")
    if area <= 0:
        raise CurveError("curve is clockwise; reverse the parametrization")

    mean, prim = TrigInterpolant(speed, period).antiderivative()
    length = mean * period
    fast = prim.truncated(1e-16 * length)
    p0 = fast(np.zeros(1))[0]

    def arc(tt):
        return mean * tt + fast(tt) - p0

    target = np.arange(grid_size) * (length / grid_size)
    cumulative = mean * t + prim.on_grid() - prim(np.zeros(1))[0]
    tt = np.interp(target, cumulative, t)
    for _ in range(50):
        step = (arc(tt) - target) / (mean + fast(tt, 1))
        tt = tt - step
        if np.max(np.abs(step)) < 1e-15 * period:
            break
    px, py = parametric(tt)
    curve = LoopCurve(length=length, points=np.column_stack([px, py]), name=name)
    unit = np.hypot(*curve.grid_derivative(1).T)
    if np.max(np.abs(unit - 1.0)) > ARCLENGTH_TOL:
        raise CurveError(
            f"grid_size={grid_size} does not resolve the curve "
            f"(| |Gamma'| - 1 | = {np.max(np.abs(unit - 1.0)):.2e})")
    return curve


def circle(radius: float = 1.0, grid_size: int = 512, center=(0.0, 0.0)) -> LoopCurve:
    cx, cy = center
    return build_arclength_curve(
        lambda t: (cx + radius * np.cos(t), cy + radius * np.sin(t)),
        grid_size, name=f"circle(R={radius:g})")


def ellipse(a: float = 2.0, b: float = 1.0, grid_size: int = 1024, center=(0.0, 0.0)) -> LoopCurve:
    cx, cy = center
    return build_arclength_curve(
        lambda t: (cx + a * np.cos(t), cy + b * np.sin(t)),
        grid_size, name=f"ellipse(a={a:g},b={b:g})")


def tabulated(t, x, y, grid_size: int = 512, period: float | None = None) -> LoopCurve:
    """Curve from uniformly spaced samples ``(t_j, x_j, y_j)`` over one period."""
    t, x, y = (np.asarray(v, dtype=float) for v in (t, x, y))
    repeated = len(t) > 2 and np.allclose([x[-1], y[-1]], [x[0], y[0]], atol=1e-12)
    if period is None:
        period = (t[-1] - t[0]) * (1.0 if repeated else len(t) / (len(t) - 1))
    if repeated and math.isclose(t[-1] - t[0], period, rel_tol=1e-9):
        t, x, y = t[:-1], x[:-1], y[:-1]
    dt = np.diff(t)
    if not np.allclose(dt, period / len(t), rtol=1e-8):
        raise CurveError("tabulated samples must be uniformly spaced over one period")
    # interpolants are indexed from the first sample, not from t[0]
    ix, iy = TrigInterpolant(x, period), TrigInterpolant(y, period)
    return build_arclength_curve(lambda tt: (ix(tt), iy(tt)), grid_size,
                                 period=period, name="tabulated")


def signed_curvature(curve: LoopCurve, s) -> np.ndarray:
    """``Gamma_1'' Gamma_2' - Gamma_2'' Gamma_1'`` evaluated at ``s``."""
    d1 = curve.derivative(s, 1)
    d2 = curve.derivative(s, 2)
    return d2[..., 0] * d1[..., 1] - d2[..., 1] * d1[..., 0]


def conventional_curvature(curve: LoopCurve, s) -> np.ndarray:
    """Curvature in the usual sign (positive for a counter-clockwise circle)."""
    return -signed_curvature(curve, s)


def tangent_angle(curve: LoopCurve, t) -> np.ndarray:
    """``H(t) = -int_0^t gamma``; ``H(0) = 0`` and ``H(L) = 2*pi`` for a ccw loop."""
    return curve.angle(t)


def tubular_map(curve: LoopCurve, s, u) -> np.ndarray:
    """``(Gamma_1 - u Gamma_2', Gamma_2 + u Gamma_1')``; ``u > 0`` points inward."""
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(u) >= curve.halfwidth):
        raise DomainError(f"|u| must stay below the injectivity half-width {curve.halfwidth:.6g}")
    return _offset(curve, s, u)


def _offset(curve: LoopCurve, s, u) -> np.ndarray:
    g = curve.position(s)
    d = curve.tangent(s)
    return np.stack([g[..., 0] - u * d[..., 1], g[..., 1] + u * d[..., 0]], axis=-1)


def gamma_plus(curve: LoopCurve) -> float:
    """``max |gamma|``: dense-grid maximum refined by a bounded scalar search."""
    m = max(4 * curve.n, 1024)
    values = np.abs(curve.curvature_on_grid(m))
    i = int(np.argmax(values))
    h = curve.length / m
    res = minimize_scalar(lambda x: -abs(float(curve.curvature(np.array([x]))[0])),
                          bounds=((i - 1) * h, (i + 1) * h), method="bounded",
                          options={"xatol": 1e-12 * curve.length})
    return float(max(values[i], -res.fun))


def _offsets_valid(curve: LoopCurve, a: float, m: int) -> bool:
    s = np.arange(m) * (curve.length / m)
    rings = []
    for u in (-a, -0.5 * a, 0.5 * a, a):
        ring = _offset(curve, s, np.full(m, u))
        lr = LinearRing(ring)
        if not lr.is_simple:
            return False
        rings.append(lr)
    return not any(r1.intersects(r2) for i, r1 in enumerate(rings) for r2 in rings[i + 1:])


def injectivity_halfwidth(curve: LoopCurve) -> float:
    """Conservative half-width on which the tubular map is injective.

    Starts from ``min(1/(2 gamma_+), half the smallest chord between points
    more than pi/gamma_+ apart in arc length)`` and shrinks until the offset
    curves at ``+-a`` and ``+-a/2`` are simple and mutually disjoint.
    """
    gp = curve.gamma_plus
    m = max(curve.n, 256)
    pts = curve.grid_derivative(0, m)
    s = np.arange(m) * (curve.length / m)
    sep = np.abs(np.subtract.outer(s, s))
    sep = np.minimum(sep, curve.length - sep)
    far = sep >= math.pi / gp - 1e-12
    dist = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
    chord = 0.5 * float(dist[far].min()) if np.any(far) else math.inf
    a = min(0.5 / gp, chord) * (1.0 - 1e-9)
    while not _offsets_valid(curve, a, 4 * m):
        a *= 0.9
    return a


def load_curve_spec(path: str | Path) -> LoopCurve:
    """Read a key-value curve description (see README, "Curve files")."""
    text = Path(path).read_text()
    return parse_curve_spec(text)


def parse_curve_spec(text: str) -> LoopCurve:
    keys: dict[str, str] = {}
    rows: list[list[float]] = []
    in_data = False
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if in_data:
            rows.append([float(v) for v in line.replace(",", " ").split()])
            continue
        if line.rstrip(":") == "data":
            in_data = True
            continue
        if "=" not in line:
            raise CurveError(f"cannot parse curve line: {raw!r}")
        k, v = (p.strip() for p in line.split("=", 1))
        keys[k.lower()] = v
    return curve_from_mapping(keys, rows)


def curve_from_mapping(keys: dict, rows=None) -> LoopCurve:
    """Build a curve from a mapping such as ``{"kind": "circle", "radius": 1}``."""
    kind = str(keys.get("kind", "")).lower()
    grid = int(keys.get("grid", 0)) or None
    center = keys.get("center", (0.0, 0.0))
    if isinstance(center, str):
        center = tuple(float(v) for v in center.replace(",", " ").split())
    if kind == "circle":
        return circle(float(keys.get("radius", 1.0)), grid or 512, center)
    if kind == "ellipse":
        return ellipse(float(keys["a"]), float(keys["b"]), grid or 1024, center)
    if kind == "table":
        data = np.asarray(rows if rows is not None else keys.get("data"), dtype=float)
        if data.ndim != 2 or data.shape[1] != 3:
            raise CurveError("tabulated curve needs rows of (t, x, y)")
        period = keys.get("period")
        return tabulated(data[:, 0], data[:, 1], data[:, 2], grid or 512,
                         None if period is None else float(period))
    raise CurveError(f"unknown curve kind {kind!r} (expected circle, ellipse or table)")
