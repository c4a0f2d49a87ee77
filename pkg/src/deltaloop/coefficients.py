"""Curvilinear coefficient fields of the magnetic delta-loop form on a strip.

All fields are evaluated on a tensor grid ``s_i x u_j`` with ``s`` uniform and
periodic on ``[0, L)`` and ``u`` uniform on ``[-a, a]`` (``u = 0`` is a node when
the number of ``u`` nodes is odd). The flux line sits at the coordinate origin,
which must lie strictly inside the loop at distance greater than ``a``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ._fourier import TrigInterpolant, spectral_derivative
from .errors import DomainError
from .geometry import LoopCurve

MIN_GRID = (64, 33)
SUP_GRID = (256, 65)
GAUSS_NODES = 32

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GAUSS_NODES)


@dataclass(frozen=True)
class ModelParams:
    """Flux ``c0``, field strength ``B`` and coupling ``beta``.

    ``test_only=True`` admits the degenerate limits (``c0`` or ``B`` zero,
    negative ``B`` for symmetry checks) that lie outside the physical set.
    """

    c0: float
    B: float
    beta: float | None = None
    test_only: bool = False

    def __post_init__(self):
        vals = [self.c0, self.B] + ([] if self.beta is None else [self.beta])
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("parameters must be finite")
        if self.test_only:
            return
        if not 0.0 < self.c0 < 1.0:
            raise DomainError(f"c0 must lie in (0, 1), got {self.c0}")
        if not self.B > 0.0:
            raise DomainError(f"B must be positive, got {self.B}")
        if self.beta is not None and not self.beta > 0.0:
            raise DomainError(f"beta must be positive, got {self.beta}")

    def with_beta(self, beta: float) -> "ModelParams":
        return ModelParams(self.c0, self.B, beta, self.test_only)

    def as_dict(self) -> dict:
        return {"c0": self.c0, "B": self.B, "beta": self.beta}


@dataclass(frozen=True, eq=False)
class StripField:
    """Samples of one scalar field on the strip grid, ``values[i, j] = f(s_i, u_j)``."""

    name: str
    s: np.ndarray
    u: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (self.s.size, self.u.size):
            raise ValueError("values must have shape (len(s), len(u))")

    @property
    def a(self) -> float:
        return float(self.u[-1])

    def column(self, u: float) -> np.ndarray:
        j = int(np.argmin(np.abs(self.u - u)))
        if not math.isclose(self.u[j], u, abs_tol=1e-14):
            raise ValueError(f"u = {u} is not a grid node")
        return self.values[:, j]

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def s_variation(self) -> float:
        """Largest spread along ``s`` over all ``u`` columns."""
        return float(np.max(np.ptp(self.values, axis=0)))

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        ss, uu = np.meshgrid(self.s, self.u, indexing="ij")
        table = np.column_stack([ss.ravel(), uu.ravel(), self.values.ravel()])
        np.savetxt(path, table, delimiter=",", header=f"s,u,{self.name}", comments="",
                   fmt="%.17g")
        return path

    def to_npz(self, path: str | Path) -> Path:
        path = Path(path)
        np.savez(path, name=np.array(self.name), s=self.s, u=self.u, values=self.values,
                 meta=np.array(json.dumps(self.meta, sort_keys=True)))
        return path

    @classmethod
    def from_npz(cls, path: str | Path) -> "StripField":
        with np.load(path) as data:
            return cls(str(data["name"]), data["s"], data["u"], data["values"],
                       json.loads(str(data["meta"])))


@dataclass(frozen=True)
class SupNorms:
    """Sup-norms of the tangential residual (``N``) and the potential residual (``M``)."""

    a: float
    N: float
    M: float
    T_fit: float | None = None
    argmax_N: tuple[float, float] | None = None
    argmax_M: tuple[float, float] | None = None

    def __post_init__(self):
        if self.N < 0 or self.M < 0:
            raise ValueError("sup-norms are non-negative")

    def to_record(self) -> dict:
        return {"a": self.a, "N": self.N, "M": self.M, "T_fit": self.T_fit}


def _check_origin(curve: LoopCurve, a: float) -> None:
    clearance = curve.origin_clearance()
    if clearance <= 0:
        raise DomainError("the flux origin must lie strictly inside the loop")
    if clearance <= a:
        raise DomainError(
            f"origin clearance {clearance:.6g} does not exceed the strip half-width {a:.6g}")


class _CurveSamples:
    """Curve data needed by the fields, sampled at the points ``s``."""

    def __init__(self, curve: LoopCurve, s: np.ndarray):
        s = np.asarray(s, dtype=float)
        pos = curve.position(s)
        tan = curve.tangent(s)
        self.g1, self.g2 = pos[..., 0], pos[..., 1]
        self.d1, self.d2 = tan[..., 0], tan[..., 1]
        self.gamma = curve.curvature(s)
        self.dgamma = curve.curvature(s, 1)
        self.d2gamma = curve.curvature(s, 2)
        angle = curve.angle(s)
        self.cos_h, self.sin_h = np.cos(angle), np.sin(angle)

    def column(self) -> "_CurveSamples":
        """View with a trailing axis so that fields broadcast against ``u``."""
        out = _CurveSamples.__new__(_CurveSamples)
        for k, v in vars(self).items():
            setattr(out, k, v[:, None])
        return out


def _theta(cs, u):
    return 1.0 / (cs.g1 ** 2 + cs.g2 ** 2 + u ** 2 - 2.0 * u * (cs.g1 * cs.d2 - cs.g2 * cs.d1))


def _alphas(cs, u, params: ModelParams):
    th = _theta(cs, u)
    c = params.c0 * th + 0.5 * params.B
    a1 = c * c / th
    a2 = 2.0 * c * (cs.g2 + u * cs.d1)
    a3 = 2.0 * c * (cs.g1 - u * cs.d2)
    return a1, a2, a3


def _omegas(cs, u, params: ModelParams):
    _, a2, a3 = _alphas(cs, u, params)
    jac = 1.0 + u * cs.gamma
    o1 = (a2 * cs.cos_h - a3 * cs.sin_h) / jac
    o2 = (a3 * cs.cos_h - a2 * cs.sin_h) / jac
    return o1, o2


def _potential(cs, u):
    jac = 1.0 + u * cs.gamma
    return (0.5 * u * cs.d2gamma / jac ** 3
            - 1.25 * u ** 2 * cs.dgamma ** 2 / jac ** 4
            - 0.25 * cs.gamma ** 2 / jac ** 2)


def _gauge(cs, u, params: ModelParams):
    """``K(s, u) = 1/2 int_0^u Omega_2(s, v) dv`` by Gauss-Legendre on ``[0, u]``."""
    u = np.broadcast_to(np.asarray(u, dtype=float), np.broadcast(cs.g1, u).shape)
    total = np.zeros(u.shape)
    half = 0.5 * u
    for x, w in zip(_GL_X, _GL_W):
        _, o2 = _omegas(cs, half * (x + 1.0), params)
        total += w * o2
    return 0.5 * half * total


class CurvilinearFields:
    """All strip fields for one ``(curve, params, a)`` on an ``n_s x n_u`` grid."""

    def __init__(self, curve: LoopCurve, params: ModelParams, a: float,
                 n_s: int = MIN_GRID[0], n_u: int = MIN_GRID[1], check: bool = True):
        if n_s < MIN_GRID[0] or n_u < MIN_GRID[1]:
            raise ValueError(f"strip grid must be at least {MIN_GRID[0]}x{MIN_GRID[1]}")
        if not a > 0:
            raise DomainError("strip half-width must be positive")
        if check:
            if a >= curve.halfwidth:
                raise DomainError(
                    f"a = {a:.6g} exceeds the injectivity half-width {curve.halfwidth:.6g}")
            _check_origin(curve, a)
        self.curve, self.params, self.a = curve, params, float(a)
        self.s = np.arange(n_s) * (curve.length / n_s)
        self.u = np.linspace(-a, a, n_u)
        self._cs = _CurveSamples(curve, self.s)
        self._col = self._cs.column()

    @property
    def meta(self) -> dict:
        return {"curve": self.curve.name, "a": self.a, **self.params.as_dict()}

    def _wrap(self, name: str, values: np.ndarray) -> StripField:
        values = np.broadcast_to(values, (self.s.size, self.u.size)).copy()
        if not np.all(np.isfinite(values)):
            raise DomainError(f"field {name} is not finite on the strip")
        return StripField(name, self.s, self.u, values, self.meta)

    @cached_property
    def theta(self) -> StripField:
        return self._wrap("theta", _theta(self._col, self.u))

    @cached_property
    def alphas(self) -> tuple[StripField, StripField, StripField]:
        a1, a2, a3 = _alphas(self._col, self.u, self.params)
        return self._wrap("alpha1", a1), self._wrap("alpha2", a2), self._wrap("alpha3", a3)

    @cached_property
    def omegas(self) -> tuple[StripField, StripField]:
        o1, o2 = _omegas(self._col, self.u, self.params)
        return self._wrap("omega1", o1), self._wrap("omega2", o2)

    @cached_property
    def potential(self) -> StripField:
        return self._wrap("V", _potential(self._col, self.u))

    @cached_property
    def gauge(self) -> tuple[StripField, StripField, StripField]:
        k = _gauge(self._col, self.u, self.params)
        k_s = spectral_derivative(k, self.curve.length, axis=0)
        k_u = 0.5 * self.omegas[1].values
        return self._wrap("K", k), self._wrap("K_s", k_s), self._wrap("K_u", k_u)

    @cached_property
    def W(self) -> StripField:
        jac = 1.0 + self.u * self._col.gamma
        _, k_s, k_u = (f.values for f in self.gauge)
        o1, o2 = (f.values for f in self.omegas)
        w = (self.potential.values + self.alphas[0].values + k_s ** 2 / jac ** 2
             + k_u ** 2 + k_s * o1 - k_u * o2)
        return self._wrap("W", w)

    @cached_property
    def tangential_residual(self) -> StripField:
        jac = 1.0 + self.u * self._col.gamma
        return self._wrap("N_integrand", self.omegas[0].values + 2.0 * self.gauge[1].values / jac ** 2)

    @cached_property
    def potential_residual(self) -> StripField:
        return self._wrap("M_integrand", self.W.values + 0.25 * self._col.gamma ** 2)

    def residual_column(self, u: float) -> tuple[np.ndarray, np.ndarray]:
        """Both residual integrands at one offset ``u`` over the full ``s`` grid."""
        cs, p = self._cs, self.params
        jac = 1.0 + u * cs.gamma
        k = _gauge(cs, np.full(self.s.shape, u), p)
        k_s = spectral_derivative(k, self.curve.length)
        o1, o2 = _omegas(cs, u, p)
        a1, _, _ = _alphas(cs, u, p)
        k_u = 0.5 * o2
        w = _potential(cs, u) + a1 + k_s ** 2 / jac ** 2 + k_u ** 2 + k_s * o1 - k_u * o2
        return o1 + 2.0 * k_s / jac ** 2, w + 0.25 * cs.gamma ** 2


def theta(curve: LoopCurve, s, u) -> np.ndarray:
    """Reciprocal squared distance from the flux origin to ``Psi(s, u)``."""
    s, u = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(u, dtype=float))
    _check_origin(curve, float(np.max(np.abs(u))) if u.size else 0.0)
    return _theta(_CurveSamples(curve, s), u)


def alpha_fields(curve, params, a, n_s=MIN_GRID[0], n_u=MIN_GRID[1]):
    return CurvilinearFields(curve, params, a, n_s, n_u).alphas


def omega_fields(curve, params, a, n_s=MIN_GRID[0], n_u=MIN_GRID[1]):
    return CurvilinearFields(curve, params, a, n_s, n_u).omegas


def gauge_phase(curve, params, a, n_s=MIN_GRID[0], n_u=MIN_GRID[1]):
    """``(K, K_s, K_u)`` with ``K(s, 0) = 0`` and ``K_u = Omega_2 / 2``."""
    return CurvilinearFields(curve, params, a, n_s, n_u).gauge


def effective_potential_V(curve, a, n_s=MIN_GRID[0], n_u=MIN_GRID[1]) -> StripField:
    # V does not involve the magnetic parameters
    params = ModelParams(0.0, 0.0, test_only=True)
    return CurvilinearFields(curve, params, a, n_s, n_u, check=False).potential


def W_field(curve, params, a, n_s=MIN_GRID[0], n_u=MIN_GRID[1]) -> StripField:
    return CurvilinearFields(curve, params, a, n_s, n_u).W


def _refine_max(fields: CurvilinearFields, which: int, i: int, j: int) -> tuple[float, float, float]:
    """One coordinate pass (``s`` then ``u``) of bounded search around grid node ``(i, j)``."""
    length = fields.curve.length
    h_s = length / fields.s.size
    h_u = fields.u[1] - fields.u[0]
    u_star = float(fields.u[j])
    signed = fields.residual_column(u_star)[which]
    col = np.abs(signed)
    interp = TrigInterpolant(signed, length)
    s0 = float(fields.s[i])
    res = minimize_scalar(lambda x: -abs(float(interp(np.array([x]))[0])),
                          bounds=(s0 - h_s, s0 + h_s), method="bounded",
                          options={"xatol": 1e-10 * length})
    s_star, best = (float(res.x), -float(res.fun)) if -res.fun > col[i] else (s0, float(col[i]))

    def at(u):
        values = fields.residual_column(u)[which]
        return abs(float(TrigInterpolant(values, length)(np.array([s_star]))[0]))

    lo, hi = max(-fields.a, u_star - h_u), min(fields.a, u_star + h_u)
    res = minimize_scalar(lambda x: -at(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10 * max(fields.a, 1e-300), "maxiter": 40})
    for cand in (lo, hi):
        val = at(cand)
        if val > -res.fun:
            res.fun, res.x = -val, cand
    if -res.fun > best:
        u_star, best = float(res.x), -float(res.fun)
    return best, s_star, u_star


def sup_norms(curve: LoopCurve, params: ModelParams, a: float,
              n_s: int = SUP_GRID[0], n_u: int = SUP_GRID[1], refine: bool = True) -> SupNorms:
    """Grid maxima of the two residuals plus one local refinement pass."""
    n_s, n_u = max(n_s, SUP_GRID[0]), max(n_u, SUP_GRID[1])
    fields = CurvilinearFields(curve, params, a, n_s, n_u)
    out = []
    for which, f in enumerate((fields.tangential_residual, fields.potential_residual)):
        vals = np.abs(f.values)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        best, s_star, u_star = float(vals[i, j]), float(fields.s[i]), float(fields.u[j])
        if refine:
            best, s_star, u_star = _refine_max(fields, which, int(i), int(j))
            best = max(best, float(vals[i, j]))
        out.append((best, (s_star, u_star)))
    (n_val, arg_n), (m_val, arg_m) = out
    return SupNorms(a=float(a), N=n_val, M=m_val, argmax_N=arg_n, argmax_M=arg_m)


@dataclass(frozen=True)
class ScalingProbe:
    """Small-``a`` behaviour of ``N(a) + M(a)``."""

    a: np.ndarray
    N: np.ndarray
    M: np.ndarray
    slope_through_origin: float
    slope: float
    intercept: float
    residuals: np.ndarray
    intercept_flag: bool

    @property
    def total(self) -> np.ndarray:
        return self.N + self.M

    @property
    def halving_ratios(self) -> np.ndarray:
        """Successive ``total[k+1] / total[k]``; 0.5 per halving for a linear law."""
        return self.total[1:] / self.total[:-1]

    def records(self) -> list[dict]:
        return [SupNorms(float(a), float(n), float(m), self.slope_through_origin).to_record()
                for a, n, m in zip(self.a, self.N, self.M)]


def scaling_probe(curve: LoopCurve | None, params: ModelParams | None,
                  a_sequence: Sequence[float],
                  evaluator: Callable[[float], tuple[float, float]] | None = None) -> ScalingProbe:
    """Fit ``N + M`` against ``a``, through the origin and with a free intercept.

    ``evaluator`` maps ``a`` to ``(N, M)``; by default ``sup_norms`` is used.
    The intercept is flagged when it exceeds 10% of the largest measured total.
    """
    a = np.asarray(list(a_sequence), dtype=float)
    if a.size < 2 or np.any(np.diff(a) >= 0) or np.any(a <= 0):
        raise ValueError("a_sequence must be positive and strictly decreasing")
    if evaluator is None:
        if curve is None or params is None:
            raise ValueError("curve and params are required without an evaluator")

        def evaluator(x):
            sn = sup_norms(curve, params, x)
            return sn.N, sn.M

    nm = np.array([evaluator(float(x)) for x in a], dtype=float)
    total = nm.sum(axis=1)
    slope0 = float(a @ total / (a @ a))
    design = np.column_stack([a, np.ones_like(a)])
    (slope, intercept), *_ = np.linalg.lstsq(design, total, rcond=None)
    residuals = total - slope0 * a
    flag = bool(abs(intercept) > 0.1 * np.max(np.abs(total)))
    return ScalingProbe(a, nm[:, 0], nm[:, 1], slope0, float(slope), float(intercept),
                        residuals, flag)


def sup_norm_records(probe: ScalingProbe, path: str | Path | None = None) -> list[dict]:
    """JSON records ``{a, N, M, T_fit}`` for a probe, optionally written to ``path``."""
    records = probe.records()
    if path is not None:
        Path(path).write_text(json.dumps(records, indent=2, sort_keys=True) + "\n")
    return records


def iter_fields(fields: CurvilinearFields) -> Iterable[StripField]:
    """Every named field of a strip, in a fixed order (for export)."""
    yield fields.theta
    yield from fields.alphas
    yield from fields.omegas
    yield from fields.gauge
    yield fields.potential
    yield fields.W
