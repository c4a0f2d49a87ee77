"""Transverse delta-well on ``(-a, a)``: ``-f'' - beta delta_0 f``.

Side ``'+'`` uses Dirichlet ends. Side ``'-'`` uses the Robin ends
``f'(+-a) = +-gamma_plus f(+-a)`` coming from the boundary term of the form.

Eigenvalues come from transcendental matching conditions split by parity.
Deep ground states are returned together with the excess
``|zeta + beta^2/4|``, which is computed without cancellation (and also as a
logarithm) so that strict inequalities against ``-beta^2/4`` remain decidable
after the excess underflows.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

_SEED = 0.1
_SCAN_POINTS = 4000
_EST2_MINUS = 2205.0 / 16.0


def _tau(k: float, a: float) -> float:
    """``1 - tanh(k a)`` without cancellation."""
    e = math.exp(-2.0 * k * a)
    return 2.0 * e / (1.0 + e)


def _dtau(k: float, a: float) -> float:
    e = math.exp(-2.0 * k * a)
    return -4.0 * a * e / (1.0 + e) ** 2


def _log_tau(k: float, a: float) -> float:
    return math.log(2.0) - float(np.logaddexp(0.0, 2.0 * k * a))


def _brent(fun: Callable[[float], float], lo: float, hi: float) -> float:
    return brentq(fun, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def _seeded_root(fun: Callable[[float], float], center: float, floor: float = 0.0) -> float | None:
    """Root of ``fun`` near ``center``; the bracket grows geometrically from +-10%."""
    width = _SEED
    for _ in range(60):
        lo = max(center * (1.0 - width), floor)
        hi = center * (1.0 + width)
        if lo <= floor:
            lo = floor + (center - floor) * 1e-12 if center > floor else floor
        f_lo, f_hi = fun(lo), fun(hi)
        if f_lo == 0.0:
            return lo
        if f_hi == 0.0:
            return hi
        if f_lo * f_hi < 0:
            return _brent(fun, lo, hi)
        width *= 2.0
        if lo <= floor + (center - floor) * 1e-12 and width > 1e6:
            break
    return None


def _scan_roots(fun: Callable[[float], float], lo: float, hi: float, points: int) -> list[float]:
    grid = np.linspace(lo, hi, points + 1)
    vals = np.array([fun(x) for x in grid])
    roots = []
    for x0, x1, f0, f1 in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if f0 == 0.0:
            roots.append(float(x0))
        elif f0 * f1 < 0:
            roots.append(_brent(fun, float(x0), float(x1)))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


# matching functions; negative eigenvalues are -k^2, positive ones k^2

def _plus_even_neg(a, beta):
    return lambda k: 2.0 * k - beta * math.tanh(k * a)


def _minus_even_neg(a, beta, gp):
    # divided by k to remove the trivial root at k = 0
    def f(k):
        t = math.tanh(k * a)
        return 2.0 * (k * t - gp) - beta * (1.0 - gp * t / k)
    return f


def _minus_odd_neg(a, gp):
    return lambda k: gp * math.tanh(k * a) / k - 1.0


# the positive-branch conditions are divided by k to remove the trivial root at 0

def _plus_even_pos(a, beta):
    return lambda k: 2.0 * math.cos(k * a) - beta * math.sin(k * a) / k


def _plus_odd_pos(a):
    return lambda k: math.sin(k * a) / k


def _minus_even_pos(a, beta, gp):
    def f(k):
        c, s = math.cos(k * a), math.sin(k * a)
        return 2.0 * (k * s + gp * c) + beta * (c - gp * s / k)
    return f


def _minus_odd_pos(a, gp):
    return lambda k: math.cos(k * a) - gp * math.sin(k * a) / k


@dataclass(frozen=True)
class GroundState:
    """Lowest transverse eigenvalue ``zeta = -k^2`` and its distance to ``-beta^2/4``."""

    side: str
    a: float
    beta: float
    gamma_plus: float
    k: float
    excess: float
    log_excess: float
    residual: float
    negative_count: int = 1
    sign: int = 1

    @property
    def zeta(self) -> float:
        return -0.25 * self.beta ** 2 + self.sign * self.excess

    @property
    def shifted(self) -> float:
        """``zeta + beta^2/4`` computed without cancellation."""
        return self.sign * self.excess


def zeta_plus(a: float, beta: float) -> GroundState | None:
    """Negative eigenvalue of the Dirichlet delta-well, or ``None`` when ``beta a <= 2``."""
    if a <= 0 or beta <= 0:
        raise ValueError("a and beta must be positive")
    if beta * a <= 2.0:
        return None
    fun = _plus_even_neg(a, beta)
    k = _seeded_root(fun, 0.5 * beta)
    if k is None:
        raise ArithmeticError("no root bracketed for the Dirichlet delta-well")
    # excess d = beta/2 - k solves d = (beta/2) tau(beta/2 - d)
    half = 0.5 * beta
    d = max(half - k, 0.0)
    for _ in range(60):
        kk = half - d
        g = d - half * _tau(kk, a)
        step = g / (1.0 + half * _dtau(kk, a))
        d_new = d - step
        if not 0.0 <= d_new < half:
            break
        converged = abs(step) <= 1e-15 * max(d, 1e-300)
        d = d_new
        if converged:
            break
    k = half - d
    log_d = math.log(d) if d > 0 else math.log(half) + _log_tau(k, a)
    excess = d * (beta - d)
    log_excess = log_d + math.log(beta - d)
    residual = abs(fun(k)) / beta
    return GroundState("+", a, beta, 0.0, k, excess, log_excess, residual)


def _minus_negative_roots(a: float, beta: float, gp: float) -> tuple[list[float], list[float]]:
    """All ``k`` of negative eigenvalues of the Robin-end well, even and odd."""
    top = 0.5 * beta + gp + 4.0 / a + 1.0
    tiny = top * 1e-9
    even = _scan_roots(_minus_even_neg(a, beta, gp), tiny, top, _SCAN_POINTS)
    odd = _scan_roots(_minus_odd_neg(a, gp), tiny, top, _SCAN_POINTS) if gp * a > 1.0 else []
    return even, odd


def zeta_minus(a: float, beta: float, gamma_plus: float) -> GroundState:
    """Lowest eigenvalue of the Robin-end delta-well.

    Outside the regime ``beta > 8`` and ``beta > (8/3) gamma_plus`` the negative
    spectrum is enumerated and a warning is issued when it is not simple.
    """
    if a <= 0 or beta <= 0 or gamma_plus < 0:
        raise ValueError("a, beta must be positive and gamma_plus non-negative")
    gp = float(gamma_plus)
    even, odd = _minus_negative_roots(a, beta, gp)
    fun = _minus_even_neg(a, beta, gp)
    seeded = _seeded_root(fun, 0.5 * beta, floor=0.0)
    candidates = even + odd + ([seeded] if seeded is not None else [])
    if not candidates:
        raise ArithmeticError("no negative eigenvalue found for the Robin-end delta-well")
    k = max(candidates)
    count = len(even) + len(odd)
    regime = beta > 8.0 and beta > 8.0 * gp / 3.0
    if count > 1 and not regime:
        warnings.warn(f"{count} negative transverse eigenvalues (a={a}, beta={beta}, gamma_plus={gp})",
                      RuntimeWarning, stacklevel=2)
    half = 0.5 * beta
    if k in odd or k <= gp:
        shifted = (half - k) * (half + k)
        log_excess = math.log(abs(shifted)) if shifted else -math.inf
        residual = abs(_minus_odd_neg(a, gp)(k)) if k in odd else abs(fun(k)) / beta
        return GroundState("-", a, beta, gp, k, abs(shifted), log_excess, residual, count,
                           1 if shifted > 0 else -1)
    # excess d = k - beta/2 solves 2 d (k - gp) = tau (2 k^2 + beta gp)
    d = max(k - half, 0.0)
    for _ in range(60):
        kk = half + d
        d_new = _tau(kk, a) * (2.0 * kk * kk + beta * gp) / (2.0 * (kk - gp))
        converged = abs(d_new - d) <= 1e-15 * max(d_new, 1e-300)
        d = d_new
        if converged:
            break
    kk = half + d
    log_d = math.log(d) if d > 0 else (
        _log_tau(kk, a) + math.log(2.0 * kk * kk + beta * gp) - math.log(2.0 * (kk - gp)))
    excess = d * (beta + d)
    log_excess = log_d + math.log(beta + d)
    return GroundState("-", a, beta, gp, kk, excess, log_excess, abs(fun(kk)) / beta, count, -1)


@dataclass(frozen=True)
class TransverseSpectrum:
    """Lowest transverse eigenvalues with parity tags."""

    side: str
    a: float
    beta: float
    gamma_plus: float
    eigenvalues: np.ndarray
    parities: tuple[str, ...]
    ground: GroundState | None = None

    @property
    def negative(self) -> np.ndarray:
        return self.eigenvalues[self.eigenvalues < 0]

    @property
    def negative_count(self) -> int:
        return int(np.sum(self.eigenvalues < 0))

    @property
    def decay_rates(self) -> np.ndarray:
        return np.sqrt(-self.negative)

    @property
    def xi2(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def xi2_nonnegative(self) -> bool:
        return self.xi2 >= 0.0


def _positive_roots(side: str, parity: str, a: float, beta: float, gp: float,
                    count: int) -> list[float]:
    if side == "+":
        fun = _plus_even_pos(a, beta) if parity == "even" else _plus_odd_pos(a)
    else:
        fun = _minus_even_pos(a, beta, gp) if parity == "even" else _minus_odd_pos(a, gp)
    step = math.pi / a
    top = step * (count + 1)
    while True:
        roots = _scan_roots(fun, step * 1e-9, top, 32 * int(top / step + 1))
        if len(roots) >= count:
            return roots[:count]
        top *= 2.0


def transverse_low_spectrum(a: float, beta: float, gamma_plus: float, side: str,
                            count: int) -> TransverseSpectrum:
    """First ``count`` eigenvalues, parity-split; ``beta = 0`` is allowed."""
    if count < 2:
        raise ValueError("count must be at least 2")
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    if a <= 0 or beta < 0 or gamma_plus < 0:
        raise ValueError("a > 0, beta >= 0 and gamma_plus >= 0 are required")
    values: list[tuple[float, str]] = []
    ground = None
    if side == "+":
        ground = zeta_plus(a, beta) if beta > 0 else None
        if ground is not None:
            values.append((ground.zeta, "even"))
    else:
        if beta > 0 or gamma_plus > 0:
            even, odd = _minus_negative_roots(a, beta, gamma_plus)
            if even or odd:
                ground = zeta_minus(a, beta, gamma_plus) if beta > 0 else None
            for k in even:
                values.append((-k * k, "even"))
            for k in odd:
                values.append((-k * k, "odd"))
            if ground is not None:
                # replace the deepest even root by the cancellation-free value
                deepest = min(range(len(values)), key=lambda i: values[i][0])
                values[deepest] = (ground.zeta, values[deepest][1])
    for parity in ("even", "odd"):
        values += [(k * k, parity) for k in _positive_roots(side, parity, a, beta, gamma_plus, count)]
    values.sort(key=lambda p: p[0])
    values = values[:count]
    return TransverseSpectrum(side, a, beta, gamma_plus, np.array([v for v, _ in values]),
                              tuple(p for _, p in values), ground)


@dataclass(frozen=True)
class Est2Report:
    """Two-sided ground-state bounds, literal (``exp(-beta/2)``) and scaled (``exp(-beta a/2)``)."""

    a: float
    beta: float
    gamma_plus: float
    plus: GroundState | None
    minus: GroundState
    plus_lower: bool
    plus_upper_literal: bool
    plus_upper_scaled: bool
    minus_upper: bool
    minus_lower_literal: bool
    minus_lower_scaled: bool
    regime_plus: bool
    regime_minus: bool
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def lower_bounds_hold(self) -> bool:
        """``-beta^2/4 < zeta_plus`` and ``zeta_minus < -beta^2/4``."""
        return self.plus_lower and self.minus_upper

    def records(self) -> list[dict]:
        out = []
        if self.plus is not None:
            out.append({"a": self.a, "beta": self.beta, "gamma_plus": self.gamma_plus, "side": "+",
                        "zeta": self.plus.zeta, "excess": self.plus.excess,
                        "log_excess": self.plus.log_excess, "strict_bound_pass": self.plus_lower,
                        "bound_literal_pass": self.plus_upper_literal,
                        "bound_scaled_pass": self.plus_upper_scaled, "regime": self.regime_plus})
        out.append({"a": self.a, "beta": self.beta, "gamma_plus": self.gamma_plus, "side": "-",
                    "zeta": self.minus.zeta, "excess": self.minus.excess,
                    "log_excess": self.minus.log_excess, "strict_bound_pass": self.minus_upper,
                    "bound_literal_pass": self.minus_lower_literal,
                    "bound_scaled_pass": self.minus_lower_scaled, "regime": self.regime_minus,
                    "negative_count": self.minus.negative_count})
        return out

    def to_json(self) -> str:
        return json.dumps(self.records(), indent=2, sort_keys=True)


def est2_check(a: float, beta: float, gamma_plus: float) -> Est2Report:
    """Evaluate both ground-state envelopes for both exponent readings.

    Bounds on the excess are compared through logarithms:
    ``zeta_plus + beta^2/4 < 2 beta^2 e^{-x}`` and
    ``-(zeta_minus + beta^2/4) < (2205/16) beta^2 e^{-x}`` with ``x = beta/2``
    (literal) or ``x = beta a / 2`` (scaled).
    """
    plus = zeta_plus(a, beta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        minus = zeta_minus(a, beta, gamma_plus)
    log_b2 = 2.0 * math.log(beta)
    notes = []
    if plus is None:
        notes.append("no negative Dirichlet eigenvalue (beta a <= 2)")
        p_low = p_lit = p_sc = False
    else:
        p_low = plus.sign > 0 and plus.log_excess > -math.inf
        p_lit = plus.log_excess < math.log(2.0) + log_b2 - 0.5 * beta
        p_sc = plus.log_excess < math.log(2.0) + log_b2 - 0.5 * beta * a
    m_up = minus.sign < 0 and minus.log_excess > -math.inf
    m_lit = minus.log_excess < math.log(_EST2_MINUS) + log_b2 - 0.5 * beta
    m_sc = minus.log_excess < math.log(_EST2_MINUS) + log_b2 - 0.5 * beta * a
    regime_minus = beta > 8.0 and beta > 8.0 * gamma_plus / 3.0
    if minus.negative_count > 1:
        notes.append(f"{minus.negative_count} negative Robin-end eigenvalues")
    return Est2Report(a, beta, gamma_plus, plus, minus, p_low, p_lit, p_sc, m_up, m_lit, m_sc,
                      beta * a > 8.0 / 3.0, regime_minus, tuple(notes))
