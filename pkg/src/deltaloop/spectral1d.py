"""Periodic one-dimensional Schrödinger operators on the loop.

Operators have the form ``-p d^2/ds^2 + q(s) + shift`` with a constant kinetic
coefficient ``p`` and fully periodic conditions (values and first derivatives
match at the seam). They are discretized by Fourier collocation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh

from ._fourier import second_derivative_matrix
from .coefficients import ModelParams, SupNorms, sup_norms
from .errors import DomainError
from .geometry import LoopCurve

CLUSTER_RTOL = 1e-8
ERROR_FLOOR = 1e-13
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalues with per-eigenvalue error estimates and provenance."""

    eigenvalues: np.ndarray
    error_estimates: np.ndarray
    grid: int
    operator: str
    params: dict = field(default_factory=dict)
    labels: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        err = np.asarray(self.error_estimates, dtype=float)
        if ev.shape != err.shape:
            raise ValueError("eigenvalues and error estimates differ in length")
        finite = ev[np.isfinite(ev)]
        if np.any(np.diff(finite) < 0):
            raise ValueError("eigenvalues must be ascending")
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "error_estimates", err)

    def __len__(self) -> int:
        return self.eigenvalues.size

    def __getitem__(self, j):
        return self.eigenvalues[j]

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def clusters(self, rtol: float = CLUSTER_RTOL) -> list[tuple[float, int]]:
        """``(value, multiplicity)`` pairs, merging entries closer than ``rtol``."""
        out: list[list] = []
        for lam in self.eigenvalues:
            if out and abs(lam - out[-1][0]) <= rtol * max(1.0, abs(lam)):
                out[-1][1] += 1
            else:
                out.append([float(lam), 1])
        return [(v, m) for v, m in out]

    def to_dict(self) -> dict:
        def num(x):
            return float(x) if math.isfinite(x) else str(x)

        out = {
            "operator": self.operator,
            "params": self.params,
            "grid": self.grid,
            "eigenvalues": [num(x) for x in self.eigenvalues],
            "error_estimates": [num(x) for x in self.error_estimates],
        }
        if self.labels:
            out["labels"] = [list(lab) if isinstance(lab, tuple) else lab for lab in self.labels]
        if self.meta:
            out["meta"] = self.meta
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class Periodic1DOperator:
    """``-kinetic * d^2/ds^2 + potential(s) + shift`` on ``[0, length)``, periodic."""

    length: float
    kinetic: float
    potential: Callable[[np.ndarray], np.ndarray]
    shift: float = 0.0
    name: str = "periodic"

    def __post_init__(self):
        if not self.kinetic > 0:
            raise DomainError("kinetic coefficient must be positive")

    def grid(self, n: int) -> np.ndarray:
        return np.arange(n) * (self.length / n)

    def matrix(self, n: int) -> np.ndarray:
        q = np.asarray(self.potential(self.grid(n)), dtype=float)
        mat = -self.kinetic * second_derivative_matrix(n, self.length)
        mat[np.diag_indices(n)] += q + self.shift
        return mat

    def eigenpairs(self, n: int, count: int) -> tuple[np.ndarray, np.ndarray]:
        mat = self.matrix(n)
        vals, vecs = eigh(mat, subset_by_index=[0, count - 1])
        res = np.linalg.norm(mat @ vecs - vecs * vals, axis=0)
        scale = np.maximum(1.0, np.abs(vals)) * max(1.0, np.abs(mat).max())
        if np.any(res > RESIDUAL_TOL * scale):
            raise ArithmeticError("eigenvector residual exceeds tolerance")
        return vals, vecs

    def spectrum(self, count: int, grid: int, params: dict | None = None) -> Spectrum:
        """Lowest ``count`` eigenvalues with a grid-doubling error estimate."""
        if count < 1:
            raise ValueError("count must be at least 1")
        if grid < max(64, 8 * count):
            raise ValueError(f"grid {grid} too small for {count} eigenvalues (need >= {max(64, 8 * count)})")
        coarse, _ = self.eigenpairs(grid, count)
        fine, _ = self.eigenpairs(2 * grid, count)
        err = 2.0 * np.abs(fine - coarse) + ERROR_FLOOR * np.maximum(1.0, np.abs(coarse))
        return Spectrum(coarse, err, grid, self.name, params or {},
                        meta={"kinetic": self.kinetic, "shift": self.shift})


def curvature_potential(curve: LoopCurve) -> Callable[[np.ndarray], np.ndarray]:
    """``s -> -gamma(s)^2 / 4``."""
    return lambda s: -0.25 * curve.curvature(s) ** 2


def effective_operator(curve: LoopCurve) -> Periodic1DOperator:
    return Periodic1DOperator(curve.length, 1.0, curvature_potential(curve), name="effective")


def effective_spectrum(curve: LoopCurve, n: int, grid: int = 128) -> Spectrum:
    """Lowest ``n`` eigenvalues of ``-d^2/ds^2 - gamma^2/4`` on the loop."""
    return effective_operator(curve).spectrum(n, grid, {"curve": curve.name})


def bracket_coefficients(curve: LoopCurve, a: float, side: str, norms: SupNorms) -> tuple[float, float]:
    """``(kinetic, shift)`` of the bracketing operator on side ``'+'`` or ``'-'``."""
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    gp = curve.gamma_plus
    if not 0 < a < 0.5 / gp:
        raise DomainError(f"a = {a} outside (0, 1/(2 gamma_+)) = (0, {0.5 / gp:.6g})")
    sign = 1.0 if side == "+" else -1.0
    kinetic = (1.0 - sign * a * gp) ** -2 + sign * 0.5 * norms.N
    shift = sign * (0.5 * norms.N + norms.M)
    return kinetic, shift


def bracket_operator_spectrum(curve: LoopCurve, a: float, side: str, norms: SupNorms,
                              n: int, grid: int = 128) -> Spectrum:
    """Lowest ``n`` eigenvalues of the upper (``'+'``) or lower (``'-'``) bracket operator.

    When the lower kinetic coefficient is not positive the operator is
    unbounded below; every eigenvalue is then ``-inf`` and
    ``meta["unbounded_below"]`` is set.
    """
    kinetic, shift = bracket_coefficients(curve, a, side, norms)
    params = {"curve": curve.name, "a": a, "side": side, "N": norms.N, "M": norms.M}
    if kinetic <= 0:
        return Spectrum(np.full(n, -np.inf), np.zeros(n), grid, f"bracket{side}", params,
                        meta={"kinetic": kinetic, "shift": shift, "unbounded_below": True})
    op = Periodic1DOperator(curve.length, kinetic, curvature_potential(curve), shift,
                            name=f"bracket{side}")
    spec = op.spectrum(n, grid, params)
    spec.meta["unbounded_below"] = False
    return spec


@dataclass(frozen=True)
class Est1Report:
    """Gap table ``|mu_j^pm(a) - mu_j|`` over a halving sequence of widths."""

    j: int
    a: np.ndarray
    mu: float
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    slope_plus: float
    slope_minus: float

    @property
    def gap_plus(self) -> np.ndarray:
        return np.abs(self.mu_plus - self.mu)

    @property
    def gap_minus(self) -> np.ndarray:
        return np.abs(self.mu_minus - self.mu)

    @staticmethod
    def _ratios(gap: np.ndarray) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return gap[1:] / gap[:-1]

    @property
    def ratios_plus(self) -> np.ndarray:
        return self._ratios(self.gap_plus)

    @property
    def ratios_minus(self) -> np.ndarray:
        return self._ratios(self.gap_minus)

    def passed(self, low: float = 0.4, high: float = 0.6) -> bool:
        r = np.concatenate([self.ratios_plus, self.ratios_minus])
        return bool(np.all(np.isfinite(r)) and np.all((r >= low) & (r <= high)))

    def rows(self) -> list[dict]:
        return [{"j": self.j, "a": float(a), "mu_j": self.mu, "mu_plus": float(p),
                 "mu_minus": float(m), "gap_plus": float(gp), "gap_minus": float(gm)}
                for a, p, m, gp, gm in zip(self.a, self.mu_plus, self.mu_minus,
                                           self.gap_plus, self.gap_minus)]


def est1_check(curve: LoopCurve, params: ModelParams, j: int, a_sequence: Sequence[float],
               grid: int = 128,
               norms_provider: Callable[[float], SupNorms] | None = None) -> Est1Report:
    """Measure how the bracket eigenvalues approach ``mu_j`` as the width shrinks.

    ``j`` is 1-based. ``norms_provider`` replaces ``sup_norms`` (for synthetic checks).
    """
    if j < 1:
        raise ValueError("j is 1-based")
    a = np.asarray(list(a_sequence), dtype=float)
    if norms_provider is None:
        def norms_provider(x):
            return sup_norms(curve, params, x)

    count = max(j, 1)
    grid = max(grid, 8 * count, 64)
    mu = float(effective_spectrum(curve, count, grid).eigenvalues[j - 1])
    plus, minus = [], []
    for x in a:
        norms = norms_provider(float(x))
        plus.append(bracket_operator_spectrum(curve, float(x), "+", norms, count, grid).eigenvalues[j - 1])
        minus.append(bracket_operator_spectrum(curve, float(x), "-", norms, count, grid).eigenvalues[j - 1])
    plus, minus = np.array(plus), np.array(minus)

    def slope(gap):
        ok = np.isfinite(gap)
        return float(a[ok] @ gap[ok] / (a[ok] @ a[ok])) if np.any(ok) else math.inf

    return Est1Report(j, a, mu, plus, minus, slope(np.abs(plus - mu)), slope(np.abs(minus - mu)))
