"""Two-sided eigenvalue enclosures from the bracketing operators.

For a coupling ``beta`` the strip half-width is ``a(beta) = 6 ln(beta) / beta``.
The upper and lower comparison operators split as a tangential periodic
operator plus a transverse delta-well; their spectra are tensor sums, and the
``j``-th enclosure is ``tau_j^pm = zeta^pm + mu_j^pm``.
"""
from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .coefficients import ModelParams, SupNorms, sup_norms
from .errors import DomainError, InsufficientFactorsError
from .geometry import LoopCurve
from .spectral1d import Spectrum, bracket_operator_spectrum, effective_spectrum
from .transverse import GroundState, TransverseSpectrum, transverse_low_spectrum, zeta_minus, zeta_plus

CLAMP_FACTOR = 0.99
CSV_COLUMNS = ("beta", "a", "j", "tau_minus", "tau_plus", "mu_j", "zeta_plus", "zeta_minus", "flags")


@dataclass(frozen=True)
class WidthChoice:
    beta: float
    a: float
    raw: float
    clamped: bool


def width_schedule(beta: float, curve: LoopCurve | None = None) -> WidthChoice:
    """``6 ln(beta) / beta``, clamped to 99% of the admissible half-width of ``curve``.

    The admissible half-width is the smaller of the injectivity half-width and
    the distance from the flux origin to the loop.
    """
    if not beta > 1.0:
        raise DomainError("the width schedule needs beta > 1")
    raw = 6.0 * math.log(beta) / beta
    if curve is None:
        return WidthChoice(beta, raw, raw, False)
    limit = CLAMP_FACTOR * min(curve.halfwidth, curve.origin_clearance())
    if limit <= 0:
        raise DomainError("the flux origin must lie strictly inside the loop")
    if raw >= limit:
        return WidthChoice(beta, limit, raw, True)
    return WidthChoice(beta, raw, raw, False)


def _values(factor) -> np.ndarray:
    if isinstance(factor, (Spectrum, TransverseSpectrum)):
        return np.asarray(factor.eigenvalues, dtype=float)
    return np.sort(np.asarray(list(factor), dtype=float))


def tensor_sum_spectrum(one_d, transverse, n: int) -> Spectrum:
    """Lowest ``n`` of ``{xi_i + mu_k}``, certified against the factor truncations.

    Sums missing from the truncated factors are bounded below by
    ``min(xi_last + mu_1, xi_1 + mu_last)``; the ``n``-th returned sum must not
    exceed that bound.
    """
    mu = _values(one_d)
    xi = _values(transverse)
    if n < 1 or mu.size == 0 or xi.size == 0:
        raise InsufficientFactorsError("both factors need at least one eigenvalue")
    if n > mu.size * xi.size:
        raise InsufficientFactorsError(f"only {mu.size * xi.size} sums available, {n} requested")
    heap = [(xi[0] + mu[0], 0, 0)]
    seen = {(0, 0)}
    out = []
    while len(out) < n:
        value, i, k = heapq.heappop(heap)
        out.append(value)
        for ii, kk in ((i + 1, k), (i, k + 1)):
            if ii < xi.size and kk < mu.size and (ii, kk) not in seen:
                seen.add((ii, kk))
                heapq.heappush(heap, (xi[ii] + mu[kk], ii, kk))
    bound = min(xi[-1] + mu[0], xi[0] + mu[-1])
    if out[-1] > bound:
        raise InsufficientFactorsError(
            f"sum #{n} = {out[-1]:.6g} exceeds the truncation bound {bound:.6g}")
    err = np.zeros(n)
    if isinstance(one_d, Spectrum):
        # each sum inherits the error of its tangential factor; transverse roots are exact to rounding
        err = np.full(n, float(np.max(one_d.error_estimates[:max(1, min(n, one_d.n))])))
    return Spectrum(np.array(out), err, getattr(one_d, "grid", 0), "tensor-sum")


def brute_force_sums(one_d, transverse, n: int) -> np.ndarray:
    """All pairwise sums of the truncated factors, sorted, first ``n``."""
    sums = np.add.outer(_values(transverse), _values(one_d)).ravel()
    return np.sort(sums)[:n]


@dataclass(frozen=True, eq=False)
class BracketEnclosure:
    """Per-index enclosures ``[tau_j^-, tau_j^+]`` at one coupling ``beta``."""

    beta: float
    width: WidthChoice
    params: ModelParams
    norms: SupNorms
    mu: Spectrum
    mu_plus: Spectrum
    mu_minus: Spectrum
    ground_plus: GroundState
    ground_minus: GroundState
    xi_plus: TransverseSpectrum
    xi_minus: TransverseSpectrum
    sums_plus: Spectrum
    sums_minus: Spectrum
    flags: dict = field(default_factory=dict)

    @property
    def a(self) -> float:
        return self.width.a

    @property
    def n(self) -> int:
        return self.mu_plus.n

    @property
    def tau_plus(self) -> np.ndarray:
        return self.ground_plus.zeta + self.mu_plus.eigenvalues

    @property
    def tau_minus(self) -> np.ndarray:
        return self.ground_minus.zeta + self.mu_minus.eigenvalues

    @property
    def tau_plus_shifted(self) -> np.ndarray:
        """``tau_j^+ + beta^2/4`` without the large cancellation."""
        return self.ground_plus.shifted + self.mu_plus.eigenvalues

    @property
    def tau_minus_shifted(self) -> np.ndarray:
        return self.ground_minus.shifted + self.mu_minus.eigenvalues

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.tau_minus + self.tau_plus)

    @property
    def verified(self) -> bool:
        return all(self.flags.values()) and not self.width.clamped

    @property
    def error_plus(self) -> np.ndarray:
        return self.mu_plus.error_estimates + abs(self.ground_plus.residual) * self.beta

    @property
    def error_minus(self) -> np.ndarray:
        return self.mu_minus.error_estimates + abs(self.ground_minus.residual) * self.beta

    def contains(self, value: float, j: int, eps: float = 0.0) -> bool:
        """Whether ``value`` lies in ``[tau_j^- - eps, tau_j^+ + eps]`` (``j`` 1-based)."""
        return bool(self.tau_minus[j - 1] - eps <= value <= self.tau_plus[j - 1] + eps)

    def flag_text(self) -> str:
        bad = [k for k, v in self.flags.items() if not v]
        if self.width.clamped:
            bad.insert(0, "a_clamped")
        return "ok" if not bad else ";".join(bad)

    def rows(self) -> list[dict]:
        flags = self.flag_text()
        return [{"beta": self.beta, "a": self.a, "j": j + 1,
                 "tau_minus": float(self.tau_minus[j]), "tau_plus": float(self.tau_plus[j]),
                 "mu_j": float(self.mu.eigenvalues[j]), "zeta_plus": self.ground_plus.zeta,
                 "zeta_minus": self.ground_minus.zeta, "flags": flags}
                for j in range(self.n)]


def enclosure_csv(enclosures: Iterable[BracketEnclosure]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for enc in enclosures:
        for row in enc.rows():
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def enclosure(curve: LoopCurve, params: ModelParams, beta: float, n: int, grid: int = 128,
              transverse_count: int | None = None, norms: SupNorms | None = None) -> BracketEnclosure:
    """Assemble ``[tau_j^-, tau_j^+]`` for ``j <= n`` and recheck every ordering condition."""
    if n < 1:
        raise ValueError("n must be at least 1")
    width = width_schedule(beta, curve)
    a = width.a
    gp = curve.gamma_plus
    if norms is None:
        norms = sup_norms(curve, params, a)
    grid = max(grid, 8 * n, 64)
    mu = effective_spectrum(curve, n, grid)
    mu_plus = bracket_operator_spectrum(curve, a, "+", norms, n, grid)
    mu_minus = bracket_operator_spectrum(curve, a, "-", norms, n, grid)
    gplus = zeta_plus(a, beta)
    if gplus is None:
        raise DomainError(f"no negative transverse eigenvalue at a={a:.6g}, beta={beta}")
    gminus = zeta_minus(a, beta, gp)
    count = transverse_count or max(2, n + 1)
    xi_plus = transverse_low_spectrum(a, beta, 0.0, "+", count)
    xi_minus = transverse_low_spectrum(a, beta, gp, "-", count)
    sums_plus = tensor_sum_spectrum(mu_plus, xi_plus, n)
    sums_minus = tensor_sum_spectrum(mu_minus, xi_minus, n)

    tau_p = gplus.zeta + mu_plus.eigenvalues
    tau_m = gminus.zeta + mu_minus.eigenvalues
    flags = {
        "minus_bounded": not mu_minus.meta.get("unbounded_below", False),
        "tau_plus_negative": bool(np.all(tau_p < 0)),
        "plus_separated": bool(tau_p[-1] < xi_plus.xi2 + mu_plus.eigenvalues[0]),
        "minus_separated": bool(tau_m[-1] < xi_minus.xi2 + mu_minus.eigenvalues[0]),
        "xi2_nonnegative": bool(xi_plus.xi2_nonnegative and xi_minus.xi2_nonnegative),
        "transverse_regime": bool(beta * a > 8.0 / 3.0 and beta > 8.0 and beta > 8.0 * gp / 3.0),
        "ordered": bool(np.all(tau_m <= tau_p)),
    }
    return BracketEnclosure(beta, width, params, norms, mu, mu_plus, mu_minus, gplus, gminus,
                            xi_plus, xi_minus, sums_plus, sums_minus, flags)


@dataclass(frozen=True)
class AsymptoticFit:
    """Fit of ``value + beta^2/4`` against ``L + C ln(beta)/beta``.

    ``C_fixed`` fixes ``L = mu`` (the flux-free effective eigenvalue);
    ``C``/``limit`` leave ``L`` free. Relative residuals are
    ``||e - C x|| / ||e||`` with ``e = value + beta^2/4 - L``.
    """

    betas: np.ndarray
    shifted: np.ndarray
    mu: float | None
    limit: float
    C: float
    residual: float
    C_fixed: float | None
    residual_fixed: float | None

    @property
    def x(self) -> np.ndarray:
        return np.log(self.betas) / self.betas

    @property
    def e(self) -> np.ndarray:
        return self.shifted - self.limit

    @property
    def decreasing(self) -> bool:
        return bool(np.all(np.diff(np.abs(self.e)) < 0))

    @property
    def limit_gap(self) -> float | None:
        return None if self.mu is None else self.limit - self.mu

    def to_dict(self) -> dict:
        return {"betas": self.betas.tolist(), "shifted": self.shifted.tolist(),
                "mu": self.mu, "limit": self.limit, "C": self.C, "relative_residual": self.residual,
                "C_fixed_limit": self.C_fixed, "relative_residual_fixed_limit": self.residual_fixed,
                "decreasing": self.decreasing, "limit_minus_mu": self.limit_gap}


def _geometric(betas: np.ndarray) -> bool:
    ratios = betas[1:] / betas[:-1]
    return bool(np.all(ratios > 1.0) and np.allclose(ratios, ratios[0], rtol=0.25))


def asymptotic_fit(betas: Sequence[float], values: Sequence[float], mu: float | None = None,
                   shifted: bool = False) -> AsymptoticFit:
    """Fit eigenvalue estimates over a geometric ``beta`` grid (at least 4 points).

    ``values`` are estimates of ``lambda_j(beta)``; pass ``shifted=True`` when
    they already include ``+ beta^2/4``.
    """
    b = np.asarray(list(betas), dtype=float)
    v = np.asarray(list(values), dtype=float)
    if b.size < 4 or b.size != v.size:
        raise ValueError("need at least 4 beta points with one value each")
    if not _geometric(b):
        raise ValueError("beta points must be increasing and geometrically spaced")
    y = v if shifted else v + 0.25 * b ** 2
    x = np.log(b) / b
    design = np.column_stack([np.ones_like(x), x])
    (limit, c), *_ = np.linalg.lstsq(design, y, rcond=None)
    e = y - limit
    res = float(np.linalg.norm(e - c * x) / np.linalg.norm(e)) if np.any(e) else 0.0
    c_fixed = res_fixed = None
    if mu is not None:
        e0 = y - mu
        c_fixed = float(x @ e0 / (x @ x))
        res_fixed = float(np.linalg.norm(e0 - c_fixed * x) / np.linalg.norm(e0)) if np.any(e0) else 0.0
    return AsymptoticFit(b, y, mu, float(limit), float(c), res, c_fixed, res_fixed)


def fit_enclosures(enclosures: Sequence[BracketEnclosure], j: int) -> AsymptoticFit:
    """Asymptotic fit of the enclosure midpoints for index ``j`` (1-based)."""
    encs = sorted(enclosures, key=lambda e: e.beta)
    betas = [e.beta for e in encs]
    mids = [0.5 * (e.tau_minus_shifted[j - 1] + e.tau_plus_shifted[j - 1]) for e in encs]
    return asymptotic_fit(betas, mids, float(encs[0].mu.eigenvalues[j - 1]), shifted=True)
