"""Angular-momentum separation for a circular loop centred on the flux line.

For angular momentum ``m`` and ``nu = m - c0`` the radial function is written
``f = r^|nu| h`` with

    -h'' - (2|nu| + 1)/r h' + (B^2 r^2/4 - nu B) h = lambda h,

regular at 0, Dirichlet at ``r_max`` and ``h'(R+) - h'(R-) = -beta h(R)``.
Eigenvalues come from a Prüfer-angle shooting: ``k h = rho sin(phi)``,
``h' = rho cos(phi)`` integrated from both ends to ``R``. The mismatch
``F(lambda) = phi_left(R+) - phi_right(R)`` increases with ``lambda`` and equals
``n pi`` at the ``n``-th eigenvalue (0-based) of the channel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from ..coefficients import ModelParams
from ..errors import DomainError, MRangeError
from ..spectral1d import Spectrum

RTOL = 1e-12
DECAY = 40.0
CONFINEMENT_MARGIN = 25.0
REFINE_FACTOR = 1.25
MAX_WINDOW_GROWTH = 4
# the decaying tail is mildly stiff; LSODA switches to BDF there
METHOD = "LSODA"


def _series_start(nu_abs: float, nu_b: float, b2: float, lam: float, r0: float) -> tuple[float, float]:
    """``(h, h')`` at ``r0`` from the even Frobenius series with ``h(0) = 1``."""
    coeffs = [1.0, -(lam + nu_b) / (4.0 * (1.0 + nu_abs))]
    h, dh = 1.0 + coeffs[1] * r0 ** 2, 2.0 * coeffs[1] * r0
    j = 1
    while True:
        j += 1
        cj = (-(lam + nu_b) * coeffs[-1] + 0.25 * b2 * coeffs[-2]) / (4.0 * j * (j + nu_abs))
        coeffs.append(cj)
        term = cj * r0 ** (2 * j)
        h += term
        dh += 2 * j * cj * r0 ** (2 * j - 1)
        if abs(term) <= 1e-17 * abs(h) and j > 3 or j > 400:
            return h, dh


@dataclass(frozen=True)
class RadialProblem:
    """One angular-momentum channel of the circular loop problem."""

    R: float
    params: ModelParams
    m: int
    r_max: float | None = None
    rtol: float = RTOL

    def __post_init__(self):
        if not self.R > 0:
            raise DomainError("loop radius must be positive")

    @property
    def nu(self) -> float:
        return self.m - self.params.c0

    @property
    def beta(self) -> float:
        return float(self.params.beta or 0.0)

    def default_r_max(self, lam: float) -> float:
        """Truncation radius for a target eigenvalue ``lam``.

        Beyond ``r_max`` the confining term exceeds ``max(lam, 0) + 25`` and a
        bound state below zero has decayed by ``exp(-40)`` past the loop.
        """
        b = abs(self.params.B)
        lam_pos = max(lam, 0.0)
        r_conf = 2.0 * math.sqrt(lam_pos + CONFINEMENT_MARGIN + abs(self.nu * self.params.B)) / b
        r_out = r_conf + 2.0
        if lam < 0:
            r_out = max(r_out, self.R + DECAY / math.sqrt(-lam))
        return max(r_out, 1.5 * self.R)

    def _rhs(self, lam: float, k: float):
        p = 2.0 * abs(self.nu) + 1.0
        b2 = self.params.B ** 2
        nu_b = self.nu * self.params.B

        def rhs(r, y):
            s, c = math.sin(y[0]), math.cos(y[0])
            q = 0.25 * b2 * r * r - nu_b
            return [k * c * c + p / r * s * c - (q - lam) / k * s * s]
        return rhs

    def _start(self, lam: float) -> float:
        scale = 1.0 + abs(lam) + abs(self.nu * self.params.B) + self.params.B ** 2
        return min(0.5 * self.R, 1.0 / math.sqrt(scale))

    def left_angle(self, lam: float, rtol: float | None = None) -> float:
        """Prüfer angle of the regular solution at ``R-``."""
        k = math.sqrt(max(abs(lam), 1.0))
        r0 = self._start(lam)
        h, dh = _series_start(abs(self.nu), self.nu * self.params.B, self.params.B ** 2, lam, r0)
        sol = solve_ivp(self._rhs(lam, k), (r0, self.R), [math.atan2(k * h, dh)],
                        method=METHOD, rtol=rtol or self.rtol, atol=1e-14)
        return float(sol.y[0, -1])

    def right_angle(self, lam: float, r_max: float, rtol: float | None = None) -> float:
        """Prüfer angle at ``R+`` of the solution vanishing at ``r_max``."""
        k = math.sqrt(max(abs(lam), 1.0))
        sol = solve_ivp(self._rhs(lam, k), (r_max, self.R), [math.pi],
                        method=METHOD, rtol=rtol or self.rtol, atol=1e-14)
        return float(sol.y[0, -1])

    def jump(self, phi: float, lam: float) -> float:
        """Apply ``cot(phi+) = cot(phi-) - beta/k`` within the same branch."""
        if not self.beta:
            return phi
        k = math.sqrt(max(abs(lam), 1.0))
        base = math.floor(phi / math.pi) * math.pi
        frac = phi - base
        if frac == 0.0:
            return phi
        return base + math.atan2(1.0, 1.0 / math.tan(frac) - self.beta / k)

    def mismatch(self, lam: float, r_max: float | None = None, rtol: float | None = None) -> float:
        r_max = r_max or self.r_max or self.default_r_max(lam)
        left = self.jump(self.left_angle(lam, rtol), lam)
        return left - self.right_angle(lam, r_max, rtol)

    def initial_guess(self, index: int) -> float:
        """Cheap estimate used to seed the bracket search."""
        B = self.params.B
        if self.beta and index == 0 and self.beta * self.R > 2.0:
            flux = self.nu - 0.5 * B * self.R ** 2
            return -0.25 * self.beta ** 2 + (flux * flux - 0.25) / self.R ** 2
        return abs(B) * (2 * index + 1 + abs(self.nu) - self.nu * math.copysign(1.0, B))

    def eigenvalue(self, index: int = 0, r_max: float | None = None, rtol: float | None = None,
                   guess: float | None = None, floor: float | None = None) -> float:
        """``index``-th (0-based) eigenvalue of the channel.

        ``floor`` is a known lower bound (for instance the previous level of the
        channel); ``guess`` seeds the bracket search.
        """
        target = index * math.pi
        fixed = r_max or self.r_max
        lam_est = self.initial_guess(index) if guess is None else guess
        if floor is not None:
            lam_est = max(lam_est, floor + 1e-6 * max(1.0, abs(floor)))
        spread = 1.0 + 0.5 * abs(lam_est)
        rm = fixed or max(self.default_r_max(lam_est), self.default_r_max(lam_est + spread))
        for _ in range(4):
            def f(lam):
                return self.mismatch(lam, rm, rtol) - target

            lo, hi = _bracket(f, lam_est, floor, 1e-3 * max(1.0, abs(lam_est)))
            lam = brentq(f, lo, hi, xtol=1e-14 * max(1.0, abs(hi)), rtol=4 * np.finfo(float).eps,
                         maxiter=200)
            if fixed or self.default_r_max(lam) <= rm * (1.0 + 1e-9):
                return lam
            lam_est, rm = lam, self.default_r_max(lam)
        return lam

    def eigenvalue_with_error(self, index: int = 0, guess: float | None = None,
                              floor: float | None = None) -> tuple[float, float]:
        """Eigenvalue and an error estimate from a longer, tighter second solve."""
        lam = self.eigenvalue(index, guess=guess, floor=floor)
        rm = self.r_max or self.default_r_max(lam)
        lam2 = self.eigenvalue(index, r_max=REFINE_FACTOR * rm, rtol=0.1 * self.rtol, guess=lam,
                               floor=floor)
        return lam, abs(lam2 - lam) + 1e-14 * max(1.0, abs(lam))

    def jump_residual(self, lam: float) -> float:
        """Relative defect of ``f'(R+) - f'(R-) + beta f(R)`` from linear integrations.

        Both sides are integrated as linear systems for ``(h, h')`` with
        renormalisation, independently of the angle formulation.
        """
        r_max = self.r_max or self.default_r_max(lam)
        r0 = self._start(lam)
        h, dh = _series_start(abs(self.nu), self.nu * self.params.B, self.params.B ** 2, lam, r0)
        left = _linear_ratio(self, lam, r0, self.R, (h, dh))
        right = _linear_ratio(self, lam, r_max, self.R, (0.0, -1.0))
        # left/right are h'/h at R- and R+
        return abs(right - left + self.beta) / max(abs(self.beta), abs(left), 1.0)


def _bracket(f, guess: float, floor: float | None, step: float) -> tuple[float, float]:
    """Sign-change bracket for an increasing ``f`` by doubling steps away from ``guess``."""
    x = guess
    fx = f(x)
    if fx < 0:
        lo = x
        while True:
            x = x + step
            step *= 2.0
            if f(x) >= 0:
                return lo, x
            lo = x
    hi = x
    while True:
        x = x - step
        step *= 2.0
        if floor is not None and x <= floor:
            x = floor + 0.5 * (hi - floor)
            step = 0.0
        if f(x) <= 0:
            return x, hi
        hi = x
        if step == 0.0:
            raise ArithmeticError("no sign change above the supplied floor")


def _linear_ratio(problem: RadialProblem, lam: float, r_from: float, r_to: float, y0) -> float:
    p = 2.0 * abs(problem.nu) + 1.0
    b2, nu_b = problem.params.B ** 2, problem.nu * problem.params.B

    def rhs(r, y):
        return [y[1], -p / r * y[1] + (0.25 * b2 * r * r - nu_b - lam) * y[0]]

    k = math.sqrt(max(abs(lam), 1.0) + 0.25 * b2 * max(r_from, r_to) ** 2)
    chunk = 5.0 / k
    y = np.array(y0, dtype=float)
    r = r_from
    direction = 1.0 if r_to > r_from else -1.0
    while (r_to - r) * direction > 0:
        r_next = r + direction * min(chunk, abs(r_to - r))
        # explicit first step: the automatic choice divides by zero at h = 0
        sol = solve_ivp(rhs, (r, r_next), y, method="DOP853", rtol=1e-13, atol=1e-300,
                        first_step=0.01 * chunk)
        y = sol.y[:, -1]
        y = y / max(abs(y[0]), abs(y[1]) / k)
        r = r_next
    return float(y[1] / y[0])


def closed_form_level(params: ModelParams, m: int, radial_index: int) -> float:
    """Coupling-free level ``B (2 n + 1 + |nu| - nu)`` for ``B > 0``."""
    nu = m - params.c0
    return params.B * (2 * radial_index + 1 + abs(nu) - nu)


def landau_levels(params: ModelParams, m_range: tuple[int, int], count: int) -> np.ndarray:
    """Lowest ``count`` coupling-free levels over ``m_range`` (inclusive)."""
    vals = [closed_form_level(params, m, j) for m in range(m_range[0], m_range[1] + 1)
            for j in range(count)]
    return np.sort(vals)[:count]


@dataclass
class _Channel:
    problem: RadialProblem
    values: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def extend(self, with_error: bool) -> None:
        j = len(self.values)
        floor = self.values[-1] if self.values else None
        if with_error:
            lam, err = self.problem.eigenvalue_with_error(j, floor=floor)
        else:
            lam, err = self.problem.eigenvalue(j, floor=floor), 0.0
        self.values.append(lam)
        self.errors.append(err)


def default_m_center(R: float, params: ModelParams) -> int:
    return int(round(params.c0 + 0.5 * params.B * R * R))


def radial_solve(R: float, params: ModelParams, n: int, m_range: tuple[int, int] | None = None,
                 certify: bool = True, with_error: bool = True, rtol: float = RTOL) -> Spectrum:
    """Lowest ``n`` eigenvalues merged over the angular momenta in ``m_range``.

    Without an explicit ``m_range`` the window is centred on the channel of
    lowest angular energy and widened while a boundary channel reaches below
    the returned maximum. ``MRangeError`` is raised when certification fails.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    explicit = m_range is not None
    if m_range is None:
        center = default_m_center(R, params)
        m_range = (center - (n + 3), center + (n + 3))
    lo_m, hi_m = m_range
    if lo_m > hi_m:
        raise ValueError("empty m_range")
    channels: dict[int, _Channel] = {}
    for growth in range(MAX_WINDOW_GROWTH + 1):
        for m in range(lo_m, hi_m + 1):
            if m not in channels:
                ch = _Channel(RadialProblem(R, params, m, rtol=rtol))
                ch.extend(with_error)
                channels[m] = ch
        # pull further radial levels from channels that could still contribute
        while True:
            pool = sorted((v, m, j) for m, ch in channels.items() if lo_m <= m <= hi_m
                          for j, v in enumerate(ch.values))
            cutoff = pool[n - 1][0] if len(pool) >= n else math.inf
            grew = False
            for m in range(lo_m, hi_m + 1):
                ch = channels[m]
                if ch.values[-1] <= cutoff and len(ch.values) < n:
                    ch.extend(with_error)
                    grew = True
            if not grew:
                break
        pool = pool[:n]
        top = pool[-1][0]
        tol = 1e-10 * max(1.0, abs(top))
        boundary_ok = all(channels[m].values[0] > top + tol for m in (lo_m, hi_m))
        if boundary_ok or not certify:
            break
        if explicit or growth == MAX_WINDOW_GROWTH:
            raise MRangeError(
                f"angular momenta {lo_m}..{hi_m} do not certify the lowest {n} eigenvalues")
        lo_m, hi_m = lo_m - (n + 3), hi_m + (n + 3)
    values = np.array([v for v, _, _ in pool])
    errors = np.array([channels[m].errors[j] for _, m, j in pool])
    labels = tuple((m, j) for _, m, j in pool)
    meta = {"R": R, "m_range": [lo_m, hi_m], "certified": bool(boundary_ok)}
    return Spectrum(values, errors, hi_m - lo_m + 1, "radial", params.as_dict(), labels, meta)
