"""Acceptance criteria, one test each.

Every test records a ``PASS``/``FAIL`` line (also shown in the pytest terminal
summary). Run ``python3 tests/test_acceptance.py`` to print the lines without
pytest.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))
from conftest import ACCEPTANCE_LINES  # noqa: E402

from deltaloop.bracketing import asymptotic_fit, brute_force_sums, enclosure  # noqa: E402
from deltaloop.coefficients import ModelParams  # noqa: E402
from deltaloop.geometry import circle, ellipse  # noqa: E402
from deltaloop.oracle2d import (general_solve, landau_levels, persistent_current,  # noqa: E402
                                radial_solve, smooth_gauge)
from deltaloop.oracle2d.radial import RadialProblem, closed_form_level  # noqa: E402
from deltaloop.spectral1d import effective_spectrum, est1_check  # noqa: E402
from deltaloop.transverse import est2_check  # noqa: E402

C0, B = 0.3, 1.0
SEED = 20261016


def record(k: int, title: str, ok: bool, detail: str, elapsed: float, limit: float) -> bool:
    in_time = elapsed < limit
    passed = ok and in_time
    line = (f"{'PASS' if passed else 'FAIL'} criterion {k} ({title}): {detail}; "
            f"runtime {elapsed:.2f} s (limit {limit:g} s{'' if in_time else ', exceeded'})")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def criterion_1() -> bool:
    start = time.perf_counter()
    worst = 0.0
    for R in (1.0, 2.0):
        curve = circle(R)
        spec = effective_spectrum(curve, 7)
        k = np.array([0, 1, 1, 2, 2, 3, 3])
        exact = (2 * np.pi * k / curve.length) ** 2 - 0.25 / R ** 2
        worst = max(worst, float(np.max(np.abs(spec.eigenvalues - exact))))
    elapsed = time.perf_counter() - start
    return record(1, "effective operator on circles", worst <= 1e-10,
                  f"max deviation {worst:.2e} (tol 1e-10)", elapsed, 1.0)


def criterion_2() -> bool:
    start = time.perf_counter()
    pairs = [(a, beta) for beta in (10.0, 20.0, 50.0, 100.0, 200.0)
             for a in (0.3, 0.5, 1.0, 2.0)]
    assert len(pairs) == 20 and all(b * a > 8 / 3 for a, b in pairs)
    reports = [est2_check(a, beta, 1.0) for a, beta in pairs]
    elapsed = time.perf_counter() - start
    strict = sum(r.lower_bounds_hold for r in reports)
    lit = sum(r.plus_upper_literal for r in reports), sum(r.minus_lower_literal for r in reports)
    scaled = sum(r.plus_upper_scaled for r in reports), sum(r.minus_lower_scaled for r in reports)
    detail = (f"strict bounds {strict}/20; envelope exp(-beta/2): upper {lit[0]}/20, "
              f"lower {lit[1]}/20; envelope exp(-beta a/2): upper {scaled[0]}/20, "
              f"lower {scaled[1]}/20")
    return record(2, "transverse ground-state bounds", strict == 20, detail, elapsed, 1.0)


def criterion_3() -> bool:
    start = time.perf_counter()
    curve = circle(1.0)
    params = ModelParams(C0, B)
    widths = [0.2, 0.1, 0.05, 0.025]
    reps = [est1_check(curve, params, j, widths) for j in (1, 2)]
    elapsed = time.perf_counter() - start
    parts = []
    for rep in reps:
        parts.append(f"j={rep.j} ratios + {np.round(rep.ratios_plus, 3).tolist()} "
                     f"- {np.round(rep.ratios_minus, 3).tolist()}")
    ok = all(rep.passed(0.4, 0.6) for rep in reps)
    return record(3, "bracket gap halves with the width", ok,
                  "; ".join(parts) + " (required in [0.4, 0.6])", elapsed, 10.0)


def criterion_4() -> bool:
    rng = np.random.default_rng(SEED)
    curves = {"circle R=1": circle(1.0), "circle R=2": circle(2.0),
              "ellipse 2x1": ellipse(2.0, 1.0)}
    names = list(curves)
    start = time.perf_counter()
    equal = bounded = 0
    for _ in range(10):
        curve = curves[names[rng.integers(len(names))]]
        params = ModelParams(float(rng.uniform(0.05, 0.95)), float(rng.uniform(0.2, 3.0)))
        beta = float(np.exp(rng.uniform(np.log(100.0), np.log(800.0))))
        enc = enclosure(curve, params, beta, 5)
        same = (np.array_equal(enc.sums_plus.eigenvalues,
                               brute_force_sums(enc.mu_plus, enc.xi_plus, 5))
                and np.array_equal(enc.sums_minus.eigenvalues,
                                   brute_force_sums(enc.mu_minus, enc.xi_minus, 5)))
        equal += same
        bounded += bool(np.all(np.isfinite(enc.sums_minus.eigenvalues)))
    elapsed = time.perf_counter() - start
    return record(4, "tensor sums equal brute-force enumeration", equal == 10,
                  f"{equal}/10 random configurations identical, {bounded}/10 with a bounded "
                  f"lower bracket (seed {SEED})", elapsed, 5.0)


def criterion_5() -> bool:
    start = time.perf_counter()
    curve = circle(1.0)
    ok, parts = True, []
    for beta in (30.0, 50.0):
        params = ModelParams(C0, B, beta)
        oracle = radial_solve(1.0, params, 2)
        enc = enclosure(curve, params, beta, 2)
        for j in (1, 2):
            eps = (oracle.error_estimates[j - 1] + enc.error_plus[j - 1]
                   + enc.error_minus[j - 1])
            inside = enc.contains(oracle.eigenvalues[j - 1], j, eps)
            ok = ok and inside
            lo = enc.tau_minus_shifted[j - 1]
            parts.append(f"beta={beta:g} j={j}: {lo:.4g} <= {oracle.eigenvalues[j - 1] + beta ** 2 / 4:.6f}"
                         f" <= {enc.tau_plus_shifted[j - 1]:.4f} (shifted by beta^2/4)")
        if enc.mu_minus.meta.get("unbounded_below"):
            parts.append(f"beta={beta:g}: lower bracket unbounded, lower side vacuous")
    elapsed = time.perf_counter() - start
    return record(5, "oracle inside the enclosures", ok, "; ".join(parts), elapsed, 120.0)


def criterion_6() -> bool:
    start = time.perf_counter()
    betas = [50.0, 100.0, 200.0, 400.0]
    spectra = [radial_solve(1.0, ModelParams(C0, B, b), 2) for b in betas]
    mu = effective_spectrum(circle(1.0), 2).eigenvalues
    ok, parts = True, []
    for j in (1, 2):
        fit = asymptotic_fit(betas, [s.eigenvalues[j - 1] for s in spectra], mu=float(mu[j - 1]))
        good = fit.decreasing and fit.residual < 0.3
        ok = ok and good
        parts.append(f"j={j}: |e| {np.abs(fit.e).round(5).tolist()} decreasing={fit.decreasing}, "
                     f"relative residual {fit.residual:.3f}, C={fit.C:.3f}, "
                     f"limit {fit.limit:.5f} vs flux-free mu {mu[j - 1]:.5f} "
                     f"(gap {fit.limit_gap:+.4f}, informational)")
    elapsed = time.perf_counter() - start
    return record(6, "large-coupling trend", ok, "; ".join(parts), elapsed, 600.0)


def criterion_7() -> bool:
    start = time.perf_counter()
    grid = [round(0.1 * k, 10) for k in range(1, 10)]
    rep = persistent_current(1.0, B, 50.0, grid)
    elapsed = time.perf_counter() - start
    return record(7, "flux dependence of the ground level", rep.detected,
                  f"variation {rep.variation:.4g} vs 10 x error {10 * rep.error:.3g}",
                  elapsed, 300.0)


def criterion_8() -> bool:
    start = time.perf_counter()
    beta = 30.0
    curve = circle(1.0)
    params = ModelParams(C0, B, beta)
    oracle = radial_solve(1.0, params, 1)
    plain = general_solve(curve, params, 1)
    shifted = general_solve(curve, params, 1, gauge=smooth_gauge())
    elapsed = time.perf_counter() - start
    q = beta ** 2 / 4
    ref = oracle.eigenvalues[0] + q
    rel = abs(plain.eigenvalues[0] + q - ref) / abs(ref)
    diff = abs(plain.eigenvalues[0] - shifted.eigenvalues[0])
    tol = plain.error_estimates[0] + shifted.error_estimates[0]
    ok = rel <= 0.01 and diff <= tol
    detail = (f"mesh {plain.eigenvalues[0] + q:.7f} vs radial {ref:.7f} (relative {rel:.2e}, "
              f"tol 1e-2); gauge shift changes lambda_1 by {diff:.2e} (mesh tol {tol:.2e}); "
              f"{plain.meta['nodes'][1]} nodes")
    return record(8, "mesh solver against radial oracle", ok, detail, elapsed, 600.0)


def criterion_9() -> bool:
    start = time.perf_counter()
    window = (-2, 6)
    worst = 0.0
    for c0 in (0.25, 0.5, 0.75):
        params = ModelParams(c0, B)
        spec = radial_solve(1.0, params, 5, m_range=window, certify=False, with_error=False)
        worst = max(worst, float(np.max(np.abs(spec.eigenvalues - landau_levels(params, window, 5)))))
        # the channel m = 0 carries the flux dependence B (2n + 1 + 2 c0)
        prob = RadialProblem(1.0, params, 0)
        chan = [prob.eigenvalue(n) for n in range(5)]
        worst = max(worst, max(abs(v - closed_form_level(params, 0, n)) for n, v in enumerate(chan)))
    elapsed = time.perf_counter() - start
    return record(9, "uncoupled closed-form spectrum", worst <= 1e-8,
                  f"max deviation {worst:.2e} (tol 1e-8) over m in {window[0]}..{window[1]}",
                  elapsed, 10.0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9]


def test_criterion_1():
    assert criterion_1()


def test_criterion_2():
    assert criterion_2()


def test_criterion_3():
    assert criterion_3()


def test_criterion_4():
    assert criterion_4()


def test_criterion_5():
    assert criterion_5()


def test_criterion_6():
    assert criterion_6()


def test_criterion_7():
    assert criterion_7()


def test_criterion_8():
    assert criterion_8()


def test_criterion_9():
    assert criterion_9()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
