"""Flux dependence of the low eigenvalues of a circular loop."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..coefficients import ModelParams
from ..spectral1d import Spectrum
from .radial import radial_solve

DETECTION_FACTOR = 10.0
MIN_POINTS = 5


@dataclass(frozen=True, eq=False)
class CurrentReport:
    """Eigenvalue table over the flux grid with the variation of the ground level."""

    R: float
    B: float
    beta: float
    c0: np.ndarray
    eigenvalues: np.ndarray  # shape (len(c0), n)
    errors: np.ndarray
    derivative: np.ndarray  # d lambda_1 / d c0

    @property
    def variation(self) -> float:
        col = self.eigenvalues[:, 0]
        return float(col.max() - col.min())

    @property
    def error(self) -> float:
        """Largest solver error estimate of the ground level over the grid."""
        return float(self.errors[:, 0].max())

    @property
    def detected(self) -> bool:
        return self.variation > DETECTION_FACTOR * self.error

    @property
    def verdict(self) -> str:
        return "persistent current detected" if self.detected else "no persistent current resolved"

    def rows(self) -> list[dict]:
        n = self.eigenvalues.shape[1]
        out = []
        for k, c in enumerate(self.c0):
            row = {"c0": float(c)}
            row.update({f"lambda_{j + 1}": float(self.eigenvalues[k, j]) for j in range(n)})
            row["dlambda1_dc0"] = float(self.derivative[k])
            out.append(row)
        return out

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        rows = self.rows()
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: repr(v) for k, v in row.items()})
        return path

    def summary(self) -> dict:
        return {"R": self.R, "B": self.B, "beta": self.beta, "variation": self.variation,
                "error": self.error, "factor": DETECTION_FACTOR, "detected": self.detected,
                "verdict": self.verdict}

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _solve_point(args) -> Spectrum:
    R, c0, B, beta, n, test_only = args
    return radial_solve(R, ModelParams(c0, B, beta, test_only), n)


def persistent_current(R: float, B: float, beta: float, c0_grid: Sequence[float], n: int = 1,
                       workers: int = 1, test_only: bool = False) -> CurrentReport:
    """Tabulate ``lambda_j(c0)`` for ``j <= n`` on a flux grid via the radial oracle.

    ``dlambda1_dc0`` uses centred differences inside the grid and one-sided
    ones at its ends (``numpy.gradient``). ``workers > 1`` spreads grid points
    over processes; the result does not depend on the worker count.
    """
    c0 = np.asarray(list(c0_grid), dtype=float)
    if c0.size < MIN_POINTS:
        raise ValueError(f"the flux grid needs at least {MIN_POINTS} points")
    if np.any(np.diff(c0) <= 0):
        raise ValueError("the flux grid must be strictly increasing")
    jobs = [(R, float(c), B, beta, n, test_only) for c in c0]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            spectra = list(pool.map(_solve_point, jobs))
    else:
        spectra = [_solve_point(job) for job in jobs]
    values = np.array([s.eigenvalues[:n] for s in spectra])
    errors = np.array([s.error_estimates[:n] for s in spectra])
    deriv = np.gradient(values[:, 0], c0)
    return CurrentReport(R, B, beta, c0, values, errors, deriv)
