import csv

import numpy as np
import pytest

from deltaloop.coefficients import ModelParams
from deltaloop.oracle2d import RadialProblem, closed_form_level, persistent_current

GRID = [0.1, 0.3, 0.5, 0.7, 0.9]


@pytest.fixture(scope="module")
def report():
    return persistent_current(1.0, 1.0, 50.0, GRID)


def test_flux_dependence_detected(report):
    assert report.detected
    assert report.variation > 10 * report.error
    assert report.verdict == "persistent current detected"


def test_derivative_uses_grid_differences(report):
    lam = report.eigenvalues[:, 0]
    assert report.derivative[2] == pytest.approx((lam[3] - lam[1]) / 0.4, rel=1e-12)
    assert report.derivative[0] == pytest.approx((lam[1] - lam[0]) / 0.2, rel=1e-12)


def test_worker_count_does_not_change_values(report):
    again = persistent_current(1.0, 1.0, 50.0, GRID, workers=2)
    assert np.array_equal(again.eigenvalues, report.eigenvalues)


def test_csv_columns(report, tmp_path):
    with report.to_csv(tmp_path / "currents.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["c0", "lambda_1", "dlambda1_dc0"]
    assert [float(r["c0"]) for r in rows] == GRID


def test_field_only_channel_depends_on_flux():
    """For m = 0 the uncoupled level is B (1 + 2 c0), linear in the flux."""
    vals = [RadialProblem(1.0, ModelParams(c, 1.0), 0).eigenvalue(0) for c in (0.2, 0.4, 0.6)]
    assert vals == pytest.approx([closed_form_level(ModelParams(c, 1.0), 0, 0)
                                  for c in (0.2, 0.4, 0.6)], abs=1e-8)
    assert vals == pytest.approx([1.4, 1.8, 2.2], abs=1e-8)


@pytest.mark.parametrize("grid", [[0.1, 0.2, 0.3, 0.4], [0.1, 0.3, 0.2, 0.4, 0.5]])
def test_grid_validation(grid):
    with pytest.raises(ValueError):
        persistent_current(1.0, 1.0, 50.0, grid)
