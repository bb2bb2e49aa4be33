import math

import numpy as np
import pytest

from pharmonic_hub.core import exponent
from pharmonic_hub.core.exceptions import (
    DomainError,
    MonotonicityError,
    NoEigenfunctionError,
)
from pharmonic_hub.core.geometry import Branch
from pharmonic_hub.core.models import Backend, LambdaPoint, Profile
from pharmonic_hub.core.utils import bisect_sign_change

HALF_PI = 0.5 * math.pi


def test_singular_exponent_p2_hemisphere():
    result = exponent.solve_exponent(2.0, 2, HALF_PI, Branch.SINGULAR)
    assert result.backend is Backend.SHOOTING
    assert result.gamma == pytest.approx(2.0, abs=1e-6)
    assert abs(result.diagnostics["g"]) <= 1e-4
    assert result.diagnostics["admissible"]
    assert result.profile.is_positive_inside()
    assert result.boundary_slope < 0.0


def test_regular_exponent_p2_hemisphere():
    result = exponent.solve_exponent(2.0, 2, HALF_PI, "regular")
    assert result.gamma == pytest.approx(1.0, abs=1e-6)
    assert result.lam == pytest.approx(2.0, abs=1e-5)


def test_profile_grid_size_is_honoured():
    result = exponent.solve_exponent(3.0, 2, HALF_PI, Branch.REGULAR, grid_size=201)
    assert result.profile.theta.size == 201
    assert result.profile.theta[-1] == pytest.approx(HALF_PI)


@pytest.mark.parametrize("tol", [0.0, -1e-6, math.nan])
def test_tolerance_must_be_positive(tol):
    with pytest.raises(DomainError):
        exponent.solve_exponent(2.0, 2, HALF_PI, Branch.SINGULAR, tol=tol)


def test_unknown_backend_rejected():
    with pytest.raises(DomainError):
        exponent.solve_exponent(2.0, 2, HALF_PI, Branch.SINGULAR, "spectral")


@pytest.mark.slow
def test_ergodic_exponent_matches_shooting():
    shooting = exponent.solve_exponent(3.0, 2, HALF_PI, Branch.SINGULAR)
    ergodic = exponent.solve_exponent(
        3.0, 2, HALF_PI, Branch.SINGULAR, Backend.ERGODIC
    )
    assert ergodic.backend is Backend.ERGODIC
    assert abs(ergodic.gamma - shooting.gamma) <= 1e-2
    assert ergodic.profile.normalization == "axis"


def test_lambda_curve_decreasing_with_blow_up():
    grid = np.geomspace(0.05, 5.0, 12)
    points = exponent.lambda_curve(3.0, 2, math.pi / 3, grid, workers=1)
    assert all(point.ok for point in points)
    assert [point.gamma for point in points] == pytest.approx(grid.tolist())
    lams = [point.lam for point in points]
    assert all(b < a for a, b in zip(lams, lams[1:]))
    reference = exponent.lambda_curve(3.0, 2, math.pi / 3, [1.0], workers=1)[0]
    assert points[0].lam > 10.0 * reference.lam


def test_lambda_curve_rejects_unsorted_grid():
    with pytest.raises(DomainError):
        exponent.lambda_curve(3.0, 2, HALF_PI, [1.0, 0.5])
    with pytest.raises(DomainError):
        exponent.lambda_curve(3.0, 2, HALF_PI, [0.5, 0.5])
    with pytest.raises(DomainError):
        exponent.lambda_curve(3.0, 2, HALF_PI, [-1.0, 1.0])


def _fake_lambda(values, failing=()):
    def fake(p, d, alpha, gamma, backend, grid_size=None):
        if gamma in failing:
            raise NoEigenfunctionError(f"нет профиля при γ={gamma}")
        return LambdaPoint(gamma=gamma, lam=values[gamma], backend=backend)

    return fake


def test_lambda_curve_reports_gaps(monkeypatch):
    values = {0.5: 4.0, 1.0: 2.0, 2.0: 1.0}
    monkeypatch.setattr(exponent, "_lambda_at", _fake_lambda(values, {1.0}))
    points = exponent.lambda_curve(2.0, 2, HALF_PI, [0.5, 1.0, 2.0], workers=1)
    assert [point.ok for point in points] == [True, False, True]
    gap = points[1]
    assert math.isnan(gap.lam)
    assert gap.diagnostics["error_type"] == "NoEigenfunctionError"
    assert gap.to_dict()["lambda"] is None


def test_lambda_curve_detects_non_monotone(monkeypatch):
    values = {0.5: 1.0, 1.0: 2.0}
    monkeypatch.setattr(exponent, "_lambda_at", _fake_lambda(values))
    with pytest.raises(MonotonicityError) as info:
        exponent.lambda_curve(2.0, 2, HALF_PI, [0.5, 1.0], workers=1)
    assert info.value.samples == [(0.5, 1.0), (1.0, 2.0)]


def _steep_lambda(p, d, alpha, gamma, backend, grid_size=None):
    # g(γ) = λ − (γ − 1) убывает с наклоном ≈ −401, корень γ = 604/401
    theta = np.linspace(0.0, HALF_PI, 5)
    profile = Profile(theta, np.cos(theta), -np.sin(theta))
    lam = max(3.0 + 400.0 * (1.5 - gamma), 1e-3)
    return LambdaPoint(gamma=gamma, lam=lam, backend=backend, profile=profile)


def test_ergodic_exponent_meets_residual_tolerance(monkeypatch):
    monkeypatch.setattr(exponent, "_lambda_at", _steep_lambda)
    result = exponent.solve_exponent(
        2.0, 2, HALF_PI, Branch.SINGULAR, Backend.ERGODIC, bracket=(1.0, 2.0)
    )
    tol = exponent.DEFAULT_TOL[Backend.ERGODIC]
    assert abs(result.diagnostics["g"]) <= tol
    assert result.diagnostics["g_within_tol"]
    assert result.residual <= tol
    assert result.gamma == pytest.approx(604.0 / 401.0, abs=tol)


def test_bisection_residual_stop():
    def steep(x):
        return 1000.0 * (0.3 - x)

    width_only, _ = bisect_sign_change(steep, 0.0, 1.0, steep(0.0), 1e-3)
    both, _ = bisect_sign_change(steep, 0.0, 1.0, steep(0.0), 1e-3, ftol=1e-3)
    assert abs(width_only - 0.3) <= 1e-3
    assert abs(steep(both)) <= 1e-3


def test_domain_monotonicity_p2():
    values, decreasing = exponent.domain_monotonicity(
        2.0, 2, alphas=(math.pi / 4, HALF_PI)
    )
    assert decreasing
    assert values[1] == (HALF_PI, pytest.approx(2.0, abs=1e-5))


def test_consistency_report_rows():
    report = exponent.ConsistencyReport(title="demo")
    report.add("exact", 1.0, 1.0 + 1e-9, 1e-6)
    report.add("informational", 1.0, 3.0, 1e-6, informational=True)
    assert report.passed
    report.add("off", 1.0, 1.5, 1e-6)
    assert not report.passed
    data = report.as_dict()
    assert data["title"] == "demo"
    assert [row["passed"] for row in data["rows"]] == [True, True, False]
    assert data["rows"][2]["delta"] == pytest.approx(0.5)
    rendered = report.render()
    assert "demo" in rendered and "NO" in rendered


def test_record_check_keeps_solver_failures():
    report = exponent.ConsistencyReport(title="failures")

    def broken():
        raise NoEigenfunctionError("c(γ) ≤ 0")

    exponent.record_check(report, "broken", 1e-6, broken)
    exponent.record_check(report, "fine", 1e-6, lambda: (2.0, 2.0))
    broken_row, fine_row = report.rows
    assert broken_row["error"] == "NoEigenfunctionError"
    assert not broken_row["passed"]
    assert fine_row["passed"]


@pytest.mark.slow
def test_consistency_report_p2_hemisphere():
    report = exponent.consistency_report(2.0, 2, HALF_PI, grid_size=1000)
    failed = [row["check"] for row in report.rows if not row["passed"]]
    assert not failed
