import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pharmonic_hub.core.cap_ode import (
    ShootSpec,
    divergence_residual,
    energy_identity_defect,
    exponent_by_shooting,
    lambda_by_shooting,
    series_start,
    shoot_first_zero,
    shot_profile,
)
from pharmonic_hub.core.exceptions import BracketError, DomainError
from pharmonic_hub.core.geometry import Branch
from pharmonic_hub.core.oracle import p2_cap_eigenvalue, p2_exponents
from pharmonic_hub.core.sector import SectorSolveSpec, gamma_of_opening

HALF_PI = 0.5 * math.pi


def test_center_coefficient_matches_cosine():
    # p = 2, d = 2, K = 2: ω = cos θ = 1 − θ²/2 + …
    spec = ShootSpec(p=2.0, d=2, gamma=1.0, K=2.0)
    assert spec.center_coefficient == pytest.approx(-0.5)
    # от p и γ не зависит
    assert ShootSpec(p=3.5, d=2, gamma=0.3, K=2.0).center_coefficient == -0.5


def test_series_start_values():
    spec = ShootSpec(p=3.0, d=3, gamma=1.0, K=6.0, series_start_theta=1e-4)
    state = series_start(spec)
    assert state.theta == 1e-4
    assert state.omega <= 1.0
    assert state.omega == pytest.approx(1.0 - 1e-8)
    assert state.domega == pytest.approx(-2e-4)


def test_series_start_slope_ratio_is_stable_under_halving():
    ratios = []
    for theta0 in (4e-4, 2e-4, 1e-4):
        spec = ShootSpec(p=3.0, d=2, gamma=1.0, K=2.0, series_start_theta=theta0)
        state = series_start(spec)
        ratios.append(state.domega / state.theta)
    assert_allclose(ratios, ratios[0], rtol=1e-12)


def test_series_start_rejects_far_start():
    spec = ShootSpec(p=2.0, d=2, gamma=1.0, K=2.0, series_start_theta=2e-3)
    with pytest.raises(DomainError):
        series_start(spec)


def test_series_coefficient_against_raw_integration():
    # a₂ по разностному отношению (ω(θ₁) − 1)/θ₁² на выстреле
    spec = ShootSpec(p=3.0, d=3, gamma=0.7, K=1.9)
    profile = shot_profile(spec, 0.01, 101)
    theta, omega = profile.theta[-1], profile.omega[-1]
    assert (omega - 1.0) / theta**2 == pytest.approx(
        spec.center_coefficient, rel=1e-3
    )


def test_shot_profile_is_cosine_on_hemisphere():
    spec = ShootSpec(p=2.0, d=2, gamma=1.0, K=2.0)
    profile = shot_profile(spec, HALF_PI, 501)
    assert_allclose(profile.omega, np.cos(profile.theta), atol=1e-8)
    assert_allclose(profile.domega, -np.sin(profile.theta), atol=1e-8)


def test_first_zero_of_cosine():
    spec = ShootSpec(p=3.0, d=2, gamma=1.0, K=2.0)
    assert shoot_first_zero(spec) == pytest.approx(HALF_PI, abs=1e-7)


def test_first_zero_absent():
    assert shoot_first_zero(ShootSpec(p=2.0, d=2, gamma=1.0, K=-1.0)) is None
    assert shoot_first_zero(ShootSpec(p=2.0, d=2, gamma=1.0, K=0.0)) is None
    # очень малое K: ноль ушёл за max_theta
    assert shoot_first_zero(ShootSpec(p=2.0, d=2, gamma=1.0, K=0.01)) is None


def test_first_zero_decreases_with_constant():
    zeros = [
        shoot_first_zero(ShootSpec(p=3.0, d=2, gamma=1.0, K=K))
        for K in (1.0, 2.0, 4.0, 8.0)
    ]
    assert all(b < a for a, b in zip(zeros, zeros[1:]))


@pytest.mark.parametrize("factor", [0.5, 2.0])
def test_homogeneity_of_shot_and_residual(factor):
    p, d, gamma, K = 3.0, 2, 1.0, 2.0
    # K + 1: невязка порядка 1
    off_K = K + 1.0
    base = shot_profile(ShootSpec(p, d, gamma, K), HALF_PI, 401)
    scaled = shot_profile(ShootSpec(p, d, gamma, K, amplitude=factor), HALF_PI, 401)
    expected_profile = base.scaled(factor)
    assert_allclose(scaled.omega, expected_profile.omega, rtol=1e-9, atol=1e-12)
    r0 = divergence_residual(base.theta, base.omega, base.domega, p, d, gamma, off_K)
    r1 = divergence_residual(
        scaled.theta, scaled.omega, scaled.domega, p, d, gamma, off_K
    )
    expected = factor ** (p - 1.0) * r0
    scale = max(float(np.max(np.abs(expected))), 1e-300)
    assert float(np.max(np.abs(r1 - expected))) / scale <= 1e-9


def test_divergence_residual_of_exact_profile():
    theta = np.linspace(0.0, HALF_PI, 2001)
    residual = divergence_residual(
        theta, np.cos(theta), -np.sin(theta), 3.0, 2, 1.0, 2.0
    )
    assert residual.shape == (1999,)
    assert np.max(np.abs(residual)) <= 1e-6


def test_energy_identity_on_cosine():
    spec = ShootSpec(p=3.0, d=2, gamma=1.0, K=2.0)
    profile = shot_profile(spec, HALF_PI, 1001)
    assert energy_identity_defect(profile, 3.0, 2, 1.0, 2.0) <= 1e-6


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
@pytest.mark.parametrize("d", [1, 2, 3])
def test_hemisphere_regular_exponent_is_one(p, d):
    result = exponent_by_shooting(p, d, HALF_PI, Branch.REGULAR)
    assert abs(result.gamma - 1.0) <= 1e-6
    distance = np.max(np.abs(result.profile.omega - np.cos(result.profile.theta)))
    assert distance <= 1e-5
    assert result.boundary_slope < 0.0
    assert result.diagnostics["boundary_flux_negative"]
    assert result.diagnostics["admissible"]
    assert result.lam == pytest.approx(float(d), abs=1e-5)


@pytest.mark.parametrize("alpha", [math.pi / 3, 2 * math.pi / 3])
@pytest.mark.parametrize("branch", list(Branch))
def test_p2_matches_eigenvalue_oracle(alpha, branch):
    lambda1 = p2_cap_eigenvalue(2, alpha).lambda1
    expected = dict(zip(Branch, p2_exponents(3, lambda1)))[branch]
    result = exponent_by_shooting(2.0, 2, alpha, branch)
    assert abs(result.gamma - expected) <= 1e-5


@pytest.mark.parametrize("p", [1.5, 3.0])
@pytest.mark.parametrize("branch", list(Branch))
def test_one_dimensional_cap_matches_sector(p, branch):
    alpha = math.pi / 4
    expected = gamma_of_opening(SectorSolveSpec(p, branch), 2.0 * alpha)
    result = exponent_by_shooting(p, 1, alpha, branch, 1e-8)
    assert abs(result.gamma - expected) <= 1e-6


def test_exponent_scan_range_without_root():
    with pytest.raises(BracketError) as info:
        exponent_by_shooting(2.0, 2, HALF_PI, Branch.REGULAR, scan_range=(5.0, 10.0))
    assert info.value.scan


@pytest.mark.parametrize("branch", list(Branch))
def test_exponent_independent_of_shot_amplitude(branch):
    base = exponent_by_shooting(3.0, 2, math.pi / 3, branch)
    scaled = exponent_by_shooting(3.0, 2, math.pi / 3, branch, amplitude=3.7)
    assert abs(scaled.gamma - base.gamma) <= 1e-6
    assert scaled.bisection_iterations == base.bisection_iterations
    expected = base.profile.scaled(3.7)
    assert_allclose(scaled.profile.omega, expected.omega, rtol=1e-5, atol=1e-9)
    assert_allclose(scaled.profile.domega, expected.domega, rtol=1e-5, atol=1e-8)


def test_exponent_rejects_non_positive_amplitude():
    with pytest.raises(DomainError):
        exponent_by_shooting(2.0, 2, HALF_PI, Branch.REGULAR, amplitude=0.0)


def test_lambda_on_hemisphere():
    point = lambda_by_shooting(3.0, 2, HALF_PI, 1.0)
    assert point.lam == pytest.approx(2.0, abs=1e-6)
    assert point.profile.boundary_slope < 0.0
    assert abs(point.diagnostics["theta_mismatch"]) <= 1e-9


def test_lambda_scales_like_inverse_gamma_for_p2():
    # p = 2: γλ_γ = λ1 не зависит от γ
    first = lambda_by_shooting(2.0, 2, math.pi / 3, 1.0).lam
    second = lambda_by_shooting(2.0, 2, math.pi / 3, 2.0).lam
    assert second == pytest.approx(0.5 * first, rel=1e-6)
