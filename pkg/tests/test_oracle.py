import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pharmonic_hub.core.exceptions import DomainError
from pharmonic_hub.core.geometry import Branch
from pharmonic_hub.core.oracle import (
    p2_cap_eigenvalue,
    p2_exponents,
    sector_opening_by_ode,
)


@pytest.mark.parametrize("d", [2, 3])
def test_hemisphere_eigenvalue_is_d(d):
    # cos θ: первая собственная функция полусферы S^d, λ1 = d
    result = p2_cap_eigenvalue(d, 0.5 * math.pi)
    assert result.lambda1 == pytest.approx(float(d), rel=1e-7)
    profile = result.eigenfunction
    assert_allclose(profile.omega, np.cos(profile.theta), atol=1e-6)
    assert profile.omega[-1] == 0.0


def test_arc_eigenvalue_for_d1():
    # на дуге: ω = cos(πθ/(2α)), λ1 = (π/(2α))²
    alpha = math.pi / 4
    result = p2_cap_eigenvalue(1, alpha)
    assert result.lambda1 == pytest.approx(4.0, rel=1e-8)


def test_eigenvalue_decreases_with_cap():
    values = [
        p2_cap_eigenvalue(2, alpha).lambda1
        for alpha in (math.pi / 3, math.pi / 2, 2 * math.pi / 3)
    ]
    assert values[0] > values[1] > values[2] > 0


def test_p2_exponents_roots():
    singular, regular = p2_exponents(3, 2.0)
    assert singular == pytest.approx(2.0)
    assert regular == pytest.approx(1.0)
    # оба корня удовлетворяют X² − (N−2)X − λ = 0 с X = β и X = −β̃
    for root in (singular, -regular):
        assert root * root - root - 2.0 == pytest.approx(0.0, abs=1e-12)


def test_p2_exponents_validation():
    with pytest.raises(DomainError):
        p2_exponents(1, 2.0)
    with pytest.raises(DomainError):
        p2_exponents(3, 0.0)


def test_eigenvalue_validation():
    with pytest.raises(DomainError):
        p2_cap_eigenvalue(2, math.pi)
    with pytest.raises(DomainError):
        p2_cap_eigenvalue(2, 1.0, grid_size=4)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
def test_sector_ode_closed_form_for_p2(gamma):
    assert sector_opening_by_ode(2.0, Branch.REGULAR, gamma) == pytest.approx(
        math.pi / gamma, abs=1e-9
    )


def test_sector_ode_rejects_nonpositive_constant():
    with pytest.raises(DomainError):
        sector_opening_by_ode(1.5, Branch.SINGULAR, 0.5)


@pytest.mark.parametrize("d", [2, 3])
def test_eigenvalue_converges_at_least_second_order(d):
    coarse, middle, fine = (
        p2_cap_eigenvalue(d, math.pi / 3, grid_size=n).lambda1 for n in (20, 40, 80)
    )
    ratio = abs(coarse - middle) / abs(middle - fine)
    # наблюдаемый порядок log2(ratio); RK4 даёт около 4
    assert math.log2(ratio) >= 1.8
    assert abs(middle - fine) < abs(coarse - middle)
