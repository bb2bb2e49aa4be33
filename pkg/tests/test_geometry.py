import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pharmonic_hub.core.exceptions import DomainError
from pharmonic_hub.core.geometry import (
    Branch,
    CapDomain,
    SectorDomain,
    boundary_distance,
    metric_weight,
)


def test_ambient_dim_is_sphere_dim_plus_one():
    for d in (1, 2, 5):
        assert CapDomain(d, 1.0).ambient_dim() == d + 1


@pytest.mark.parametrize("alpha", [0.0, -0.1, math.pi, 4.0, math.nan])
def test_cap_rejects_half_angle(alpha):
    with pytest.raises(DomainError):
        CapDomain(2, alpha)


@pytest.mark.parametrize("d", [0, -1, 1.5, True])
def test_cap_rejects_sphere_dim(d):
    with pytest.raises(DomainError):
        CapDomain(d, 1.0)


def test_sector_bounds_and_cap_view():
    with pytest.raises(DomainError):
        SectorDomain(2.0 * math.pi)
    with pytest.raises(DomainError):
        SectorDomain(0.0)
    cap = SectorDomain(math.pi).as_cap()
    assert cap.sphere_dim == 1
    assert cap.half_angle == pytest.approx(0.5 * math.pi)


def test_boundary_distance_scalar_and_array():
    cap = CapDomain(2, math.pi / 3)
    assert boundary_distance(cap, 0.0) == pytest.approx(math.pi / 3)
    assert boundary_distance(cap, math.pi / 3) == 0.0
    theta = np.linspace(0.0, math.pi / 3, 7)
    assert_allclose(boundary_distance(cap, theta), math.pi / 3 - theta)


def test_boundary_distance_rejects_outside_theta():
    cap = CapDomain(2, 1.0)
    with pytest.raises(DomainError):
        boundary_distance(cap, 1.1)
    with pytest.raises(DomainError):
        boundary_distance(cap, np.array([0.5, -0.1]))


def test_metric_weight():
    theta = np.linspace(0.0, 1.0, 11)
    assert_allclose(metric_weight(CapDomain(1, 1.0), theta), np.ones_like(theta))
    assert_allclose(metric_weight(CapDomain(3, 1.0), theta), np.sin(theta) ** 2)
    assert metric_weight(CapDomain(2, 1.0), 0.0) == 0.0


def test_branch_parse_and_targets():
    assert Branch.parse("Singular") is Branch.SINGULAR
    assert Branch.parse(Branch.REGULAR) is Branch.REGULAR
    with pytest.raises(DomainError):
        Branch.parse("middle")
    # p = 2, N = 3: λ = γ − 1 и λ = γ + 1
    assert Branch.SINGULAR.target_lambda(2.0, 2, 2.0) == pytest.approx(1.0)
    assert Branch.REGULAR.target_lambda(2.0, 2, 1.0) == pytest.approx(2.0)
    assert Branch.REGULAR.shoot_constant(3.0, 2, 1.0) == pytest.approx(2.0)


def test_validity_threshold():
    # сектор, p = 2: c(γ) = γ² у обеих ветвей
    assert Branch.SINGULAR.validity_threshold(2.0) == 0.0
    assert Branch.REGULAR.validity_threshold(2.0) == 0.0
    # p = 1.5: Singular c = γ(γ/2 − 1/2) > 0 только при γ > 1
    assert Branch.SINGULAR.validity_threshold(1.5) == pytest.approx(1.0)
    assert Branch.REGULAR.validity_threshold(4.0) == pytest.approx(2.0 / 3.0)
