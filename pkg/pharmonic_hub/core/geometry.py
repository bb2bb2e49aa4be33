from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike

from .exceptions import DomainError
from .utils import validate_half_angle, validate_positive, validate_sphere_dim

# допуск на сравнение θ с концами отрезка [0, α]
_THETA_SLACK = 1e-12


class Branch(str, Enum):
    """Семейство показателей: сингулярное (β > 0) или регулярное (β̃ > 0)."""

    SINGULAR = "singular"
    REGULAR = "regular"

    @classmethod
    def parse(cls, raw: "str | Branch") -> "Branch":
        if isinstance(raw, Branch):
            return raw
        try:
            return cls(str(raw).strip().lower())
        except ValueError as exc:
            raise DomainError(f"Неизвестная ветвь: {raw!r}.") from exc

    def target_lambda(self, p: float, d: int, gamma: float) -> float:
        """Эргодическая константа, которой должен равняться λ_γ в корне.

        Singular: λ = γ(p−1) + p − d − 1; Regular: λ = γ(p−1) + d + 1 − p.
        """
        if self is Branch.SINGULAR:
            return gamma * (p - 1.0) + p - d - 1.0
        return gamma * (p - 1.0) + d + 1.0 - p

    def shoot_constant(self, p: float, d: int, gamma: float) -> float:
        """Константа K = γ·λ правой части профильного уравнения."""
        return gamma * self.target_lambda(p, d, gamma)

    def validity_threshold(self, p: float, d: int = 1) -> float:
        """Нижняя граница γ, за которой K(γ) ≤ 0 (0, если K > 0 при всех γ)."""
        if self is Branch.SINGULAR:
            edge = (d + 1.0 - p) / (p - 1.0)
        else:
            edge = (p - d - 1.0) / (p - 1.0)
        return max(edge, 0.0)


@dataclass(frozen=True)
class CapDomain:
    """Геодезический шар полуугла α на сфере S^d (d = N − 1)."""

    sphere_dim: int
    half_angle: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "sphere_dim", validate_sphere_dim(self.sphere_dim))
        object.__setattr__(self, "half_angle", validate_half_angle(self.half_angle))

    def ambient_dim(self) -> int:
        return self.sphere_dim + 1


@dataclass(frozen=True)
class SectorDomain:
    """Дуга окружности длины A (плоский сектор с раствором A)."""

    opening: float

    def __post_init__(self) -> None:
        value = validate_positive(self.opening, "opening")
        if value >= 2.0 * math.pi:
            raise DomainError(f"Требуется 0 < A < 2π, получено A={value}.")
        object.__setattr__(self, "opening", value)

    def as_cap(self) -> CapDomain:
        """Сектор раствора A — это шапка на S^1 с полууглом A/2."""
        return CapDomain(sphere_dim=1, half_angle=0.5 * self.opening)


def _check_theta(domain: CapDomain, theta: ArrayLike) -> np.ndarray:
    values = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(values)):
        raise DomainError("θ должно быть конечным.")
    alpha = domain.half_angle
    if np.any(values < -_THETA_SLACK) or np.any(values > alpha + _THETA_SLACK):
        raise DomainError(f"θ вне отрезка [0, {alpha}].")
    return np.clip(values, 0.0, alpha)


def _as_output(values: np.ndarray, like: ArrayLike) -> "float | np.ndarray":
    if np.ndim(like) == 0:
        return float(values)
    return values


def boundary_distance(domain: CapDomain, theta: ArrayLike) -> "float | np.ndarray":
    """Геодезическое расстояние до границы шапки: ρ = α − θ."""
    values = _check_theta(domain, theta)
    return _as_output(domain.half_angle - values, theta)


def metric_weight(domain: CapDomain, theta: ArrayLike) -> "float | np.ndarray":
    """Осесимметричный элемент объёма sin(θ)^{d−1} (тождественно 1 при d = 1)."""
    values = _check_theta(domain, theta)
    if domain.sphere_dim == 1:
        return _as_output(np.ones_like(values), theta)
    return _as_output(np.sin(values) ** (domain.sphere_dim - 1), theta)
