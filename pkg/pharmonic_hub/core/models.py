from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from .exceptions import DomainError
from .geometry import Branch


class Backend(str, Enum):
    """Способ вычисления эргодической константы λ_γ."""

    SHOOTING = "shooting"
    ERGODIC = "ergodic"

    @classmethod
    def parse(cls, raw: "str | Backend") -> "Backend":
        if isinstance(raw, Backend):
            return raw
        try:
            return cls(str(raw).strip().lower())
        except ValueError as exc:
            raise DomainError(f"Неизвестный backend: {raw!r}.") from exc


def _as_grid(values: Any, name: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.ndim != 1:
        raise DomainError(f"{name} должен быть одномерным массивом.")
    return array


@dataclass(frozen=True, eq=False)
class Profile:
    """Сферический профиль ω на сетке θ вместе с производной.

    normalization — где профиль нормирован на 1:
    "center" (ω(0) = 1 или середина дуги сектора), "axis" (первый узел
    сетки с ячейками, ближайший к оси).
    """

    theta: np.ndarray
    omega: np.ndarray
    domega: np.ndarray
    normalization: str = "center"

    def __post_init__(self) -> None:
        theta = _as_grid(self.theta, "theta")
        omega = _as_grid(self.omega, "omega")
        domega = _as_grid(self.domega, "domega")
        if not (theta.shape == omega.shape == domega.shape):
            raise DomainError("theta, omega и domega должны иметь одну длину.")
        if theta.size < 2:
            raise DomainError("Профиль должен содержать хотя бы два узла.")
        if np.any(np.diff(theta) <= 0):
            raise DomainError("Сетка θ должна строго возрастать.")
        if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(domega))):
            raise DomainError("Профиль содержит нечисловые значения.")
        for array in (theta, omega, domega):
            array.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "domega", domega)

    @property
    def boundary_slope(self) -> float:
        return float(self.domega[-1])

    def is_positive_inside(self) -> bool:
        """ω > 0 во внутренних узлах; концевые узлы могут лежать на границе."""
        ends = self.omega[[0, -1]]
        return bool(np.all(self.omega[1:-1] > 0.0) and np.all(ends >= 0.0))

    def scaled(self, factor: float) -> "Profile":
        return Profile(
            self.theta,
            factor * self.omega,
            factor * self.domega,
            self.normalization,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta": self.theta.tolist(),
            "omega": self.omega.tolist(),
            "omega_prime": self.domega.tolist(),
            "normalization": self.normalization,
        }


@dataclass(frozen=True, eq=False)
class VProfile:
    """Решение штрафной задачи v на сетке с ячейками и граничным узлом θ = α.

    dv во внутренних узлах — центральная производная, согласованная
    с заменой ω = e^{−γv}; в граничном узле — односторонняя разность.
    """

    theta: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    eps: float
    gamma: float
    p: float
    d: int
    alpha: float
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        theta = _as_grid(self.theta, "theta")
        v = _as_grid(self.v, "v")
        dv = _as_grid(self.dv, "dv")
        if not (theta.shape == v.shape == dv.shape):
            raise DomainError("theta, v и dv должны иметь одну длину.")
        if not np.all(np.isfinite(v)):
            raise DomainError("v содержит нечисловые значения.")
        for array in (theta, v, dv):
            array.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "dv", dv)

    @property
    def rho(self) -> np.ndarray:
        return self.alpha - self.theta

    @property
    def boundary_value(self) -> float:
        return float(self.v[-1])

    def value_at(self, theta: float) -> float:
        return float(np.interp(theta, self.theta, self.v))


@dataclass(frozen=True, eq=False)
class LambdaPoint:
    """Одна точка отображения γ ↦ λ_γ с указанием backend и диагностикой.

    ok=False помечает пропуск в свипе: lam = nan, причина в diagnostics.
    """

    gamma: float
    lam: float
    backend: Backend
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    profile: Optional[Profile] = None
    potential: Optional[VProfile] = None
    ok: bool = True

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise DomainError(f"Требуется γ > 0, получено {self.gamma}.")
        if self.ok and not (math.isfinite(self.lam) and self.lam > 0):
            raise DomainError(f"Требуется λ > 0, получено λ={self.lam}.")
        object.__setattr__(self, "backend", Backend.parse(self.backend))

    @classmethod
    def gap(cls, gamma: float, backend: Backend, error: Exception) -> "LambdaPoint":
        return cls(
            gamma=gamma,
            lam=math.nan,
            backend=backend,
            diagnostics={
                "error_type": type(error).__name__,
                "error_message": str(error),
            },
            ok=False,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gamma": self.gamma,
            "lambda": self.lam if self.ok else None,
            "backend": self.backend.value,
            "ok": self.ok,
            "diagnostics": dict(self.diagnostics),
        }


@dataclass(frozen=True, eq=False)
class ExponentResult:
    """Найденный показатель β_S (Singular) или β̃_S (Regular) и его профиль."""

    branch: Branch
    gamma: float
    lam: float
    profile: Profile
    backend: Backend
    residual: float
    bisection_iterations: int
    p: float
    d: int
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise DomainError(f"Требуется γ > 0, получено {self.gamma}.")
        object.__setattr__(self, "branch", Branch.parse(self.branch))
        object.__setattr__(self, "backend", Backend.parse(self.backend))
        # β̃(p−1) + d + 1 − p > 0 для регулярной ветви
        admissible = self.branch.target_lambda(self.p, self.d, self.gamma) > 0
        self.diagnostics.setdefault("admissible", bool(admissible))

    @property
    def boundary_slope(self) -> float:
        return self.profile.boundary_slope

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gamma": self.gamma,
            "lambda": self.lam,
            "branch": self.branch.value,
            "backend": self.backend.value,
            "residual": self.residual,
            "bisection_iterations": self.bisection_iterations,
            "boundary_slope": self.boundary_slope,
        }
