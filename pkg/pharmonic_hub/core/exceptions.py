from __future__ import annotations

from typing import Any, Sequence


class PHarmonicError(Exception):
    """Базовое исключение для ошибок численных решателей."""


class DomainError(PHarmonicError, ValueError):
    """Недопустимая область или аргумент (θ вне [0, α], α ∉ (0, π), p ≤ 1)."""


class NoEigenfunctionError(PHarmonicError):
    """Константа ветви c(γ) ≤ 0: положительного профиля с нулём нет."""


class QuadratureError(PHarmonicError):
    """Адаптивная квадратура не достигла quad_tol за max_subdiv делений."""


class IntegrationError(PHarmonicError):
    """Сбой ОДУ-интегратора; хранит угол, до которого удалось дойти."""

    def __init__(self, message: str, theta: float) -> None:
        super().__init__(message)
        self.theta = float(theta)


class BracketError(PHarmonicError):
    """Не удалось найти отрезок смены знака; хранит таблицу сканирования."""

    def __init__(
        self,
        message: str,
        scan: Sequence[tuple[float, Any]] = (),
    ) -> None:
        super().__init__(message)
        self.scan = list(scan)


class MonotonicityError(PHarmonicError):
    """Отображение, которое обязано быть монотонным, таковым не оказалось."""

    def __init__(
        self,
        message: str,
        samples: Sequence[tuple[float, Any]] = (),
    ) -> None:
        super().__init__(message)
        self.samples = list(samples)


class SolverError(PHarmonicError):
    """Метод Ньютона не сошёлся за max_newton итераций."""

    def __init__(
        self,
        message: str,
        last_residual: float,
        iterations: int,
    ) -> None:
        super().__init__(message)
        self.last_residual = float(last_residual)
        self.iterations = int(iterations)


class ConvergenceError(PHarmonicError):
    """Последовательность ε·v_ε не является последовательностью Коши."""

    def __init__(
        self,
        message: str,
        sequence: Sequence[tuple[float, float]] = (),
    ) -> None:
        super().__init__(message)
        self.sequence = list(sequence)
