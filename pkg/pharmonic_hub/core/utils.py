from __future__ import annotations

import math
from typing import Callable, Optional

from .exceptions import BracketError, DomainError


def validate_exponent_p(p: float) -> float:
    """Проверка показателя p: число > 1. Возвращает p как float."""
    if isinstance(p, bool) or not isinstance(p, (int, float)):
        raise DomainError("p должно быть числом.")
    value = float(p)
    if not math.isfinite(value) or value <= 1.0:
        raise DomainError(f"Требуется p > 1, получено p={value}.")
    return value


def validate_sphere_dim(d: int) -> int:
    """Проверка размерности сферы: целое d ≥ 1."""
    if isinstance(d, bool) or not isinstance(d, int):
        raise DomainError("Размерность сферы d должна быть целым числом.")
    if d < 1:
        raise DomainError(f"Требуется d ≥ 1, получено d={d}.")
    return d


def validate_positive(value: float, name: str) -> float:
    """Проверка: конечное число > 0."""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DomainError(f"{name} должно быть числом.")
    result = float(value)
    if not math.isfinite(result) or result <= 0.0:
        raise DomainError(f"Требуется {name} > 0, получено {name}={result}.")
    return result


def validate_half_angle(alpha: float) -> float:
    """Проверка полуугла шапки: α ∈ (0, π)."""
    value = validate_positive(alpha, "alpha")
    if value >= math.pi:
        raise DomainError(f"Требуется 0 < alpha < π, получено alpha={value}.")
    return value


def bisect_sign_change(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    f_lo: float,
    tol: float,
    *,
    ftol: Optional[float] = None,
    max_iter: int = 200,
) -> tuple[float, int]:
    """Бисекция на отрезке [lo, hi], где func меняет знак.

    Останавливается, когда длина отрезка ≤ tol; при заданном ftol
    дополнительно требуется |func| ≤ ftol в возвращаемой точке.

    Возвращает (корень, число итераций).
    """
    if f_lo == 0.0:
        return lo, 0
    iterations = 0
    while iterations < max_iter:
        settled = hi - lo <= tol
        if settled and ftol is None:
            break
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        f_mid = func(mid)
        iterations += 1
        if f_mid == 0.0 or (settled and abs(f_mid) <= ftol):
            return mid, iterations
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi), iterations


def expand_bracket(
    func: Callable[[float], float],
    start: float,
    *,
    factor: float = 2.0,
    lower: float = 1e-2,
    upper: float = 1e2,
) -> tuple[float, float, float, float]:
    """Расширение отрезка от start умножением/делением на factor.

    Ищет соседние точки x_k, x_{k+1} внутри [lower, upper] со сменой
    знака func. Возвращает (lo, hi, f_lo, f_hi).
    """
    scan: list[tuple[float, float]] = []
    x0 = min(max(start, lower), upper)
    f0 = func(x0)
    scan.append((x0, f0))
    if f0 == 0.0:
        return x0, x0, f0, f0

    # знак f0 определяет направление: для убывающей функции f0 > 0 → вправо
    step = factor if f0 > 0 else 1.0 / factor
    x_prev, f_prev = x0, f0
    while True:
        x_next = x_prev * step
        if x_next > upper * (1 + 1e-12) or x_next < lower * (1 - 1e-12):
            raise BracketError(
                f"Смена знака не найдена в [{lower}, {upper}].",
                scan,
            )
        f_next = func(x_next)
        scan.append((x_next, f_next))
        if (f_next > 0) != (f_prev > 0) or f_next == 0.0:
            if x_next > x_prev:
                return x_prev, x_next, f_prev, f_next
            return x_next, x_prev, f_next, f_prev
        x_prev, f_prev = x_next, f_next
