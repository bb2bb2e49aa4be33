"""Независимые эталоны: линейная задача Штурма–Лиувилля при p = 2,
алгебра показателей X² − (N−2)X − λ = 0 и раствор сектора через φ-ОДУ.

Эталон намеренно не использует интегратор из cap_ode: здесь
классический RK4 с постоянным шагом на чистом Python.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from ..decorators import log_action
from .exceptions import BracketError, DomainError, IntegrationError
from .geometry import Branch, CapDomain
from .models import Profile
from .utils import validate_exponent_p, validate_positive

DEFAULT_GRID = 4000
_MAX_EXPANSIONS = 200


@dataclass(frozen=True, eq=False)
class EigenResult:
    lambda1: float
    eigenfunction: Profile
    grid_size: int

    def __post_init__(self) -> None:
        if not self.lambda1 > 0:
            raise DomainError(f"Требуется λ1 > 0, получено {self.lambda1}.")


def _rk4_linear(
    lam: float,
    d: int,
    alpha: float,
    grid_size: int,
    *,
    record: bool = False,
) -> tuple[float, int, list[tuple[float, float, float]]]:
    """RK4 для ω″ = −λω − (d−1)cot θ·ω′ от θ = h до θ = α.

    Возвращает (ω(α), число смен знака ω, узлы при record=True).
    """
    h = alpha / grid_size
    a2 = -lam / (2.0 * d)
    a4 = a2 * (2.0 * (d - 1) / 3.0 - lam) / (4.0 * d + 8.0)
    theta = h
    omega = 1.0 + a2 * h**2 + a4 * h**4
    slope = 2.0 * a2 * h + 4.0 * a4 * h**3
    k = float(d - 1)

    def accel(t: float, w: float, dw: float) -> float:
        return -lam * w - (k * math.cos(t) / math.sin(t) * dw if k else 0.0)

    nodes = [(0.0, 1.0, 0.0), (theta, omega, slope)] if record else []
    sign_changes = 0
    for i in range(1, grid_size):
        k1w, k1d = slope, accel(theta, omega, slope)
        tm = theta + 0.5 * h
        k2w = slope + 0.5 * h * k1d
        k2d = accel(tm, omega + 0.5 * h * k1w, k2w)
        k3w = slope + 0.5 * h * k2d
        k3d = accel(tm, omega + 0.5 * h * k2w, k3w)
        k4w = slope + h * k3d
        k4d = accel(theta + h, omega + h * k3w, k4w)
        new_omega = omega + h * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
        slope = slope + h * (k1d + 2.0 * k2d + 2.0 * k3d + k4d) / 6.0
        if (new_omega < 0.0) != (omega < 0.0):
            sign_changes += 1
        omega = new_omega
        theta = alpha if i == grid_size - 1 else (i + 1) * h
        if not (math.isfinite(omega) and math.isfinite(slope)):
            raise IntegrationError(f"RK4 разошёлся при λ={lam:.6g}.", theta)
        if record:
            nodes.append((theta, omega, slope))
    return omega, sign_changes, nodes


@log_action("ORACLE_EIGENVALUE")
def p2_cap_eigenvalue(
    d: int, alpha: float, grid_size: int = DEFAULT_GRID
) -> EigenResult:
    """Первое собственное значение −Δ на шапке с ω′(0) = 0, ω(α) = 0.

    Стрельба по λ: отрезок расширяется множителем 1.5, пока на [0, α]
    не останется ровно одна смена знака ω; корень ω(α; λ) — brentq.
    """
    domain = CapDomain(d, alpha)
    if int(grid_size) < 8:
        raise DomainError("grid_size должно быть ≥ 8.")
    grid_size = int(grid_size)
    d, alpha = domain.sphere_dim, domain.half_angle

    def sign_changes(lam: float) -> int:
        return _rk4_linear(lam, d, alpha, grid_size)[1]

    lo = hi = None
    lam = 1.0
    scan: list[tuple[float, int]] = []
    for _ in range(_MAX_EXPANSIONS):
        changes = sign_changes(lam)
        scan.append((lam, changes))
        if changes == 0:
            lo = lam
            if hi is not None:
                break
            lam *= 1.5
        elif changes == 1:
            hi = lam
            if lo is not None:
                break
            lam /= 1.5
        else:
            lam /= 1.5
    if lo is None or hi is None:
        raise BracketError("Не удалось окружить первое собственное значение.", scan)

    lambda1 = brentq(
        lambda value: _rk4_linear(value, d, alpha, grid_size)[0],
        lo,
        hi,
        xtol=1e-13,
        rtol=4.0 * np.finfo(float).eps,
    )
    _, _, nodes = _rk4_linear(lambda1, d, alpha, grid_size, record=True)
    table = np.array(nodes)
    omega = table[:, 1].copy()
    omega[-1] = 0.0
    profile = Profile(table[:, 0], omega, table[:, 2], normalization="center")
    return EigenResult(
        lambda1=float(lambda1), eigenfunction=profile, grid_size=grid_size
    )


def p2_exponents(ambient_dim: int, lambda1: float) -> tuple[float, float]:
    """Корни X² − (N−2)X − λ1 = 0: (β_singular, β_regular)."""
    if int(ambient_dim) < 2:
        raise DomainError("Требуется N ≥ 2.")
    lambda1 = validate_positive(lambda1, "lambda1")
    shift = float(ambient_dim) - 2.0
    root = math.sqrt(shift * shift + 4.0 * lambda1)
    return 0.5 * (shift + root), 0.5 * (root - shift)


def sector_opening_by_ode(p: float, branch: Branch, gamma: float) -> float:
    """Раствор A(γ) интегрированием φ-ОДУ по углу, без квадратуры.

    Угол t = arctan φ проходит от π/2 до −π/2, dt/dθ = −1/h(t);
    A — θ, на котором t достигает −π/2.
    """
    p = validate_exponent_p(p)
    gamma = validate_positive(gamma, "gamma")
    c = Branch.parse(branch).shoot_constant(p, 1, gamma)
    if c <= 0.0:
        raise DomainError(f"c(γ)={c:.6g} ≤ 0: раствор не определён.")
    g2 = gamma * gamma

    def rhs(theta: float, y: np.ndarray) -> list[float]:
        s2 = math.sin(y[0]) ** 2
        c2 = math.cos(y[0]) ** 2
        speed = (g2 * c2 + s2) * ((p - 1.0) * s2 + c * c2) / (g2 * c2 + (p - 1.0) * s2)
        return [-speed]

    def reaches_end(theta: float, y: np.ndarray) -> float:
        return y[0] + 0.5 * math.pi

    reaches_end.terminal = True
    reaches_end.direction = -1

    solution = solve_ivp(
        rhs,
        (0.0, 1e4),
        [0.5 * math.pi],
        method="DOP853",
        rtol=1e-12,
        atol=1e-13,
        events=reaches_end,
    )
    if not solution.t_events[0].size:
        raise IntegrationError(
            "φ-ОДУ не дошло до t = −π/2.",
            float(solution.t[-1]),
        )
    return float(solution.t_events[0][0])
