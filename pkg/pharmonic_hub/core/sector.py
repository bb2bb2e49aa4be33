"""Плоский случай N = 2: раствор сектора A(γ) как квадратура.

С φ = ω′/ω и φ = tan t подынтегральная функция ограничена:

    h(t) = ((p−1)sin²t + γ²cos²t) / ((γ²cos²t + sin²t)((p−1)sin²t + c cos²t)),

h(±π/2) = 1, A(γ) = 2∫₀^{π/2} h dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from ..decorators import log_action
from ..logging_config import get_solver_logger
from .exceptions import (
    BracketError,
    DomainError,
    IntegrationError,
    NoEigenfunctionError,
    QuadratureError,
)
from .geometry import Branch, SectorDomain
from .models import Profile
from .utils import validate_exponent_p, validate_positive

# верхний предел γ при расширении отрезка в gamma_of_opening
_GAMMA_CEILING = 1e8


@dataclass(frozen=True)
class SectorSolveSpec:
    p: float
    branch: Branch
    quad_tol: float = 1e-10
    max_subdiv: int = 60

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", validate_exponent_p(self.p))
        object.__setattr__(self, "branch", Branch.parse(self.branch))
        quad_tol = validate_positive(self.quad_tol, "quad_tol")
        object.__setattr__(self, "quad_tol", quad_tol)
        if int(self.max_subdiv) < 1:
            raise DomainError("max_subdiv должно быть ≥ 1.")

    @property
    def threshold(self) -> float:
        """γ_c: при γ ≤ γ_c константа c(γ) ≤ 0."""
        return self.branch.validity_threshold(self.p, 1)


def branch_constant(p: float, branch: Branch, gamma: float) -> float:
    """c(γ) = γ(γ(p−1)+p−2) (Singular) или γ(γ(p−1)+2−p) (Regular)."""
    gamma = validate_positive(gamma, "gamma")
    return Branch.parse(branch).shoot_constant(p, 1, gamma)


def _positive_constant(spec: SectorSolveSpec, gamma: float) -> float:
    c = branch_constant(spec.p, spec.branch, gamma)
    if c <= 0.0:
        raise NoEigenfunctionError(
            f"c(γ)={c:.6g} ≤ 0 при γ={gamma:.6g}: профиля с нулями нет.",
        )
    return c


def _integrand(t, p: float, g2: float, c: float):
    s2 = np.sin(t) ** 2
    c2 = np.cos(t) ** 2
    return ((p - 1.0) * s2 + g2 * c2) / ((g2 * c2 + s2) * ((p - 1.0) * s2 + c * c2))


def _log_slope(t, p: float, g2: float, c: float):
    """tan t·(h − 1) в сокращённом виде (гладко вплоть до t = π/2)."""
    s, co = np.sin(t), np.cos(t)
    s2, c2 = s * s, co * co
    core = (p - 1.0) * s2 + g2 - g2 * (p - 1.0) * s2 - g2 * c * c2 - c * s2
    return s * co * core / ((g2 * c2 + s2) * ((p - 1.0) * s2 + c * c2))


def opening_of_gamma(spec: SectorSolveSpec, gamma: float) -> float:
    """Полный раствор дуги A(γ), на которой существует профиль ветви."""
    gamma = validate_positive(gamma, "gamma")
    c = _positive_constant(spec, gamma)
    g2 = gamma * gamma
    # пики h около t = arctan γ и t = arctan √(c/(p−1))
    points = sorted(
        {
            t
            for t in (math.atan(gamma), math.atan(math.sqrt(c / (spec.p - 1.0))))
            if 1e-12 < t < 0.5 * math.pi - 1e-12
        }
    )
    result = quad(
        _integrand,
        0.0,
        0.5 * math.pi,
        args=(spec.p, g2, c),
        epsabs=0.5 * spec.quad_tol,
        epsrel=0.0,
        limit=int(spec.max_subdiv),
        points=points or None,
        full_output=1,
    )
    if len(result) > 3:
        raise QuadratureError(
            f"quad не сошлась при γ={gamma:.6g}: {result[3]}",
        )
    return 2.0 * float(result[0])


@log_action("SECTOR_GAMMA")
def gamma_of_opening(spec: SectorSolveSpec, opening: float) -> float:
    """Единственное γ > γ_c с A(γ) = opening (A убывает по γ)."""
    opening = SectorDomain(opening).opening
    edge = spec.threshold
    logger = get_solver_logger()

    def mismatch(offset: float) -> float:
        return opening_of_gamma(spec, edge + offset) - opening

    # ищем смещение от γ_c: удвоением вправо или делением пополам к γ_c
    offset = 1.0
    value = mismatch(offset)
    scan = [(edge + offset, value)]
    if value == 0.0:
        return edge + offset
    if value > 0:
        lo = offset
        while value > 0:
            lo = offset
            offset *= 2.0
            if edge + offset > _GAMMA_CEILING:
                raise BracketError(
                    f"A={opening} недостижим: A(γ) > A до γ={_GAMMA_CEILING:g}.",
                    scan,
                )
            value = mismatch(offset)
            scan.append((edge + offset, value))
        hi = offset
    else:
        hi = offset
        floor = 1e-14 * max(1.0, edge)
        while value < 0:
            hi = offset
            offset *= 0.5
            if offset < floor:
                raise BracketError(
                    f"A={opening} недостижим: A(γ) < A вплоть до γ_c={edge:g}.",
                    scan,
                )
            value = mismatch(offset)
            scan.append((edge + offset, value))
        lo = offset
    logger.debug(f"SECTOR_GAMMA bracket=[{edge + lo:.10g}, {edge + hi:.10g}]")
    root = brentq(mismatch, lo, hi, xtol=1e-15, rtol=4.0 * np.finfo(float).eps)
    return edge + float(root)


@log_action("SECTOR_PROFILE")
def sector_profile(spec: SectorSolveSpec, gamma: float, n_points: int) -> Profile:
    """Профиль ω на [0, A(γ)] с ω = 1 в середине дуги.

    На правой половине φ = −tan t, θ(t) = A/2 + ∫₀ᵗ h, ln ω = ln cos t + g(t),
    g′ = −tan t·(h − 1); левая половина — зеркальное отражение.
    """
    if int(n_points) < 3:
        raise DomainError("n_points должно быть ≥ 3.")
    n_points = int(n_points)
    gamma = validate_positive(gamma, "gamma")
    opening = opening_of_gamma(spec, gamma)
    c = _positive_constant(spec, gamma)
    p, g2 = spec.p, gamma * gamma

    def rhs(t: float, y: np.ndarray) -> list[float]:
        return [_integrand(t, p, g2, c), -_log_slope(t, p, g2, c)]

    half = 0.5 * math.pi
    solution = solve_ivp(
        rhs,
        (0.0, half),
        [0.0, 0.0],
        method="DOP853",
        rtol=1e-12,
        atol=1e-12,
        dense_output=True,
    )
    if not solution.success:
        raise IntegrationError(
            f"Профиль сектора не построен: {solution.message}",
            float(solution.t[-1]),
        )
    reach = float(solution.sol(half)[0])

    table_t = np.linspace(0.0, half, 4097)
    table_theta = solution.sol(table_t)[0]

    step = opening / (n_points - 1)
    middle = 0.5 * (n_points - 1)
    offsets = np.minimum(np.abs(np.arange(n_points) - middle) * step, reach)
    offsets[0] = offsets[-1] = reach

    # обращение θ(t): начальное приближение по таблице, затем Ньютон (θ′ = h)
    t = np.interp(offsets, table_theta, table_t)
    for _ in range(8):
        correction = (solution.sol(t)[0] - offsets) / _integrand(t, p, g2, c)
        t = np.clip(t - correction, 0.0, half)
        if np.max(np.abs(correction)) < 1e-15:
            break
    t[offsets <= 0.0] = 0.0
    t[offsets >= reach] = half

    scale = np.exp(solution.sol(t)[1])
    omega = np.cos(t) * scale
    slope = -np.sin(t) * scale
    omega[t >= half] = 0.0
    slope[t >= half] = -scale[t >= half]

    # левая половина: ω′ меняет знак
    left = np.arange(n_points) < middle
    slope[left] = -slope[left]
    if n_points % 2 == 1:
        omega[int(middle)] = 1.0
        slope[int(middle)] = 0.0
    theta = np.arange(n_points) * step
    theta[-1] = opening
    return Profile(theta, omega, slope, normalization="center")
