"""Осесимметричная стрельба для сферического p-гармонического уравнения.

Профиль ω(θ) на шапке полуугла α удовлетворяет

    −(s W ω′)′ = K s W ω,   s = sin^{d−1}θ,  W = (γ²ω² + ω′²)^{p/2−1},

с ω′(0) = 0 и ω(α) = 0. Интегрируется развёрнутая форма с cot θ,
старт со сдвинутой точки θ₀ по ряду в центре.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicSpline

from ..decorators import log_action
from ..logging_config import get_solver_logger
from .exceptions import BracketError, DomainError, IntegrationError, MonotonicityError
from .geometry import Branch, CapDomain
from .models import Backend, ExponentResult, LambdaPoint, Profile
from .utils import (
    bisect_sign_change,
    validate_exponent_p,
    validate_positive,
    validate_sphere_dim,
)

# порог вырождения веса γ²ω² + ω′² (в единицах amplitude²)
WEIGHT_FLOOR = 1e-14

SCAN_GAMMA_MIN = 1e-2
SCAN_GAMMA_MAX = 1e2
SCAN_POINTS = 40
REFINE_POINTS = 10
PROFILE_POINTS = 1001


@dataclass(frozen=True)
class ShootState:
    theta: float
    omega: float
    domega: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.theta < math.pi):
            raise DomainError(f"θ={self.theta} вне [0, π).")
        if not (math.isfinite(self.omega) and math.isfinite(self.domega)):
            raise DomainError("Состояние стрельбы должно быть конечным.")


@dataclass(frozen=True)
class ShootSpec:
    """Параметры одного выстрела.

    K — константа правой части (γ·λ); amplitude — начальное значение ω
    в центре (уравнение однородно степени p − 1, профиль масштабируется).
    """

    p: float
    d: int
    gamma: float
    K: float
    series_start_theta: float = 1e-4
    rk_tol: float = 1e-10
    max_theta: float = math.pi - 1e-3
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", validate_exponent_p(self.p))
        object.__setattr__(self, "d", validate_sphere_dim(self.d))
        object.__setattr__(self, "gamma", validate_positive(self.gamma, "gamma"))
        if not math.isfinite(self.K):
            raise DomainError("K должно быть конечным.")
        object.__setattr__(self, "K", float(self.K))
        validate_positive(self.series_start_theta, "series_start_theta")
        validate_positive(self.rk_tol, "rk_tol")
        validate_positive(self.amplitude, "amplitude")
        if not (self.series_start_theta < self.max_theta < math.pi):
            raise DomainError("Требуется series_start_theta < max_theta < π.")

    @property
    def center_coefficient(self) -> float:
        """a₂ в разложении ω = 1 + a₂θ² + …; не зависит от p и γ."""
        return -self.K / (2.0 * self.d)


def series_start(spec: ShootSpec) -> ShootState:
    """Начальное состояние по ряду ω = t(1 + a₂θ²), ω′ = 2t·a₂θ."""
    if spec.series_start_theta > 1e-3:
        raise DomainError("series_start_theta должен быть ≤ 1e-3.")
    theta = spec.series_start_theta
    a2 = spec.center_coefficient
    t = spec.amplitude
    return ShootState(
        theta=theta,
        omega=t * (1.0 + a2 * theta * theta),
        domega=2.0 * t * a2 * theta,
    )


def _make_rhs(spec: ShootSpec):
    p, d, K = spec.p, spec.d, spec.K
    g2 = spec.gamma * spec.gamma
    floor = WEIGHT_FLOOR * spec.amplitude * spec.amplitude

    def rhs(theta: float, y: np.ndarray) -> list[float]:
        omega, domega = y[0], y[1]
        q = g2 * omega * omega + domega * domega
        if q < floor:
            raise IntegrationError(
                f"Вес γ²ω² + ω′² выродился (={q:.3e}) при θ={theta:.6g}.",
                theta,
            )
        denom = g2 * omega * omega + (p - 1.0) * domega * domega
        bracket = K * omega + (p - 2.0) * g2 * omega * domega * domega / q
        if d > 1:
            bracket += (d - 1) * math.cos(theta) / math.sin(theta) * domega
        return [domega, -bracket * q / denom]

    return rhs


def _integrate(
    spec: ShootSpec,
    theta_end: float,
    *,
    events: list | None = None,
    t_eval: np.ndarray | None = None,
):
    start = series_start(spec)
    span = theta_end - start.theta
    solution = solve_ivp(
        _make_rhs(spec),
        (start.theta, theta_end),
        [start.omega, start.domega],
        method="DOP853",
        rtol=spec.rk_tol,
        atol=spec.rk_tol * spec.amplitude,
        max_step=max(span / 50.0, 1e-6),
        events=events,
        t_eval=t_eval,
    )
    if solution.status == -1:
        reached = float(solution.t[-1]) if solution.t.size else start.theta
        raise IntegrationError(
            f"Интегратор остановился: {solution.message} (θ={reached:.6g}).",
            reached,
        )
    return solution


def shoot_first_zero(spec: ShootSpec) -> Optional[float]:
    """Первый ноль θ* выстрела или None (NoZero), если ω > 0 до max_θ."""
    if spec.K <= 0.0:
        # при K ≤ 0 профиль не убывает: нуля нет
        return None

    def hits_zero(theta: float, y: np.ndarray) -> float:
        return y[0]

    hits_zero.terminal = True
    hits_zero.direction = -1

    def turns_up(theta: float, y: np.ndarray) -> float:
        return y[1] + spec.rk_tol * spec.amplitude

    turns_up.terminal = True
    turns_up.direction = 1

    solution = _integrate(spec, spec.max_theta, events=[hits_zero, turns_up])
    if solution.t_events[0].size:
        return float(solution.t_events[0][0])
    return None


def shot_profile(spec: ShootSpec, alpha: float, n_points: int) -> Profile:
    """Профиль одного выстрела на равномерной сетке [0, α].

    Узлы левее θ₀ заполняются тем же рядом, что и старт.
    """
    if n_points < 3:
        raise DomainError("n_points должно быть ≥ 3.")
    alpha = validate_positive(alpha, "alpha")
    grid = np.linspace(0.0, alpha, n_points)
    start = series_start(spec)
    omega = np.empty_like(grid)
    domega = np.empty_like(grid)

    near = grid < start.theta
    a2 = spec.center_coefficient
    omega[near] = spec.amplitude * (1.0 + a2 * grid[near] ** 2)
    domega[near] = 2.0 * spec.amplitude * a2 * grid[near]

    far = ~near
    if np.any(far):
        solution = _integrate(spec, alpha, t_eval=grid[far])
        omega[far] = solution.y[0]
        domega[far] = solution.y[1]
    return Profile(grid, omega, domega, normalization="center")


def divergence_residual(
    theta: np.ndarray,
    omega: np.ndarray,
    domega: np.ndarray,
    p: float,
    d: int,
    gamma: float,
    K: float,
) -> np.ndarray:
    """Невязка −(sWω′)′ − K s W ω во внутренних узлах сетки.

    Производная потока sWω′ берётся от кубического сплайна.
    Однородна степени p − 1 по (ω, ω′).
    """
    theta = np.asarray(theta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    domega = np.asarray(domega, dtype=float)
    q = gamma * gamma * omega * omega + domega * domega
    weight = q ** (0.5 * p - 1.0)
    s = np.sin(theta) ** (d - 1) if d > 1 else np.ones_like(theta)
    flux = CubicSpline(theta, s * weight * domega)
    residual = -flux.derivative()(theta) - K * s * weight * omega
    return residual[1:-1]


def energy_identity_defect(
    profile: Profile,
    p: float,
    d: int,
    gamma: float,
    lam: float,
) -> float:
    """Относительный дефект тождества ∫Q^{p/2}s = γ(λ+γ)∫Wω²s."""
    theta, omega, domega = profile.theta, profile.omega, profile.domega
    q = gamma * gamma * omega * omega + domega * domega
    s = np.sin(theta) ** (d - 1) if d > 1 else np.ones_like(theta)
    lhs = simpson(q ** (0.5 * p) * s, x=theta)
    rhs = gamma * (lam + gamma) * simpson(q ** (0.5 * p - 1.0) * omega**2 * s, x=theta)
    return float(abs(lhs - rhs) / abs(lhs))


def _finalize_profile(spec: ShootSpec, alpha: float, n_points: int) -> Profile:
    profile = shot_profile(spec, alpha, n_points)
    omega = profile.omega.copy()
    omega[-1] = 0.0
    return Profile(profile.theta, omega, profile.domega, profile.normalization)


def _check_decreasing(samples: list[tuple[float, Optional[float]]]) -> None:
    finite = [(g, t) for g, t in samples if t is not None]
    for (g0, t0), (g1, t1) in zip(finite, finite[1:]):
        if not t1 < t0:
            raise MonotonicityError(
                f"θ*(γ) не убывает между γ={g0:.6g} и γ={g1:.6g}.",
                samples,
            )


@log_action("EXPONENT_SHOOTING")
def exponent_by_shooting(
    p: float,
    d: int,
    alpha: float,
    branch: Branch,
    tol: float = 1e-6,
    *,
    scan_range: tuple[float, float] = (SCAN_GAMMA_MIN, SCAN_GAMMA_MAX),
    n_points: int = PROFILE_POINTS,
    amplitude: float = 1.0,
) -> ExponentResult:
    """Показатель γ ветви branch, при котором первый ноль выстрела равен α.

    K связан с γ соотношением K = γ·λ(γ) выбранной ветви. Сканирование
    по геометрической сетке из 40 точек до первой смены знака θ*(γ) − α,
    одно уточнение на 10 подточек, затем бисекция до ширины tol.
    NoZero трактуется как θ* > α. amplitude = ω(0) всех выстрелов: уравнение
    однородно, так что γ от неё не зависит, а профиль масштабируется.
    """
    domain = CapDomain(d, alpha)
    p = validate_exponent_p(p)
    branch = Branch.parse(branch)
    tol = validate_positive(tol, "tol")
    amplitude = validate_positive(amplitude, "amplitude")
    logger = get_solver_logger()

    def first_zero(gamma: float) -> Optional[float]:
        K = branch.shoot_constant(p, d, gamma)
        return shoot_first_zero(
            ShootSpec(p=p, d=d, gamma=gamma, K=K, amplitude=amplitude)
        )

    def mismatch(theta_star: Optional[float]) -> float:
        return math.inf if theta_star is None else theta_star - domain.half_angle

    samples: list[tuple[float, Optional[float]]] = []

    def scan(
        grid: np.ndarray,
        previous: tuple[float, float] | None = None,
    ) -> tuple[tuple[float, float], tuple[float, float] | None]:
        """Идёт по сетке до первой смены знака; возвращает (последняя, пара)."""
        for gamma in grid:
            theta_star = first_zero(float(gamma))
            samples.append((float(gamma), theta_star))
            current = (float(gamma), mismatch(theta_star))
            if previous is not None and previous[1] > 0 >= current[1]:
                return current, previous
            previous = current
        return previous, None

    lo_range, hi_range = scan_range
    (hi, f_hi), found = scan(np.geomspace(lo_range, hi_range, SCAN_POINTS))
    _check_decreasing(samples)
    if found is None:
        raise BracketError(
            f"θ*(γ) − α не меняет знак на [{lo_range}, {hi_range}].",
            [(g, mismatch(t)) for g, t in samples],
        )
    lo, f_lo = found
    if f_hi != 0.0:
        inner = np.geomspace(lo, hi, REFINE_POINTS + 2)[1:-1]
        (last, f_last), refined = scan(inner, previous=(lo, f_lo))
        if refined is not None:
            lo, f_lo = refined
            hi, f_hi = last, f_last
        else:
            lo, f_lo = last, f_last
    samples.sort(key=lambda row: row[0])
    _check_decreasing(samples)
    logger.debug(f"EXPONENT_SHOOTING bracket=[{lo:.10g}, {hi:.10g}]")

    def bisect_target(gamma: float) -> float:
        theta_star = first_zero(gamma)
        samples.append((gamma, theta_star))
        return mismatch(theta_star)

    if f_hi == 0.0:
        gamma, iterations = hi, 0
    else:
        gamma, iterations = bisect_sign_change(bisect_target, lo, hi, f_lo, tol)
    samples.sort(key=lambda row: row[0])
    _check_decreasing(samples)

    K = branch.shoot_constant(p, d, gamma)
    spec = ShootSpec(p=p, d=d, gamma=gamma, K=K, amplitude=amplitude)
    theta_star = shoot_first_zero(spec)
    profile = _finalize_profile(spec, domain.half_angle, n_points)
    lam = K / gamma
    residual = float(
        np.max(
            np.abs(
                divergence_residual(
                    profile.theta, profile.omega, profile.domega, p, d, gamma, K
                )
            )
        )
    )
    diagnostics = {
        "theta_star": theta_star,
        "shots": len(samples),
        "boundary_flux_negative": profile.boundary_slope < 0.0,
        "energy_defect": energy_identity_defect(profile, p, d, gamma, lam),
    }
    return ExponentResult(
        branch=branch,
        gamma=gamma,
        lam=lam,
        profile=profile,
        backend=Backend.SHOOTING,
        residual=residual,
        bisection_iterations=iterations,
        p=p,
        d=d,
        diagnostics=diagnostics,
    )


@log_action("LAMBDA_SHOOTING")
def lambda_by_shooting(
    p: float,
    d: int,
    alpha: float,
    gamma: float,
    tol: float = 1e-9,
    *,
    n_points: int = PROFILE_POINTS,
) -> LambdaPoint:
    """λ_γ при фиксированном γ: бисекция по λ, пока |θ*(λ) − α| ≤ tol."""
    domain = CapDomain(d, alpha)
    p = validate_exponent_p(p)
    gamma = validate_positive(gamma, "gamma")
    tol = validate_positive(tol, "tol")
    alpha = domain.half_angle
    scan: list[tuple[float, float]] = []

    def mismatch(lam: float) -> float:
        spec = ShootSpec(p=p, d=d, gamma=gamma, K=gamma * lam)
        theta_star = shoot_first_zero(spec)
        value = math.inf if theta_star is None else theta_star - alpha
        scan.append((lam, value))
        return value

    # θ*(λ) убывает по λ: расширяем отрезок удвоением/делением пополам
    lo = hi = 1.0
    f_lo = f_hi = mismatch(1.0)
    if f_lo > 0:
        while f_hi > 0:
            lo, f_lo = hi, f_hi
            hi *= 2.0
            if hi > 1e12:
                raise BracketError("λ не найдено: θ* > α при всех λ.", scan)
            f_hi = mismatch(hi)
    else:
        while f_lo < 0:
            hi, f_hi = lo, f_lo
            lo *= 0.5
            if lo < 1e-12:
                raise BracketError("λ не найдено: θ* < α при всех λ.", scan)
            f_lo = mismatch(lo)

    lam, value = (lo, f_lo) if abs(f_lo) < abs(f_hi) else (hi, f_hi)
    iterations = 0
    while abs(value) > tol and hi - lo > 1e-15 * hi:
        lam = 0.5 * (lo + hi)
        value = mismatch(lam)
        iterations += 1
        if value > 0:
            lo = lam
        else:
            hi = lam

    spec = ShootSpec(p=p, d=d, gamma=gamma, K=gamma * lam)
    profile = _finalize_profile(spec, alpha, n_points)
    residual = float(
        np.max(
            np.abs(
                divergence_residual(
                    profile.theta, profile.omega, profile.domega, p, d, gamma, spec.K
                )
            )
        )
    )
    return LambdaPoint(
        gamma=gamma,
        lam=lam,
        backend=Backend.SHOOTING,
        diagnostics={
            "residual": residual,
            "iterations": iterations,
            "theta_mismatch": value,
        },
        profile=profile,
    )
