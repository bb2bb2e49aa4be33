"""Эргодическая константа через штрафную задачу и исчезающий дисконт.

Штрафная задача на шапке (v = n на границе, v′(0) = 0):

    −(v″ + (d−1)cot θ·v′) − (p−2)v″v′²/(1+v′²) + γ(p−1)v′² + εv = 0.

Через ω = e^{−γv} оператор записывается как

    a(g)·ω″/(γω) + (d−1)cot θ·ω′/(γω) + γ(p−2)g²/(1+g²) + εv,

a(g) = (1+(p−1)g²)/(1+g²), g = v′, а отношения ω″/ω и ω′/ω
дискретизуются центральными разностями, выраженными через разности v:

    ω″/ω ≈ (E⁺ + E⁻ − 2)/h²,  ω′/ω ≈ (E⁺ − E⁻)/(2h),
    E⁺ = e^{−γ(v_{i+1}−v_i)},   E⁻ = e^{γ(v_i−v_{i−1})}.

Узлы с ячейками θ_i = (i+½)h, h = α/(M+½), граничный узел θ_M = α,
фиктивный узел v_{−1} = v_0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import spsolve

from ..decorators import log_action
from ..logging_config import get_solver_logger
from .cap_ode import divergence_residual
from .exceptions import ConvergenceError, DomainError, SolverError
from .geometry import CapDomain
from .models import Backend, LambdaPoint, Profile, VProfile
from .utils import validate_exponent_p, validate_positive

DEFAULT_SCHEDULE: tuple[float, ...] = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
DEFAULT_GRID = 4000
CAUCHY_TOL = 0.05

# ω на границе относительно соседнего узла: выше порога граница «протекает»
LEAK_TOL = 1e-10
_LEAK_MARGIN = 46.0
_MAX_LEAK_RETRIES = 5

_EXP_CLIP = 700.0
_DAMPING_FLOOR = 2.0**-20
_BARRIER_SLACK = 1e-8
_ROUNDING_FACTOR = 8.0

MIN_GRID = 64

NRule = Callable[[float, "BarrierParams"], float]


@dataclass(frozen=True)
class PenalizedSpec:
    p: float
    d: int
    alpha: float
    gamma: float
    eps: float
    boundary_value: float
    grid_size: int = DEFAULT_GRID
    newton_tol: float = 1e-10
    max_newton: int = 100

    def __post_init__(self) -> None:
        domain = CapDomain(self.d, self.alpha)
        object.__setattr__(self, "p", validate_exponent_p(self.p))
        object.__setattr__(self, "alpha", domain.half_angle)
        object.__setattr__(self, "gamma", validate_positive(self.gamma, "gamma"))
        object.__setattr__(self, "eps", validate_positive(self.eps, "eps"))
        if not math.isfinite(self.boundary_value):
            raise DomainError("boundary_value должно быть конечным.")
        if int(self.grid_size) < MIN_GRID:
            raise DomainError(f"grid_size должно быть ≥ {MIN_GRID}.")
        object.__setattr__(self, "grid_size", int(self.grid_size))
        validate_positive(self.newton_tol, "newton_tol")
        if int(self.max_newton) < 1:
            raise DomainError("max_newton должно быть ≥ 1.")

    @property
    def step(self) -> float:
        return self.alpha / (self.grid_size + 0.5)

    def grid(self) -> np.ndarray:
        """Узлы θ_0..θ_{M−1} и граничный узел θ_M = α."""
        theta = (np.arange(self.grid_size + 1) + 0.5) * self.step
        theta[-1] = self.alpha
        return theta

    def with_boundary(self, value: float) -> "PenalizedSpec":
        return PenalizedSpec(
            p=self.p,
            d=self.d,
            alpha=self.alpha,
            gamma=self.gamma,
            eps=self.eps,
            boundary_value=value,
            grid_size=self.grid_size,
            newton_tol=self.newton_tol,
            max_newton=self.max_newton,
        )


@dataclass(frozen=True)
class BarrierParams:
    M0: float
    M1: float
    Mstar: float

    def __post_init__(self) -> None:
        for name in ("M0", "M1", "Mstar"):
            validate_positive(getattr(self, name), name)


class _Operator:
    """Дискретный оператор, его невязка, масштаб и трёхдиагональный якобиан."""

    def __init__(self, spec: PenalizedSpec) -> None:
        self.spec = spec
        self.h = spec.step
        theta = spec.grid()[:-1]
        self.cot = (spec.d - 1) * np.cos(theta) / np.sin(theta)

    def _parts(self, v: np.ndarray, boundary: float):
        spec, h = self.spec, self.h
        gamma = spec.gamma
        ahead = np.append(v[1:], boundary)
        behind = np.concatenate(([v[0]], v[:-1]))
        e_plus = np.exp(np.clip(-gamma * (ahead - v), -_EXP_CLIP, _EXP_CLIP))
        e_minus = np.exp(np.clip(gamma * (v - behind), -_EXP_CLIP, _EXP_CLIP))
        l2 = (e_plus + e_minus - 2.0) / (gamma * h * h)
        l1 = (e_plus - e_minus) / (2.0 * gamma * h)
        g = -l1
        g2 = g * g
        a = (1.0 + (spec.p - 1.0) * g2) / (1.0 + g2)
        return e_plus, e_minus, l2, l1, g, a

    def residual(self, v: np.ndarray, boundary: float) -> np.ndarray:
        spec = self.spec
        _, _, l2, l1, g, a = self._parts(v, boundary)
        g2 = g * g
        return (
            a * l2
            + self.cot * l1
            + spec.gamma * (spec.p - 2.0) * g2 / (1.0 + g2)
            + spec.eps * v
        )

    def scale(self, v: np.ndarray, boundary: float) -> np.ndarray:
        spec = self.spec
        _, _, l2, l1, _, a = self._parts(v, boundary)
        return (
            1.0
            + np.abs(a * l2)
            + np.abs(self.cot * l1)
            + spec.gamma * abs(spec.p - 2.0)
            + spec.eps * np.abs(v)
        )

    def slope(self, v: np.ndarray, boundary: float) -> np.ndarray:
        """g = v′, согласованная со схемой центральная производная."""
        return self._parts(v, boundary)[4]

    def jacobian(self, v: np.ndarray, boundary: float):
        spec, h = self.spec, self.h
        gamma, p = spec.gamma, spec.p
        e_plus, e_minus, l2, _, g, a = self._parts(v, boundary)
        denom = (1.0 + g * g) ** 2
        da = (p - 2.0) * 2.0 * g / denom
        dq = 2.0 * g / denom
        c1 = self.cot - (l2 * da + gamma * (p - 2.0) * dq)

        main = a * (e_plus + e_minus) / (h * h) + c1 * (e_plus - e_minus) / (2.0 * h)
        upper = -a * e_plus / (h * h) - c1 * e_plus / (2.0 * h)
        lower = -a * e_minus / (h * h) + c1 * e_minus / (2.0 * h)
        # фиктивный узел v_{−1} = v_0 складывается в столбец 0
        main[0] += lower[0]
        main += spec.eps
        return diags(
            [lower[1:], main, upper[:-1]],
            offsets=[-1, 0, 1],
            format="csc",
        )


def _merit(op: _Operator, v: np.ndarray, boundary: float) -> tuple[float, float]:
    scaled = op.residual(v, boundary) / op.scale(v, boundary)
    if not np.all(np.isfinite(scaled)):
        return math.inf, math.inf
    return float(np.linalg.norm(scaled)), float(np.max(np.abs(scaled)))


def _rounding_level(op: _Operator, v: np.ndarray, boundary: float, jacobian) -> float:
    """Пол невязки _merit из-за округления v: ε_mach·(|J|·|v| + scale)/scale."""
    scale = op.scale(v, boundary)
    spread = abs(jacobian) @ np.abs(v) + scale
    level = np.finfo(float).eps * np.max(spread / scale)
    return _ROUNDING_FACTOR * float(level)


def _to_vprofile(
    spec: PenalizedSpec,
    v: np.ndarray,
    diagnostics: dict,
) -> VProfile:
    op = _Operator(spec)
    boundary = spec.boundary_value
    dv = op.slope(v, boundary)
    tail = (boundary - v[-1]) / op.h
    return VProfile(
        theta=spec.grid(),
        v=np.append(v, boundary),
        dv=np.append(dv, tail),
        eps=spec.eps,
        gamma=spec.gamma,
        p=spec.p,
        d=spec.d,
        alpha=spec.alpha,
        diagnostics=diagnostics,
    )


def upper_barrier(
    rho: "float | np.ndarray",
    gamma: float,
    params: BarrierParams,
    eps: float,
) -> "float | np.ndarray":
    """ū = −ln ρ/γ − M₀ρ + M₁/ε."""
    return -np.log(rho) / gamma - params.M0 * rho + params.M1 / eps


def lower_barrier(
    rho: "float | np.ndarray",
    gamma: float,
    params: BarrierParams,
    eps: float,
    shift: float,
) -> "float | np.ndarray":
    """u̲ = −ln(ρ+h)/γ + M₀(ρ+h) − M₁/ε (сдвиг h делает её конечной на границе)."""
    shifted = rho + shift
    return -np.log(shifted) / gamma + params.M0 * shifted - params.M1 / eps


def barrier_constants(spec: PenalizedSpec) -> BarrierParams:
    """M₀, M₁ и M* для пары барьеров на данной сетке.

    M₀ = 1 + sup|Δ_g ρ|/γ по внешней половине (θ ≥ α/2);
    M₁ — наименьшая константа (с запасом 5%), при которой дискретный
    оператор неотрицателен на ū и неположителен на u̲.
    """
    op = _Operator(spec)
    theta = spec.grid()[:-1]
    rho = spec.alpha - theta
    h = op.h
    outer = theta >= 0.5 * spec.alpha
    laplace_rho = np.abs((spec.d - 1) * np.cos(theta[outer]) / np.sin(theta[outer]))
    M0 = 1.0 + float(np.max(laplace_rho, initial=0.0)) / spec.gamma

    unit = BarrierParams(M0=M0, M1=1.0, Mstar=1.0)
    # барьеры без аддитивной константы M₁/ε: оператор сдвигается ровно на ±M₁
    upper_core = upper_barrier(rho, spec.gamma, unit, spec.eps) - 1.0 / spec.eps
    lower_core = lower_barrier(rho, spec.gamma, unit, spec.eps, h) + 1.0 / spec.eps
    far = upper_core[-1] + _LEAK_MARGIN / spec.gamma
    lower_edge = -math.log(h) / spec.gamma + M0 * h
    need_upper = -float(np.min(op.residual(upper_core, far)))
    need_lower = float(np.max(op.residual(lower_core, lower_edge)))
    # u̲(α) ≤ n = M₁/ε для правила n по умолчанию
    need_edge = 0.5 * spec.eps * lower_edge
    M1 = 1.05 * max(need_upper, need_lower, need_edge, 1e-3)
    return BarrierParams(M0=M0, M1=M1, Mstar=M0 * spec.alpha + 1.0)


def barrier_profiles(
    spec: PenalizedSpec,
    params: BarrierParams,
) -> tuple[VProfile, VProfile]:
    """Пара (верхний, нижний) барьер на сетке.

    Верхний барьер в граничном узле записан как n; нижний конечен
    благодаря сдвигу на h. dv — аналитические производные по θ.
    """
    theta = spec.grid()
    rho = spec.alpha - theta[:-1]
    h = spec.step
    gamma, eps = spec.gamma, spec.eps

    upper = upper_barrier(rho, gamma, params, eps)
    upper_dv = 1.0 / (gamma * rho) + params.M0
    lower = lower_barrier(rho, gamma, params, eps, h)
    lower_dv = 1.0 / (gamma * (rho + h)) - params.M0
    lower_edge = float(lower_barrier(0.0, gamma, params, eps, h))

    common = dict(eps=eps, gamma=gamma, p=spec.p, d=spec.d, alpha=spec.alpha)
    upper_profile = VProfile(
        theta=theta,
        v=np.append(upper, spec.boundary_value),
        dv=np.append(upper_dv, (spec.boundary_value - upper[-1]) / h),
        diagnostics={"kind": "upper"},
        **common,
    )
    lower_profile = VProfile(
        theta=theta,
        v=np.append(lower, lower_edge),
        dv=np.append(lower_dv, 1.0 / (gamma * h) - params.M0),
        diagnostics={"kind": "lower"},
        **common,
    )
    return upper_profile, lower_profile


def initial_profile(
    spec: PenalizedSpec,
    params: BarrierParams,
    kind: str = "barrier",
) -> VProfile:
    """Начальное приближение для Ньютона.

    "barrier" — полусумма барьеров во внутренних узлах;
    "constant" — постоянная n/2.
    """
    upper, lower = barrier_profiles(spec, params)
    if kind == "barrier":
        v = 0.5 * (upper.v[:-1] + lower.v[:-1])
    elif kind == "constant":
        v = np.full(spec.grid_size, 0.5 * spec.boundary_value)
    else:
        raise DomainError(f"Неизвестный способ инициализации: {kind!r}.")
    return _to_vprofile(spec, v, {"kind": kind})


def _barrier_warnings(spec: PenalizedSpec, v: np.ndarray) -> list[str]:
    params = barrier_constants(spec)
    upper, lower = barrier_profiles(spec, params)
    slack = _BARRIER_SLACK * (1.0 + np.abs(v))
    warnings: list[str] = []
    above = np.max(v - upper.v[:-1] - slack)
    below = np.max(lower.v[:-1] - v - slack)
    if above > 0:
        warnings.append(f"v выше верхнего барьера на {above:.3e}")
    if below > 0:
        warnings.append(f"v ниже нижнего барьера на {below:.3e}")
    return warnings


def _newton(spec: PenalizedSpec, v: np.ndarray) -> tuple[np.ndarray, dict]:
    logger = get_solver_logger()
    op = _Operator(spec)
    boundary = spec.boundary_value
    merit, peak = _merit(op, v, boundary)
    if not math.isfinite(merit):
        raise SolverError("Невязка начального приближения не конечна.", math.inf, 0)

    floor = 0.0

    def stats(iterations: int, stalled: bool) -> dict:
        return {
            "iterations": iterations,
            "residual": peak,
            "rounding_level": floor,
            "stalled": stalled,
        }

    for iteration in range(1, spec.max_newton + 1):
        if peak <= spec.newton_tol:
            return v, stats(iteration - 1, False)
        jacobian = op.jacobian(v, boundary)
        floor = _rounding_level(op, v, boundary, jacobian)
        direction = spsolve(jacobian, -op.residual(v, boundary))
        damping = 1.0
        while damping >= _DAMPING_FLOOR:
            trial = v + damping * direction
            trial_merit, trial_peak = _merit(op, trial, boundary)
            if trial_merit < merit:
                break
            damping *= 0.5
        else:
            # спуск остановился: принимаем только невязку на уровне округления
            if peak <= floor:
                return v, stats(iteration, True)
            raise SolverError(
                f"Линейный поиск не уменьшил невязку (итерация {iteration}, "
                f"уровень округления {floor:.3e}).",
                peak,
                iteration,
            )
        increment = damping * float(np.max(np.abs(direction)))
        v, merit, peak = trial, trial_merit, trial_peak
        logger.debug(
            f"NEWTON eps={spec.eps:.3g} it={iteration} damping={damping:.3g} "
            f"residual={peak:.3e} floor={floor:.3e}"
        )
        if increment <= 1e-12 * (1.0 + float(np.max(np.abs(v)))) and peak <= floor:
            return v, stats(iteration, True)
    if peak <= max(spec.newton_tol, floor):
        return v, stats(spec.max_newton, peak > spec.newton_tol)
    raise SolverError(
        f"Ньютон не сошёлся за {spec.max_newton} итераций.",
        peak,
        spec.max_newton,
    )


def solve_penalized(spec: PenalizedSpec, init: VProfile) -> VProfile:
    """Демпфированный Ньютон для штрафной задачи с v(α) = n.

    Нарушение барьеров сверх допуска не фатально: попадает
    в diagnostics["warnings"] и в лог уровня WARNING.
    """
    if init.v.size != spec.grid_size + 1:
        raise DomainError("Начальное приближение задано на другой сетке.")
    if not np.all(np.isfinite(init.v)):
        raise DomainError("Начальное приближение содержит нечисловые значения.")
    v, stats = _newton(spec, np.array(init.v[:-1], dtype=float))
    warnings = _barrier_warnings(spec, v)
    if warnings:
        logger = get_solver_logger()
        for message in warnings:
            logger.warning(f"PENALIZED eps={spec.eps:.3g} {message}")
    leak = math.exp(-spec.gamma * (spec.boundary_value - v[-1]))
    diagnostics = {
        "iterations": stats["iterations"],
        "residual": stats["residual"],
        "rounding_level": stats["rounding_level"],
        "stalled": stats["stalled"],
        "grid_size": spec.grid_size,
        "leak": leak,
        "warnings": warnings,
    }
    return _to_vprofile(spec, v, diagnostics)


def _solve_without_leak(spec: PenalizedSpec, init: VProfile) -> VProfile:
    """solve_penalized с подъёмом n, пока ω на границе не станет пренебрежимой."""
    logger = get_solver_logger()
    solution = solve_penalized(spec, init)
    for _ in range(_MAX_LEAK_RETRIES):
        if solution.diagnostics["leak"] <= LEAK_TOL:
            break
        raised = float(solution.v[-2]) + _LEAK_MARGIN / spec.gamma
        logger.debug(
            f"PENALIZED eps={spec.eps:.3g} leak={solution.diagnostics['leak']:.3e} "
            f"n: {spec.boundary_value:.6g} -> {raised:.6g}"
        )
        spec = spec.with_boundary(raised)
        warm = _to_vprofile(spec, np.array(solution.v[:-1]), {})
        solution = solve_penalized(spec, warm)
    return solution


def boundary_value_sweep(
    spec: PenalizedSpec,
    values: Sequence[float],
) -> list[VProfile]:
    """Решения при фиксированном ε для возрастающих граничных значений n."""
    ordered = sorted(float(value) for value in values)
    if not ordered:
        return []
    params = barrier_constants(spec)
    current = spec.with_boundary(ordered[0])
    init = initial_profile(current, params)
    results: list[VProfile] = []
    for value in ordered:
        current = spec.with_boundary(value)
        warm = _to_vprofile(current, np.array(init.v[:-1]), {})
        solution = solve_penalized(current, warm)
        results.append(solution)
        init = solution
    return results


def _default_n_rule(eps: float, params: BarrierParams) -> float:
    return params.M1 / eps


def _normalized(solution: VProfile, theta_ref: float) -> tuple[np.ndarray, np.ndarray]:
    interior = slice(0, -1)
    v = np.asarray(solution.v[interior])
    reference = float(np.interp(theta_ref, solution.theta[interior], v))
    return v - reference, np.asarray(solution.dv[interior])


def _omega_profile(potential: VProfile) -> Profile:
    """ω̂ = e^{−γw}, нормированная на 1 в первом узле; ω = 0 на границе."""
    gamma = potential.gamma
    w = np.asarray(potential.v)
    omega = np.exp(-gamma * (w - w[0]))
    domega = -gamma * omega * np.asarray(potential.dv)
    h = float(potential.theta[1] - potential.theta[0])
    edge_slope = (4.0 * omega[-1] - omega[-2]) / (-2.0 * h)
    theta = np.append(potential.theta, potential.alpha)
    return Profile(
        theta,
        np.append(omega, 0.0),
        np.append(domega, edge_slope),
        normalization="axis",
    )


@log_action("LAMBDA_ERGODIC")
def ergodic_constant(
    p: float,
    d: int,
    alpha: float,
    gamma: float,
    schedule: Sequence[float] = DEFAULT_SCHEDULE,
    n_rule: Optional[NRule] = None,
    grid_size: int = DEFAULT_GRID,
    *,
    init: str = "barrier",
    newton_tol: float = 1e-10,
    cauchy_tol: float = CAUCHY_TOL,
) -> LambdaPoint:
    """λ_γ как предел ε·v_ε(α/2) при ε → 0.

    Для каждого ε решается штрафная задача (старт с предыдущего ε,
    сдвинутого на L(1/ε_new − 1/ε_old)); λ — линейная экстраполяция
    Ричардсона по двум наименьшим ε. Нормированный профиль
    w = v − v(α/2) экстраполируется так же и возвращается в potential.
    """
    schedule = [float(eps) for eps in schedule]
    if len(schedule) < 2:
        raise DomainError("В расписании ε нужно хотя бы два значения.")
    if any(b >= a for a, b in zip(schedule, schedule[1:])) or schedule[-1] <= 0:
        raise DomainError("Расписание ε должно строго убывать и быть положительным.")
    n_rule = n_rule or _default_n_rule
    domain = CapDomain(d, alpha)
    theta_ref = 0.5 * domain.half_angle
    logger = get_solver_logger()

    sequence: list[tuple[float, float]] = []
    normalized: list[tuple[np.ndarray, np.ndarray]] = []
    solution: Optional[VProfile] = None
    level = 0.0
    total_iterations = 0
    for eps in schedule:
        base = PenalizedSpec(
            p=p,
            d=d,
            alpha=alpha,
            gamma=gamma,
            eps=eps,
            boundary_value=0.0,
            grid_size=grid_size,
            newton_tol=newton_tol,
        )
        params = barrier_constants(base)
        spec = base.with_boundary(n_rule(eps, params))
        if solution is None:
            start = initial_profile(spec, params, init)
        else:
            drift = level * (1.0 / eps - 1.0 / solution.eps)
            shifted = np.array(solution.v[:-1]) + drift
            start = _to_vprofile(spec, shifted, {})
        solution = _solve_without_leak(spec, start)
        total_iterations += int(solution.diagnostics["iterations"])
        level = eps * solution.value_at(theta_ref)
        sequence.append((eps, level))
        normalized.append(_normalized(solution, theta_ref))
        logger.debug(
            f"LAMBDA_ERGODIC gamma={gamma:.6g} eps={eps:.3g} L={level:.10g} "
            f"n={solution.boundary_value:.6g}"
        )

    (eps_a, level_a), (eps_b, level_b) = sequence[-2], sequence[-1]
    if abs(level_b - level_a) > cauchy_tol * max(1.0, abs(level_b)):
        raise ConvergenceError(
            f"ε·v_ε не сходится: {level_a:.6g} → {level_b:.6g}.",
            sequence,
        )
    weight = eps_a / (eps_a - eps_b)
    lam = weight * level_b + (1.0 - weight) * level_a
    if not lam > 0:
        raise ConvergenceError(f"Получено λ={lam:.6g} ≤ 0.", sequence)

    (w_a, dw_a), (w_b, dw_b) = normalized[-2], normalized[-1]
    potential = VProfile(
        theta=solution.theta[:-1],
        v=weight * w_b + (1.0 - weight) * w_a,
        dv=weight * dw_b + (1.0 - weight) * dw_a,
        eps=0.0,
        gamma=gamma,
        p=solution.p,
        d=solution.d,
        alpha=solution.alpha,
        diagnostics={"theta_ref": theta_ref},
    )
    diagnostics = {
        "sequence": sequence,
        "eps_min": schedule[-1],
        "grid_size": int(grid_size),
        "iterations": total_iterations,
        "residual": solution.diagnostics["residual"],
        "rounding_level": solution.diagnostics["rounding_level"],
        "boundary_value": solution.boundary_value,
        "warnings": list(solution.diagnostics["warnings"]),
    }
    return LambdaPoint(
        gamma=gamma,
        lam=lam,
        backend=Backend.ERGODIC,
        diagnostics=diagnostics,
        profile=_omega_profile(potential),
        potential=potential,
    )


def _omega_hat(v: VProfile) -> tuple[np.ndarray, np.ndarray]:
    """ω̂ = e^{−γ(v − min v)} и ω̂′ (на границе — односторонняя разность)."""
    values = np.asarray(v.v)
    omega = np.exp(-v.gamma * (values - values.min()))
    domega = -v.gamma * omega * np.asarray(v.dv)
    on_boundary = math.isclose(float(v.theta[-1]), v.alpha)
    if on_boundary:
        h = float(v.theta[-1] - v.theta[-2])
        domega[-1] = (3.0 * omega[-1] - 4.0 * omega[-2] + omega[-3]) / (2.0 * h)
    return omega, domega


def check_change_of_variables(v: VProfile, gamma: float, lam: float) -> float:
    """Max-норма невязки дивергентного уравнения для ω̂ = e^{−γ(v − min v)}.

    K = γλ, внутренние узлы. Заодно подгоняется M* в оценке
    e^{−γM*} ≤ ω̂·scale/ρ ≤ e^{γM*}; неконечное M* уходит в лог.
    """
    gamma = validate_positive(gamma, "gamma")
    omega, domega = _omega_hat(v)
    residual = divergence_residual(
        np.asarray(v.theta), omega, domega, v.p, v.d, gamma, gamma * lam
    )
    mstar = sandwich_constant(v)
    if not math.isfinite(mstar):
        get_solver_logger().warning(f"CHANGE_OF_VARIABLES M*={mstar}")
    return float(np.max(np.abs(residual)))


def sandwich_constant(v: VProfile) -> float:
    """Наименьшее M*, при котором ω̂/ρ укладывается в [e^{−γM*}, e^{γM*}]·scale."""
    omega, _ = _omega_hat(v)
    rho = np.asarray(v.rho)
    inside = rho > 0
    ratio = omega[inside] / rho[inside]
    if ratio.size == 0 or not np.all(ratio > 0):
        return math.inf
    return float(np.log(ratio.max() / ratio.min()) / (2.0 * v.gamma))


def boundary_gradient_ratio(v: VProfile, layer: float = 0.05) -> float:
    """Медиана γ·|v′|·ρ по слою ρ ≤ layer·α (→ 1 у границы)."""
    rho = np.asarray(v.rho)
    mask = (rho > 0) & (rho <= layer * v.alpha)
    if not np.any(mask):
        return math.nan
    return float(np.median(np.abs(np.asarray(v.dv)[mask]) * rho[mask]) * v.gamma)


def check_gradient_bound(v: VProfile) -> tuple[float, float]:
    """Подгонка |v′| ≤ L0/ρ + L1.

    L0 = sup|v′|ρ по внешней половине (ρ < α/2), затем
    L1 = sup(|v′| − L0/ρ)⁺ по внутренней половине.
    """
    rho = np.asarray(v.rho)
    slope = np.abs(np.asarray(v.dv))
    inside = rho > 0
    outer = inside & (rho < 0.5 * v.alpha)
    inner = inside & ~outer
    L0 = float(np.max(slope[outer] * rho[outer], initial=0.0))
    excess = slope[inner] - L0 / rho[inner]
    L1 = float(np.max(np.maximum(excess, 0.0), initial=0.0))
    ratio = boundary_gradient_ratio(v)
    if not (math.isfinite(L0) and math.isfinite(L1)) or not abs(ratio - 1.0) <= 0.2:
        get_solver_logger().warning(
            f"GRADIENT_BOUND L0={L0:.6g} L1={L1:.6g} boundary_ratio={ratio:.4g}"
        )
    return L0, L1
