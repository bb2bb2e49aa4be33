"""Уравнения для показателей: λ_γ = γ(p−1) + p − d − 1 (Singular)
и λ_γ = γ(p−1) + d + 1 − p (Regular), решаемые бисекцией по γ
с любым из двух backend; свипы λ-кривой и сверка backend между собой.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from prettytable import PrettyTable

from ..decorators import log_action
from ..infra.settings import SettingsLoader
from ..logging_config import get_solver_logger
from . import ergodic
from .cap_ode import exponent_by_shooting, lambda_by_shooting
from .exceptions import BracketError, DomainError, MonotonicityError, PHarmonicError
from .geometry import Branch, CapDomain
from .models import Backend, ExponentResult, LambdaPoint
from .oracle import p2_cap_eigenvalue, p2_exponents
from .sector import SectorSolveSpec, gamma_of_opening
from .utils import bisect_sign_change, expand_bracket, validate_positive

DEFAULT_TOL = {Backend.SHOOTING: 1e-6, Backend.ERGODIC: 1e-3}
GAMMA_RANGE = (1e-2, 1e2)

# допуски сверки
BACKEND_LAMBDA_TOL = 5e-3
BACKEND_GAMMA_TOL = 1e-2
SECTOR_TOL = 1e-6
ORACLE_TOL = 1e-5
HEMISPHERE_TOL = 1e-6


def _lambda_at(
    p: float,
    d: int,
    alpha: float,
    gamma: float,
    backend: Backend,
    grid_size: Optional[int] = None,
) -> LambdaPoint:
    if backend is Backend.SHOOTING:
        return lambda_by_shooting(p, d, alpha, gamma)
    grid = grid_size or SettingsLoader().get("ergodic_grid", ergodic.DEFAULT_GRID)
    return ergodic.ergodic_constant(p, d, alpha, gamma, grid_size=grid)


def _sweep_point(args: tuple) -> LambdaPoint:
    p, d, alpha, gamma, backend, grid_size = args
    try:
        return _lambda_at(p, d, alpha, gamma, backend, grid_size)
    except PHarmonicError as exc:
        return LambdaPoint.gap(gamma, backend, exc)


@log_action("LAMBDA_CURVE")
def lambda_curve(
    p: float,
    d: int,
    alpha: float,
    gamma_grid: Sequence[float],
    backend: Backend = Backend.SHOOTING,
    *,
    grid_size: Optional[int] = None,
    workers: Optional[int] = None,
) -> List[LambdaPoint]:
    """λ_γ на сетке γ; сбои отдельных точек возвращаются как пропуски.

    Требует строгого убывания и положительности по успешным точкам.
    """
    CapDomain(d, alpha)
    backend = Backend.parse(backend)
    grid = [validate_positive(gamma, "gamma") for gamma in gamma_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("Сетка γ должна строго возрастать.")
    workers = workers or SettingsLoader().get("sweep_workers", 1)
    tasks = [(p, d, alpha, gamma, backend, grid_size) for gamma in grid]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_sweep_point, tasks))
    else:
        points = [_sweep_point(task) for task in tasks]

    present = [point for point in points if point.ok]
    if len(present) < len(points):
        get_solver_logger().warning(
            f"LAMBDA_CURVE gaps={len(points) - len(present)} of {len(points)}"
        )
    for left, right in zip(present, present[1:]):
        if not right.lam < left.lam:
            raise MonotonicityError(
                f"λ не убывает: λ({left.gamma:.6g})={left.lam:.10g}, "
                f"λ({right.gamma:.6g})={right.lam:.10g}.",
                [(point.gamma, point.lam) for point in present],
            )
    return points


@log_action("EXPONENT")
def solve_exponent(
    p: float,
    d: int,
    alpha: float,
    branch: Branch,
    backend: Backend = Backend.SHOOTING,
    tol: Optional[float] = None,
    *,
    bracket: Optional[tuple[float, float]] = None,
    grid_size: Optional[int] = None,
) -> ExponentResult:
    """Корень g(γ) = λ_γ − λ_target(γ) выбранной ветви.

    g строго убывает; shooting делегирует exponent_by_shooting,
    ergodic ищет отрезок удвоением от γ = 1 и делит его пополам, пока
    отрезок не станет ≤ tol и |g| в найденной точке не станет ≤ tol.
    grid_size: число узлов профиля (shooting) или сетки (ergodic).
    """
    domain = CapDomain(d, alpha)
    branch = Branch.parse(branch)
    backend = Backend.parse(backend)
    tol = validate_positive(tol if tol is not None else DEFAULT_TOL[backend], "tol")

    if backend is Backend.SHOOTING:
        kwargs: Dict[str, Any] = {}
        if bracket is not None:
            kwargs["scan_range"] = bracket
        if grid_size is not None:
            kwargs["n_points"] = grid_size
        result = exponent_by_shooting(p, d, domain.half_angle, branch, tol, **kwargs)
        check = lambda_by_shooting(p, d, domain.half_angle, result.gamma)
        gap = check.lam - branch.target_lambda(p, d, result.gamma)
        result.diagnostics["g"] = gap
        return result

    cache: Dict[float, LambdaPoint] = {}

    def g(gamma: float) -> float:
        point = _lambda_at(p, d, domain.half_angle, gamma, backend, grid_size)
        cache[gamma] = point
        return point.lam - branch.target_lambda(p, d, gamma)

    if bracket is not None:
        lo, hi = sorted(float(edge) for edge in bracket)
        f_lo, f_hi = g(lo), g(hi)
        if (f_lo > 0) == (f_hi > 0) and f_lo != 0 and f_hi != 0:
            raise BracketError(
                f"g не меняет знак на [{lo}, {hi}].",
                [(lo, f_lo), (hi, f_hi)],
            )
    else:
        lo, hi, f_lo, f_hi = expand_bracket(
            g,
            1.0,
            factor=2.0,
            lower=GAMMA_RANGE[0],
            upper=GAMMA_RANGE[1],
        )
    gamma, iterations = bisect_sign_change(g, lo, hi, f_lo, tol, ftol=tol)
    if gamma not in cache:
        g(gamma)
    point = cache[gamma]
    gap = point.lam - branch.target_lambda(p, d, gamma)
    return ExponentResult(
        branch=branch,
        gamma=gamma,
        lam=point.lam,
        profile=point.profile,
        backend=backend,
        residual=abs(gap),
        bisection_iterations=iterations,
        p=p,
        d=d,
        diagnostics={
            "g": gap,
            "g_within_tol": abs(gap) <= tol,
            "boundary_flux_negative": point.profile.boundary_slope < 0.0,
            "warnings": point.diagnostics.get("warnings", []),
        },
    )


def domain_monotonicity(
    p: float,
    d: int,
    alphas: Sequence[float] = (math.pi / 6, math.pi / 3, math.pi / 2, 2 * math.pi / 3),
    branch: Branch = Branch.SINGULAR,
) -> tuple[List[tuple[float, float]], bool]:
    """β(α) на сетке α и признак строгого убывания (только диагностика)."""
    values = [
        (alpha, solve_exponent(p, d, alpha, branch).gamma) for alpha in alphas
    ]
    decreasing = all(b[1] < a[1] for a, b in zip(values, values[1:]))
    return values, decreasing


@dataclass
class ConsistencyReport:
    """Результаты сверок: одна строка на пару «эталон — значение»."""

    title: str
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def add(
        self,
        check: str,
        reference: Optional[float],
        value: Optional[float],
        tolerance: float,
        *,
        error: Optional[str] = None,
        informational: bool = False,
    ) -> None:
        if error is None and reference is not None and value is not None:
            delta: Optional[float] = abs(value - reference)
            passed = delta <= tolerance
        else:
            delta = None
            passed = False
        self.rows.append(
            {
                "check": check,
                "reference": reference,
                "value": value,
                "delta": delta,
                "tolerance": tolerance,
                "passed": passed or informational,
                "informational": informational,
                "error": error,
            }
        )

    @property
    def passed(self) -> bool:
        return all(row["passed"] for row in self.rows)

    def as_dict(self) -> Dict[str, Any]:
        return {"title": self.title, "passed": self.passed, "rows": self.rows}

    def render(self) -> str:
        table = PrettyTable()
        table.title = self.title
        table.field_names = ["check", "reference", "value", "delta", "tol", "ok"]
        for row in self.rows:
            table.add_row(
                [
                    row["check"],
                    _fmt(row["reference"]),
                    _fmt(row["value"]),
                    _fmt(row["delta"]),
                    f"{row['tolerance']:.0e}",
                    "yes" if row["passed"] else (row["error"] or "NO"),
                ]
            )
        return table.get_string()


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.10g}"


def record_check(
    report: ConsistencyReport, check: str, tolerance: float, compute
) -> None:
    try:
        reference, value = compute()
    except PHarmonicError as exc:
        report.add(check, None, None, tolerance, error=type(exc).__name__)
        return
    report.add(check, reference, value, tolerance)


@log_action("CONSISTENCY")
def consistency_report(
    p: float,
    d: int,
    alpha: float,
    *,
    gammas: Sequence[float] = (0.5, 1.0, 2.0),
    grid_size: Optional[int] = None,
) -> ConsistencyReport:
    """Сверка backend между собой, с сектором при d = 1 и с эталоном p = 2."""
    domain = CapDomain(d, alpha)
    alpha = domain.half_angle
    report = ConsistencyReport(title=f"p={p:g} d={d} alpha={alpha:.6g}")

    for gamma in gammas:
        record_check(
            report,
            f"lambda gamma={gamma:g} shooting~ergodic",
            BACKEND_LAMBDA_TOL,
            lambda gamma=gamma: (
                _lambda_at(p, d, alpha, gamma, Backend.SHOOTING).lam,
                _lambda_at(p, d, alpha, gamma, Backend.ERGODIC, grid_size).lam,
            ),
        )

    for branch in Branch:
        record_check(
            report,
            f"exponent {branch.value} shooting~ergodic",
            BACKEND_GAMMA_TOL,
            lambda branch=branch: (
                solve_exponent(p, d, alpha, branch).gamma,
                solve_exponent(
                    p, d, alpha, branch, Backend.ERGODIC, grid_size=grid_size
                ).gamma,
            ),
        )
        record_check(
            report,
            f"exponent {branch.value} d=1~sector",
            SECTOR_TOL,
            lambda branch=branch: (
                gamma_of_opening(SectorSolveSpec(p, branch), 2.0 * alpha),
                exponent_by_shooting(p, 1, alpha, branch, 0.1 * SECTOR_TOL).gamma,
            ),
        )

    if math.isclose(p, 2.0):

        def oracle_pair() -> tuple[float, float]:
            lambda1 = p2_cap_eigenvalue(d, alpha).lambda1
            singular, regular = p2_exponents(d + 1, lambda1)
            return singular, regular

        for index, branch in enumerate(Branch):
            record_check(
                report,
                f"exponent {branch.value} p=2 oracle",
                ORACLE_TOL,
                lambda index=index, branch=branch: (
                    oracle_pair()[index],
                    solve_exponent(p, d, alpha, branch).gamma,
                ),
            )

    if math.isclose(alpha, 0.5 * math.pi):
        record_check(
            report,
            "regular exponent on hemisphere",
            HEMISPHERE_TOL,
            lambda: (1.0, solve_exponent(p, d, alpha, Branch.REGULAR).gamma),
        )
    return report
