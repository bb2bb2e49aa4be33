"""Набор приёмочных проверок для команды validate."""

from __future__ import annotations

import itertools
import math
from typing import List

import numpy as np

from ..decorators import log_action
from . import ergodic
from .cap_ode import (
    ShootSpec,
    divergence_residual,
    exponent_by_shooting,
    lambda_by_shooting,
    shot_profile,
)
from .exponent import (
    ConsistencyReport,
    consistency_report,
    lambda_curve,
    record_check,
)
from .geometry import Branch
from .models import Backend
from .oracle import p2_cap_eigenvalue, p2_exponents
from .sector import SectorSolveSpec, gamma_of_opening, opening_of_gamma

QUICK_GRID = 1000


def _sector_checks(report: ConsistencyReport) -> None:
    for branch, gamma in itertools.product(Branch, (0.5, 1.0, 2.0, 4.0)):
        spec = SectorSolveSpec(2.0, branch)
        record_check(
            report,
            f"sector p=2 {branch.value} gamma={gamma:g}",
            1e-8,
            lambda spec=spec, gamma=gamma: (
                math.pi / gamma,
                opening_of_gamma(spec, gamma),
            ),
        )


def _hemisphere_checks(report: ConsistencyReport, quick: bool) -> None:
    ps = (1.5, 3.0) if quick else (1.5, 2.0, 3.0, 4.0)
    dims = (1, 2) if quick else (1, 2, 3)
    for p, d in itertools.product(ps, dims):

        result = {}

        def solve(p=p, d=d, result=result):
            if "value" not in result:
                result["value"] = exponent_by_shooting(
                    p, d, 0.5 * math.pi, Branch.REGULAR
                )
            return result["value"]

        def distance(solve=solve) -> tuple[float, float]:
            profile = solve().profile
            return 0.0, float(np.max(np.abs(profile.omega - np.cos(profile.theta))))

        record_check(
            report,
            f"hemisphere regular p={p:g} d={d}",
            1e-6,
            lambda solve=solve: (1.0, solve().gamma),
        )
        record_check(report, f"hemisphere profile p={p:g} d={d}", 1e-5, distance)


def _oracle_checks(report: ConsistencyReport, quick: bool) -> None:
    alphas = (math.pi / 2,) if quick else (math.pi / 3, math.pi / 2, 2 * math.pi / 3)
    for alpha, d in itertools.product(alphas, (2, 3)):
        lambda1 = p2_cap_eigenvalue(d, alpha).lambda1
        expected = dict(zip(Branch, p2_exponents(d + 1, lambda1)))
        for branch in Branch:
            record_check(
                report,
                f"p=2 oracle {branch.value} d={d} alpha={alpha:.4f}",
                1e-5,
                lambda alpha=alpha, d=d, branch=branch, ref=expected[branch]: (
                    ref,
                    exponent_by_shooting(2.0, d, alpha, branch).gamma,
                ),
            )


def _cross_backend_checks(report: ConsistencyReport, quick: bool) -> None:
    grid = QUICK_GRID if quick else ergodic.DEFAULT_GRID
    ps = (3.0,) if quick else (1.5, 3.0)
    alphas = (math.pi / 2,) if quick else (math.pi / 4, math.pi / 2)
    gammas = (1.0,) if quick else (0.5, 1.0, 2.0)
    for p, alpha, gamma in itertools.product(ps, alphas, gammas):
        record_check(
            report,
            f"lambda p={p:g} alpha={alpha:.4f} gamma={gamma:g}",
            5e-3,
            lambda p=p, alpha=alpha, gamma=gamma: (
                lambda_by_shooting(p, 2, alpha, gamma).lam,
                ergodic.ergodic_constant(p, 2, alpha, gamma, grid_size=grid).lam,
            ),
        )
    for p, d in itertools.product(ps, (2,) if quick else (2, 3)):
        record_check(
            report,
            f"ergodic hemisphere p={p:g} d={d}",
            5e-3,
            lambda p=p, d=d: (
                float(d),
                ergodic.ergodic_constant(p, d, 0.5 * math.pi, 1.0, grid_size=grid).lam,
            ),
        )


def _curve_checks(report: ConsistencyReport) -> None:
    alpha = math.pi / 3
    grid = np.geomspace(0.05, 5.0, 20)

    def run() -> tuple[float, float]:
        points = lambda_curve(3.0, 2, alpha, grid, Backend.SHOOTING)
        if not all(point.ok for point in points):
            return 0.0, 1.0
        ratio = points[0].lam / lambda_by_shooting(3.0, 2, alpha, 1.0).lam
        return 1.0, 1.0 if ratio > 10.0 else 0.0

    record_check(report, "lambda curve decreasing, blow-up at 0", 0.0, run)


def _homogeneity_checks(report: ConsistencyReport) -> None:
    p, d, gamma = 3.0, 2, 1.0
    K = Branch.REGULAR.shoot_constant(p, d, gamma)
    # K + 1: невязка порядка 1
    off_K = K + 1.0
    base = shot_profile(ShootSpec(p, d, gamma, K), 0.5 * math.pi, 401)
    reference = divergence_residual(
        base.theta, base.omega, base.domega, p, d, gamma, off_K
    )
    for factor in (0.5, 2.0):
        scaled = shot_profile(
            ShootSpec(p, d, gamma, K, amplitude=factor), 0.5 * math.pi, 401
        )

        def run(scaled=scaled, factor=factor) -> tuple[float, float]:
            expected_profile = base.scaled(factor)
            ratio = float(
                np.max(np.abs(scaled.omega - expected_profile.omega))
                / np.max(np.abs(expected_profile.omega))
            )
            residual = divergence_residual(
                scaled.theta, scaled.omega, scaled.domega, p, d, gamma, off_K
            )
            expected = factor ** (p - 1.0) * reference
            spread = float(np.max(np.abs(residual - expected)))
            spread /= max(float(np.max(np.abs(expected))), 1e-300)
            return 0.0, max(ratio, spread)

        record_check(report, f"homogeneity t={factor:g}", 1e-9, run)


def _sector_equivalence_checks(report: ConsistencyReport, quick: bool) -> None:
    ps = (2.0,) if quick else (1.5, 2.0, 3.0)
    for p, alpha in itertools.product(ps, (math.pi / 4, math.pi / 2)):
        for branch in Branch:
            record_check(
                report,
                f"d=1~sector p={p:g} alpha={alpha:.4f} {branch.value}",
                1e-6,
                lambda p=p, alpha=alpha, branch=branch: (
                    gamma_of_opening(SectorSolveSpec(p, branch), 2.0 * alpha),
                    exponent_by_shooting(p, 1, alpha, branch, 1e-7).gamma,
                ),
            )


@log_action("VALIDATE")
def acceptance_suite(quick: bool = False) -> List[ConsistencyReport]:
    """Приёмочные проверки; quick сокращает матрицу и сетку."""
    report = ConsistencyReport(title="acceptance")
    _sector_checks(report)
    _hemisphere_checks(report, quick)
    _oracle_checks(report, quick)
    _sector_equivalence_checks(report, quick)
    _homogeneity_checks(report)
    _curve_checks(report)
    _cross_backend_checks(report, quick)
    reports = [report]
    if not quick:
        reports.append(consistency_report(2.0, 2, 0.5 * math.pi))
    return reports
