from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from prettytable import PrettyTable

from ..core.acceptance import acceptance_suite
from ..core.exceptions import DomainError, PHarmonicError
from ..core.ergodic import MIN_GRID
from ..core.exponent import lambda_curve, solve_exponent
from ..core.geometry import Branch
from ..core.models import Backend
from ..core.oracle import sector_opening_by_ode
from ..core.sector import (
    SectorSolveSpec,
    gamma_of_opening,
    opening_of_gamma,
    sector_profile,
)
from ..core.utils import (
    validate_exponent_p,
    validate_half_angle,
    validate_positive,
)
from .output import (
    build_payload,
    emit,
    error_payload,
    render_csv,
    render_json,
    render_profile_csv,
    render_sweep_csv,
    resolve_destination,
)

COMMANDS = ("exponent", "lambda-sweep", "profile", "sector", "validate")
FORMATS = ("json", "csv")
SECTOR_POINTS = 1001

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class RunConfig:
    """Разобранные и проверенные параметры одного запуска.

    Углы хранятся в радианах; градусы переводятся при разборе.
    """

    command: str
    p: Optional[float] = None
    ambient_dim: Optional[int] = None
    alpha: Optional[float] = None
    branch: Optional[Branch] = None
    backend: Optional[Backend] = None
    grid: Optional[int] = None
    tol: Optional[float] = None
    output_format: str = "json"
    output_path: Optional[str] = None
    gamma_min: Optional[float] = None
    gamma_max: Optional[float] = None
    gamma_count: Optional[int] = None
    workers: Optional[int] = None
    opening: Optional[float] = None
    gamma: Optional[float] = None
    quick: bool = False

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise DomainError(f"Неизвестная команда '{self.command}'.")
        if self.output_format not in FORMATS:
            raise DomainError(f"Недопустимый формат '{self.output_format}'.")
        if self.p is not None:
            object.__setattr__(self, "p", validate_exponent_p(self.p))
        if self.ambient_dim is not None and int(self.ambient_dim) < 2:
            raise DomainError("--ambient-dim должно быть ≥ 2.")
        if self.alpha is not None:
            object.__setattr__(self, "alpha", validate_half_angle(self.alpha))
        if self.grid is not None and int(self.grid) < 3:
            raise DomainError("--grid должно быть ≥ 3.")
        if self.backend is Backend.ERGODIC and self.grid is not None:
            if int(self.grid) < MIN_GRID:
                raise DomainError(
                    f"--grid для backend ergodic должно быть ≥ {MIN_GRID}."
                )
        if self.tol is not None:
            validate_positive(self.tol, "tol")
        if self.opening is not None and not 0.0 < self.opening < 2.0 * math.pi:
            raise DomainError("Раствор сектора должен лежать в (0, 2π).")
        if self.gamma is not None:
            validate_positive(self.gamma, "gamma")
        if self.gamma_min is not None and self.gamma_max is not None:
            validate_positive(self.gamma_min, "gamma-min")
            if not self.gamma_max > self.gamma_min:
                raise DomainError("--gamma-max должно быть больше --gamma-min.")
        if self.gamma_count is not None and int(self.gamma_count) < 2:
            raise DomainError("--gamma-count должно быть ≥ 2.")

    @property
    def sphere_dim(self) -> int:
        return int(self.ambient_dim) - 1

    def inputs(self) -> Dict[str, Any]:
        """Все заданные параметры запуска для блока inputs."""
        values: Dict[str, Any] = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if name in ("command", "output_path") or value is None:
                continue
            values[name] = value
        if self.alpha is not None:
            values["alpha_deg"] = math.degrees(self.alpha)
        if self.opening is not None:
            values["opening_deg"] = math.degrees(self.opening)
        if self.ambient_dim is not None:
            values["sphere_dim"] = self.sphere_dim
        return values


@dataclass
class CommandOutcome:
    result: Dict[str, Any]
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    csv_text: str = ""
    exit_code: int = EXIT_OK


def _stderr_table(
    title: str, header: Sequence[str], rows: List[Sequence[Any]]
) -> None:
    table = PrettyTable()
    table.title = title
    table.field_names = list(header)
    for row in rows:
        table.add_row(list(row))
    print(table.get_string(), file=sys.stderr)


def _solve(config: RunConfig):
    return solve_exponent(
        config.p,
        config.sphere_dim,
        config.alpha,
        config.branch,
        config.backend,
        config.tol,
        grid_size=config.grid,
    )


def _handle_exponent(config: RunConfig) -> CommandOutcome:
    """Обработчик команды exponent."""
    result = _solve(config)
    return CommandOutcome(
        result=result.to_dict(),
        diagnostics=dict(result.diagnostics),
        csv_text=render_profile_csv(result.profile),
    )


def _handle_profile(config: RunConfig) -> CommandOutcome:
    """Обработчик команды profile: профиль ω решённого показателя."""
    result = _solve(config)
    payload = {
        "gamma": result.gamma,
        "branch": result.branch.value,
        "backend": result.backend.value,
        "profile": result.profile.to_dict(),
    }
    return CommandOutcome(
        result=payload,
        diagnostics=dict(result.diagnostics),
        csv_text=render_profile_csv(result.profile),
    )


def _handle_lambda_sweep(config: RunConfig) -> CommandOutcome:
    """Обработчик команды lambda-sweep."""
    gammas = np.geomspace(
        config.gamma_min, config.gamma_max, int(config.gamma_count)
    ).tolist()
    points = lambda_curve(
        config.p,
        config.sphere_dim,
        config.alpha,
        gammas,
        config.backend,
        grid_size=config.grid if config.backend is Backend.ERGODIC else None,
        workers=config.workers,
    )
    _stderr_table(
        f"lambda curve p={config.p:g} N={config.ambient_dim}",
        ("gamma", "lambda", "backend"),
        [
            (
                f"{point.gamma:.6g}",
                f"{point.lam:.10g}" if point.ok else "gap",
                point.backend.value,
            )
            for point in points
        ],
    )
    gaps = [point.gamma for point in points if not point.ok]
    return CommandOutcome(
        result={"points": [point.to_dict() for point in points]},
        diagnostics={"gaps": gaps, "count": len(points)},
        csv_text=render_sweep_csv(points),
    )


def _handle_sector(config: RunConfig) -> CommandOutcome:
    """Обработчик команды sector: γ по раствору или раствор по γ."""
    kwargs = {"quad_tol": config.tol} if config.tol is not None else {}
    spec = SectorSolveSpec(config.p, config.branch, **kwargs)
    if config.opening is not None:
        gamma = gamma_of_opening(spec, config.opening)
        opening = config.opening
    else:
        gamma = config.gamma
        opening = opening_of_gamma(spec, gamma)
    profile = sector_profile(spec, gamma, config.grid or SECTOR_POINTS)
    by_ode = sector_opening_by_ode(spec.p, spec.branch, gamma)
    result = {
        "gamma": gamma,
        "opening": opening,
        "opening_deg": math.degrees(opening),
        "branch": spec.branch.value,
        "threshold": spec.threshold,
    }
    diagnostics = {
        "opening_by_ode": by_ode,
        "opening_mismatch": abs(by_ode - opening),
        "boundary_slope": profile.boundary_slope,
    }
    return CommandOutcome(
        result=result,
        diagnostics=diagnostics,
        csv_text=render_profile_csv(profile),
    )


def _handle_validate(config: RunConfig) -> CommandOutcome:
    """Обработчик команды validate: приёмочные проверки и сверки."""
    reports = acceptance_suite(config.quick)
    for report in reports:
        print(report.render(), file=sys.stderr)
    passed = all(report.passed for report in reports)
    rows = [
        (
            report.title,
            row["check"],
            row["reference"],
            row["value"],
            row["delta"],
            row["tolerance"],
            "yes" if row["passed"] else "no",
        )
        for report in reports
        for row in report.rows
    ]
    failed = sum(1 for row in rows if row[-1] == "no")
    return CommandOutcome(
        result={"passed": passed, "reports": [r.as_dict() for r in reports]},
        diagnostics={"checks": len(rows), "failed": failed},
        csv_text=render_csv(
            ("report", "check", "reference", "value", "delta", "tolerance", "passed"),
            rows,
        ),
        exit_code=EXIT_OK if passed else EXIT_FAILURE,
    )


_HANDLERS: Dict[str, Callable[[RunConfig], CommandOutcome]] = {
    "exponent": _handle_exponent,
    "lambda-sweep": _handle_lambda_sweep,
    "profile": _handle_profile,
    "sector": _handle_sector,
    "validate": _handle_validate,
}


def run(config: RunConfig) -> int:
    """Выполнить команду и записать результат; вернуть код выхода.

    Численный сбой даёт JSON-объект со status "error" в stdout и код 1.
    """
    inputs = config.inputs()
    try:
        outcome = _HANDLERS[config.command](config)
    except PHarmonicError as exc:
        emit(render_json(error_payload(config.command, inputs, exc)), None)
        return EXIT_FAILURE

    if config.output_format == "csv":
        text = outcome.csv_text
    else:
        status = "ok" if outcome.exit_code == EXIT_OK else "failed"
        text = render_json(
            build_payload(
                config.command, inputs, outcome.result, outcome.diagnostics, status
            )
        )
    destination = resolve_destination(
        config.command, config.output_format, config.output_path
    )
    emit(text, destination)
    return outcome.exit_code


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format", dest="output_format", choices=FORMATS, default="json"
    )
    parser.add_argument("--output", dest="output_path", default=None)


def _add_cone_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--p", type=float, required=True)
    parser.add_argument("--ambient-dim", dest="ambient_dim", type=int, required=True)
    angle = parser.add_mutually_exclusive_group(required=True)
    angle.add_argument("--alpha", type=float, help="полуугол шапки, радианы")
    angle.add_argument("--alpha-deg", dest="alpha_deg", type=float, help="градусы")
    parser.add_argument("--grid", type=int, default=None)


def _add_branch_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--branch", choices=[b.value for b in Branch], default=Branch.SINGULAR.value
    )


def _add_backend_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--backend", choices=[b.value for b in Backend], default=Backend.SHOOTING.value
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pharmonic",
        description="Показатели и профили p-гармонических функций в конусах.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    for name in ("exponent", "profile"):
        sub = commands.add_parser(name)
        _add_cone_args(sub)
        _add_branch_arg(sub)
        _add_backend_arg(sub)
        sub.add_argument("--tol", type=float, default=None)
        _add_output_args(sub)

    sweep = commands.add_parser("lambda-sweep")
    _add_cone_args(sweep)
    _add_backend_arg(sweep)
    sweep.add_argument("--gamma-min", dest="gamma_min", type=float, default=0.1)
    sweep.add_argument("--gamma-max", dest="gamma_max", type=float, default=5.0)
    sweep.add_argument("--gamma-count", dest="gamma_count", type=int, default=20)
    sweep.add_argument("--workers", type=int, default=None)
    _add_output_args(sweep)

    sector = commands.add_parser("sector")
    sector.add_argument("--p", type=float, required=True)
    _add_branch_arg(sector)
    target = sector.add_mutually_exclusive_group(required=True)
    target.add_argument("--opening", type=float, help="раствор, радианы")
    target.add_argument("--opening-deg", dest="opening_deg", type=float)
    target.add_argument("--gamma", type=float)
    sector.add_argument("--backend", default="quadrature")
    sector.add_argument("--grid", type=int, default=None)
    sector.add_argument("--tol", type=float, default=None)
    _add_output_args(sector)

    validate = commands.add_parser("validate")
    validate.add_argument("--quick", action="store_true")
    _add_output_args(validate)
    return parser


def _config_from_args(
    parser: argparse.ArgumentParser, args: argparse.Namespace
) -> RunConfig:
    values = vars(args).copy()
    alpha_deg = values.pop("alpha_deg", None)
    if alpha_deg is not None:
        values["alpha"] = math.radians(alpha_deg)
    opening_deg = values.pop("opening_deg", None)
    if opening_deg is not None:
        values["opening"] = math.radians(opening_deg)

    if args.command == "sector":
        if values.pop("backend") != "quadrature":
            parser.error("для sector доступна только квадратура (--backend quadrature)")
    elif "backend" in values:
        values["backend"] = Backend.parse(values["backend"])
    if "branch" in values:
        values["branch"] = Branch.parse(values["branch"])
    return RunConfig(**values)


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Точка входа CLI: разбор аргументов, запуск, код выхода."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _config_from_args(parser, args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except DomainError as exc:
        print(f"pharmonic: ошибка параметров: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(config)
