"""Запись результатов CLI: JSON-объект и CSV-таблицы (UTF-8, LF)."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np

from ..core.models import LambdaPoint, Profile
from ..infra.settings import SettingsLoader

PROFILE_HEADER = ("theta", "omega", "omega_prime")
SWEEP_HEADER = ("gamma", "lambda", "backend")


def to_jsonable(value: Any) -> Any:
    """Привести значение к типам json; нечисловые float → None."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        return number if math.isfinite(number) else None
    if value is None or isinstance(value, str):
        return value
    return str(value)


def build_payload(
    command: str,
    inputs: Dict[str, Any],
    result: Any,
    diagnostics: Optional[Dict[str, Any]] = None,
    status: str = "ok",
) -> Dict[str, Any]:
    return {
        "command": command,
        "inputs": inputs,
        "result": result,
        "diagnostics": diagnostics or {},
        "status": status,
    }


def error_payload(
    command: str, inputs: Dict[str, Any], error: Exception
) -> Dict[str, Any]:
    """Машиночитаемый объект ошибки; поля исключения идут в diagnostics."""
    details: Dict[str, Any] = {
        "error_type": type(error).__name__,
        "message": str(error),
    }
    for name in ("theta", "scan", "samples", "last_residual", "iterations", "sequence"):
        if hasattr(error, name):
            details[name] = getattr(error, name)
    return build_payload(command, inputs, None, details, status="error")


def render_json(payload: Dict[str, Any]) -> str:
    return json.dumps(to_jsonable(payload), indent=2, ensure_ascii=False) + "\n"


def _number(value: Any) -> str:
    return "" if value is None else repr(float(value))


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [
                _number(cell) if isinstance(cell, (float, np.floating)) else cell
                for cell in row
            ]
        )
    return buffer.getvalue()


def render_profile_csv(profile: Profile) -> str:
    rows = zip(
        profile.theta.tolist(), profile.omega.tolist(), profile.domega.tolist()
    )
    return render_csv(PROFILE_HEADER, rows)


def render_sweep_csv(points: Sequence[LambdaPoint]) -> str:
    """Строки gamma,lambda,backend; у пропусков lambda пустая."""
    rows = (
        (point.gamma, point.lam if point.ok else None, point.backend.value)
        for point in points
    )
    return render_csv(SWEEP_HEADER, rows)


def resolve_destination(
    command: str, fmt: str, output_path: Optional[str]
) -> Optional[Path]:
    """Явный --output, иначе <каталог вывода>/<command>.<fmt>, иначе stdout."""
    if output_path:
        return Path(output_path)
    directory = SettingsLoader().get("output_dir")
    if directory:
        return Path(directory) / f"{command}.{fmt}"
    return None


def emit(text: str, destination: Optional[Path]) -> None:
    """Записать результат одним вызовом."""
    if destination is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    destination.parent.mkdir(parents=True, exist_ok=True)
    with destination.open("w", encoding="utf-8", newline="") as f:
        f.write(text)
