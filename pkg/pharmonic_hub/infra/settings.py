from __future__ import annotations

import os
import tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict

BASE_DIR = Path(__file__).resolve().parents[2]

OUTPUT_DIR_ENV = "PHARMONIC_OUTPUT_DIR"
LOG_LEVEL_ENV = "PHARMONIC_LOG_LEVEL"


@dataclass(frozen=True)
class _Defaults:
    """Значения по умолчанию для конфигурации проекта."""

    logs_dir: Path = BASE_DIR / "logs"
    log_level: str = "INFO"
    log_format: str = (
        "%(asctime)s [%(levelname)s] %(name)s - %(message)s"
    )
    log_to_file: bool = True
    output_dir: str = ""
    ergodic_grid: int = 4000
    sweep_workers: int = 1


class SettingsLoader:
    """Singleton для загрузки и кеширования конфигурации проекта.

    Источники конфигурации (по убыванию приоритета):
    - переменные окружения PHARMONIC_OUTPUT_DIR и PHARMONIC_LOG_LEVEL;
    - pyproject.toml → секция [tool.pharmonic];
    - значения по умолчанию из _Defaults.

    Доступные ключи:
    - logs_dir: каталог логов
    - log_level: уровень логирования (DEBUG/INFO/...)
    - log_format: формат строк логов
    - log_to_file: писать ли solver.log на диск
    - output_dir: каталог результатов CLI по умолчанию (None — stdout)
    - ergodic_grid: размер сетки эргодического решателя по умолчанию
    - sweep_workers: число процессов для λ-свипов
    """

    _instance: "SettingsLoader | None" = None
    _initialized: bool = False

    def __new__(cls, *args: Any, **kwargs: Any) -> "SettingsLoader":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self) -> None:
        if self.__class__._initialized:
            return
        self.__class__._initialized = True

        self._defaults = _Defaults()
        self._config: Dict[str, Any] = {}
        self.reload()

    def _load_from_pyproject(self) -> Dict[str, Any]:
        """Загрузка конфигурации из pyproject.toml (секция [tool.pharmonic])."""
        pyproject_path = BASE_DIR / "pyproject.toml"
        if not pyproject_path.exists():
            return {}

        with pyproject_path.open("rb") as f:
            data = tomllib.load(f)

        tool_section = data.get("tool", {})
        return tool_section.get("pharmonic", {}) or {}

    def reload(self) -> None:
        """Полная перезагрузка конфигурации (pyproject.toml + окружение)."""
        raw = self._load_from_pyproject()

        cfg: Dict[str, Any] = {}

        cfg["logs_dir"] = Path(raw.get("logs_dir", self._defaults.logs_dir))
        cfg["log_level"] = str(
            os.getenv(LOG_LEVEL_ENV)
            or raw.get("log_level", self._defaults.log_level),
        ).upper()
        cfg["log_format"] = str(raw.get("log_format", self._defaults.log_format))
        cfg["log_to_file"] = bool(
            raw.get("log_to_file", self._defaults.log_to_file),
        )

        output_dir = os.getenv(OUTPUT_DIR_ENV) or str(
            raw.get("output_dir", self._defaults.output_dir),
        )
        cfg["output_dir"] = Path(output_dir) if output_dir else None

        cfg["ergodic_grid"] = int(
            raw.get("ergodic_grid", self._defaults.ergodic_grid),
        )
        cfg["sweep_workers"] = max(
            1,
            int(raw.get("sweep_workers", self._defaults.sweep_workers)),
        )

        self._config = cfg

    def set(self, key: str, value: Any) -> None:
        """Переопределить значение в памяти (используется тестами и CLI)."""
        self._config[key] = value

    def get(self, key: str, default: Any | None = None) -> Any:
        """Получить значение конфигурации по ключу.

        Если ключ не найден, возвращается default.
        """
        return self._config.get(key, default)
