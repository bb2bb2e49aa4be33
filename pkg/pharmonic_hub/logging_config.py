from __future__ import annotations

import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

from .infra.settings import SettingsLoader

_solver_logger: Optional[logging.Logger] = None


def get_solver_logger() -> logging.Logger:
    """Вернуть логгер численных операций (EXPONENT/LAMBDA/SECTOR/...).

    Ленивая инициализация, пути и уровни берутся из SettingsLoader.
    Поток пишет в stderr: stdout занят результатами CLI.
    """
    global _solver_logger

    if _solver_logger is not None:
        return _solver_logger

    settings = SettingsLoader()

    logger = logging.getLogger("pharmonic.solver")
    logger.setLevel(settings.get("log_level", "INFO"))
    logger.propagate = False

    if not logger.handlers:
        log_format = settings.get(
            "log_format",
            "%(asctime)s [%(levelname)s] %(name)s - %(message)s",
        )
        formatter = logging.Formatter(
            fmt=log_format,
            datefmt="%Y-%m-%dT%H:%M:%S",
        )

        if settings.get("log_to_file", True):
            logs_dir = Path(settings.get("logs_dir"))
            try:
                logs_dir.mkdir(parents=True, exist_ok=True)
                file_handler = RotatingFileHandler(
                    logs_dir / "solver.log",
                    maxBytes=1_000_000,
                    backupCount=5,
                    encoding="utf-8",
                )
            except OSError:
                # каталог недоступен для записи: остаёмся только на stderr
                file_handler = None
            if file_handler is not None:
                file_handler.setFormatter(formatter)
                logger.addHandler(file_handler)

        stream_handler = logging.StreamHandler()
        stream_handler.setFormatter(formatter)
        logger.addHandler(stream_handler)

    _solver_logger = logger
    return logger


def reset_solver_logger() -> None:
    """Сбросить кеш логгера и его обработчики (после изменения настроек)."""
    global _solver_logger

    logger = logging.getLogger("pharmonic.solver")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    _solver_logger = None
