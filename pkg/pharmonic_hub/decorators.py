from __future__ import annotations

import inspect
from functools import wraps
from typing import Any, Callable, Optional

from .logging_config import get_solver_logger

FuncType = Callable[..., Any]

_CONTEXT_KEYS = ("p", "d", "alpha", "gamma", "branch", "backend")


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    tag = getattr(value, "value", None)
    if isinstance(tag, str):
        return tag
    return str(value)


def _summarize(result: Any) -> str:
    """Короткое представление результата для строки лога."""
    if isinstance(result, (int, float)):
        return _fmt(float(result))
    keys = ("gamma", "lam") if hasattr(result, "branch") else ("lam", "lambda1")
    for attr in keys:
        value = getattr(result, attr, None)
        if isinstance(value, (int, float)):
            return f"{attr}={_fmt(float(value))}"
    return type(result).__name__


def log_action(action: Optional[str] = None) -> Callable[[FuncType], FuncType]:
    """Декоратор для логирования численных операций.

    Логируем на уровне INFO структуру:
    - action (EXPONENT/LAMBDA/SECTOR/...)
    - контекст: p, d, alpha, gamma, branch, backend (что есть в аргументах;
      параметры из spec-объектов достаются по атрибутам)
    - result (OK/ERROR) и значение результата
    - error_type и error_message при исключениях

    Декоратор не глотает исключения — только фиксирует их в логах.
    """

    def decorator(func: FuncType) -> FuncType:
        signature = inspect.signature(func)

        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            logger = get_solver_logger()
            act = action or func.__name__.upper()

            context: dict[str, Any] = {}
            try:
                bound = signature.bind_partial(*args, **kwargs)
            except TypeError:
                bound = None
            if bound is not None:
                for name, value in bound.arguments.items():
                    if name in _CONTEXT_KEYS:
                        context[name] = value
                    elif name == "spec":
                        for key in _CONTEXT_KEYS:
                            if hasattr(value, key) and key not in context:
                                context[key] = getattr(value, key)
            ctx_repr = " ".join(f"{k}={_fmt(v)}" for k, v in context.items())

            try:
                result = func(*args, **kwargs)
            except Exception as exc:  # noqa: BLE001
                logger.error(
                    f"{act} {ctx_repr} result=ERROR "
                    f"error_type='{type(exc).__name__}' "
                    f"error_message='{exc}'",
                )
                raise

            logger.info(f"{act} {ctx_repr} result=OK value={_summarize(result)}")
            return result

        return wrapper  # type: ignore[return-value]

    return decorator
