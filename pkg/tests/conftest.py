import pytest

from pharmonic_hub.infra.settings import SettingsLoader
from pharmonic_hub.logging_config import reset_solver_logger


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Логи во временный каталог без файлового обработчика, вывод в stdout."""
    monkeypatch.delenv("PHARMONIC_OUTPUT_DIR", raising=False)
    monkeypatch.delenv("PHARMONIC_LOG_LEVEL", raising=False)
    settings = SettingsLoader()
    settings.reload()
    settings.set("logs_dir", tmp_path / "logs")
    settings.set("log_to_file", False)
    reset_solver_logger()
    yield settings
    reset_solver_logger()
    settings.reload()
