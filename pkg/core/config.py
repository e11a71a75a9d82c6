import os
from typing import Optional

from dotenv import load_dotenv

# Load .env file
load_dotenv('.env')


def get_env(name: str, default: Optional[str] = None) -> str:
    val = os.getenv(name, default)
    if val is None:
        raise RuntimeError(f"Missing required env var: {name}")
    return val


def _flag(name: str, default: str = "False") -> bool:
    return get_env(name, default).lower() == "true"


class Settings:
    def __init__(self):
        self.APP_NAME: str = get_env("APP_NAME", "bulk-surface-ch")
        self.APP_VERSION: str = get_env("APP_VERSION", "1.0.0")

        self.DEBUG: bool = _flag("DEBUG")
        self.TESTING: bool = _flag("TESTING")
        self.LOG_LEVEL: str = get_env("LOG_LEVEL", "DEBUG" if self.DEBUG else "INFO").upper()

        # Root of per-run output directories
        self.OUTPUT_DIR: str = get_env("OUTPUT_DIR", "./runs")

        # Redis/Celery settings (distributed sweeps only)
        self.REDIS_URL: str = get_env("REDIS_URL", "redis://localhost:6379/0")
        self.USE_CELERY: bool = _flag("USE_CELERY") and not self.TESTING
        self.SWEEP_TIMEOUT_SECONDS: int = int(get_env("SWEEP_TIMEOUT_SECONDS", "3600"))

        # Local parallelism
        self.SWEEP_WORKERS: int = max(1, int(get_env("SWEEP_WORKERS", "1")))
        self.SOLVER_WORKERS: int = max(1, int(get_env("SOLVER_WORKERS", "1")))


settings = Settings()
