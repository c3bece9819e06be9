import os
from typing import Optional

import psutil


class ConfigError(Exception):
    pass


class Config:
    @staticmethod
    def get_env(var: str, required: bool = True, default: Optional[str] = None) -> Optional[str]:
        value = os.environ.get(var, default)
        if required and not value:
            raise ConfigError(f"Required: '{var}' not set!")
        return value

    @staticmethod
    def get_number(var: str, kind, default: str):
        raw = Config.get_env(var, False, default)
        try:
            return kind(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"'{var}' must be {kind.__name__}, got {raw!r}")


def default_workers() -> int:
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


def _load_config():
    THREADS = Config.get_env("BACKBONE_THREADS", False)
    Config.THREADS = Config.get_number("BACKBONE_THREADS", int, THREADS) if THREADS else None
    if Config.THREADS is not None and Config.THREADS < 1:
        raise ConfigError(f"'BACKBONE_THREADS' must be positive, got {THREADS!r}")

    Config.SEED = Config.get_number("BACKBONE_SEED", int, "20240607")
    Config.TOL = Config.get_number("BACKBONE_TOL", float, "1e-10")
    Config.MAX_EVALS = Config.get_number("BACKBONE_MAX_EVALS", int, "2000000")
    Config.RETRY_ATTEMPTS = Config.get_number("BACKBONE_RETRY_ATTEMPTS", int, "3")
    Config.MAX_RADIUS = Config.get_number("BACKBONE_MAX_RADIUS", int, "4096")
    Config.CHUNK_TRIALS = Config.get_number("BACKBONE_CHUNK_TRIALS", int, "5000")
    Config.WORKERS = Config.THREADS or default_workers()


try:
    _load_config()
except ConfigError as e:
    print(f"Configuration Error: {e}")
    print("Fix the BACKBONE_* variables in the environment or config.env")
    raise

config = Config()
