import hashlib
import json
from typing import Any, Optional

from __init__ import TOOL_NAME, VERSION


def get_readable_time(seconds: float) -> str:
    periods = [('d', 86400), ('h', 3600), ('m', 60), ('s', 1)]
    result = []
    for period_name, period_seconds in periods:
        if seconds >= period_seconds:
            period_value, seconds = divmod(seconds, period_seconds)
            result.append(f'{int(period_value)}{period_name}')
    return ' '.join(result) if result else '0s'


def get_progress_bar(progress: float, length: int = 20) -> str:
    progress = min(max(progress, 0.0), 1.0)
    filled_len = int(length * progress)
    return "█" * filled_len + "░" * (length - filled_len)


def _jsonable(value: Any) -> Any:
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if hasattr(value, "item"):
        return value.item()
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    return str(value)


def to_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_jsonable)


def config_hash(settings: dict) -> str:
    """sha256 of the canonical JSON form of the run settings."""
    canonical = json.dumps(settings, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(canonical.encode()).hexdigest()


def provenance(settings: dict, seed: Optional[int] = None) -> dict:
    # no timestamps: identical inputs give identical output files
    record = {"tool": TOOL_NAME, "version": VERSION, "config_hash": config_hash(settings)}
    if seed is not None:
        record["seed"] = seed
    return record
