import os
import logging
from typing import Any, Callable, Dict, Mapping, Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


class ParamsError(ValueError):
    """Raised when a parameter object breaks its invariants."""


def load_environment(dotenv_path: Optional[str] = None) -> None:
    """Load a .env file into the process environment (existing variables win)."""
    load_dotenv(dotenv_path=dotenv_path, override=False)


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging the way every entry point does.

    Args:
        level: Log level name; falls back to SPCAP_LOG_LEVEL, then INFO
    """
    level_name = (level or os.environ.get("SPCAP_LOG_LEVEL") or "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler()],
        force=True,
    )


def get_threads() -> int:
    """Parallelism cap from SPCAP_THREADS (default 1)."""
    raw = os.environ.get("SPCAP_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError:
        raise ParamsError(f"SPCAP_THREADS must be an integer, got '{raw}'") from None
    if threads < 1:
        raise ParamsError(f"SPCAP_THREADS must be >= 1, got {threads}")
    return threads


def get_output_dir() -> str:
    return os.environ.get("SPCAP_OUTPUT_DIR", "output")


def parse_config_text(text: str) -> Dict[str, str]:
    """Parse `key=value` lines; '#' starts a comment line."""
    values: Dict[str, str] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ParamsError(f"config line {no}: expected key=value, got '{line}'")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def read_config_file(path: str) -> Dict[str, str]:
    with open(path, "r", encoding="utf-8") as f:
        values = parse_config_text(f.read())
    logger.info(f"Loaded {len(values)} settings from {path}")
    return values


def merge_settings(defaults: Mapping[str, Any], file_values: Mapping[str, str],
                   cli_values: Mapping[str, Any]) -> Dict[str, Any]:
    """Resolve settings with precedence CLI flag > config file > defaults.

    File values are strings and are converted to the type of the default.
    CLI values of None mean "not given".
    """
    merged: Dict[str, Any] = dict(defaults)
    for key, raw in file_values.items():
        if key not in defaults:
            raise ParamsError(f"unknown config key '{key}'")
        merged[key] = _coerce(key, raw, defaults[key])
    for key, value in cli_values.items():
        if value is not None:
            merged[key] = value
    return merged


def _coerce(key: str, raw: str, default: Any) -> Any:
    if default is None:
        converters: Dict[str, Callable[[str], Any]] = {"time_budget": float, "ants": int, "psi": int, "rins_nodes": int}
        convert = converters.get(key, str)
    elif isinstance(default, bool):
        convert = _parse_bool
    else:
        convert = type(default)
    try:
        return convert(raw)
    except ValueError:
        raise ParamsError(f"config key '{key}': cannot parse '{raw}'") from None


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)
