import os
import json
import logging
import datetime
from typing import Any, Optional

import pandas as pd

logger = logging.getLogger(__name__)


def _ensure_parent(output_file: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(output_file)), exist_ok=True)


def save_json_to_file(data: Any, output_file: str) -> None:
    """Save data to JSON file.

    Args:
        data: Data to save
        output_file: Path to output file
    """
    _ensure_parent(output_file)
    with open(output_file, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, default=str)
    logger.info(f"Data saved to: {output_file}")


def save_text_to_file(text: str, output_file: str) -> None:
    _ensure_parent(output_file)
    with open(output_file, 'w', encoding='utf-8') as f:
        f.write(text)
    logger.info(f"Data saved to: {output_file}")


def save_frame_to_csv(frame: pd.DataFrame, output_file: str) -> None:
    """Save a DataFrame as CSV; floats are written in round-trip form."""
    _ensure_parent(output_file)
    frame.to_csv(output_file, index=False)
    logger.info(f"Data saved to: {output_file}")


def read_text_file(path: str) -> str:
    with open(path, 'r', encoding='utf-8') as f:
        return f.read()


def format_timestamp() -> str:
    """Format current timestamp to ISO format.

    Returns:
        str: Formatted timestamp string
    """
    return datetime.datetime.now().isoformat()


def output_path(output_dir: str, name: str, suffix: str, stamp: Optional[str] = None) -> str:
    """Build `<output_dir>/<name>[_<stamp>]<suffix>`."""
    base = f"{name}_{stamp}" if stamp else name
    return os.path.join(output_dir, f"{base}{suffix}")
