"""
src/utils/files.py
Atomic file output (write to a temporary sibling, then rename)
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Union

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, text: str) -> Path:
    """
    Write text to path so readers never observe a partial file

    Args:
        path: Destination file; parent directories are created
        text: Full file contents

    Returns:
        The destination path
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp_name, target)
    except Exception:
        Path(tmp_name).unlink(missing_ok=True)
        raise

    logger.debug(f"Wrote {target}")
    return target


def atomic_write_json(path: PathLike, payload: Any) -> Path:
    """Serialize payload as indented JSON and write it atomically"""
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=False) + "\n")
