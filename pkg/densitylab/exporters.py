"""
Artifact writing. Files appear atomically: content goes to a temporary
file in the destination directory, which is then renamed over the target.
"""
import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


def _jsonable(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def render_json(payload):
    return json.dumps(payload, sort_keys=True, indent=2, default=_jsonable) + "\n"


def render_csv(rows):
    """Header row first; columns in first-seen order across all rows."""
    columns = []
    for row in rows:
        columns += [key for key in row if key not in columns]
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, quoting=csv.QUOTE_MINIMAL)
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _cell(value) for key, value in row.items()})
    return buffer.getvalue()


def _cell(value):
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(value, sort_keys=True, default=_jsonable)
    if isinstance(value, (np.integer, np.floating)):
        return _jsonable(value)
    return value


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.unlink(temporary)
        raise
    logger.debug("wrote %s (%d bytes)", path, len(text))
    return path


def write_artifact(path, result, fmt):
    """Write an ExperimentResult as JSON (full payload) or CSV (its rows)."""
    if fmt == "json":
        return write_atomic(path, render_json(result.payload))
    if fmt == "csv":
        return write_atomic(path, render_csv(result.rows))
    raise ValueError(f"unknown output format {fmt!r}")
