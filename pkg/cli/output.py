"""
cli/output.py - Deterministic CSV emission

Numbers are written with 10 significant digits and '.' as decimal separator.
Files are written to a temporary sibling and renamed into place, so a failed
run never leaves a partial table behind.
"""

import csv
import io
import logging
import math
import os
import sys
import tempfile
from typing import Iterable, Optional, Sequence

logger = logging.getLogger(__name__)

STDOUT = "-"


def format_value(value: object) -> str:
    """Render one CSV cell; None is an empty cell."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        # Avoid "-0" in rate columns
        return format(value + 0.0, ".10g")
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    """Header plus one line per row, '\\n'-terminated."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def write_csv(header: Sequence[str], rows: Iterable[Sequence[object]], path: Optional[str] = None) -> None:
    """
    Write a CSV table to `path`, or to standard output when path is None or "-".

    Raises:
        OSError: If the destination cannot be written
    """
    text = render_csv(header, rows)
    if path is None or path == STDOUT:
        sys.stdout.write(text)
        sys.stdout.flush()
        return

    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.info(f"Wrote {path}", extra={"event": "csv_written", "path": path, "bytes": len(text)})
