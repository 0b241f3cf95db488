"""
CSV Tables

Row-oriented CSV output shared by the CLI and the report writers.
"""

import csv
import io
from pathlib import Path
from typing import Iterable, Optional, Union


def format_value(value) -> str:
    """Locale-independent text for a CSV cell; floats keep full precision."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, 'item'):
        return format_value(value.item())
    return str(value)


def to_csv(rows: list[dict], fieldnames: Optional[Iterable[str]] = None) -> str:
    """Convert a list of dicts to RFC-4180 CSV text with a header row."""
    if not rows and fieldnames is None:
        return ""
    fieldnames = list(fieldnames) if fieldnames is not None else list(rows[0].keys())

    output = io.StringIO()
    writer = csv.DictWriter(output, fieldnames=fieldnames)
    writer.writeheader()
    for row in rows:
        writer.writerow({k: format_value(v) for k, v in row.items()})
    return output.getvalue()


def to_markdown(rows: list[dict]) -> str:
    """Render rows as a markdown table."""
    if not rows:
        return ""
    fieldnames = list(rows[0].keys())
    lines = [
        "| " + " | ".join(fieldnames) + " |",
        "|" + "|".join("---" for _ in fieldnames) + "|",
    ]
    for row in rows:
        lines.append("| " + " | ".join(format_value(row[k]) for k in fieldnames) + " |")
    return "\n".join(lines) + "\n"


def write_csv(rows: list[dict], path: Union[str, Path], fieldnames: Optional[Iterable[str]] = None) -> None:
    """Write rows to a CSV file (newline handling left to the csv module)."""
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        fh.write(to_csv(rows, fieldnames))
