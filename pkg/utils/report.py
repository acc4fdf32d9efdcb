"""
Rendering of flat report rows as aligned tables, CSV or JSON lines.
"""
import csv
import io
import json
import math
from typing import Any, Dict, Mapping, Optional, Sequence

from config import OUTPUT_FORMATS


def format_value(value: Any) -> str:
    """Text form of a report cell; floats use 12 significant digits."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.12g}"
    return str(value)


def _json_value(value: Any) -> Any:
    # JSON has no nan
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _check_format(fmt: str) -> None:
    if fmt not in OUTPUT_FORMATS:
        raise ValueError(f"Unknown format {fmt!r}, expected one of {OUTPUT_FORMATS}")


def render_rows(rows: Sequence[Mapping[str, Any]], fmt: str) -> str:
    """
    Render rows sharing the keys of the first row.

    Returns:
        Text ending in a newline (empty string for no rows)
    """
    _check_format(fmt)
    if not rows:
        return ""
    columns = list(rows[0].keys())

    if fmt == "json-lines":
        return "".join(json.dumps({k: _json_value(row[k]) for k in columns}) + "\n" for row in rows)

    cells = [[format_value(row[k]) for k in columns] for row in rows]
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(cells)
        return buffer.getvalue()

    widths = [max(len(c), *(len(line[i]) for line in cells)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(v.ljust(w) for v, w in zip(line, widths)).rstrip() for line in cells)
    return "\n".join(lines) + "\n"


def render_mapping(mapping: Mapping[str, Any], fmt: str) -> str:
    """Render a single flat key -> value record."""
    _check_format(fmt)
    if fmt == "table":
        width = max((len(k) for k in mapping), default=0)
        return "".join(f"{k.ljust(width)}  {format_value(v)}\n" for k, v in mapping.items())
    return render_rows([mapping], fmt)


def render_report(
    rows: Sequence[Mapping[str, Any]],
    fmt: str,
    footer: Optional[Dict[str, Any]] = None,
) -> str:
    """
    Rows followed by an optional footer record.

    The footer is appended for table and json-lines output; CSV stays a
    single rectangular table.
    """
    text = render_rows(rows, fmt)
    if footer and fmt != "csv":
        text += ("\n" if fmt == "table" else "") + render_mapping(footer, fmt)
    return text
