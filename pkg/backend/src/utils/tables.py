"""Table writers shared by the CLI, sweeps and scripts.

CSV files may start with ``# ``-prefixed header lines; JSON files hold
``{"metadata": ..., "rows": [...]}``.
"""
import csv
import io
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

FORMATS = ("csv", "json")


def resolve_output(out_path: Union[str, Path], filename: str, fmt: str) -> Path:
    """Return the file to write.

    Args:
        out_path: Directory or full file path.
        filename: Base name (without extension) used when out_path is a directory.
        fmt: ``"csv"`` or ``"json"``.
    """
    out_p = Path(out_path)
    if out_p.suffix.lower() != f".{fmt}":
        # treat as directory
        out_p.mkdir(parents=True, exist_ok=True)
        out_p = out_p / f"{filename}.{fmt}"
    else:
        out_p.parent.mkdir(parents=True, exist_ok=True)
    return out_p


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        # float() drops numpy scalar reprs
        return repr(float(value))
    return value


def render_table(
    rows: Iterable[Mapping[str, Any]],
    columns: Sequence[str],
    fmt: str = "csv",
    header: Optional[Sequence[str]] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> str:
    """Serialize rows to text; floats are written with full precision."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}, expected one of {FORMATS}")
    rows = list(rows)
    if fmt == "json":
        payload = {
            "metadata": metadata or {},
            "rows": [{c: row.get(c) for c in columns} for row in rows],
        }
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"

    buf = io.StringIO()
    for line in header or ():
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def write_table(
    rows: Iterable[Mapping[str, Any]],
    columns: Sequence[str],
    out_path: Union[str, Path],
    fmt: str = "csv",
    header: Optional[Sequence[str]] = None,
    metadata: Optional[Dict[str, Any]] = None,
    filename: str = "table",
) -> Path:
    """Write rows to out_path (a directory or a full file path) and return the file."""
    target = resolve_output(out_path, filename, fmt)
    target.write_text(render_table(rows, columns, fmt, header, metadata), encoding="utf-8")
    return target


def header_lines(config: Mapping[str, Any]) -> List[str]:
    """One ``key=value`` line per config entry, values as compact JSON."""
    return [f"{key}={json.dumps(value, separators=(',', ':'))}" for key, value in config.items()]
