"""
CSV and JSON writers with a provenance header.
============================================================
CSV files start with `#` comment lines (library version, scenario hash,
kind, timestamp), then a header row whose numeric columns carry units in
brackets. Floats are written with repr so doubles round-trip. Only the
`# generated_at` line changes between identical runs.
"""
from __future__ import annotations

import csv
import io
import json
import math
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from src import __version__

LIBRARY_NAME = "classical_limits"


def provenance(digest: str, kind: str, generated_at: Optional[str] = None) -> Dict[str, str]:
    return {
        "library": LIBRARY_NAME,
        "version": __version__,
        "scenario_sha256": digest,
        "kind": kind,
        "generated_at": generated_at or datetime.now().isoformat(),
    }


def format_value(value: Any) -> str:
    """Text for one CSV cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return repr(value)
    if isinstance(value, complex):
        return repr(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(format_value(v) for v in value)
    return str(value)


def csv_body(rows: List[Dict[str, Any]], columns: List[str], headers: Dict[str, str]) -> str:
    """Header row plus data rows, without the provenance comments."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([headers.get(c, c) for c in columns])
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    return buf.getvalue()


def write_csv(
    path: Path,
    rows: List[Dict[str, Any]],
    columns: List[str],
    headers: Dict[str, str],
    prov: Dict[str, str],
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"# {prov['library']} {prov['version']}",
        f"# scenario_sha256: {prov['scenario_sha256']}",
        f"# kind: {prov['kind']}",
        f"# generated_at: {prov['generated_at']}",
    ]
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("\n".join(lines) + "\n")
        f.write(csv_body(rows, columns, headers))
    return path


def to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


def write_json(path: Path, payload: Dict[str, Any], prov: Dict[str, str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_jsonable({"provenance": prov, **payload}), f, indent=2, ensure_ascii=False)
    return path


def write_result(result, digest: str, out_path: Path, fmt: str = "csv") -> Path:
    """Write a RunResult as CSV (rows) or JSON (rows, headers and summary)."""
    prov = provenance(digest, result.kind)
    if fmt == "json":
        payload = {
            "columns": [result.headers.get(c, c) for c in result.columns],
            "rows": result.rows,
            "summary": result.summary,
        }
        return write_json(Path(out_path).with_suffix(".json"), payload, prov)
    return write_csv(Path(out_path).with_suffix(".csv"), result.rows, result.columns, result.headers, prov)


def save_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return path
