"""
Run manifest generation.

Records what a CLI run computed: scenario, parameters, output files and timing.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, asdict
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

from src import __version__
from src.io_outputs import to_jsonable


@dataclass
class OutputInfo:
    """One artifact written by the run."""
    path: str
    format: str
    rows: int
    sha256: str


@dataclass
class RunManifest:
    """Complete run manifest."""
    scenario_name: str
    scenario_source: Optional[str]
    kind: str
    scenario_sha256: str
    version: str
    generated_at: str
    elapsed_sec: float
    elapsed_hms: str
    units: dict
    tolerance: Optional[float]
    outputs: List[OutputInfo]

    # Parameters used
    params: dict
    sweep: Optional[dict] = None
    summary: Optional[dict] = None


def seconds_to_hms(seconds: float) -> str:
    """Convert seconds to HH:MM:SS format."""
    hours = int(seconds // 3600)
    minutes = int((seconds % 3600) // 60)
    secs = int(seconds % 60)
    return f"{hours:02d}:{minutes:02d}:{secs:02d}"


def file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def generate_run_manifest(
    scenario,
    outputs: List[tuple],  # List of (path, format, rows)
    elapsed_sec: float,
    output_path: Path,
    summary: Optional[Dict] = None,
    sweep: Optional[Dict] = None,
) -> RunManifest:
    """
    Generate run_manifest.json next to the run outputs.

    Args:
        scenario: the Scenario that was run
        outputs: (path, format, row count) of each written file
        elapsed_sec: wall time of the run
        output_path: where to save the JSON file
        summary: scalar results of the run
        sweep: axis and values when the run was a sweep

    Returns:
        RunManifest object
    """
    infos = [
        OutputInfo(path=str(path), format=fmt, rows=rows, sha256=file_sha256(Path(path)))
        for path, fmt, rows in outputs
    ]

    manifest = RunManifest(
        scenario_name=scenario.name,
        scenario_source=scenario.source,
        kind=scenario.kind,
        scenario_sha256=scenario.digest(),
        version=__version__,
        generated_at=datetime.now().isoformat(),
        elapsed_sec=round(elapsed_sec, 3),
        elapsed_hms=seconds_to_hms(elapsed_sec),
        units=scenario.units.to_dict(),
        tolerance=scenario.tolerance,
        outputs=infos,
        params=scenario.parameters,
        sweep=sweep,
        summary=summary,
    )

    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, 'w', encoding='utf-8') as f:
        json.dump(to_jsonable(asdict(manifest)), f, indent=2, ensure_ascii=False)

    return manifest
