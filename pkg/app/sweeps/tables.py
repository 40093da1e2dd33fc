"""
Result persistence: long and wide CSV tables, per-point artifacts and the JSON manifest
"""

import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd
import pandera as pa

from .. import __version__
from ..config import settings
from ..errors import OutputError

logger = logging.getLogger(__name__)

STATUSES = ["success", "flagged", "failed"]

LONG_SCHEMA = pa.DataFrameSchema(
    {
        "point": pa.Column(str),
        "status": pa.Column(str, pa.Check.isin(STATUSES)),
        "quantity": pa.Column(str),
        "value": pa.Column(float, nullable=True),
    },
    strict=False,
    coerce=True,
)


def _clean(value: Any) -> Any:
    """JSON-safe copy: NaN/inf become None, numpy scalars become Python numbers."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _header(records: Sequence[Any], axis_keys: List[str], config_hash: Optional[str]) -> List[str]:
    lines = [
        f"# optical field emission toolkit {__version__}",
        f"# config_hash: {config_hash or ''}",
        "# point: grid index, axis positions joined by '-'",
    ]
    for key in axis_keys:
        lines.append(f"# {key}: axis value, unit given by the key suffix")
    lines += [
        "# status: success | flagged | failed",
        "# quantity: result name, unit given by the name suffix (_as, _fs, _GVm, _Jm2, _rad); bare names are dimensionless",
        "# value: float, written with 17 significant digits",
    ]
    return lines


def _axis_keys(records: Sequence[Any], axis_keys: Optional[List[str]]) -> List[str]:
    if axis_keys is not None:
        return list(axis_keys)
    return list(records[0].axis_values) if records else []


def long_frame(records: Sequence[Any], axis_keys: Optional[List[str]] = None) -> pd.DataFrame:
    keys = _axis_keys(records, axis_keys)
    rows = []
    for record in sorted(records, key=lambda r: r.index):
        for quantity in sorted(record.results):
            row = {"point": record.point_id}
            row.update({k: record.axis_values.get(k) for k in keys})
            row.update({"status": record.status, "quantity": quantity, "value": float(record.results[quantity])})
            rows.append(row)
    columns = ["point", *keys, "status", "quantity", "value"]
    frame = pd.DataFrame(rows, columns=columns)
    return LONG_SCHEMA.validate(frame) if len(frame) else frame


def wide_frame(records: Sequence[Any], axis_keys: Optional[List[str]] = None) -> pd.DataFrame:
    keys = _axis_keys(records, axis_keys)
    quantities = sorted({q for r in records for q in r.results})
    rows = []
    for record in sorted(records, key=lambda r: r.index):
        row = {"point": record.point_id}
        row.update({k: record.axis_values.get(k) for k in keys})
        row["status"] = record.status
        row.update({q: record.results.get(q, float("nan")) for q in quantities})
        rows.append(row)
    return pd.DataFrame(rows, columns=["point", *keys, "status", *quantities])


def _write_csv(frame: pd.DataFrame, path: Path, header: Optional[List[str]] = None) -> Path:
    try:
        with path.open("w", encoding="utf-8", newline="") as handle:
            for line in header or []:
                handle.write(line + "\n")
            frame.to_csv(handle, index=False, float_format=settings.csv_float_format, lineterminator="\n")
    except OSError as e:
        raise OutputError(f"could not write table: {e}", path=str(path)) from e
    return path


def manifest(records: Sequence[Any], plan: Optional[Dict[str, Any]] = None, config_hash: Optional[str] = None) -> Dict[str, Any]:
    ordered = sorted(records, key=lambda r: r.index)
    return _clean({
        "version": __version__,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "config_hash": config_hash,
        "plan": plan or {},
        "total_points": len(ordered),
        "completed": sum(1 for r in ordered if r.status != "failed"),
        "flagged": sum(1 for r in ordered if r.status == "flagged"),
        "failed": sum(1 for r in ordered if r.status == "failed"),
        "points": [r.manifest_entry() for r in ordered],
    })


def emit_tables(
    records: Sequence[Any],
    output_dir: Union[str, Path],
    name: str = "run",
    plan: Optional[Dict[str, Any]] = None,
    axis_keys: Optional[List[str]] = None,
    config_hash: Optional[str] = None,
) -> Dict[str, Path]:
    """Write <name>_long.csv, <name>_wide.csv, <name>_manifest.json and per-point artifact CSVs."""
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"could not create output directory: {e}", path=str(out)) from e

    keys = _axis_keys(records, axis_keys)
    if config_hash is None and records:
        config_hash = records[0].config_hash
    paths = {
        "long": _write_csv(long_frame(records, keys), out / f"{name}_long.csv", _header(records, keys, config_hash)),
        "wide": _write_csv(wide_frame(records, keys), out / f"{name}_wide.csv"),
    }

    artifact_dir = out / f"{name}_points"
    for record in records:
        for artifact, frame in sorted(record.artifacts.items()):
            artifact_dir.mkdir(parents=True, exist_ok=True)
            _write_csv(frame, artifact_dir / f"{record.point_id}_{artifact}.csv")

    manifest_path = out / f"{name}_manifest.json"
    try:
        manifest_path.write_text(json.dumps(manifest(records, plan, config_hash), indent=2), encoding="utf-8")
    except OSError as e:
        raise OutputError(f"could not write manifest: {e}", path=str(manifest_path)) from e
    paths["manifest"] = manifest_path

    logger.info(f"wrote {len(records)} records to {out}")
    return paths


def read_long_table(path: Union[str, Path]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, comment="#", dtype={"point": str})
    except OSError as e:
        raise OutputError(f"could not read table: {e}", path=str(path)) from e
    return LONG_SCHEMA.validate(frame) if len(frame) else frame


def write_frame(frame: pd.DataFrame, path: Union[str, Path], header: Optional[List[str]] = None) -> Path:
    """Single table export used by the one-shot CLI commands."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"could not create output directory: {e}", path=str(path.parent)) from e
    return _write_csv(frame, path, header)


def write_json(payload: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(_clean(payload), indent=2), encoding="utf-8")
    except OSError as e:
        raise OutputError(f"could not write JSON: {e}", path=str(path)) from e
    return path
