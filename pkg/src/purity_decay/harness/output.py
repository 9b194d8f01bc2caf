"""Flat-file emission of run records and reading them back.

Each record yields ``<stem>.csv`` with the fixed column contract, a
``<stem>.meta.json`` with config, version, timing and metrics, and optionally
one two-column ``<stem>.<channel>.dat`` per purity channel for gnuplot.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .. import __version__
from ..entanglement import Provenance, PuritySeries
from .runner import RunRecord

COLUMNS = ("t", "delta_t", "I_quantum", "I_echo", "I_semiclassical", "I_closed_form")
CHANNELS = (("I_quantum", "quantum", Provenance.QUANTUM_FULL),
            ("I_echo", "echo", Provenance.QUANTUM_ECHO),
            ("I_semiclassical", "semiclassical", Provenance.SEMICLASSICAL),
            ("I_closed_form", "closed_form", Provenance.CLOSED_FORM))


class EmitError(OSError):
    pass


def _num(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} cannot be emitted")
    return format(float(x), ".17g")


def record_stem(rec: RunRecord) -> str:
    return f"{rec.model}_hbar{rec.hbar:.10g}_delta{rec.delta:.10g}"


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def metadata(rec: RunRecord) -> dict:
    return _json_safe({
        "code_version": __version__,
        "model": rec.model,
        "hbar": rec.hbar,
        "delta": rec.delta,
        "mode_dims": list(rec.mode_dims),
        "config": rec.config,
        "metrics": rec.metrics,
        "timing": rec.timing,
        "warnings": rec.warnings,
        "channels": [col for col, attr, _ in CHANNELS if getattr(rec, attr) is not None],
    })


def emit(rec: RunRecord, out_dir, formats=("csv", "gnuplot")) -> list[Path]:
    out = Path(out_dir)
    stem = record_stem(rec)
    written: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        times = rec.times
        scaled = rec.scaled_times
        channels = [getattr(rec, attr) for _, attr, _ in CHANNELS]
        if "csv" in formats:
            path = out / f"{stem}.csv"
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(COLUMNS)
                for i in range(len(times)):
                    writer.writerow([_num(times[i]), _num(scaled[i])]
                                    + ["" if s is None else _num(s.values[i]) for s in channels])
            written.append(path)
        if "gnuplot" in formats:
            for (col, attr, _), series in zip(CHANNELS, channels):
                if series is None:
                    continue
                path = out / f"{stem}.{attr}.dat"
                with path.open("w") as fh:
                    fh.write(f"# delta_t {col}  model={rec.model} hbar={rec.hbar:.17g} delta={rec.delta:.17g}\n")
                    for x, v in zip(scaled, series.values):
                        fh.write(f"{_num(x)} {_num(v)}\n")
                written.append(path)
        meta_path = out / f"{stem}.meta.json"
        meta_path.write_text(json.dumps(metadata(rec), indent=2, sort_keys=True) + "\n")
        written.append(meta_path)
    except OSError as exc:
        raise EmitError(f"failed writing {out / stem}*: {exc}") from exc
    return written


def read_csv(path) -> dict[str, np.ndarray | None]:
    """Columns of an emitted CSV; absent channels come back as None."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = list(reader)
    cols: dict[str, np.ndarray | None] = {}
    for k, name in enumerate(COLUMNS):
        raw = [r[k] for r in rows]
        if all(v == "" for v in raw):
            cols[name] = None
        elif any(v == "" for v in raw):
            raise ValueError(f"{path}: column {name} is partially empty")
        else:
            cols[name] = np.array([float(v) for v in raw])
    return cols


def load_record(csv_path) -> RunRecord:
    csv_path = Path(csv_path)
    meta_path = csv_path.with_name(csv_path.name[: -len(".csv")] + ".meta.json")
    meta = json.loads(meta_path.read_text())
    cols = read_csv(csv_path)
    metrics = dict(meta.get("metrics", {}))
    for key in ("validity_t_max", "t_decay"):
        if key in metrics:
            metrics[key] = float(metrics[key])
    series = {}
    for col, attr, prov in CHANNELS:
        vals = cols[col]
        series[attr] = None if vals is None else PuritySeries(cols["t"], vals, prov)
    return RunRecord(meta["config"], meta["model"], float(meta["hbar"]), float(meta["delta"]),
                     tuple(meta["mode_dims"]), series["semiclassical"], series["closed_form"],
                     series["quantum"], series["echo"], metrics, meta.get("timing", {}),
                     list(meta.get("warnings", [])))


def load_records(directory) -> list[RunRecord]:
    directory = Path(directory)
    return [load_record(p) for p in sorted(directory.glob("*.csv")) if p.name != "summary.csv"]
