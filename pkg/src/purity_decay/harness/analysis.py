"""Post-processing: log-log slopes, plateau statistics, summary tables."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from ..entanglement import PuritySeries, plateau_estimate

MIN_FIT_POINTS = 5

SUMMARY_COLUMNS = ("model", "hbar", "delta", "mode_dims", "slope_quantum", "slope_echo",
                   "slope_semiclassical", "asymptotic_exponent", "plateau_mean", "plateau_std",
                   "max_rel_deviation", "validity_t_max")


def fit_loglog_slope(scaled_t, values, lo: float = 0.001, hi: float = 0.1,
                     t_limit: float | None = None) -> float | None:
    """Least-squares slope of log I against log(delta t) where lo < I < hi.

    Returns None when fewer than five points qualify or they span less than
    a factor 1.2 in delta t.
    """
    x = np.asarray(scaled_t, dtype=float)
    y = np.asarray(values, dtype=float)
    mask = (y > lo) & (y < hi) & (x > 0)
    if t_limit is not None:
        mask &= x < t_limit
    if mask.sum() < MIN_FIT_POINTS or x[mask].max() / x[mask].min() < 1.2:
        return None
    slope, _ = np.polyfit(np.log(x[mask]), np.log(y[mask]), 1)
    return float(slope)


def plateau_stats(series: PuritySeries, t_decay: float, fraction: float = 0.2) -> dict | None:
    """Trailing-window mean/std over samples later than 5 decay times."""
    late = series.times > 5.0 * t_decay
    if late.sum() < 8:
        return None
    tail = PuritySeries(series.times[late], series.values[late], series.provenance)
    n = max(int(round(fraction * len(series))), 8)
    try:
        mean, std = plateau_estimate(tail, min(1.0, n / len(tail)))
    except ValueError:
        return None
    return {"mean": mean, "std": std}


def analyze(records: Sequence, fit_min: float | None = None, fit_max: float | None = None) -> list[dict]:
    """One summary row per record; slopes refitted from the stored series."""
    rows = []
    for rec in records:
        cfg = rec.config
        lo = fit_min if fit_min is not None else cfg.get("fit_min", 0.001)
        hi = fit_max if fit_max is not None else cfg.get("fit_max", 0.1)
        x = rec.scaled_times
        t_max = rec.metrics.get("validity_t_max", float("inf"))
        valid = rec.times <= t_max
        row = {"model": rec.model, "hbar": rec.hbar, "delta": rec.delta,
               "mode_dims": "x".join(map(str, rec.mode_dims)),
               "slope_semiclassical": fit_loglog_slope(x, rec.semiclassical.values, lo, hi),
               "asymptotic_exponent": rec.metrics.get("asymptotic_exponent"),
               "validity_t_max": t_max,
               "max_rel_deviation": rec.metrics.get("max_rel_deviation")}
        for name, series in (("quantum", rec.quantum), ("echo", rec.echo)):
            row[f"slope_{name}"] = (None if series is None
                                    else fit_loglog_slope(x[valid], series.values[valid], lo, hi))
        plateau = None
        if rec.quantum is not None:
            plateau = plateau_stats(rec.quantum, rec.metrics.get("t_decay", 0.0),
                                    cfg.get("plateau_fraction", 0.2))
        row["plateau_mean"] = plateau["mean"] if plateau else None
        row["plateau_std"] = plateau["std"] if plateau else None
        rows.append(row)
    return rows


def write_summary(rows: Sequence[dict], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow(["" if row.get(c) is None else
                             (format(row[c], ".17g") if isinstance(row[c], float) else row[c])
                             for c in SUMMARY_COLUMNS])
    return path


def format_table(rows: Sequence[dict]) -> str:
    cols = ("model", "hbar", "delta", "slope_quantum", "slope_semiclassical",
            "asymptotic_exponent", "plateau_mean")

    def cell(v):
        if v is None:
            return "n/a"
        return f"{v:.4g}" if isinstance(v, float) else str(v)

    table = [cols] + [tuple(cell(r.get(c)) for c in cols) for r in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(cols))]
    return "\n".join("  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in table)
