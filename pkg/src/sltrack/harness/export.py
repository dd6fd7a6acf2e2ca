"""CSV and SVG output of (averaged) run records.

The SVG writer draws plain polyline charts by hand so that no plotting
package is needed.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from ..assessment import ASPECTS
from .config import Disturbance
from .runner import METRICS, RunRecord

CSV_HEADER = ("step", "sensor", "metric", "value")
_SORTED_METRICS = tuple(sorted(METRICS))


def format_value(x: float) -> str:
    return f"{x:.6g}"


def csv_text(record: RunRecord) -> str:
    """Rows sorted by (step, sensor, metric name); NaN values are omitted."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    n_steps, n_sensors, _ = record.metrics.shape
    cols = [METRICS.index(m) for m in _SORTED_METRICS]
    for k in range(n_steps):
        for s in range(n_sensors):
            row = record.metrics[k, s]
            for name, j in zip(_SORTED_METRICS, cols):
                v = row[j]
                if not math.isnan(v):
                    w.writerow((k, s + 1, name, format_value(float(v))))
    return buf.getvalue()


def write_csv(record: RunRecord, path: str | Path) -> Path:
    if record.metrics.size == 0:
        raise ValueError("record is empty")
    path = Path(path)
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(csv_text(record))
    return path


def read_csv(path: str | Path, num_sensors: int | None = None) -> RunRecord:
    """Inverse of :func:`write_csv`; omitted rows come back as NaN."""
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        rows = [(int(k), int(s), m, float(v)) for k, s, m, v in reader]
    n_steps = max(r[0] for r in rows) + 1 if rows else 0
    n_sensors = num_sensors or (max(r[1] for r in rows) if rows else 0)
    metrics = np.full((n_steps, n_sensors, len(METRICS)), np.nan)
    index = {m: i for i, m in enumerate(METRICS)}
    for k, s, m, v in rows:
        metrics[k, s - 1, index[m]] = v
    empty = np.zeros((n_steps, n_sensors, len(ASPECTS)))
    return RunRecord(metrics, empty, np.zeros((n_steps, n_sensors)), empty.copy())


# ---------------------------------------------------------------------------
# SVG

FAMILIES = (
    ("overall", ("dc_overall", "thr_overall")),
    ("association", ("dc_assoc", "thr_assoc")),
    ("measurement", ("dc_meas", "thr_meas")),
    ("clutter", ("dc_clutter", "thr_clutter")),
    ("NIS", ("nis_avg", "nis_lo", "nis_hi")),
    ("position error [m]", ("err_m",)),
)
_COLORS = ("#1f4e9c", "#c0392b", "#7f7f7f")
_W, _H, _PAD_L, _PAD_R, _PAD_T, _PAD_B = 640, 150, 56, 16, 22, 24


def _polyline(xs: np.ndarray, ys: np.ndarray, sx, sy, color: str, dash: bool) -> list[str]:
    """One polyline per contiguous run of finite values."""
    parts, pts = [], []
    extra = ' stroke-dasharray="4 3"' if dash else ""
    for x, y in zip(xs, ys):
        if math.isfinite(y):
            pts.append(f"{sx(x):.1f},{sy(y):.1f}")
            continue
        if len(pts) > 1:
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2"{extra} points="{" ".join(pts)}"/>')
        pts = []
    if len(pts) > 1:
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2"{extra} points="{" ".join(pts)}"/>')
    return parts


def svg_text(record: RunRecord, sensor_id: int, disturbances: Sequence[Disturbance] = ()) -> str:
    n_steps = record.metrics.shape[0]
    steps = np.arange(n_steps)
    height = len(FAMILIES) * _H
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{height}" font-family="sans-serif" font-size="10">',
        f'<rect width="{_W}" height="{height}" fill="white"/>',
    ]
    x_hi = max(n_steps - 1, 1)
    sx = lambda x: _PAD_L + (_W - _PAD_L - _PAD_R) * x / x_hi  # noqa: E731
    windows = [d for d in disturbances if d.sensor_id == sensor_id]
    for i, (title, names) in enumerate(FAMILIES):
        top = i * _H + _PAD_T
        bottom = (i + 1) * _H - _PAD_B
        data = [record.metric(m)[:, sensor_id - 1] for m in names]
        finite = np.concatenate([d[np.isfinite(d)] for d in data])
        lo = 0.0
        hi = float(finite.max()) if finite.size else 1.0
        if title == "NIS":
            lo = float(finite.min()) if finite.size else 0.0
        if hi <= lo:
            hi = lo + 1.0
        sy = lambda y, lo=lo, hi=hi, top=top, bottom=bottom: bottom - (bottom - top) * (y - lo) / (hi - lo)  # noqa: E731
        for d in windows:
            x0, x1 = sx(d.start), sx(min(d.end, x_hi))
            out.append(f'<rect x="{x0:.1f}" y="{top}" width="{x1 - x0:.1f}" height="{bottom - top}" fill="#e74c3c" fill-opacity="0.18"/>')
        out.append(f'<rect x="{_PAD_L}" y="{top}" width="{_W - _PAD_L - _PAD_R}" height="{bottom - top}" fill="none" stroke="black" stroke-width="0.6"/>')
        out.append(f'<text x="{_PAD_L}" y="{top - 6}">sensor {sensor_id}: {escape(title)} ({escape(", ".join(names))})</text>')
        out.append(f'<text x="{_PAD_L - 4}" y="{top + 8}" text-anchor="end">{format_value(hi)}</text>')
        out.append(f'<text x="{_PAD_L - 4}" y="{bottom}" text-anchor="end">{format_value(lo)}</text>')
        out.append(f'<text x="{_W - _PAD_R}" y="{bottom + 12}" text-anchor="end">{n_steps - 1}</text>')
        out.append(f'<text x="{_PAD_L}" y="{bottom + 12}">0</text>')
        for j, values in enumerate(data):
            out.extend(_polyline(steps, values, sx, sy, _COLORS[min(j, 2)], dash=j > 0))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(record: RunRecord, path: str | Path, sensor_id: int, disturbances: Iterable[Disturbance] = ()) -> Path:
    if record.metrics.size == 0:
        raise ValueError("record is empty")
    path = Path(path)
    path.write_text(svg_text(record, sensor_id, tuple(disturbances)), encoding="utf-8")
    return path
