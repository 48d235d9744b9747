"""CSV export and dependency-free SVG line charts."""

from __future__ import annotations

import csv
import math
from html import escape

from .errors import UavBeamError

TRAJECTORY_COLUMNS = ("k", "x_true", "y_true", "x_pred_lrnet", "y_pred_lrnet", "err_lrnet_m",
                      "x_pred_kalman", "y_pred_kalman", "err_kalman_m")
RATE_COLUMNS = ("k", "range_m", "rate_genie", "rate_lrnet", "rate_kalman")
SUMMARY_COLUMNS = ("episode", "scheme", "mean_rate", "rate_std", "mean_error_m", "median_error_m",
                   "max_error_m", "rate_ratio")
LOSS_COLUMNS = ("epoch", "train_loss", "val_loss")


class CsvParseError(UavBeamError, ValueError):
    exit_code = 2

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


def fmt(v) -> str:
    if isinstance(v, int):
        return str(v)
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"refusing to write non-finite value {v}")
    return f"{v:.9g}"


def _write(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def emit_trajectory_csv(records, path) -> None:
    rows = []
    for rec in records:
        lr, kf = rec.schemes["lrnet"].pred, rec.schemes["kalman"].pred
        rows.append((rec.k, rec.true.x, rec.true.y, lr.x, lr.y, rec.error("lrnet"),
                     kf.x, kf.y, rec.error("kalman")))
    _write(path, TRAJECTORY_COLUMNS, rows)


def emit_rate_csv(records, path) -> None:
    rows = [(rec.k, rec.range_m, rec.schemes["genie"].rate, rec.schemes["lrnet"].rate,
             rec.schemes["kalman"].rate) for rec in records]
    _write(path, RATE_COLUMNS, rows)


def emit_summary_csv(per_episode, path) -> None:
    """``per_episode`` is a list of (label, SummaryMetrics)."""
    rows = []
    for label, metrics in per_episode:
        for name, s in metrics.schemes.items():
            rows.append((label, name, s.mean_rate, s.rate_std, s.mean_error_m, s.median_error_m,
                         s.max_error_m, s.rate_ratio))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in rows:
            w.writerow([str(row[0]), row[1]] + [fmt(v) for v in row[2:]])


def emit_loss_csv(history, path) -> None:
    _write(path, LOSS_COLUMNS, [(h["epoch"], h["train_loss"], h["val_loss"]) for h in history])


def emit_csv(records, path, kind: str = "rate") -> None:
    if kind == "rate":
        emit_rate_csv(records, path)
    elif kind == "trajectory":
        emit_trajectory_csv(records, path)
    else:
        raise ValueError(f"unknown CSV kind {kind!r}")


def read_csv(path):
    """Return (header, float rows); raises CsvParseError with a 1-based line number."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvParseError(path, 1, "empty file")
    header = rows[0]
    data = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise CsvParseError(path, i, f"expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(v) for v in row]
        except ValueError as exc:
            raise CsvParseError(path, i, str(exc)) from None
        if not all(math.isfinite(v) for v in vals):
            raise CsvParseError(path, i, "non-finite value")
        data.append(vals)
    if not data:
        raise CsvParseError(path, len(rows) + 1, "no data rows")
    return header, data


_COLORS = {"genie": "#1f77b4", "lrnet": "#d62728", "kalman": "#2ca02c", "true": "#1f77b4"}


def _nice_ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _svg_chart(series, xlabel, ylabel, title, equal_aspect=False, width=640, height=480):
    """series: list of (name, xs, ys)."""
    ml, mr, mt, mb = 70, 130, 40, 55
    pw, ph = width - ml - mr, height - mt - mb
    xs = [x for _, sx, _ in series for x in sx]
    ys = [y for _, _, sy in series for y in sy]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    if equal_aspect:
        # same meters-per-pixel on both axes
        scale = max((x1 - x0) / pw, (y1 - y0) / ph)
        cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
        x0, x1 = cx - scale * pw / 2, cx + scale * pw / 2
        y0, y1 = cy - scale * ph / 2, cy + scale * ph / 2

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" data-equal-aspect="{str(equal_aspect).lower()}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<text x="{ml + pw / 2:.1f}" y="22" text-anchor="middle" font-size="15" '
           f'font-family="sans-serif">{escape(title)}</text>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _nice_ticks(x0, x1):
        out.append(f'<line x1="{px(t):.2f}" y1="{mt + ph}" x2="{px(t):.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{mt + ph + 18}" text-anchor="middle" font-size="11" '
                   f'font-family="sans-serif">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        out.append(f'<line x1="{ml - 5}" y1="{py(t):.2f}" x2="{ml}" y2="{py(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{py(t) + 4:.2f}" text-anchor="end" font-size="11" '
                   f'font-family="sans-serif">{t:g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="13" '
               f'font-family="sans-serif">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="13" font-family="sans-serif" '
               f'transform="rotate(-90 18 {mt + ph / 2:.1f})">{escape(ylabel)}</text>')
    for j, (name, sx, sy) in enumerate(series):
        color = _COLORS.get(name, "#555555")
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(sx, sy))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = mt + 15 + 20 * j
        out.append(f'<line x1="{ml + pw + 12}" y1="{ly}" x2="{ml + pw + 36}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 42}" y="{ly + 4}" font-size="12" '
                   f'font-family="sans-serif">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_plot(csv_path, out_path) -> None:
    """Rate CSV -> rate-vs-slot chart; trajectory CSV -> equal-aspect x/y chart."""
    header, data = read_csv(csv_path)
    cols = {name: [row[i] for row in data] for i, name in enumerate(header)}
    if tuple(header) == RATE_COLUMNS:
        series = [(s, cols["k"], cols[f"rate_{s}"]) for s in ("genie", "lrnet", "kalman")]
        svg = _svg_chart(series, "time slot k", "rate (bits/s/Hz)", "Achievable rate")
    elif tuple(header) == TRAJECTORY_COLUMNS:
        series = [("true", cols["x_true"], cols["y_true"]),
                  ("lrnet", cols["x_pred_lrnet"], cols["y_pred_lrnet"]),
                  ("kalman", cols["x_pred_kalman"], cols["y_pred_kalman"])]
        svg = _svg_chart(series, "x (m)", "y (m)", "UAV trajectory", equal_aspect=True)
    elif tuple(header) == LOSS_COLUMNS:
        series = [("train", cols["epoch"], cols["train_loss"]), ("val", cols["epoch"], cols["val_loss"])]
        svg = _svg_chart(series, "epoch", "MSE loss", "Training loss")
    else:
        raise CsvParseError(csv_path, 1, f"unrecognized header {header}")
    with open(out_path, "w") as fh:
        fh.write(svg)
