"""CSV, JSON and SVG writers for sweep results.

Floats go to the CSV with 17 significant digits, which round-trips IEEE
doubles exactly. Wall-clock times are only written to ``summary.json`` so
that ``results.csv`` is byte-identical across reruns.
"""

from __future__ import annotations

import csv
import json
import math
from html import escape
from pathlib import Path

import numpy as np

__all__ = [
    "format_value",
    "write_csv",
    "read_csv",
    "write_summary",
    "line_plot_svg",
    "heatmap_svg",
    "plots_for",
    "write_outputs",
]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, columns, rows) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([format_value(r.get(c)) for c in columns])


def read_csv(path) -> tuple[list[str], list[dict]]:
    """Rows with every field parsed as float where possible."""
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        rows = []
        for rec in reader:
            row = {}
            for c, v in zip(columns, rec):
                try:
                    row[c] = float(v)
                except ValueError:
                    row[c] = v
            rows.append(row)
    return columns, rows


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def write_summary(path, result, spec_doc: dict | None = None) -> None:
    doc = {"kind": result.kind, "summary": result.summary, "timing": result.timing}
    if spec_doc is not None:
        doc["spec"] = spec_doc
    Path(path).write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


# -- SVG ------------------------------------------------------------------------------

_W, _H, _PAD = 480, 320, 56
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _scale(vals, lo_px, hi_px):
    vals = np.asarray(vals, dtype=float)
    lo, hi = np.nanmin(vals), np.nanmax(vals)
    if not np.isfinite(lo) or hi == lo:
        lo, hi = (lo - 1, hi + 1) if np.isfinite(lo) else (0.0, 1.0)
    return lambda v: lo_px + (float(v) - lo) / (hi - lo) * (hi_px - lo_px), lo, hi


def line_plot_svg(series: dict, title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Polyline plot; ``series`` maps a label to ``(x, y)`` arrays."""
    xs = np.concatenate([np.asarray(x, dtype=float) for x, _ in series.values()]) if series else np.zeros(1)
    ys = np.concatenate([np.asarray(y, dtype=float) for _, y in series.values()]) if series else np.zeros(1)
    fx, x0, x1 = _scale(xs[np.isfinite(xs)] if np.any(np.isfinite(xs)) else [0, 1], _PAD, _W - 16)
    fy, y0, y1 = _scale(ys[np.isfinite(ys)] if np.any(np.isfinite(ys)) else [0, 1], _H - _PAD, 24)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="16" text-anchor="middle">{escape(title)}</text>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - 16}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_PAD}" y2="24" stroke="black"/>',
        f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="14" y="{_H / 2}" text-anchor="middle" transform="rotate(-90 14 {_H / 2})">{escape(ylabel)}</text>',
        f'<text x="{_PAD}" y="{_H - _PAD + 14}" text-anchor="middle">{x0:.3g}</text>',
        f'<text x="{_W - 16}" y="{_H - _PAD + 14}" text-anchor="middle">{x1:.3g}</text>',
        f'<text x="{_PAD - 4}" y="{_H - _PAD}" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{_PAD - 4}" y="28" text-anchor="end">{y1:.4g}</text>',
    ]
    for i, (label, (x, y)) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = [(fx(a), fy(b)) for a, b in zip(x, y) if np.isfinite(a) and np.isfinite(b)]
        if pts:
            path = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            out.extend(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2.5" fill="{color}"/>' for a, b in pts)
        out.append(f'<text x="{_W - 20}" y="{40 + 14 * i}" text-anchor="end" fill="{color}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap_svg(Z, xlabels, ylabels, title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Grayscale cells, white at 1 and black at 0 (values clipped to [0, 1])."""
    Z = np.asarray(Z, dtype=float)
    rows, cols = Z.shape
    cw = (_W - _PAD - 16) / max(cols, 1)
    ch = (_H - _PAD - 24) / max(rows, 1)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" font-family="sans-serif" font-size="10">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="16" text-anchor="middle">{escape(title)}</text>',
        f'<text x="{_W / 2}" y="{_H - 8}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="12" y="{_H / 2}" text-anchor="middle" transform="rotate(-90 12 {_H / 2})">{escape(ylabel)}</text>',
    ]
    for i in range(rows):
        y = 24 + (rows - 1 - i) * ch
        out.append(f'<text x="{_PAD - 4}" y="{y + ch / 2 + 3:.2f}" text-anchor="end">{escape(str(ylabels[i]))}</text>')
        for j in range(cols):
            v = Z[i, j]
            g = int(round(255 * min(max(v, 0.0), 1.0))) if np.isfinite(v) else 128
            out.append(f'<rect x="{_PAD + j * cw:.2f}" y="{y:.2f}" width="{cw:.2f}" height="{ch:.2f}" '
                       f'fill="rgb({g},{g},{g})" stroke="#888" stroke-width="0.3"/>')
    for j in range(cols):
        out.append(f'<text x="{_PAD + (j + 0.5) * cw:.2f}" y="{_H - _PAD + 24 + 12}" text-anchor="middle">'
                   f'{escape(str(xlabels[j]))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _cell_series(cells, axis: str, metric: str, stat: str = "median"):
    x = [c[axis] for c in cells]
    y = [np.nan if c[metric][stat] is None else c[metric][stat] for c in cells]
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def plots_for(kind: str, summary: dict, axes: list[str]) -> dict[str, str]:
    """SVG documents keyed by file name for a summary produced by a sweep."""
    cells = summary.get("cells", [])
    if not cells or not axes:
        return {}
    if kind == "sample_complexity_grid" and {"d", "n"} <= set(axes):
        ds = sorted({c["d"] for c in cells})
        ns = sorted({c["n"] for c in cells})
        Z = np.full((len(ds), len(ns)), np.nan)
        for c in cells:
            v = c["success"]["mean"]
            Z[ds.index(c["d"]), ns.index(c["n"])] = np.nan if v is None else v
        return {"success_rate.svg": heatmap_svg(Z, ns, ds, "success rate", "n", "d")}
    if len(axes) != 1:
        return {}
    ax = axes[0]
    try:
        float(cells[0][ax])
    except (TypeError, ValueError):
        return {}
    if kind == "convergence_sweep":
        return {"rate.svg": line_plot_svg(
            {"measured": _cell_series(cells, ax, "rate"), "theory": _cell_series(cells, ax, "theory_rate")},
            "convergence rate", ax, "v")}
    if kind == "error_vs_n":
        x, y = _cell_series(cells, ax, "final_error", "mean")
        return {"error.svg": line_plot_svg({"mean error": (np.sqrt(np.log(x) / x), y)},
                                           "aligned error", "sqrt(log n / n)", "error")}
    if kind.startswith("risk_vs"):
        return {
            "risk.svg": line_plot_svg(
                {"average": _cell_series(cells, ax, "risk_avg", "mean"),
                 "group": _cell_series(cells, ax, "risk_group", "mean")},
                "test risk", ax, "cross-entropy"),
            "excess_risk.svg": line_plot_svg(
                {"average": _cell_series(cells, ax, "excess_avg", "mean"),
                 "group": _cell_series(cells, ax, "excess_group", "mean")},
                "excess risk over the teacher", ax, "cross-entropy"),
        }
    return {}


def write_outputs(outdir, result, spec_doc: dict | None = None, axes=(), plots: bool = True) -> list[Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "results.csv", out / "summary.json"]
    write_csv(written[0], result.columns, result.rows)
    write_summary(written[1], result, spec_doc)
    if plots:
        for name, svg in plots_for(result.kind, _jsonable(result.summary), list(axes)).items():
            (out / name).write_text(svg)
            written.append(out / name)
    return written
