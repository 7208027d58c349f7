"""Report plumbing: config digests, CSV/JSON writers and self-contained SVG
plots (histograms and ladder line plots).

All output is deterministic: floats are written with ``repr`` and JSON keys
are sorted, so identical inputs give byte-identical files.
"""

import dataclasses
import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np


def _plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def canonical_json(obj):
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def config_digest(config):
    """sha256 hex digest of the canonical JSON form of ``config``."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def to_json(obj):
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    s = str(v)
    return f'"{s}"' if ("," in s or '"' in s) else s


def to_csv(rows, columns):
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(_cell(r.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".part")
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


# -- SVG ----------------------------------------------------------------------

_W, _H, _PAD = 480, 320, 40


def _fmt(v):
    return f"{v:.4g}"


def _frame(title, x0, x1, y0, y1):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{_W / 2}" y="18" text-anchor="middle" font-family="sans-serif" '
        f'font-size="13">{title}</text>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
    ]
    for v, x in ((x0, _PAD), (x1, _W - _PAD)):
        parts.append(f'<text x="{x}" y="{_H - _PAD + 14}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="10">{_fmt(v)}</text>')
    for v, y in ((y0, _H - _PAD), (y1, _PAD)):
        parts.append(f'<text x="{_PAD - 4}" y="{y + 3}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="10">{_fmt(v)}</text>')
    return parts


def svg_histogram(samples, title="", bins=50, overlay=None):
    """Density histogram of ``samples``; ``overlay`` is an optional second
    sample drawn as an outline on the same bins."""
    a = np.asarray(samples, dtype=float)
    lo, hi = float(a.min()), float(a.max())
    if overlay is not None:
        b = np.asarray(overlay, dtype=float)
        lo, hi = min(lo, float(b.min())), max(hi, float(b.max()))
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    da, _ = np.histogram(a, edges, density=True)
    db = np.histogram(b, edges, density=True)[0] if overlay is not None else None
    top = float(max(da.max(), db.max() if db is not None else 0.0)) or 1.0
    sx = (_W - 2 * _PAD) / (hi - lo)
    sy = (_H - 2 * _PAD) / top
    parts = _frame(title, lo, hi, 0.0, top)
    for i, d in enumerate(da):
        x = _PAD + (edges[i] - lo) * sx
        parts.append(f'<rect x="{x:.2f}" y="{_H - _PAD - d * sy:.2f}" '
                     f'width="{(edges[i + 1] - edges[i]) * sx:.2f}" height="{d * sy:.2f}" '
                     'fill="steelblue" fill-opacity="0.6"/>')
    if db is not None:
        pts = []
        for i, d in enumerate(db):
            y = _H - _PAD - d * sy
            pts.append(f"{_PAD + (edges[i] - lo) * sx:.2f},{y:.2f}")
            pts.append(f"{_PAD + (edges[i + 1] - lo) * sx:.2f},{y:.2f}")
        parts.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="crimson"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def svg_ladder(xs, ys, title="", errors=None, reference=None, logx=False):
    """Line plot of a ladder ``ys`` against ``xs`` with optional error bars
    and a horizontal reference line."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    e = np.zeros_like(y) if errors is None else np.asarray(errors, dtype=float)
    xp = np.log2(x) if logx else x
    ylo = float(np.min(y - e))
    yhi = float(np.max(y + e))
    if reference is not None:
        ylo, yhi = min(ylo, reference), max(yhi, reference)
    if yhi <= ylo:
        yhi = ylo + 1.0
    x0, x1 = float(xp.min()), float(xp.max())
    if x1 <= x0:
        x1 = x0 + 1.0
    sx = (_W - 2 * _PAD) / (x1 - x0)
    sy = (_H - 2 * _PAD) / (yhi - ylo)

    def px(v):
        return _PAD + (v - x0) * sx

    def py(v):
        return _H - _PAD - (v - ylo) * sy

    parts = _frame(title, x0, x1, ylo, yhi)
    if reference is not None:
        parts.append(f'<line x1="{_PAD}" y1="{py(reference):.2f}" x2="{_W - _PAD}" '
                     f'y2="{py(reference):.2f}" stroke="gray" stroke-dasharray="4 3"/>')
    pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xp, y))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="steelblue"/>')
    for a, b, d in zip(xp, y, e):
        parts.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3" fill="steelblue"/>')
        if d > 0:
            parts.append(f'<line x1="{px(a):.2f}" y1="{py(b - d):.2f}" x2="{px(a):.2f}" '
                         f'y2="{py(b + d):.2f}" stroke="steelblue"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
