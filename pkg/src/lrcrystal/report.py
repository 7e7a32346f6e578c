"""Result files: diagram CSV, JSON-lines records and SVG pattern plots.

Every file starts with a header carrying the run configuration and the
package version, so results can be traced back to how they were produced.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import __version__

HEADER_KEY = "lrcrystal"


def header(config: dict) -> dict:
    return {HEADER_KEY: __version__, "config": config}


def write_jsonl(path: Path, records, config: dict) -> None:
    with Path(path).open("w") as fh:
        fh.write(json.dumps({"header": header(config)}, sort_keys=True) + "\n")
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_jsonl(path: Path) -> tuple[dict | None, list[dict]]:
    head, recs = None, []
    with Path(path).open() as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if "header" in rec and head is None and not recs:
                head = rec["header"]
            else:
                recs.append(rec)
    return head, recs


def append_jsonl(path: Path, record: dict, config: dict) -> None:
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a") as fh:
        if new:
            fh.write(json.dumps({"header": header(config)}, sort_keys=True) + "\n")
        fh.write(json.dumps(record, sort_keys=True) + "\n")
        fh.flush()


CSV_FIELDS = ("x", "filling", "eps", "cell_index", "cell", "pattern_id", "pattern")


def write_diagram_csv(path: Path, points: list[dict], config: dict) -> None:
    with Path(path).open("w", newline="") as fh:
        fh.write("# " + json.dumps(header(config), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for p in points:
            a, _, c = (int(v) for v in p["cell"].split("_"))
            w.writerow([repr(p["x"]), p["f"], repr(p["eps"]), a * c, p["cell"], p["phase"],
                        p["phase_name"]])


def read_diagram_csv(path: Path) -> list[dict]:
    with Path(path).open() as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(rows))


# -- SVG -----------------------------------------------------------------------

_FILL = {0: "#d3d3d3", 1: "#1f4fd8"}
_MULTI = ("#1f4fd8", "#2a9d8f", "#e9c46a", "#f4a261", "#e76f51", "#9b2226")


def _colour(n: int) -> str:
    if n in _FILL:
        return _FILL[n]
    return _MULTI[min(n - 1, len(_MULTI) - 1)]


def pattern_svg(sites: np.ndarray, T1: np.ndarray, T2: np.ndarray, occ, reps: int = 3,
                title: str = "", config: dict | None = None, scale: float = 28.0) -> str:
    """Occupation pattern tiled ``reps x reps`` times, one unit cell shaded red."""
    sites = np.asarray(sites, float)
    occ = [int(v) for v in occ]
    pts = []
    for a in range(reps):
        for b in range(reps):
            shift = a * T1 + b * T2
            for s, n in zip(sites, occ):
                pts.append((s + shift, n))
    xy = np.array([p for p, _ in pts])
    cell = np.array([[0, 0], T1, T1 + T2, T2]) + sites[0]
    lo = np.minimum(xy.min(axis=0), cell.min(axis=0)) - 1.0
    hi = np.maximum(xy.max(axis=0), cell.max(axis=0)) + 1.0
    W, H = (hi - lo) * scale

    def tr(v):
        return (v[0] - lo[0]) * scale, (hi[1] - v[1]) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.1f}" height="{H + 20:.1f}">']
    if config is not None:
        out.append("<!-- " + json.dumps(header(config), sort_keys=True).replace("--", "- -") + " -->")
    poly = " ".join("{:.2f},{:.2f}".format(*tr(v)) for v in cell)
    out.append(f'<polygon points="{poly}" fill="#ff0000" fill-opacity="0.18" stroke="#cc0000"/>')
    r = 0.22 * scale
    for p, n in pts:
        x, y = tr(p)
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r:.2f}" fill="{_colour(n)}"/>')
        if n > 1:
            out.append(f'<text x="{x:.2f}" y="{y + 4:.2f}" font-size="11" text-anchor="middle" '
                       f'fill="#ffffff">{n}</text>')
    if title:
        out.append(f'<text x="4" y="{H + 15:.1f}" font-size="12">{title}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def diagram_svg(points: list[dict], axis: str, config: dict | None = None,
                width: float = 640, height: float = 320) -> str:
    """Filling against the sweep parameter as a step plot."""
    from fractions import Fraction

    xs = [p["x"] for p in points]
    fs = [float(Fraction(p["f"])) for p in points]
    x0, x1 = min(xs), max(xs)
    span = (x1 - x0) or 1.0
    m = 40

    def tx(x):
        return m + (x - x0) / span * (width - 2 * m)

    def ty(f):
        return height - m - f * (height - 2 * m)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
    if config is not None:
        out.append("<!-- " + json.dumps(header(config), sort_keys=True).replace("--", "- -") + " -->")
    out.append(f'<line x1="{m}" y1="{height - m}" x2="{width - m}" y2="{height - m}" stroke="black"/>')
    out.append(f'<line x1="{m}" y1="{m}" x2="{m}" y2="{height - m}" stroke="black"/>')
    path = []
    for i, (x, f) in enumerate(zip(xs, fs)):
        if i:
            path.append(f"L{tx(x):.2f},{ty(fs[i - 1]):.2f}")
        path.append(("M" if not i else "L") + f"{tx(x):.2f},{ty(f):.2f}")
    out.append(f'<path d="{" ".join(path)}" fill="none" stroke="#1f4fd8" stroke-width="1.5"/>')
    out.append(f'<text x="{width / 2}" y="{height - 8}" font-size="12" text-anchor="middle">{axis}</text>')
    out.append(f'<text x="10" y="{height / 2}" font-size="12">f</text>')
    for v in (0, 0.5, 1):
        out.append(f'<text x="{m - 6}" y="{ty(v) + 4:.1f}" font-size="10" text-anchor="end">{v}</text>')
    for v in (x0, x1):
        out.append(f'<text x="{tx(v):.1f}" y="{height - m + 14}" font-size="10" '
                   f'text-anchor="middle">{v:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
