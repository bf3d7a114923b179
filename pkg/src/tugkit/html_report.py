"""Static HTML trial overview with inline SVG plots (no external resources)."""

from __future__ import annotations

import math
from html import escape
from pathlib import Path

import numpy as np

from .report import RESULTS_COLUMNS, format_number, sector_fractions
from .segmentation import PHASES
from .vector_coding import BINS, classify_bin

PHASE_COLORS = {
    "Stand": "#fde68a",
    "FirstGait": "#bbf7d0",
    "Turn": "#fecaca",
    "SecondGait": "#bfdbfe",
    "Sit": "#e9d5ff",
}
BIN_COLORS = {"InPhase": "#15803d", "AntiPhase": "#b91c1c",
              "PelvisPhase": "#1d4ed8", "TrunkPhase": "#a16207"}
SERIES_COLORS = {"left_heel": "#1d4ed8", "right_heel": "#b91c1c",
                 "left_toe": "#60a5fa", "right_toe": "#f87171"}

WIDTH, HEIGHT = 720, 260
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 48, 12, 12, 28

_CSS = """
body { font-family: sans-serif; margin: 2rem auto; max-width: 780px; color: #111827; }
table { border-collapse: collapse; font-size: 0.9rem; }
th, td { border-bottom: 1px solid #e5e7eb; padding: 0.25rem 0.6rem; text-align: left; }
td.num { text-align: right; font-family: monospace; }
svg { display: block; margin: 0.5rem 0 1.5rem; background: #fff; }
.legend span { display: inline-block; margin-right: 1rem; font-size: 0.85rem; }
.warn li { color: #92400e; }
.generated { color: #6b7280; font-size: 0.8rem; }
"""


def _f(x: float) -> str:
    return f"{x:.2f}"


class _Frame:
    """Linear data-to-pixel mapping for one plot area."""

    def __init__(self, xmin, xmax, ymin, ymax, width=WIDTH, height=HEIGHT, equal=False):
        if not xmax > xmin:
            xmax = xmin + 1.0
        if not ymax > ymin:
            ymax = ymin + 1.0
        self.width, self.height = width, height
        self.left, self.top = MARGIN_L, MARGIN_T
        self.pw = width - MARGIN_L - MARGIN_R
        self.ph = height - MARGIN_T - MARGIN_B
        if equal:
            # same scale on both axes, data centred
            scale = min(self.pw / (xmax - xmin), self.ph / (ymax - ymin))
            cx, cy = (xmin + xmax) / 2, (ymin + ymax) / 2
            xmin, xmax = cx - self.pw / scale / 2, cx + self.pw / scale / 2
            ymin, ymax = cy - self.ph / scale / 2, cy + self.ph / scale / 2
        self.xmin, self.xmax, self.ymin, self.ymax = xmin, xmax, ymin, ymax

    def x(self, v):
        return self.left + (np.asarray(v, dtype=float) - self.xmin) / (self.xmax - self.xmin) * self.pw

    def y(self, v):
        return self.top + (self.ymax - np.asarray(v, dtype=float)) / (self.ymax - self.ymin) * self.ph

    def open_svg(self, label: str, **data) -> str:
        attrs = "".join(f' data-{k.replace("_", "-")}="{escape(str(v))}"' for k, v in data.items())
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}" role="img" '
                f'aria-label="{escape(label)}" data-plot-left="{self.left}" '
                f'data-plot-width="{self.pw}"{attrs}>')

    def box(self) -> str:
        return (f'<rect x="{self.left}" y="{self.top}" width="{self.pw}" height="{self.ph}" '
                'fill="none" stroke="#9ca3af"/>')

    def polylines(self, xs, ys, color: str, width: float = 1.5, cls: str = "") -> str:
        """One polyline per run of finite points."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        ok = np.isfinite(xs) & np.isfinite(ys)
        out = []
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            return ""
        runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
        px, py = self.x(xs), self.y(ys)
        for run in runs:
            if run.size < 2:
                continue
            pts = " ".join(f"{_f(px[i])},{_f(py[i])}" for i in run)
            out.append(f'<polyline class="{cls}" points="{pts}" fill="none" stroke="{color}" '
                       f'stroke-width="{width}"/>')
        return "".join(out)


def _axis_labels(fr: _Frame, x_text: str, y_text: str, x_lo: str = "", x_hi: str = "") -> str:
    bottom = fr.top + fr.ph
    out = [f'<text x="{_f(fr.left + fr.pw / 2)}" y="{fr.height - 6}" font-size="11" '
           f'text-anchor="middle">{escape(x_text)}</text>',
           f'<text x="12" y="{_f(fr.top + fr.ph / 2)}" font-size="11" text-anchor="middle" '
           f'transform="rotate(-90 12 {_f(fr.top + fr.ph / 2)})">{escape(y_text)}</text>']
    if x_lo:
        out.append(f'<text x="{fr.left}" y="{bottom + 14}" font-size="10">{escape(x_lo)}</text>')
    if x_hi:
        out.append(f'<text x="{fr.left + fr.pw}" y="{bottom + 14}" font-size="10" '
                   f'text-anchor="end">{escape(x_hi)}</text>')
    return "".join(out)


def pelvis_plot(result) -> str:
    """Pelvis Y over time with phase bands and the zone thresholds."""
    t = result.kinematics.time_s
    y = result.kinematics.pelvis[:, 1]
    cfg = result.cfg
    thresholds = {
        "chair_zone_y_max": cfg.chair_zone_y_max,
        "turn_entry_y": cfg.turn_zone_y - cfg.turn_tolerance_y,
        "turn_zone_y": cfg.turn_zone_y,
    }
    ylo = min(float(np.nanmin(y)), *thresholds.values())
    yhi = max(float(np.nanmax(y)), *thresholds.values())
    pad = 0.05 * (yhi - ylo)
    fr = _Frame(float(t[0]), float(t[-1]), ylo - pad, yhi + pad)
    fps = result.seg.fps
    parts = [fr.open_svg("pelvis Y over time", x_min_s=format_number(fr.xmin),
                         x_max_s=format_number(fr.xmax), fps=format_number(float(fps)))]
    for phase in PHASES:
        a, b = result.seg.interval(phase)
        x0, x1 = fr.x(a / fps), fr.x(b / fps)
        parts.append(f'<rect class="phase-band" data-phase="{phase}" data-start-frame="{a}" '
                     f'data-end-frame="{b}" x="{_f(x0)}" y="{fr.top}" width="{_f(x1 - x0)}" '
                     f'height="{fr.ph}" fill="{PHASE_COLORS[phase]}">'
                     f'<title>{phase}</title></rect>')
    for name, value in thresholds.items():
        yy = _f(fr.y(value))
        parts.append(f'<line class="threshold" data-name="{name}" x1="{fr.left}" y1="{yy}" '
                     f'x2="{fr.left + fr.pw}" y2="{yy}" stroke="#6b7280" stroke-dasharray="4 3">'
                     f'<title>{name}</title></line>')
    parts.append(fr.polylines(t, y, "#111827", cls="pelvis-y"))
    parts.append(fr.box())
    parts.append(_axis_labels(fr, "time (s)", "pelvis Y (m)",
                              format_number(float(t[0])), format_number(float(t[-1]))))
    parts.append("</svg>")
    legend = "".join(f'<span style="border-left:12px solid {c};padding-left:4px">{p}</span>'
                     for p, c in PHASE_COLORS.items())
    return "".join(parts) + f'<div class="legend">{legend}</div>'


def events_plot(result) -> str:
    """Heel and toe projections on the walking direction with HS/TO markers."""
    t = result.kinematics.time_s
    proj = result.projections
    mask = result.walking
    vals = np.concatenate([p[mask] for p in proj.values()]) if mask.any() else \
        np.concatenate(list(proj.values()))
    lo, hi = float(np.min(vals)), float(np.max(vals))
    pad = 0.05 * (hi - lo) if hi > lo else 0.1
    fr = _Frame(float(t[0]), float(t[-1]), lo - pad, hi + pad)
    parts = [fr.open_svg("heel and toe projections")]
    for name, series in proj.items():
        s = np.where(mask, series, np.nan)
        parts.append(fr.polylines(t, s, SERIES_COLORS[name], width=1.0, cls=name))
    for e in result.heel_strikes:
        parts.append(f'<circle class="hs" data-foot="{e.foot}" data-frame="{e.frame}" '
                     f'cx="{_f(fr.x(e.time_s))}" cy="{_f(fr.y(e.projection_value))}" r="3.5" '
                     f'fill="{SERIES_COLORS[e.foot.lower() + "_heel"]}"/>')
    for e in result.toe_offs:
        cx, cy = fr.x(e.time_s), fr.y(e.projection_value)
        parts.append(f'<rect class="to" data-foot="{e.foot}" data-frame="{e.frame}" '
                     f'x="{_f(cx - 3)}" y="{_f(cy - 3)}" width="6" height="6" fill="none" '
                     f'stroke="{SERIES_COLORS[e.foot.lower() + "_toe"]}"/>')
    parts.append(fr.box())
    parts.append(_axis_labels(fr, "time (s)", "relative to pelvis (m)",
                              format_number(float(t[0])), format_number(float(t[-1]))))
    parts.append("</svg>")
    legend = "".join(f'<span style="color:{c}">{n.replace("_", " ")}</span>'
                     for n, c in SERIES_COLORS.items())
    legend += "<span>&#9679; heel strike</span><span>&#9633; toe off</span>"
    return "".join(parts) + f'<div class="legend">{legend}</div>'


def polar_histogram(result, size: int = 300) -> str:
    """Eight 45-degree sectors centred on multiples of 45 deg, radius by occupancy."""
    fractions = sector_fractions(result.coupling)
    c = size / 2
    radius = c - 30
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}" role="img" aria-label="coupling angle histogram">']
    for ring in (0.25, 0.5, 0.75, 1.0):
        parts.append(f'<circle cx="{c}" cy="{c}" r="{_f(radius * ring)}" fill="none" '
                     'stroke="#e5e7eb"/>')
    if fractions is None:
        parts.append(f'<text x="{c}" y="{c}" text-anchor="middle" font-size="12">'
                     'no moving increments</text>')
    else:
        top = max(fractions) or 1.0
        for k, frac in enumerate(fractions):
            a0, a1 = math.radians(45 * k - 22.5), math.radians(45 * k + 22.5)
            r = radius * frac / top
            # SVG y points down, angles run counter-clockwise from +x
            x0, y0 = c + r * math.cos(a0), c - r * math.sin(a0)
            x1, y1 = c + r * math.cos(a1), c - r * math.sin(a1)
            color = BIN_COLORS[classify_bin(45.0 * k)]
            parts.append(f'<path class="sector" data-sector="{k}" '
                         f'd="M {c} {c} L {_f(x0)} {_f(y0)} A {_f(r)} {_f(r)} 0 0 0 '
                         f'{_f(x1)} {_f(y1)} Z" fill="{color}" fill-opacity="0.7" '
                         f'stroke="#fff"><title>{classify_bin(45.0 * k)} around {45 * k} deg: '
                         f'{format_number(frac)}</title></path>')
    for deg in range(0, 360, 90):
        a = math.radians(deg)
        parts.append(f'<text x="{_f(c + (radius + 14) * math.cos(a))}" '
                     f'y="{_f(c - (radius + 14) * math.sin(a) + 4)}" font-size="10" '
                     f'text-anchor="middle">{deg}&#176;</text>')
    parts.append("</svg>")
    legend = "".join(f'<span style="color:{BIN_COLORS[b]}">{b}</span>' for b in BINS)
    return "".join(parts) + f'<div class="legend">{legend}</div>'


def com_plot(result) -> str:
    """Horizontal pelvis (CoM proxy) and XCoM paths over the analysed span."""
    a, b = result.seg.span
    com = result.kinematics.pelvis[a:b, :2]
    xcom = result.kinematics.xcom[a:b]
    both = np.vstack([com, xcom[np.isfinite(xcom).all(axis=1)]])
    fr = _Frame(float(both[:, 0].min()), float(both[:, 0].max()),
                float(both[:, 1].min()), float(both[:, 1].max()), height=360, equal=True)
    parts = [fr.open_svg("CoM and XCoM paths"),
             fr.polylines(com[:, 0], com[:, 1], "#111827", cls="com"),
             fr.polylines(xcom[:, 0], xcom[:, 1], "#db2777", width=1.0, cls="xcom"),
             fr.box(), _axis_labels(fr, "X mediolateral (m)", "Y walkway (m)"), "</svg>"]
    legend = '<span style="color:#111827">CoM (pelvis)</span><span style="color:#db2777">XCoM</span>'
    return "".join(parts) + f'<div class="legend">{legend}</div>'


def metrics_table(result) -> str:
    row = [getattr(result.metrics, c) for c in RESULTS_COLUMNS]
    body = "".join(f'<tr><th>{c}</th><td class="num">{escape(format_number(v))}</td></tr>'
                   for c, v in zip(RESULTS_COLUMNS, row))
    return f'<table class="metrics">{body}</table>'


def render_html(result, path: str | Path, timestamp: str | None = None) -> Path:
    """Write the trial overview; ``timestamp`` is shown only when given."""
    path = Path(path)
    warnings = "".join(f"<li>{escape(w)}</li>" for w in result.warnings) or "<li>none</li>"
    generated = (f'<p class="generated">Generated {escape(timestamp)}</p>'
                 if timestamp else "")
    title = escape(f"TUG report: {result.trial_id}")
    doc = f"""<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>{title}</title>
<style>{_CSS}</style>
</head>
<body>
<h1>{title}</h1>
<h2>Metrics</h2>
{metrics_table(result)}
<h2>Phases</h2>
{pelvis_plot(result)}
<h2>Gait events</h2>
{events_plot(result)}
<h2>Trunk-pelvis coordination during the turn</h2>
{polar_histogram(result)}
<h2>CoM and XCoM</h2>
{com_plot(result)}
<h2>Warnings</h2>
<ul class="warn">{warnings}</ul>
{generated}
</body>
</html>
"""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(doc)
    return path
