"""CSV tables and SVG quick-looks for simulated histograms and S-curves.

Files are plain deterministic byte streams (fixed float formatting, no
timestamps) so repeated runs produce identical outputs.  Publication
plotting is left to external tools reading the CSVs; the SVGs are only
sanity previews.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .analysis import (AngleHistogram, CorrelationSet, FitResult,
                       histogram_from_counters, s_curve_model)
from .runner import RunSummary


def emit_plot_data(summary: RunSummary, out_dir: str | Path) -> list[Path]:
    """Write per-class histogram/S-curve tables and previews.

    Emits, per analyzed class (or per ``config.focus`` entry when set):
    the unfolded 16-bin histogram, its folded variant, the fitted cosine
    curve on a 1-degree grid, the S-curve table with the fitted model
    curve, and one SVG preview each for the histogram and the S-curve.
    An empty (all-zero) selection still produces headers-only CSVs.
    """
    from .runner import _class_masks  # local import avoids a cycle

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    masks = _class_masks(summary.arrays, summary.config)
    names = summary.config.focus or tuple(masks)
    n_bins = summary.config.apparatus.n_counters_per_arm
    pitch = summary.config.apparatus.counter_pitch_deg
    for name in names:
        mask = masks.get(name)
        if mask is None:
            hist = AngleHistogram(np.zeros(n_bins, dtype=np.int64), pitch)
        else:
            hist = histogram_from_counters(summary.arrays["counter1"][mask],
                                           summary.arrays["counter2"][mask],
                                           n_bins, pitch)
        fit = summary.fits.get(name)
        fit = fit if isinstance(fit, FitResult) else None
        cs = summary.correlations.get(name)
        cs = cs if isinstance(cs, CorrelationSet) else None
        written += _emit_class(out, name, hist, fit, cs)
    return written


def _emit_class(out: Path, name: str, hist: AngleHistogram,
                fit: FitResult | None, cs: CorrelationSet | None) -> list[Path]:
    written = []

    path = out / f"{name}_histogram.csv"
    lines = ["angle_deg,counts,sigma"]
    for angle, n in zip(hist.angles_deg, hist.counts):
        lines.append("%.1f,%d,%.6f" % (angle, n, math.sqrt(max(int(n), 1))))
    path.write_text("\n".join(lines) + "\n")
    written.append(path)

    path = out / f"{name}_histogram_folded.csv"
    angles, folded = hist.folded()
    lines = ["angle_deg,counts,sigma"]
    for angle, n in zip(angles, folded):
        lines.append("%.1f,%d,%.6f" % (angle, n, math.sqrt(max(int(n), 1))))
    path.write_text("\n".join(lines) + "\n")
    written.append(path)

    path = out / f"{name}_fit_curve.csv"
    lines = ["angle_deg,fitted_counts"]
    if fit is not None:
        grid = np.arange(360.0)
        curve = fit.a - fit.b * np.cos(2.0 * np.radians(grid))
        for angle, value in zip(grid, curve):
            lines.append("%.1f,%.6f" % (angle, value))
    path.write_text("\n".join(lines) + "\n")
    written.append(path)

    path = out / f"{name}_s_curve.csv"
    lines = ["angle_deg,S,sigma"]
    if cs is not None:
        for angle in sorted(cs.s_values):
            s, sig = cs.s_values[angle]
            lines.append("%.1f,%.6f,%.6f" % (angle, s, sig))
    path.write_text("\n".join(lines) + "\n")
    written.append(path)

    path = out / f"{name}_s_fit_curve.csv"
    lines = ["angle_deg,fitted_S"]
    if cs is not None and cs.p0 is not None:
        grid = np.arange(180.0)
        curve = s_curve_model(grid, cs.p0)
        for angle, value in zip(grid, curve):
            lines.append("%.1f,%.6f" % (angle, value))
    path.write_text("\n".join(lines) + "\n")
    written.append(path)

    hist_pts = [(float(a), float(n), math.sqrt(max(int(n), 1)))
                for a, n in zip(hist.angles_deg, hist.counts)]
    hist_curve = None
    if fit is not None:
        hist_curve = [(float(a), fit.a - fit.b * math.cos(2.0 * math.radians(a)))
                      for a in np.arange(0.0, 360.0, 2.0)]
    path = out / f"{name}_histogram.svg"
    path.write_text(_svg_plot(hist_pts, hist_curve,
                              f"{name}: coincidences vs relative azimuth",
                              "relative azimuth [deg]", "counts"))
    written.append(path)

    s_pts = []
    s_curve = None
    if cs is not None:
        s_pts = [(float(a), *cs.s_values[a]) for a in sorted(cs.s_values)]
        if cs.p0 is not None:
            s_curve = [(float(a), float(s_curve_model(float(a), cs.p0)))
                       for a in np.arange(0.0, 180.0, 1.0)]
    path = out / f"{name}_s_curve.svg"
    path.write_text(_svg_plot(s_pts, s_curve, f"{name}: S-function",
                              "polarimeter angle [deg]", "S"))
    written.append(path)
    return written


_W, _H, _MARGIN = 640, 420, 56.0


def _svg_plot(points, curve, title: str, xlabel: str, ylabel: str) -> str:
    """Minimal static scatter-with-errorbars plus optional model curve."""
    xs = [p[0] for p in points] + ([c[0] for c in curve] if curve else [])
    ys = ([p[1] - p[2] for p in points] + [p[1] + p[2] for p in points]
          + ([c[1] for c in curve] if curve else []))
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.08 * (y1 - y0)
    y0 -= pad
    y1 += pad

    def sx(x):
        return _MARGIN + (x - x0) / (x1 - x0) * (_W - 2 * _MARGIN)

    def sy(y):
        return _H - _MARGIN - (y - y0) / (y1 - y0) * (_H - 2 * _MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_MARGIN}" y="{_MARGIN}" width="{_W - 2 * _MARGIN:.1f}" '
        f'height="{_H - 2 * _MARGIN:.1f}" fill="none" stroke="black"/>',
        f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
        f'<text x="{_W / 2:.1f}" y="{_H - 12:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{xlabel}</text>',
        f'<text x="16" y="{_H / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {_H / 2:.1f})">{ylabel}</text>',
        f'<text x="{_MARGIN:.1f}" y="{_H - _MARGIN + 16:.1f}" '
        f'font-family="sans-serif" font-size="10">{x0:.6g}</text>',
        f'<text x="{_W - _MARGIN:.1f}" y="{_H - _MARGIN + 16:.1f}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">{x1:.6g}</text>',
        f'<text x="{_MARGIN - 4:.1f}" y="{sy(y0):.1f}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">{y0:.6g}</text>',
        f'<text x="{_MARGIN - 4:.1f}" y="{sy(y1):.1f}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">{y1:.6g}</text>',
    ]
    if curve:
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in curve)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#c0392b" '
                     f'stroke-width="1.5"/>')
    for x, y, err in points:
        parts.append(f'<line x1="{sx(x):.2f}" y1="{sy(y - err):.2f}" '
                     f'x2="{sx(x):.2f}" y2="{sy(y + err):.2f}" stroke="#2c3e50"/>')
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" '
                     f'fill="#2c3e50"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
