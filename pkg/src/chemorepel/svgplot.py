"""Minimal self-contained SVG line plots.

No plotting dependency: figures here only display result series. Output is
deterministic for fixed inputs (fixed palette, fixed tick logic, fixed
float formatting), so plot files participate in byte-identical
reproducibility.
"""

import numpy as np

PALETTE = ("#1f6eb4", "#d1495b", "#2e8b57", "#b8860b", "#6a51a3", "#3b3b3b")

WIDTH, HEIGHT = 640, 420
ML, MR, MT, MB = 72, 24, 44, 52
LN10 = np.log(10.0)


def _fmt(x):
    return f"{x:.2f}"


def _tick_label(v):
    return f"{v:.4g}"


def _validate(spec):
    series = spec.get("series")
    if not series:
        raise ValueError("no series to plot")
    clean = []
    logy = bool(spec.get("logy", False))
    for s in series:
        label = s.get("label", "?")
        t = np.asarray(s["t"], dtype=float)
        v = np.asarray(s["values"], dtype=float)
        if t.size == 0 or v.size == 0:
            raise ValueError(f"series '{label}' is empty, nothing to plot")
        if t.shape != v.shape:
            raise ValueError(f"series '{label}' has mismatched t/value lengths")
        keep = np.isfinite(t) & np.isfinite(v)
        if logy:
            keep &= v > 0
        if not keep.any():
            raise ValueError(
                f"series '{label}' has no plottable points"
                + (" (log scale needs positive values)" if logy else ""))
        y = np.log10(v[keep]) if logy else v[keep]
        clean.append((label, t[keep], y))
    return clean, logy


def _ranges(clean, spec, logy):
    xlo = min(t.min() for _, t, _ in clean)
    xhi = max(t.max() for _, t, _ in clean)
    ylo = min(y.min() for _, _, y in clean)
    yhi = max(y.max() for _, _, y in clean)
    lam = spec.get("reference_rate")
    if lam is not None and logy:
        label, t0s, y0s = clean[0]
        yref = y0s[0] - lam * (xhi - t0s[0]) / LN10
        ylo = min(ylo, yref)
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    pad = 0.05 * (yhi - ylo)
    return xlo, xhi, ylo - pad, yhi + pad


def render_plot(spec):
    """SVG text for a line plot.

    spec keys: series (list of {label, t, values}), title, xlabel, ylabel,
    logy (log10 vertical axis), reference_rate (adds a dashed exp(-rate t)
    guide through the first point of the first series; log plots only).
    """
    clean, logy = _validate(spec)
    xlo, xhi, ylo, yhi = _ranges(clean, spec, logy)

    def X(x):
        return ML + (x - xlo) / (xhi - xlo) * (WIDTH - ML - MR)

    def Y(y):
        return HEIGHT - MB - (y - ylo) / (yhi - ylo) * (HEIGHT - MT - MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<g font-family="monospace" font-size="12" fill="#202020">',
    ]
    title = spec.get("title", "")
    if title:
        out.append(f'<text x="{WIDTH / 2:.0f}" y="20" text-anchor="middle" '
                   f'font-size="14">{title}</text>')
    # axes box
    out.append(f'<rect x="{ML}" y="{MT}" width="{WIDTH - ML - MR}" '
               f'height="{HEIGHT - MT - MB}" fill="none" stroke="#202020"/>')
    for xv in np.linspace(xlo, xhi, 5):
        px = X(xv)
        out.append(f'<line x1="{_fmt(px)}" y1="{HEIGHT - MB}" '
                   f'x2="{_fmt(px)}" y2="{HEIGHT - MB + 5}" stroke="#202020"/>')
        out.append(f'<text x="{_fmt(px)}" y="{HEIGHT - MB + 18}" '
                   f'text-anchor="middle">{_tick_label(xv)}</text>')
    for yv in np.linspace(ylo, yhi, 5):
        py = Y(yv)
        lab = _tick_label(yv)
        if logy:
            lab = f"1e{yv:.1f}"
        out.append(f'<line x1="{ML - 5}" y1="{_fmt(py)}" x2="{ML}" '
                   f'y2="{_fmt(py)}" stroke="#202020"/>')
        out.append(f'<text x="{ML - 8}" y="{_fmt(py + 4)}" '
                   f'text-anchor="end">{lab}</text>')
    xlabel = spec.get("xlabel", "t")
    ylabel = spec.get("ylabel", "")
    out.append(f'<text x="{(ML + WIDTH - MR) / 2:.0f}" y="{HEIGHT - 12}" '
               f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{(MT + HEIGHT - MB) / 2:.0f}" '
                   f'text-anchor="middle" transform="rotate(-90 16 '
                   f'{(MT + HEIGHT - MB) / 2:.0f})">{ylabel}</text>')
    lam = spec.get("reference_rate")
    if lam is not None and logy:
        _, t0s, y0s = clean[0]
        ts = np.linspace(xlo, xhi, 2)
        ys = y0s[0] - lam * (ts - t0s[0]) / LN10
        pts = " ".join(f"{_fmt(X(a))},{_fmt(Y(b))}" for a, b in zip(ts, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="#909090" '
                   f'stroke-dasharray="6 4"/>')
        out.append(f'<text x="{WIDTH - MR - 6}" y="{MT + 14}" '
                   f'text-anchor="end" fill="#909090">exp(-{lam:.4g} t)</text>')
    for i, (label, t, y) in enumerate(clean):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(X(a))},{_fmt(Y(b))}" for a, b in zip(t, y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        out.append(f'<text x="{WIDTH - MR - 6}" y="{MT + 30 + 16 * i}" '
                   f'text-anchor="end" fill="{color}">{label}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(path, spec):
    """Validate and render, then write; a bad spec leaves no file behind."""
    svg = render_plot(spec)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)
    return path
