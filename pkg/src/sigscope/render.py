"""Deterministic SVG scatter plot of an embedding with its fitted regions."""

from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .classify import OutlierClass

WIDTH, HEIGHT, MARGIN = 800, 600, 60
CURVE_STEPS = 240
PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
)
GLYPH = {
    OutlierClass.ABSOLUTE: "M -6 -6 L 6 6 M -6 6 L 6 -6",
    OutlierClass.VALID: "M 0 -7 L 6 5 L -6 5 Z",
    OutlierClass.AMBIGUOUS: "M 0 -7 L 7 0 L 0 7 L -7 0 Z",
}


def _fmt(v):
    return f"{v:.2f}"


def _bounds(coords, fits):
    xs, ys = [], []
    if len(coords):
        xs.extend(coords[:, 0])
        ys.extend(coords[:, 1])
    for fit in fits.values():
        e = fit.ellipse
        if e is not None:
            xs.extend([e.center[0] - e.semi_axis_x, e.center[0] + e.semi_axis_x])
            ys.extend([e.center[1] - e.semi_axis_y, e.center[1] + e.semi_axis_y])
    if not xs:
        return 0.0, 1.0, 0.0, 1.0
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    px, py = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
    return x0 - px, x1 + px, y0 - py, y1 + py


def _ticks(lo, hi, n=5):
    return np.linspace(lo, hi, n)


def render_svg(embedding=None, fits=None, report=None):
    """Return the plot as an SVG string.

    ``fits`` maps cluster id to :class:`~sigscope.regression.ClusterFit`;
    ``report`` is an :class:`~sigscope.classify.OutlierReport`. Any of them
    may be ``None``, in which case only what is available is drawn.
    """
    fits = fits or {}
    if embedding is not None:
        coords = np.asarray(embedding.coords, dtype=float)
        labels = list(embedding.labels)
        clusters = embedding.cluster or {}
    else:
        coords, labels, clusters = np.empty((0, 2)), [], {}
    x0, x1, y0, y1 = _bounds(coords, fits)
    plot_w, plot_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def sx(x):
        return MARGIN + (np.asarray(x) - x0) / (x1 - x0) * plot_w

    def sy(y):
        return HEIGHT - MARGIN - (np.asarray(y) - y0) / (y1 - y0) * plot_h

    def color(cid):
        return PALETTE[int(cid) % len(PALETTE)]

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        "<defs>",
        f'<clipPath id="plot-area"><rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}"/></clipPath>',
        "</defs>",
        f'<rect class="background" x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        '<g class="axes" stroke="black" stroke-width="1">',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}"/>',
        "</g>",
        '<g class="ticks" fill="black">',
    ]
    for t in _ticks(x0, x1):
        px = _fmt(sx(t))
        out.append(f'<line x1="{px}" y1="{HEIGHT - MARGIN}" x2="{px}" y2="{HEIGHT - MARGIN + 5}" stroke="black"/>')
        out.append(f'<text x="{px}" y="{HEIGHT - MARGIN + 18}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        py = _fmt(sy(t))
        out.append(f'<line x1="{MARGIN - 5}" y1="{py}" x2="{MARGIN}" y2="{py}" stroke="black"/>')
        out.append(f'<text x="{MARGIN - 8}" y="{py}" text-anchor="end" dominant-baseline="middle">{t:.3g}</text>')
    out.append("</g>")

    out.append('<g class="regions" clip-path="url(#plot-area)" fill="none">')
    for cid in sorted(fits):
        fit = fits[cid]
        c = color(cid)
        if fit.ellipse is not None:
            e = fit.ellipse
            rx = e.semi_axis_x / (x1 - x0) * plot_w
            ry = e.semi_axis_y / (y1 - y0) * plot_h
            out.append(
                f'<ellipse class="ellipse cluster-{cid}" cx="{_fmt(sx(e.center[0]))}" '
                f'cy="{_fmt(sy(e.center[1]))}" rx="{_fmt(rx)}" ry="{_fmt(ry)}" '
                f'stroke="{c}" stroke-width="1" stroke-opacity="0.7"/>'
            )
        if fit.curve is not None:
            cv = fit.curve
            pad = 0.1 * (cv.x_max - cv.x_min)
            xs = np.linspace(cv.x_min - pad, cv.x_max + pad, CURVE_STEPS)
            lo, hi = fit.band.bounds(xs)
            for cls, ys, dash in (("curve", cv.predict(xs), ""),
                                  ("band band-lower", lo, ' stroke-dasharray="5,4"'),
                                  ("band band-upper", hi, ' stroke-dasharray="5,4"')):
                pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(sx(xs), sy(ys)))
                out.append(f'<polyline class="{cls} cluster-{cid}" points="{pts}" stroke="{c}"{dash}/>')
    out.append("</g>")

    out.append('<g class="points">')
    for lab, (x, y) in zip(labels, coords):
        cid = clusters.get(lab)
        cls = "point" if cid is None else f"point cluster-{cid}"
        fill = "#444444" if cid is None else color(cid)
        out.append(
            f'<circle class="{cls}" data-label={quoteattr(lab)} cx="{_fmt(sx(x))}" '
            f'cy="{_fmt(sy(y))}" r="3.5" fill="{fill}"/>'
        )
    out.append("</g>")

    out.append('<g class="annotations">')
    if report is not None and len(coords):
        position = {lab: (x, y) for lab, (x, y) in zip(labels, coords)}
        for v in report.verdicts:
            if v.cls is OutlierClass.INLIER or v.label not in position:
                continue
            x, y = position[v.label]
            px, py = _fmt(sx(x)), _fmt(sy(y))
            out.append(
                f'<path class="glyph glyph-{v.cls.value}" data-label={quoteattr(v.label)} '
                f'transform="translate({px},{py})" d="{GLYPH[v.cls]}" fill="none" stroke="black"/>'
            )
            out.append(
                f'<text class="annotation" x="{_fmt(sx(x) + 8)}" y="{_fmt(sy(y) - 8)}">'
                f"{escape(v.label)} ({v.cls.value})</text>"
            )
    out.append("</g>")

    out.append('<g class="legend">')
    for i, cid in enumerate(sorted(fits)):
        y = MARGIN + 14 * i
        out.append(f'<rect x="{WIDTH - MARGIN + 6}" y="{y - 8}" width="9" height="9" fill="{color(cid)}"/>')
        out.append(f'<text x="{WIDTH - MARGIN + 19}" y="{y}">{cid}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
