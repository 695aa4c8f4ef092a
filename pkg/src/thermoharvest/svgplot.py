"""Minimal, bit-stable SVG line and scatter plots (no plotting dependency)."""

from __future__ import annotations

import numpy as np

WIDTH, HEIGHT = 640, 480
MARGIN_LEFT, MARGIN_RIGHT = 70, 20
MARGIN_TOP, MARGIN_BOTTOM = 30, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _limits(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi <= lo:
        pad = abs(lo) * 0.05 + 1e-12
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _scale(value, lo, hi, out_lo, out_hi):
    return out_lo + (value - lo) / (hi - lo) * (out_hi - out_lo)


def _axis(x_lo, x_hi, y_lo, y_hi, x_label, y_label, title):
    parts = [
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" '
        f'width="{WIDTH - MARGIN_LEFT - MARGIN_RIGHT}" '
        f'height="{HEIGHT - MARGIN_TOP - MARGIN_BOTTOM}" '
        'fill="none" stroke="#333333" stroke-width="1"/>'
    ]
    for i in range(6):
        frac = i / 5
        xv = x_lo + frac * (x_hi - x_lo)
        xpix = _scale(xv, x_lo, x_hi, MARGIN_LEFT, WIDTH - MARGIN_RIGHT)
        parts.append(
            f'<line x1="{xpix:.2f}" y1="{HEIGHT - MARGIN_BOTTOM}" '
            f'x2="{xpix:.2f}" y2="{HEIGHT - MARGIN_BOTTOM + 5}" stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{xpix:.2f}" y="{HEIGHT - MARGIN_BOTTOM + 18}" '
            f'font-size="11" text-anchor="middle">{xv:.3g}</text>'
        )
        yv = y_lo + frac * (y_hi - y_lo)
        ypix = _scale(yv, y_lo, y_hi, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP)
        parts.append(
            f'<line x1="{MARGIN_LEFT - 5}" y1="{ypix:.2f}" '
            f'x2="{MARGIN_LEFT}" y2="{ypix:.2f}" stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{ypix:.2f}" font-size="11" '
            f'text-anchor="end" dominant-baseline="middle">{yv:.3g}</text>'
        )
    parts.append(
        f'<text x="{(MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2:.1f}" '
        f'y="{HEIGHT - 12}" font-size="13" text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{(MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2:.1f}" font-size="13" '
        f'text-anchor="middle" transform="rotate(-90 16 '
        f'{(MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2:.1f})">{y_label}</text>'
    )
    parts.append(
        f'<text x="{WIDTH / 2:.1f}" y="20" font-size="14" '
        f'text-anchor="middle">{title}</text>'
    )
    return parts


def _document(body: list[str], comment: str | None) -> str:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
    ]
    if comment:
        head.insert(1, f"<!-- {comment} -->")
    return "\n".join(head + body + ["</svg>"]) + "\n"


def line_plot(path, x, series, labels, x_label="", y_label="", title="",
              comment: str | None = None) -> None:
    """Write a multi-series line plot; series is a list of y arrays."""
    x = np.asarray(x, float)
    ys = [np.asarray(y, float) for y in series]
    x_lo, x_hi = _limits(x)
    y_all = np.concatenate(ys)
    y_lo, y_hi = _limits(y_all)
    body = _axis(x_lo, x_hi, y_lo, y_hi, x_label, y_label, title)
    for k, y in enumerate(ys):
        color = PALETTE[k % len(PALETTE)]
        points = " ".join(
            f"{_scale(xv, x_lo, x_hi, MARGIN_LEFT, WIDTH - MARGIN_RIGHT):.2f},"
            f"{_scale(yv, y_lo, y_hi, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP):.2f}"
            for xv, yv in zip(x, y)
        )
        body.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if labels and k < len(labels):
            body.append(
                f'<text x="{WIDTH - MARGIN_RIGHT - 8}" y="{MARGIN_TOP + 16 + 16 * k}" '
                f'font-size="12" text-anchor="end" fill="{color}">{labels[k]}</text>'
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_document(body, comment))


def scatter_plot(path, x, y, x_label="", y_label="", title="",
                 comment: str | None = None, highlight: int | None = None) -> None:
    """Write a scatter plot; optionally highlight one point by index."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    x_lo, x_hi = _limits(x)
    y_lo, y_hi = _limits(y)
    body = _axis(x_lo, x_hi, y_lo, y_hi, x_label, y_label, title)
    for i, (xv, yv) in enumerate(zip(x, y)):
        xpix = _scale(xv, x_lo, x_hi, MARGIN_LEFT, WIDTH - MARGIN_RIGHT)
        ypix = _scale(yv, y_lo, y_hi, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP)
        if highlight is not None and i == highlight:
            body.append(f'<circle cx="{xpix:.2f}" cy="{ypix:.2f}" r="5" fill="#d62728"/>')
        else:
            body.append(f'<circle cx="{xpix:.2f}" cy="{ypix:.2f}" r="2.5" fill="#1f77b4" fill-opacity="0.7"/>')
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_document(body, comment))
