"""Deterministic top-down SVG rendering of a finished run.

Byte-stable output (fixed-precision coordinates, no timestamps) so plots
can be golden-file tested. Obstacles are gray boxes, the trajectory
fades from blue (start) to red (end), targets are circles: filled when
found, hollow when missed.
"""

from __future__ import annotations

__all__ = ["render_svg"]

_MARGIN = 20.0
_WIDTH = 720.0


def _f(v):
    return f"{v:.2f}"


def _color(frac):
    r = int(round(40 + 200 * frac))
    g = 60
    b = int(round(240 - 200 * frac))
    return f"rgb({r},{g},{b})"


def render_svg(scenario, trajectory, found_indices):
    """SVG text for a run over `scenario` with trajectory rows
    (t, x, y, z, yaw)."""
    w, h = scenario.bounds[0], scenario.bounds[1]
    scale = (_WIDTH - 2 * _MARGIN) / w
    height = h * scale + 2 * _MARGIN

    def sx(x):
        return _MARGIN + x * scale

    def sy(y):
        return height - (_MARGIN + y * scale)   # flip: world y grows up

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(_WIDTH)}" '
        f'height="{_f(height)}" viewBox="0 0 {_f(_WIDTH)} {_f(height)}">',
        f'<rect x="{_f(sx(0))}" y="{_f(sy(h))}" width="{_f(w * scale)}" '
        f'height="{_f(h * scale)}" fill="white" stroke="black" '
        f'stroke-width="1"/>',
    ]
    for b in scenario.boxes:
        x0, y0 = sx(b[0]), sy(b[4])
        bw, bh = (b[3] - b[0]) * scale, (b[4] - b[1]) * scale
        parts.append(f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(bw)}" '
                     f'height="{_f(bh)}" fill="rgb(150,150,150)"/>')
    n = len(trajectory)
    if n >= 2:
        step = max(1, n // 400)
        rows = list(trajectory[::step])
        if tuple(rows[-1]) != tuple(trajectory[-1]):
            rows.append(trajectory[-1])
        for k in range(len(rows) - 1):
            a, b = rows[k], rows[k + 1]
            frac = k / max(1, len(rows) - 2)
            parts.append(
                f'<line x1="{_f(sx(a[1]))}" y1="{_f(sy(a[2]))}" '
                f'x2="{_f(sx(b[1]))}" y2="{_f(sy(b[2]))}" '
                f'stroke="{_color(frac)}" stroke-width="2" '
                f'stroke-linecap="round"/>')
    if len(trajectory):
        s = trajectory[0]
        parts.append(f'<circle cx="{_f(sx(s[1]))}" cy="{_f(sy(s[2]))}" '
                     f'r="5" fill="none" stroke="black" stroke-width="2"/>')
    for k, t in enumerate(scenario.targets):
        fill = "rgb(30,160,30)" if k in found_indices else "none"
        parts.append(f'<circle cx="{_f(sx(t[0]))}" cy="{_f(sy(t[1]))}" '
                     f'r="4" fill="{fill}" stroke="rgb(30,120,30)" '
                     f'stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
