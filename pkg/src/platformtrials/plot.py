"""Trial-timeline SVG: one bar per arm over recruitment index.

Hand-rolled SVG so output is deterministic text: same data, same bytes.
"""

from __future__ import annotations

from .trial import TrialData, as_trial_data

CONTROL_COLOR = "#7f7f7f"
ARM_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

WIDTH = 800
BAR_HEIGHT = 26
BAR_GAP = 14
MARGIN_LEFT = 90
MARGIN_RIGHT = 30
MARGIN_TOP = 20
MARGIN_BOTTOM = 50


def _fmt(v: float) -> str:
    return format(v, ".2f")


def trial_svg(data) -> str:
    """Render the trial timeline as an SVG document string."""
    data = as_trial_data(data)
    arms = [0] + data.arms()
    n = data.n_participants
    height = MARGIN_TOP + len(arms) * (BAR_HEIGHT + BAR_GAP) + MARGIN_BOTTOM
    span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT

    def x_of(j: float) -> float:
        # j-0.5 centers participant j's unit cell; axis covers [0, n]
        return MARGIN_LEFT + span * j / n

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{height}" fill="white"/>',
    ]

    plot_top = MARGIN_TOP
    plot_bottom = MARGIN_TOP + len(arms) * (BAR_HEIGHT + BAR_GAP) - BAR_GAP / 2
    for p in data.period_map:
        if p.start == 1:
            continue
        x = _fmt(x_of(p.start - 1))
        parts.append(f'<line x1="{x}" y1="{_fmt(plot_top)}" x2="{x}" y2="{_fmt(plot_bottom)}" '
                     f'stroke="#999999" stroke-dasharray="5,4" stroke-width="1"/>')

    for i, arm in enumerate(arms):
        lo, hi = data.arm_windows[arm]
        y = MARGIN_TOP + i * (BAR_HEIGHT + BAR_GAP)
        color = CONTROL_COLOR if arm == 0 else ARM_COLORS[(arm - 1) % len(ARM_COLORS)]
        label = "Control" if arm == 0 else f"Arm {arm}"
        x0 = x_of(lo - 1)
        parts.append(f'<rect x="{_fmt(x0)}" y="{_fmt(y)}" width="{_fmt(x_of(hi) - x0)}" '
                     f'height="{BAR_HEIGHT}" fill="{color}" fill-opacity="0.85"/>')
        parts.append(f'<text x="{MARGIN_LEFT - 8}" y="{_fmt(y + BAR_HEIGHT / 2 + 4)}" '
                     f'text-anchor="end">{label}</text>')

    axis_y = plot_bottom + 10
    parts.append(f'<line x1="{_fmt(x_of(0))}" y1="{_fmt(axis_y)}" x2="{_fmt(x_of(n))}" '
                 f'y2="{_fmt(axis_y)}" stroke="black" stroke-width="1"/>')
    ticks = sorted({1} | {p.start for p in data.period_map} | {n})
    for t in ticks:
        x = _fmt(x_of(t if t == n else t - 1))
        parts.append(f'<line x1="{x}" y1="{_fmt(axis_y)}" x2="{x}" y2="{_fmt(axis_y + 5)}" '
                     f'stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{x}" y="{_fmt(axis_y + 18)}" text-anchor="middle">{t}</text>')
    parts.append(f'<text x="{_fmt(MARGIN_LEFT + span / 2)}" y="{_fmt(axis_y + 36)}" '
                 f'text-anchor="middle">recruitment index</text>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_trial(data, path) -> None:
    """Write the timeline SVG for ``data`` to ``path``."""
    svg = trial_svg(data)
    if hasattr(path, "write"):
        path.write(svg)
    else:
        with open(path, "w") as fh:
            fh.write(svg)
