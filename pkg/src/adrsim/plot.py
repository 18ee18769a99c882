"""Minimal deterministic SVG rendering of grids, paths, and trajectories."""

from __future__ import annotations

from .world import OccupancyGrid


def _poly(points, stroke, width):
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    return (f'<polyline points="{coords}" fill="none" '
            f'stroke="{stroke}" stroke-width="{width}"/>')


def render_world_svg(grid: OccupancyGrid, path_xy=None, trajectory_xy=None,
                     markers=None, scale: float = 40.0) -> str:
    """Overlay of the occupancy grid, a planned path, and an executed
    trajectory. y is flipped so +y points up."""
    width_m = grid.width * grid.resolution
    height_m = grid.height * grid.resolution
    w_px = width_m * scale
    h_px = height_m * scale

    def to_px(x, y):
        return ((x - grid.origin_x) * scale,
                h_px - (y - grid.origin_y) * scale)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w_px:.0f}" '
        f'height="{h_px:.0f}" viewBox="0 0 {w_px:.2f} {h_px:.2f}">',
        f'<rect width="{w_px:.2f}" height="{h_px:.2f}" fill="white"/>',
    ]
    cell_px = grid.resolution * scale
    for iy in range(grid.height):
        # Merge horizontal runs of occupied cells into single rects.
        ix = 0
        row = grid.cells[iy]
        while ix < grid.width:
            if row[ix]:
                run = ix
                while run < grid.width and row[run]:
                    run += 1
                x_px = ix * cell_px
                y_px = h_px - (iy + 1) * cell_px
                parts.append(f'<rect x="{x_px:.2f}" y="{y_px:.2f}" '
                             f'width="{(run - ix) * cell_px:.2f}" '
                             f'height="{cell_px:.2f}" fill="#444444"/>')
                ix = run
            else:
                ix += 1
    if path_xy:
        parts.append(_poly([to_px(x, y) for x, y in path_xy], "#1f77b4", 2.0))
    if trajectory_xy:
        parts.append(_poly([to_px(x, y) for x, y in trajectory_xy], "#d62728", 2.0))
    for (x, y, color) in markers or []:
        px, py = to_px(x, y)
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="5" fill="{color}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_learning_curve_svg(log, width: int = 640, height: int = 360) -> str:
    """Per-episode return curve with success episodes marked."""
    if not log:
        return ('<svg xmlns="http://www.w3.org/2000/svg" width="1" height="1"/>\n')
    returns = [r for _, r, _ in log]
    lo, hi = min(returns), max(returns)
    if hi == lo:
        hi = lo + 1.0
    margin = 30.0
    n = len(returns)

    def to_px(i, value):
        x = margin + (width - 2 * margin) * (i / max(1, n - 1))
        y = height - margin - (height - 2 * margin) * ((value - lo) / (hi - lo))
        return x, y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        _poly([to_px(i, r) for i, r in enumerate(returns)], "#1f77b4", 1.0),
        f'<text x="{margin}" y="16" font-size="12">return per episode '
        f'(min {lo:.1f}, max {hi:.1f})</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"
