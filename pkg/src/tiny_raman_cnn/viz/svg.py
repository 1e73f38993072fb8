from __future__ import annotations

from typing import List, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

from tiny_raman_cnn.spectra.types import FloatArray
from tiny_raman_cnn.viz.contribution import ContributionMap, FC_MAP, GRADCAM

WIDTH: int = 800
HEIGHT: int = 360
MARGIN: int = 40

SPECTRUM_COLOR: str = "#000000"
# green for the pooling-layer map, blue for the FC map
MAP_COLORS = {GRADCAM: "#2ca02c", FC_MAP: "#1f77b4"}
AXIS_COLOR: str = "#999999"


class SvgPlot:
    """
    Minimal line-chart writer: every trace is drawn as one polyline in a shared
    data box of x in [x_min, x_max] and y in [y_min, y_max].
    """

    def __init__(self, x_range: Tuple[float, float], y_range: Tuple[float, float], title: str = "") -> None:
        self.x_min, self.x_max = x_range
        self.y_min, self.y_max = y_range
        self.title = title
        self.elements: List[str] = []

    def _to_canvas(self, x: FloatArray, y: FloatArray) -> Tuple[FloatArray, FloatArray]:
        x_span = (self.x_max - self.x_min) or 1.0
        y_span = (self.y_max - self.y_min) or 1.0
        cx = MARGIN + (np.asarray(x) - self.x_min) / x_span * (WIDTH - 2 * MARGIN)
        cy = HEIGHT - MARGIN - (np.asarray(y) - self.y_min) / y_span * (HEIGHT - 2 * MARGIN)
        return cx, cy

    def line(self, x: Sequence[float], y: Sequence[float], color: str, width: float = 1.0, label: str = "") -> None:
        cx, cy = self._to_canvas(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
        points = " ".join(f"{px:.2f},{py:.2f}" for px, py in zip(cx, cy))
        title = f"<title>{escape(label)}</title>" if label else ""
        self.elements.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="{width:.2f}">{title}</polyline>'
        )

    def text(self, x: float, y: float, content: str, color: str = "#333333", anchor: str = "start") -> None:
        self.elements.append(
            f'<text x="{x:.2f}" y="{y:.2f}" fill="{color}" font-size="11" font-family="sans-serif" '
            f'text-anchor="{anchor}">{escape(content)}</text>'
        )

    def axes(self, x_label: str) -> None:
        self.line([self.x_min, self.x_max], [0.0, 0.0], AXIS_COLOR, 0.5)
        bottom = HEIGHT - MARGIN
        self.elements.append(
            f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" height="{HEIGHT - 2 * MARGIN}" '
            f'fill="none" stroke="{AXIS_COLOR}" stroke-width="0.5"/>'
        )
        self.text(MARGIN, bottom + 16, f"{self.x_min:g}", anchor="middle")
        self.text(WIDTH - MARGIN, bottom + 16, f"{self.x_max:g}", anchor="middle")
        self.text(WIDTH / 2, bottom + 30, x_label, anchor="middle")

    def render(self) -> str:
        header = (
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">\n'
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>\n'
        )
        elements = list(self.elements)
        if self.title:
            elements.append(
                f'<text x="{WIDTH / 2:.2f}" y="{MARGIN - 14:.2f}" font-size="13" font-family="sans-serif" '
                f'text-anchor="middle">{escape(self.title)}</text>'
            )
        return header + "\n".join(elements) + "\n</svg>\n"


def _scaled(values: FloatArray) -> FloatArray:
    scale = float(np.max(np.abs(values)))
    return values / scale if scale > 0 else values


def render_overlay(spectrum: FloatArray, contribution: ContributionMap, title: str = "") -> str:
    """
    Input spectrum (black) over its contribution map, both scaled to a maximum magnitude of 1.

    Returns:
        str: The SVG document.
    """
    grid = contribution.grid
    map_values = _scaled(contribution.values)
    y_min = -1.05 if np.any(map_values < 0) else -0.05

    plot = SvgPlot((float(grid[0]), float(grid[-1])), (y_min, 1.05), title=title)
    plot.axes("wavenumber")
    plot.line(grid, _scaled(np.asarray(spectrum, dtype=np.float64)), SPECTRUM_COLOR, 1.0, label="input")
    plot.line(grid, map_values, MAP_COLORS[contribution.kind], 1.2, label=contribution.kind)
    plot.text(WIDTH - MARGIN - 4, MARGIN + 14, f"input / {contribution.kind} (class {contribution.target_class})",
              anchor="end")
    return plot.render()
