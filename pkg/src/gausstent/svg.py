"""Static SVG renderings of the planar grid machinery.

Hand-rolled string assembly: the figures are small, the byte output must
be deterministic for golden tests, and no drawing package guarantees
stable serialization across versions.  Everything renders in world
coordinates through a single linear viewport transform (y flipped).
"""

from __future__ import annotations

import numpy as np

from .geometry import Box
from .grid import cubes_in_layer, max_layer_touching
from .whitney import RegionMask

__all__ = ["render_grid", "render_cover", "render_partition"]

_LAYER_FILLS = (
    "#4e79a7",
    "#f28e2b",
    "#59a64e",
    "#e15759",
    "#b07aa1",
    "#76b7b2",
    "#edc948",
    "#9c755f",
)


def _fmt(v: float) -> str:
    s = f"{v:.4f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


class _Canvas:
    """Collects SVG elements over a world window; emits one document."""

    def __init__(self, window: Box, px: int = 640):
        if window.n != 2:
            raise ValueError("SVG rendering is planar only")
        self.window = window
        span = window.side
        self.scale = px / float(max(span))
        self.w = float(span[0]) * self.scale
        self.h = float(span[1]) * self.scale
        self.parts: list = []

    def _xy(self, p) -> tuple:
        x = (float(p[0]) - self.window.lower[0]) * self.scale
        y = self.h - (float(p[1]) - self.window.lower[1]) * self.scale
        return x, y

    def rect(self, lower, upper, fill: str, opacity: float = 1.0,
             stroke: str = "none", stroke_width: float = 0.0) -> None:
        x0, y1 = self._xy(lower)
        x1, y0 = self._xy(upper)
        attrs = (
            f'x="{_fmt(x0)}" y="{_fmt(y0)}" '
            f'width="{_fmt(x1 - x0)}" height="{_fmt(y1 - y0)}" fill="{fill}"'
        )
        if opacity < 1.0:
            attrs += f' fill-opacity="{_fmt(opacity)}"'
        if stroke != "none":
            attrs += f' stroke="{stroke}" stroke-width="{_fmt(stroke_width)}"'
        self.parts.append(f"<rect {attrs}/>")

    def circle(self, center, radius: float, stroke: str, stroke_width: float = 1.0) -> None:
        cx, cy = self._xy(center)
        self.parts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(radius * self.scale)}" '
            f'fill="none" stroke="{stroke}" stroke-width="{_fmt(stroke_width)}"/>'
        )

    def document(self) -> str:
        head = (
            '<svg xmlns="http://www.w3.org/2000/svg" '
            f'width="{_fmt(self.w)}" height="{_fmt(self.h)}" '
            f'viewBox="0 0 {_fmt(self.w)} {_fmt(self.h)}">'
        )
        body = "\n".join(self.parts)
        return head + "\n" + body + "\n</svg>\n"


def _mask_rows(mask: RegionMask):
    """Row-merged runs of active cells as (lower, upper) world boxes."""
    cells = mask.cells
    h = mask.h
    lo = mask.window.lower
    for i in range(cells.shape[0]):
        row = cells[i]
        j = 0
        while j < len(row):
            if not row[j]:
                j += 1
                continue
            j0 = j
            while j < len(row) and row[j]:
                j += 1
            yield (
                (lo[0] + i * h, lo[1] + j0 * h),
                (lo[0] + (i + 1) * h, lo[1] + j * h),
            )


def render_grid(window: Box, max_layer: int | None = None, px: int = 640) -> str:
    """Layered generation-0 cubes over the window, one fill per layer."""
    canvas = _Canvas(window, px)
    if max_layer is None:
        max_layer = max_layer_touching(window)
    canvas.rect(window.lower, window.upper, "#ffffff")
    for l in range(max_layer + 1):
        fill = _LAYER_FILLS[l % len(_LAYER_FILLS)]
        for cube in cubes_in_layer(0, l, 2, window):
            canvas.rect(cube.lower, cube.upper, fill, opacity=0.35,
                        stroke="#333333", stroke_width=0.6)
    for l in range(1, max_layer + 1):
        canvas.circle((0.0, 0.0), 2.0 ** (l - 1), "#000000", 1.2)
    return canvas.document()


def render_cover(pieces, O: RegionMask, px: int = 640) -> str:
    """An open mask (gray) under its admissible-Whitney cover pieces."""
    canvas = _Canvas(O.window, px)
    canvas.rect(O.window.lower, O.window.upper, "#ffffff")
    for lower, upper in _mask_rows(O):
        canvas.rect(lower, upper, "#bbbbbb")
    for idx, piece in enumerate(pieces):
        fill = _LAYER_FILLS[idx % len(_LAYER_FILLS)]
        for lower, upper in _mask_rows(piece.mask):
            canvas.rect(lower, upper, fill, opacity=0.45)
        if piece.kind == "cube":
            canvas.rect(piece.cube.lower, piece.cube.upper, "none",
                        stroke="#000000", stroke_width=1.0)
    return canvas.document()


def render_partition(part, px: int = 640) -> str:
    """Whitney cubes of a partition over their open set, fill by scale."""
    canvas = _Canvas(part.O.window, px)
    canvas.rect(part.O.window.lower, part.O.window.upper, "#ffffff")
    for lower, upper in _mask_rows(part.O):
        canvas.rect(lower, upper, "#dddddd")
    for cube in part.cubes:
        fill = _LAYER_FILLS[cube.l % len(_LAYER_FILLS)]
        canvas.rect(cube.lower, cube.upper, fill, opacity=0.4,
                    stroke="#222222", stroke_width=0.8)
    return canvas.document()
