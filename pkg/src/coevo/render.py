"""Deterministic SVG/PNG rendering of a laid-out graph with solution highlighting.

Modes follow the operator phases: ``init`` colors and labels every node,
``crossover`` colors every node but labels only the solution, ``mutation``
labels every node and colors only the solution.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable

from PIL import Image, ImageDraw, ImageFont

from .graph import Graph
from .layout import LayoutKind, Positions


class Mode(str, Enum):
    INIT = "init"
    CROSSOVER = "crossover"
    MUTATION = "mutation"


@dataclass(frozen=True)
class RenderSpec:
    width: int = 1200
    height: int = 1200
    node_diameter: float = 35.0
    label_size: int = 22
    highlight_color: str = "#2F7FC1"
    plain_color: str = "#FFFFFF"
    label_color: str = "#000000"
    outline_color: str = "#000000"
    edge_color: str = "#9A9A9A"
    edge_width: int = 1
    margin: float = 60.0
    mode: Mode = Mode.INIT

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))

    def with_mode(self, mode: Mode | str) -> "RenderSpec":
        return RenderSpec(**{**self.__dict__, "mode": Mode(mode)})


@dataclass(frozen=True)
class CanvasTransform:
    """Uniform scale plus offset from layout coordinates to pixels."""

    scale: float
    offset_x: float
    offset_y: float

    def apply(self, x: float, y: float) -> tuple[float, float]:
        return (self.offset_x + self.scale * x, self.offset_y + self.scale * y)

    def invert(self, px: float, py: float) -> tuple[float, float]:
        return ((px - self.offset_x) / self.scale, (py - self.offset_y) / self.scale)


def canvas_transform(positions: Positions, spec: RenderSpec) -> CanvasTransform:
    xs = [p[0] for p in positions.values()]
    ys = [p[1] for p in positions.values()]
    if not xs:
        return CanvasTransform(1.0, spec.width / 2, spec.height / 2)
    pad = spec.margin + spec.node_diameter / 2
    span_x, span_y = max(xs) - min(xs), max(ys) - min(ys)
    avail_x, avail_y = spec.width - 2 * pad, spec.height - 2 * pad
    if span_x <= 0 and span_y <= 0:
        scale = 1.0
    else:
        scale = min(avail_x / span_x if span_x > 0 else float("inf"), avail_y / span_y if span_y > 0 else float("inf"))
    cx, cy = (max(xs) + min(xs)) / 2, (max(ys) + min(ys)) / 2
    return CanvasTransform(scale, spec.width / 2 - scale * cx, spec.height / 2 - scale * cy)


def node_style(v: int, spec: RenderSpec, highlighted: frozenset[int]) -> tuple[str, bool]:
    """(fill color, labeled?) for a node under the RenderSpec mode."""
    if spec.mode is Mode.INIT:
        return spec.highlight_color, True
    if spec.mode is Mode.CROSSOVER:
        return spec.highlight_color, v in highlighted
    return (spec.highlight_color if v in highlighted else spec.plain_color), True


_FONTS: dict[int, ImageFont.FreeTypeFont] = {}


def _font(size: int):
    if size not in _FONTS:
        _FONTS[size] = ImageFont.load_default(size=size)
    return _FONTS[size]


@dataclass(frozen=True, eq=False)
class RenderedView:
    """A rendered graph. Image bytes are produced lazily and cached."""

    graph: Graph
    positions: dict[int, tuple[float, float]]
    spec: RenderSpec
    highlighted: frozenset[int]
    layout: LayoutKind | None = None
    transform: CanvasTransform = field(default=CanvasTransform(1.0, 0.0, 0.0))
    edges: tuple[tuple[int, int], ...] | None = None

    @property
    def mode(self) -> Mode:
        return self.spec.mode

    def edge_list(self) -> list[tuple[int, int]]:
        return list(self.edges) if self.edges is not None else self.graph.edges()

    @cached_property
    def svg(self) -> str:
        s = self.spec
        r = s.node_diameter / 2
        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{s.width}" height="{s.height}" '
            f'viewBox="0 0 {s.width} {s.height}">',
            f'<rect width="{s.width}" height="{s.height}" fill="#FFFFFF"/>',
        ]
        for u, v in self.edge_list():
            (x1, y1), (x2, y2) = self.positions[u], self.positions[v]
            out.append(
                f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                f'stroke="{s.edge_color}" stroke-width="{s.edge_width}"/>'
            )
        for v in self.graph.nodes:
            x, y = self.positions[v]
            fill, labeled = node_style(v, s, self.highlighted)
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r:.2f}" fill="{fill}" stroke="{s.outline_color}"/>')
            if labeled:
                out.append(
                    f'<text x="{x:.2f}" y="{y:.2f}" font-size="{s.label_size}" fill="{s.label_color}" '
                    f'text-anchor="middle" dominant-baseline="central" font-family="sans-serif">{v}</text>'
                )
        out.append("</svg>")
        return "\n".join(out) + "\n"

    @cached_property
    def image(self) -> Image.Image:
        s = self.spec
        r = s.node_diameter / 2
        img = Image.new("RGB", (s.width, s.height), "#FFFFFF")
        draw = ImageDraw.Draw(img)
        for u, v in self.edge_list():
            draw.line([self.positions[u], self.positions[v]], fill=s.edge_color, width=s.edge_width)
        font = _font(s.label_size)
        for v in self.graph.nodes:
            x, y = self.positions[v]
            fill, labeled = node_style(v, s, self.highlighted)
            draw.ellipse([x - r, y - r, x + r, y + r], fill=fill, outline=s.outline_color, width=1)
            if labeled:
                draw.text((x, y), str(v), fill=s.label_color, font=font, anchor="mm")
        return img

    @cached_property
    def png(self) -> bytes:
        buf = io.BytesIO()
        self.image.save(buf, format="PNG", optimize=False)
        return buf.getvalue()

    def save_png(self, path: str | Path) -> None:
        Path(path).write_bytes(self.png)

    def save_svg(self, path: str | Path) -> None:
        Path(path).write_text(self.svg)

    def save_positions_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "x", "y"])
            for v in self.graph.nodes:
                x, y = self.positions[v]
                w.writerow([v, f"{x:.4f}", f"{y:.4f}"])


def render(
    g: Graph,
    positions: Positions,
    spec: RenderSpec | None = None,
    highlighted: Iterable[int] = (),
    layout: LayoutKind | None = None,
    edges: Iterable[tuple[int, int]] | None = None,
) -> RenderedView:
    """Map layout positions onto the canvas and build a view.

    ``edges`` overrides the drawn edge set (TSP draws the tour, not the graph).
    """
    spec = spec or RenderSpec()
    missing = [v for v in g.nodes if v not in positions]
    if missing:
        raise KeyError(f"no position for nodes {missing[:5]}")
    tf = canvas_transform({v: positions[v] for v in g.nodes}, spec)
    px = {v: tf.apply(*positions[v]) for v in g.nodes}
    return RenderedView(
        g, px, spec, frozenset(highlighted), layout, tf, tuple(edges) if edges is not None else None
    )


def hex_to_rgb(color: str) -> tuple[int, int, int]:
    color = color.lstrip("#")
    return tuple(int(color[i : i + 2], 16) for i in (0, 2, 4))
