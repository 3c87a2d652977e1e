"""SVG rendering of partitions, graphs, and trajectories.

Visual language: one rectangle per cell (colored by exploration status),
edge arrows colored by status (blue = exists, red = absent, gray =
uncertain), the trajectory as a single polyline path.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from .artifacts import atomic_write_text
from .geometry import GridPartition
from .graph import ReachGraph, ReachStatus

CANVAS = 800.0
MARGIN = 20.0

STATUS_COLOR = {
    ReachStatus.EXISTS: "#2060d0",
    ReachStatus.ABSENT: "#d03030",
    ReachStatus.UNCERTAIN: "#b0b0b0",
}


class _Canvas:
    def __init__(self, partition: GridPartition):
        self.bounds = partition.bounds
        span = self.bounds[:, 1] - self.bounds[:, 0]
        self.scale = (CANVAS - 2 * MARGIN) / float(span.max())

    def to_px(self, x):
        px = MARGIN + (x[0] - self.bounds[0, 0]) * self.scale
        py = CANVAS - MARGIN - (x[1] - self.bounds[1, 0]) * self.scale
        return px, py


def _svg_root() -> ET.Element:
    return ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg",
        "width": str(int(CANVAS)),
        "height": str(int(CANVAS)),
        "viewBox": f"0 0 {int(CANVAS)} {int(CANVAS)}",
    })


def _draw_cells(root, partition, canvas, explored=(), initial=None, target=None):
    explored = set(explored)
    for cid in range(partition.n_cells):
        cell = partition.cell(cid)
        low, high = cell.box_bounds()
        x0, y1 = canvas.to_px(low)
        x1, y0 = canvas.to_px(high)
        fill = "#ffffff"
        if cid in explored:
            fill = "#fdf3c0"
        if cid == initial:
            fill = "#f5e04a"
        if cid == target:
            fill = "#79d279"
        ET.SubElement(root, "rect", {
            "x": f"{x0:.2f}", "y": f"{y0:.2f}",
            "width": f"{x1 - x0:.2f}", "height": f"{y1 - y0:.2f}",
            "fill": fill, "stroke": "#888888", "stroke-width": "0.5",
        })


def _draw_edges(root, partition, graph, canvas):
    for (src, dst), edge in sorted(graph.edges.items()):
        a = canvas.to_px(partition.center(src))
        b = canvas.to_px(partition.center(dst))
        # Offset tip/tail so opposing arrows stay distinguishable.
        ax = a[0] + 0.25 * (b[0] - a[0])
        ay = a[1] + 0.25 * (b[1] - a[1])
        bx = a[0] + 0.72 * (b[0] - a[0])
        by = a[1] + 0.72 * (b[1] - a[1])
        color = STATUS_COLOR[edge.status]
        ET.SubElement(root, "line", {
            "x1": f"{ax:.2f}", "y1": f"{ay:.2f}",
            "x2": f"{bx:.2f}", "y2": f"{by:.2f}",
            "stroke": color, "stroke-width": "1.2",
        })
        ET.SubElement(root, "circle", {
            "cx": f"{bx:.2f}", "cy": f"{by:.2f}", "r": "1.8", "fill": color,
        })


def render_graph_svg(path, partition: GridPartition, graph: ReachGraph,
                     explored=(), initial=None, target=None) -> None:
    canvas = _Canvas(partition)
    root = _svg_root()
    _draw_cells(root, partition, canvas, explored, initial, target)
    _draw_edges(root, partition, graph, canvas)
    atomic_write_text(path, ET.tostring(root, encoding="unicode") + "\n")


def render_trajectory_svg(path, partition: GridPartition, trajectory,
                          explored=(), initial=None, target=None) -> None:
    canvas = _Canvas(partition)
    root = _svg_root()
    _draw_cells(root, partition, canvas, explored, initial, target)
    pts = [canvas.to_px(np.asarray(x)) for _, x, _, _ in trajectory]
    if pts:
        d = "M " + " L ".join(f"{px:.2f} {py:.2f}" for px, py in pts)
        ET.SubElement(root, "path", {
            "d": d, "fill": "none", "stroke": "#202020", "stroke-width": "1.5",
        })
    atomic_write_text(path, ET.tostring(root, encoding="unicode") + "\n")
