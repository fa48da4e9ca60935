"""Minimal SVG emitter for plan and trajectory top views.

Deliberately small: rectangles, polylines, circles, and text on a
world-coordinate canvas with y flipped for screen output.
"""

from __future__ import annotations

import math

from .se2 import Pose2


class SvgCanvas:
    def __init__(self, x_min: float, x_max: float, y_min: float, y_max: float,
                 scale: float = 400.0):
        self.x_min, self.x_max = x_min, x_max
        self.y_min, self.y_max = y_min, y_max
        self.scale = scale
        self.parts: list[str] = []

    def _pt(self, x: float, y: float) -> tuple[float, float]:
        return ((x - self.x_min) * self.scale,
                (self.y_max - y) * self.scale)

    def rect(self, pose: Pose2, length: float, width: float,
             stroke: str = "#333333", fill: str = "none") -> None:
        hx, hy = length / 2.0, width / 2.0
        c, s = math.cos(pose.yaw), math.sin(pose.yaw)
        corners = []
        for px, py in ((hx, hy), (-hx, hy), (-hx, -hy), (hx, -hy)):
            corners.append(self._pt(pose.x + c * px - s * py,
                                    pose.y + s * px + c * py))
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in corners)
        self.parts.append(f'<polygon points="{pts}" fill="{fill}" '
                          f'stroke="{stroke}" stroke-width="1.5"/>')

    def polyline(self, points, stroke: str = "#1f4fd0", width: float = 0.01,
                 label: str = "") -> None:
        if len(points) == 0:
            return
        pts = " ".join(f"{x:.2f},{y:.2f}"
                       for x, y in (self._pt(p[0], p[1]) for p in points))
        w = max(1.0, width * self.scale)
        cls = f' class="{label}"' if label else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" '
                          f'stroke="{stroke}" stroke-width="{w:.2f}"{cls}/>')

    def segment_colored(self, points, colors) -> None:
        """Polyline drawn piecewise with per-segment colors."""
        for i in range(len(points) - 1):
            (x1, y1) = self._pt(points[i][0], points[i][1])
            (x2, y2) = self._pt(points[i + 1][0], points[i + 1][1])
            self.parts.append(
                f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" '
                f'y2="{y2:.2f}" stroke="{colors[i]}" stroke-width="3"/>')

    def circle(self, x: float, y: float, radius_m: float,
               stroke: str = "#333333", fill: str = "none") -> None:
        cx, cy = self._pt(x, y)
        self.parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" '
                          f'r="{radius_m * self.scale:.2f}" fill="{fill}" '
                          f'stroke="{stroke}"/>')

    def text(self, x: float, y: float, s: str, size: float = 0.06) -> None:
        cx, cy = self._pt(x, y)
        self.parts.append(f'<text x="{cx:.2f}" y="{cy:.2f}" '
                          f'font-size="{size * self.scale:.1f}">{s}</text>')

    def write(self, path) -> None:
        w = (self.x_max - self.x_min) * self.scale
        h = (self.y_max - self.y_min) * self.scale
        with open(path, "w") as f:
            f.write(f'<svg xmlns="http://www.w3.org/2000/svg" '
                    f'width="{w:.0f}" height="{h:.0f}" '
                    f'viewBox="0 0 {w:.0f} {h:.0f}">\n')
            f.write('<rect width="100%" height="100%" fill="white"/>\n')
            for p in self.parts:
                f.write(p + "\n")
            f.write("</svg>\n")
