"""Static SVG scenes: environment, domains, structures, fields and trajectories."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET

import numpy as np

from .geometry import Environment, Polygon
from .visibility import visibility_region

LAYERS = (
    "environment",
    "d1",
    "d2",
    "inflection_segments",
    "partition_faces",
    "visibility_region_at",
    "gradient_field",
    "trajectories",
)

SVG_NS = "http://www.w3.org/2000/svg"


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class Canvas:
    """World coordinates mapped to an SVG viewport with y pointing up."""

    def __init__(self, env: Environment, width: int = 800, margin: float = 0.03):
        pts = env.outer.vertices
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = hi - lo
        pad = margin * float(span.max())
        self.lo = lo - pad
        self.hi = hi + pad
        self.scale = width / float(self.hi[0] - self.lo[0])
        self.width = width
        self.height = int(math.ceil((self.hi[1] - self.lo[1]) * self.scale))
        self.root = ET.Element(
            "svg", xmlns=SVG_NS, version="1.1", width=str(self.width), height=str(self.height),
            viewBox=f"0 0 {self.width} {self.height}",
        )

    def xy(self, p) -> tuple:
        return (float(p[0] - self.lo[0]) * self.scale, float(self.hi[1] - p[1]) * self.scale)

    def layer(self, name: str) -> ET.Element:
        return ET.SubElement(self.root, "g", id=name)

    def path(self, parent, rings, closed=True, **style) -> ET.Element:
        parts = []
        for ring in rings:
            pts = [self.xy(p) for p in ring]
            if not pts:
                continue
            d = "M" + " L".join(f"{_fmt(x)} {_fmt(y)}" for x, y in pts)
            parts.append(d + (" Z" if closed else ""))
        return ET.SubElement(parent, "path", d=" ".join(parts), **_style(style))

    def line(self, parent, a, b, **style):
        (x1, y1), (x2, y2) = self.xy(a), self.xy(b)
        return ET.SubElement(parent, "line", x1=_fmt(x1), y1=_fmt(y1), x2=_fmt(x2), y2=_fmt(y2),
                             **_style(style))

    def circle(self, parent, c, r_px: float, **style):
        x, y = self.xy(c)
        return ET.SubElement(parent, "circle", cx=_fmt(x), cy=_fmt(y), r=_fmt(r_px), **_style(style))

    def square(self, parent, c, side_px: float, **style):
        x, y = self.xy(c)
        return ET.SubElement(parent, "rect", x=_fmt(x - side_px / 2), y=_fmt(y - side_px / 2),
                             width=_fmt(side_px), height=_fmt(side_px), **_style(style))

    def text(self, parent, c, s: str, size_px: float = 10, **style):
        x, y = self.xy(c)
        el = ET.SubElement(parent, "text", x=_fmt(x), y=_fmt(y), **_style(style))
        el.set("font-size", _fmt(size_px))
        el.set("text-anchor", "middle")
        el.text = s
        return el

    def tostring(self) -> str:
        ET.indent(self.root)
        return ET.tostring(self.root, encoding="unicode", xml_declaration=True) + "\n"


def _style(style: dict) -> dict:
    return {k.replace("_", "-"): str(v) for k, v in style.items()}


def _draw_environment(cv: Canvas, g, env: Environment):
    cv.path(g, [env.outer.vertices] + [h.vertices for h in env.holes], fill="#f4f4f4",
            fill_rule="evenodd", stroke="black", stroke_width=1.5)
    for h in env.holes:
        cv.path(g, [h.vertices], fill="#888888", stroke="black", stroke_width=1)


def _draw_domain(cv: Canvas, g, poly: Polygon, colour: str):
    cv.path(g, [poly.vertices], fill=colour, fill_opacity=0.25, stroke=colour, stroke_width=1)


def _draw_region(cv: Canvas, g, region, colour="#f0c000"):
    cv.path(g, [region.polygon(128)], fill=colour, fill_opacity=0.3, stroke=colour, stroke_width=0.8)


def render_scene(scenario, layers, at=None, runs=None, grid_rows=None, width: int = 800) -> str:
    """SVG text with one ``<g id=...>`` group per requested layer, in the order given."""
    unknown = [name for name in layers if name not in LAYERS]
    if unknown:
        raise ValueError(f"unknown layer(s): {', '.join(unknown)}")
    if "visibility_region_at" in layers and at is None:
        raise ValueError("layer visibility_region_at needs a point")
    fs = scenario.fs
    cv = Canvas(scenario.environment, width)
    R = scenario.metric.range
    for name in layers:
        g = cv.layer(name)
        if name == "environment":
            _draw_environment(cv, g, scenario.environment)
        elif name == "d1":
            _draw_domain(cv, g, scenario.d1, "green")
        elif name == "d2":
            _draw_domain(cv, g, scenario.d2, "red")
        elif name == "inflection_segments":
            for s in scenario.structure.segments:
                colour = "#1f5fbf" if s.kind.value == "TypeI" else "#bf5f1f"
                cv.line(g, s.a, s.b, stroke=colour, stroke_width=0.8)
        elif name == "partition_faces":
            for f in scenario.structure.faces:
                cv.path(g, [f.polygon.vertices], fill="none", stroke="#555555", stroke_width=0.4)
                label = "{" + ",".join(sorted(f.anchor_set)) + "}"
                cv.text(g, f.center, label, size_px=8, fill="#333333")
        elif name == "visibility_region_at":
            _draw_region(cv, g, visibility_region(fs, at, R=R))
            cv.circle(g, at, 3, fill="black")
        elif name == "gradient_field":
            rows = grid_rows or []
            norms = [r[4] for r in rows if r[4] is not None and r[4] > 0]
            top = max(norms, default=1.0)
            span = 0.03 * float(np.ptp(scenario.d1.vertices, axis=0).max())
            for r in rows:
                if r[6] != "ok":
                    cv.circle(g, (r[0], r[1]), 1.5, fill="#999999")
                    continue
                gv = np.array([r[2], r[3]], float)
                if not gv.any():
                    continue
                tip = np.array([r[0], r[1]]) - span * gv / top  # descent direction
                cv.line(g, (r[0], r[1]), tip, stroke="#2060a0", stroke_width=0.7)
        elif name == "trajectories":
            for run in runs or []:
                if not run.iterates:
                    continue
                P = run.positions()
                cv.path(g, [P], closed=False, fill="none", stroke="#404040", stroke_width=0.6)
            for run in runs or []:
                if run.iterates:
                    _draw_region(cv, g, visibility_region(fs, run.final, R=R), colour="#3080ff")
            for run in runs or []:
                cv.circle(g, run.start, 4, fill="red")
                if run.iterates:
                    cv.square(g, run.final, 8, fill="blue")
    return cv.tostring()
