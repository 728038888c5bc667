"""Static SVG output: time-series charts and scenario snapshots.

Documents are built with ElementTree so they are always well-formed XML.
Robots are drawn as ``<polygon class="robot">`` triangles and charging
stations as ``<circle class="station">``; tests count those elements.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from typing import Mapping, Sequence

import numpy as np

from .geometry import bounded_voronoi

__all__ = ["line_chart", "snapshot", "to_string", "SERIES_COLORS"]

SVG_NS = "http://www.w3.org/2000/svg"
SERIES_COLORS = {"baseline": "#2ca02c", "no_resilience": "#d62728", "resilience": "#1f77b4"}
_FALLBACK = ("#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


def _root(width: int, height: int) -> ET.Element:
    root = ET.Element("svg", xmlns=SVG_NS, width=str(width), height=str(height), viewBox=f"0 0 {width} {height}")
    ET.SubElement(root, "rect", x="0", y="0", width=str(width), height=str(height), fill="white")
    return root


def to_string(root: ET.Element) -> str:
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def _nice_range(lo: float, hi: float) -> tuple[float, float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return 0.0, 1.0
    if hi - lo < 1e-12:
        pad = max(abs(hi), 1.0) * 0.05
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def line_chart(
    panels: Mapping[str, Mapping[str, Sequence[float]]],
    *,
    title: str = "",
    xlabel: str = "iteration",
    panel_width: int = 420,
    panel_height: int = 260,
) -> ET.Element:
    """One panel per entry of ``panels``; each panel maps series name to values."""
    margin_l, margin_r, margin_t, margin_b = 60, 20, 40, 45
    n = max(len(panels), 1)
    width = n * (panel_width + margin_l + margin_r)
    height = panel_height + margin_t + margin_b + (20 if title else 0)
    root = _root(width, height)
    top = margin_t + (20 if title else 0)
    if title:
        ET.SubElement(root, "text", x=str(width // 2), y="20", attrib={"text-anchor": "middle", "font-size": "15"}).text = title
    for k, (name, series) in enumerate(panels.items()):
        x0 = k * (panel_width + margin_l + margin_r) + margin_l
        g = ET.SubElement(root, "g", attrib={"class": "panel"})
        ET.SubElement(g, "text", x=str(x0 + panel_width // 2), y=str(top - 10),
                      attrib={"text-anchor": "middle", "font-size": "13"}).text = name
        ET.SubElement(g, "rect", x=str(x0), y=str(top), width=str(panel_width), height=str(panel_height),
                      fill="none", stroke="black")
        finite = [np.asarray(v, dtype=float) for v in series.values()]
        finite = [v[np.isfinite(v)] for v in finite]
        allv = np.concatenate(finite) if finite else np.zeros(0)
        lo, hi = _nice_range(float(allv.min()) if allv.size else 0.0, float(allv.max()) if allv.size else 1.0)
        length = max((len(v) for v in series.values()), default=1)
        xspan = max(length - 1, 1)
        for frac in (0.0, 0.5, 1.0):
            yv = lo + frac * (hi - lo)
            yy = top + panel_height * (1.0 - frac)
            ET.SubElement(g, "text", x=str(x0 - 5), y=_fmt(yy + 4),
                          attrib={"text-anchor": "end", "font-size": "10"}).text = f"{yv:.3g}"
        for frac in (0.0, 0.5, 1.0):
            xx = x0 + frac * panel_width
            ET.SubElement(g, "text", x=_fmt(xx), y=str(top + panel_height + 15),
                          attrib={"text-anchor": "middle", "font-size": "10"}).text = f"{frac * xspan + 1:.0f}"
        ET.SubElement(g, "text", x=str(x0 + panel_width // 2), y=str(top + panel_height + 35),
                      attrib={"text-anchor": "middle", "font-size": "11"}).text = xlabel
        for s, (label, values) in enumerate(series.items()):
            v = np.asarray(values, dtype=float)
            color = SERIES_COLORS.get(label, _FALLBACK[s % len(_FALLBACK)])
            pts = []
            for t, y in enumerate(v):
                if not math.isfinite(y):
                    continue
                xx = x0 + panel_width * t / xspan
                yy = top + panel_height * (1.0 - (y - lo) / (hi - lo))
                pts.append(f"{_fmt(xx)},{_fmt(yy)}")
            if pts:
                ET.SubElement(g, "polyline", points=" ".join(pts), fill="none", stroke=color,
                              attrib={"stroke-width": "1.5", "class": "series", "data-series": label})
            ly = top + 15 + 14 * s
            ET.SubElement(g, "line", x1=str(x0 + 8), y1=str(ly), x2=str(x0 + 28), y2=str(ly), stroke=color,
                          attrib={"stroke-width": "2"})
            ET.SubElement(g, "text", x=str(x0 + 32), y=str(ly + 4), attrib={"font-size": "10"}).text = label
    return root


def _triangle(x: float, y: float, heading: float, size: float) -> list[tuple[float, float]]:
    out = []
    for da, r in ((0.0, 1.0), (2.5, 0.7), (-2.5, 0.7)):
        a = heading + da
        out.append((x + size * r * math.cos(a), y + size * r * math.sin(a)))
    return out


def snapshot(
    positions: np.ndarray,
    domain: np.ndarray,
    *,
    failed: Sequence[bool] | None = None,
    stations: Sequence[tuple[np.ndarray, float]] = (),
    formation_edges: Sequence[tuple[int, int]] = (),
    headings: Sequence[float] | None = None,
    title: str = "",
    size: int = 480,
) -> ET.Element:
    """Domain, Voronoi cells, stations, dashed formation edges and robot triangles."""
    pos = np.asarray(positions, dtype=float)
    dom = np.asarray(domain, dtype=float)
    n = pos.shape[0]
    failed = np.zeros(n, dtype=bool) if failed is None else np.asarray(failed, dtype=bool)
    headings = np.zeros(n) if headings is None else np.asarray(headings, dtype=float)
    lo, hi = dom.min(axis=0), dom.max(axis=0)
    span = float(max(hi - lo))
    pad = 20
    scale = (size - 2 * pad) / span
    width = int(round((hi[0] - lo[0]) * scale)) + 2 * pad
    height = int(round((hi[1] - lo[1]) * scale)) + 2 * pad + (24 if title else 0)
    top = pad + (24 if title else 0)

    def to_px(p) -> tuple[float, float]:
        return pad + (p[0] - lo[0]) * scale, top + (hi[1] - p[1]) * scale

    def pts(poly) -> str:
        return " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in (to_px(p) for p in poly))

    root = _root(width, height)
    if title:
        ET.SubElement(root, "text", x=str(width // 2), y="18", attrib={"text-anchor": "middle", "font-size": "14"}).text = title
    ET.SubElement(root, "polygon", points=pts(dom), fill="#f7f7f7", stroke="black", attrib={"class": "domain"})
    cells = ET.SubElement(root, "g", attrib={"class": "voronoi"})
    for cell in bounded_voronoi(pos, dom):
        ET.SubElement(cells, "polygon", points=pts(cell.polygon), fill="none", stroke="#888888",
                      attrib={"stroke-width": "1", "class": "cell"})
    st = ET.SubElement(root, "g", attrib={"class": "stations"})
    for center, radius in stations:
        cx, cy = to_px(center)
        ET.SubElement(st, "circle", cx=_fmt(cx), cy=_fmt(cy), r=_fmt(max(radius * scale, 2.0)),
                      fill="#ffe9a8", stroke="#b58900", attrib={"class": "station"})
    fe = ET.SubElement(root, "g", attrib={"class": "formation"})
    for i, k in formation_edges:
        (x1, y1), (x2, y2) = to_px(pos[i]), to_px(pos[k])
        ET.SubElement(fe, "line", x1=_fmt(x1), y1=_fmt(y1), x2=_fmt(x2), y2=_fmt(y2), stroke="#1f77b4",
                      attrib={"stroke-dasharray": "5,4", "stroke-width": "1", "class": "formation-edge"})
    rob = ET.SubElement(root, "g", attrib={"class": "robots"})
    for i in range(n):
        x, y = to_px(pos[i])
        tri = _triangle(x, y, -headings[i], 9.0)
        color = "#999999" if failed[i] else "#d62728"
        ET.SubElement(rob, "polygon", points=" ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in tri), fill=color,
                      stroke="black", attrib={"class": "robot", "data-robot": str(i + 1)})
    return root
