"""SVG rendering of a planning run (2-D, or a 2-D projection of 3-D)."""
from __future__ import annotations

import math
import xml.etree.ElementTree as ET

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import NotPlottable

CANVAS = 800.0
MARGIN = 20.0


class _View:
    """Maps workspace coordinates to pixels (uniform scale, y pointing up)."""

    def __init__(self, lower, upper, axes):
        self.axes = list(axes)
        self.lo = np.asarray(lower, float)[self.axes]
        hi = np.asarray(upper, float)[self.axes]
        span = hi - self.lo
        self.scale = CANVAS / float(span.max())
        self.size = span * self.scale + 2 * MARGIN

    def __call__(self, x) -> tuple[float, float]:
        p = (np.asarray(x, float)[self.axes] - self.lo) * self.scale
        return float(MARGIN + p[0]), float(self.size[1] - MARGIN - p[1])

    def points(self, X) -> str:
        return " ".join("{:.6f},{:.6f}".format(*self(x)) for x in X)


def _outline(V: np.ndarray, axes) -> np.ndarray:
    """Convex outline of vertices projected onto ``axes``."""
    P = V[:, axes]
    try:
        return V[ConvexHull(P).vertices]
    except QhullError:
        return V


def _face_segment(face, axes):
    """Endpoints of a face's extent along its longest projected direction."""
    best = None
    for k in axes:
        e = np.zeros(face.dim)
        e[k] = 1.0
        _, hi = face.support(e)
        _, lo = face.support(-e)
        p, q = face.point(hi), face.point(lo)
        if best is None or np.linalg.norm((p - q)[axes]) > np.linalg.norm((best[0] - best[1])[axes]):
            best = (p, q)
    return best


def emit_svg(record, out, projection=None) -> None:
    """Write an SVG of the run with one ``<g>`` layer per element kind.

    Layers: ``workspace``, ``obstacles``, ``leaves``, ``faces``, ``best-path``
    (one ``<path>`` per segment) and ``informed`` (the ellipse at the final
    best cost, semi-axes scaled by the view scale).

    Raises
    ------
    NotPlottable
        For scenarios above two dimensions unless ``projection`` names the
        pair of axes to draw.
    """
    sc = record.scenario
    res = record.result
    if projection is None:
        if sc.dimension != 2:
            raise NotPlottable(f"{sc.dimension}-D scenario needs a projection axis pair")
        projection = (0, 1)
    axes = [int(a) for a in projection]
    if len(axes) != 2 or len(set(axes)) != 2 or not all(0 <= a < sc.dimension for a in axes):
        raise NotPlottable(f"invalid projection {projection!r}")
    view = _View(sc.workspace.lower, sc.workspace.upper, axes)

    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=f"{view.size[0]:.3f}",
        height=f"{view.size[1]:.3f}",
        viewBox=f"0 0 {view.size[0]:.3f} {view.size[1]:.3f}",
    )
    ET.SubElement(svg, "title").text = sc.name or "hzplan run"

    g = ET.SubElement(svg, "g", id="workspace")
    x0, y1 = view(sc.workspace.lower)
    x1, y0 = view(sc.workspace.upper)
    ET.SubElement(g, "rect", x=f"{x0:.6f}", y=f"{y0:.6f}", width=f"{x1 - x0:.6f}", height=f"{y1 - y0:.6f}",
                  fill="white", stroke="black")

    g = ET.SubElement(svg, "g", id="obstacles")
    for ob in sc.obstacles or []:
        ET.SubElement(g, "polygon", points=view.points(_outline(ob.vertices, axes)), fill="#555")

    g = ET.SubElement(svg, "g", id="leaves")
    for k, reg in enumerate(res.regions):
        ET.SubElement(g, "polygon", points=view.points(_outline(reg.vertices, axes)),
                      fill="none", stroke="#39c", **{"data-leaf": str(k)})

    g = ET.SubElement(svg, "g", id="faces")
    if res.graph is not None:
        for (a, b), face in sorted(res.graph.faces.items()):
            if a < b:
                p, q = _face_segment(face, axes)
                (px, py), (qx, qy) = view(p), view(q)
                ET.SubElement(g, "line", x1=f"{px:.6f}", y1=f"{py:.6f}", x2=f"{qx:.6f}", y2=f"{qy:.6f}",
                              stroke="#e80", **{"stroke-width": "3", "data-pair": f"{a}-{b}"})

    g = ET.SubElement(svg, "g", id="best-path")
    if res.best_path is not None:
        pts = res.best_path.polyline(sc.start, sc.goal)
        for p, q in zip(pts[:-1], pts[1:]):
            (px, py), (qx, qy) = view(p), view(q)
            ET.SubElement(g, "path", d=f"M {px:.6f} {py:.6f} L {qx:.6f} {qy:.6f}",
                          stroke="red", fill="none", **{"stroke-width": "2"})

    g = ET.SubElement(svg, "g", id="informed")
    E = res.informed
    if E is not None:
        cx, cy = view(E.center)
        d = E.direction[axes]
        angle = -math.degrees(math.atan2(d[1], d[0]))  # pixel y grows downwards
        ET.SubElement(g, "ellipse", cx=f"{cx:.6f}", cy=f"{cy:.6f}", rx=f"{E.a * view.scale:.9f}",
                      ry=f"{E.b * view.scale:.9f}", transform=f"rotate({angle:.9f} {cx:.6f} {cy:.6f})",
                      fill="none", stroke="green", **{"stroke-dasharray": "6 4", "data-scale": repr(view.scale)})

    for name, x, color in (("start", sc.start, "blue"), ("goal", sc.goal, "purple")):
        px, py = view(x)
        ET.SubElement(svg, "circle", id=name, cx=f"{px:.6f}", cy=f"{py:.6f}", r="5", fill=color)

    ET.indent(svg)
    ET.ElementTree(svg).write(out, encoding="utf-8", xml_declaration=True)
