"""Planar convex-polygon helpers and bounded Voronoi partitions."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import GeometryError

__all__ = [
    "VoronoiCell",
    "bounded_voronoi",
    "polygon_area",
    "polygon_centroid",
    "clip_halfplane",
    "validate_convex_polygon",
    "contains",
    "project_to_polygon",
    "check_distinct",
    "voronoi_centroids",
]

MIN_SEPARATION = 1e-9


@dataclasses.dataclass(frozen=True)
class VoronoiCell:
    owner: int
    polygon: np.ndarray
    centroid: np.ndarray
    area: float


def _signed_area(pts) -> float:
    s = 0.0
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def polygon_area(polygon) -> float:
    return abs(_signed_area([tuple(p) for p in np.asarray(polygon, dtype=float)]))


def _centroid(pts):
    a = cx = cy = 0.0
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        cr = x0 * y1 - x1 * y0
        a += cr
        cx += (x0 + x1) * cr
        cy += (y0 + y1) * cr
    a *= 0.5
    return a, cx, cy


def polygon_centroid(polygon) -> np.ndarray:
    """Area centroid of a simple polygon via the shoelace decomposition."""
    pts = [tuple(p) for p in np.asarray(polygon, dtype=float)]
    a, cx, cy = _centroid(pts)
    if abs(a) < 1e-12:
        raise GeometryError(f"degenerate polygon (area {abs(a):.3g})")
    return np.array([cx / (6.0 * a), cy / (6.0 * a)])


def validate_convex_polygon(polygon) -> np.ndarray:
    """Return ``polygon`` as an (k, 2) array after checking it is convex, CCW and non-degenerate."""
    poly = np.asarray(polygon, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2 or poly.shape[0] < 3:
        raise GeometryError("polygon needs at least 3 vertices of 2 coordinates")
    pts = [tuple(p) for p in poly]
    if _signed_area(pts) <= 1e-12:
        raise GeometryError("polygon must be counterclockwise with positive area")
    k = len(pts)
    for i in range(k):
        (x0, y0), (x1, y1), (x2, y2) = pts[i], pts[(i + 1) % k], pts[(i + 2) % k]
        if (x1 - x0) * (y2 - y1) - (y1 - y0) * (x2 - x1) < -1e-12:
            raise GeometryError(f"polygon is not convex at vertex {(i + 1) % k}")
    return poly


def clip_halfplane(pts, nx: float, ny: float, c: float):
    """Sutherland-Hodgman clip of a convex polygon (list of tuples) to ``nx*x + ny*y <= c``."""
    out = []
    k = len(pts)
    if k == 0:
        return out
    px, py = pts[-1]
    pd = nx * px + ny * py - c
    for x, y in pts:
        d = nx * x + ny * y - c
        if d <= 0.0:
            if pd > 0.0:
                t = pd / (pd - d)
                out.append((px + t * (x - px), py + t * (y - py)))
            out.append((x, y))
        elif pd <= 0.0:
            t = pd / (pd - d)
            out.append((px + t * (x - px), py + t * (y - py)))
        px, py, pd = x, y, d
    return out


def _cell_polygon(i, sites, domain_pts):
    xi, yi = sites[i]
    cell = domain_pts
    for j, (xj, yj) in enumerate(sites):
        if j == i:
            continue
        nx, ny = xj - xi, yj - yi
        c = 0.5 * (nx * (xi + xj) + ny * (yi + yj))
        cell = clip_halfplane(cell, nx, ny, c)
        if not cell:
            break
    return cell


def check_distinct(positions) -> None:
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    if n < 2:
        return
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    dist[np.diag_indices(n)] = np.inf
    i, j = np.unravel_index(np.argmin(dist), dist.shape)
    if dist[i, j] < MIN_SEPARATION:
        i, j = sorted((int(i), int(j)))
        raise GeometryError(f"coincident positions for robots {i} and {j}")


def bounded_voronoi(positions, domain) -> list[VoronoiCell]:
    """Voronoi cells of ``positions`` restricted to the convex ``domain``.

    Each cell is the domain clipped by the closed bisector half-planes
    toward every other site.
    """
    pos = np.asarray(positions, dtype=float)
    check_distinct(pos)
    domain_pts = [tuple(p) for p in np.asarray(domain, dtype=float)]
    sites = [tuple(p) for p in pos]
    cells = []
    for i in range(len(sites)):
        poly = _cell_polygon(i, sites, domain_pts)
        a, cx, cy = _centroid(poly) if len(poly) >= 3 else (0.0, 0.0, 0.0)
        if a < 1e-15:
            raise GeometryError(f"empty Voronoi cell for robot {i} (is it inside the domain?)")
        cells.append(
            VoronoiCell(
                owner=i,
                polygon=np.array(poly),
                centroid=np.array([cx / (6.0 * a), cy / (6.0 * a)]),
                area=a,
            )
        )
    return cells


def voronoi_centroids(positions, domain) -> np.ndarray:
    """Centroids only; avoids building cell objects in hot loops."""
    pos = np.asarray(positions, dtype=float)
    check_distinct(pos)
    domain_pts = [tuple(p) for p in np.asarray(domain, dtype=float)]
    sites = [tuple(p) for p in pos]
    out = np.empty((len(sites), 2))
    for i in range(len(sites)):
        poly = _cell_polygon(i, sites, domain_pts)
        a, cx, cy = _centroid(poly) if len(poly) >= 3 else (0.0, 0.0, 0.0)
        if a < 1e-15:
            raise GeometryError(f"empty Voronoi cell for robot {i} (is it inside the domain?)")
        out[i] = cx / (6.0 * a), cy / (6.0 * a)
    return out


def contains(polygon, point, tol: float = 1e-9) -> bool:
    poly = np.asarray(polygon, dtype=float)
    x, y = point
    edges = np.roll(poly, -1, axis=0) - poly
    rel = np.asarray([x, y]) - poly
    cross = edges[:, 0] * rel[:, 1] - edges[:, 1] * rel[:, 0]
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    return bool(np.all(cross >= -tol * lengths))


def project_to_polygon(polygon, point) -> np.ndarray:
    """Nearest point of the convex ``polygon`` to ``point``."""
    p = np.asarray(point, dtype=float)
    if contains(polygon, p, tol=0.0):
        return p.copy()
    poly = np.asarray(polygon, dtype=float)
    best, best_d = None, math.inf
    for a, b in zip(poly, np.roll(poly, -1, axis=0)):
        ab = b - a
        t = float(np.clip((p - a) @ ab / (ab @ ab), 0.0, 1.0))
        c = a + t * ab
        d = float(np.sum((p - c) ** 2))
        if d < best_d:
            best, best_d = c, d
    return best
