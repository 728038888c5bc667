"""Task control barrier functions: coverage, formation and consensus.

Every task CBF satisfies ``h <= 0`` with equality exactly on the task's goal
set, so ``|h|`` measures how far the team is from executing the task.

* coverage:  ``h_i = -|x_i - c_i|^2`` with ``c_i`` the centroid of robot i's
  Voronoi cell; the gradient treats the centroid as frozen (Lloyd step).
* formation: ``h_i = -sum_{(i,k) in E} (|x_i - x_k|^2 - d_ik^2)^2``.
* consensus: ``h_i = -sum_k |x_i - x_k|^2``.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from .control import CbfEvaluation
from .geometry import bounded_voronoi, validate_convex_polygon, voronoi_centroids

__all__ = [
    "TaskSpec",
    "hexagon_edges",
    "coverage_cbf",
    "formation_cbf",
    "consensus_cbf",
    "task_values",
    "bounded_voronoi",
]

KINDS = ("coverage", "formation", "consensus")


@dataclasses.dataclass(frozen=True)
class TaskSpec:
    """One coordinated task.

    ``edges`` are ``(i, k, d_ik)`` with 0-based robot indices (formation only);
    ``domain`` is the convex CCW polygon the coverage task partitions.
    """

    kind: str
    domain: np.ndarray | None = None
    edges: tuple[tuple[int, int, float], ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "coverage":
            if self.domain is None:
                raise ValueError("coverage task needs a domain polygon")
            object.__setattr__(self, "domain", validate_convex_polygon(self.domain))
        if self.kind == "formation":
            if not self.edges:
                raise ValueError("formation task needs at least one edge")
            edges = tuple((int(i), int(k), float(d)) for i, k, d in self.edges)
            for i, k, d in edges:
                if i == k:
                    raise ValueError(f"formation edge ({i}, {k}) is a self-loop")
                if not d > 0:
                    raise ValueError(f"formation edge ({i}, {k}) needs a positive distance")
            object.__setattr__(self, "edges", edges)
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    def validate(self, n_robots: int) -> None:
        for i, k, _ in self.edges:
            if not (0 <= i < n_robots and 0 <= k < n_robots):
                raise ValueError(f"formation edge ({i}, {k}) references a robot outside 0..{n_robots - 1}")


def hexagon_edges(radius: float, robots: Sequence[int] = range(6)) -> tuple[tuple[int, int, float], ...]:
    """6-cycle plus the three main diagonals of a regular hexagon of circumradius ``radius``.

    Robot ``robots[k]`` sits at vertex ``k``; the side length equals the
    radius and the main diagonals are twice the radius.
    """
    r = list(robots)
    if len(r) != 6:
        raise ValueError("a hexagon formation needs exactly 6 robots")
    side = radius
    diag = 2.0 * radius
    cycle = [(r[k], r[(k + 1) % 6], side) for k in range(6)]
    diagonals = [(r[k], r[k + 3], diag) for k in range(3)]
    return tuple(cycle + diagonals)


def hexagon_vertices(radius: float, center=(0.0, 0.0), phase: float = 0.0) -> np.ndarray:
    ang = phase + np.arange(6) * math.pi / 3.0
    return np.asarray(center, dtype=float) + radius * np.column_stack([np.cos(ang), np.sin(ang)])


def coverage_cbf(i: int, positions, centroids) -> CbfEvaluation:
    pos = np.asarray(positions, dtype=float)
    diff = pos[i] - np.asarray(centroids, dtype=float)[i]
    grad = np.zeros_like(pos)
    grad[i] = -2.0 * diff
    return CbfEvaluation(-float(diff @ diff), grad, i, "coverage")


def formation_cbf(i: int, positions, edges) -> CbfEvaluation:
    pos = np.asarray(positions, dtype=float)
    grad = np.zeros_like(pos)
    h = 0.0
    for a, b, d in edges:
        if i not in (a, b):
            continue
        k = b if a == i else a
        rel = pos[i] - pos[k]
        err = float(rel @ rel) - d * d
        h -= err * err
        grad[i] -= 4.0 * err * rel
        grad[k] += 4.0 * err * rel
    return CbfEvaluation(h, grad, i, "formation")


def consensus_cbf(i: int, positions) -> CbfEvaluation:
    pos = np.asarray(positions, dtype=float)
    rel = pos[i] - pos
    grad = 2.0 * rel
    grad[i] = -2.0 * rel.sum(axis=0)
    return CbfEvaluation(-float(np.sum(rel * rel)), grad, i, "consensus")


def task_values(task: TaskSpec, positions, centroids=None) -> tuple[np.ndarray, np.ndarray]:
    """All robots' ``h_i`` and own-position gradients ``dh_i/dx_i`` for one task.

    Vectorized counterpart of the per-robot ``*_cbf`` functions.  Coverage
    uses ``centroids`` when given, otherwise recomputes the Voronoi cells.
    """
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    if task.kind == "coverage":
        c = voronoi_centroids(pos, task.domain) if centroids is None else np.asarray(centroids)
        diff = pos - c
        return -np.einsum("ij,ij->i", diff, diff), -2.0 * diff
    if task.kind == "consensus":
        total = pos.sum(axis=0)
        sq = np.einsum("ij,ij->i", pos, pos)
        h = -(n * sq - 2.0 * pos @ total + sq.sum())
        return h, -2.0 * (n * pos - total)
    h = np.zeros(n)
    grad = np.zeros_like(pos)
    for a, b, d in task.edges:
        rel = pos[a] - pos[b]
        err = float(rel @ rel) - d * d
        h[a] -= err * err
        h[b] -= err * err
        grad[a] -= 4.0 * err * rel
        grad[b] += 4.0 * err * rel
    return h, grad


def cells_for(task: TaskSpec, positions):
    return bounded_voronoi(positions, task.domain)
