"""Resilience CBF built on the frame of task sensitivities.

For every active robot ``i`` and input column ``k`` the frame holds the
vector in R^M whose j-th entry is ``d h_ij / d x_ik``.  The resilience CBF
is ``h_R = -FP_R(frame)``; its state gradient is taken by central finite
differences with the frame (and the Voronoi partition behind coverage)
rebuilt at every probe.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np

from .control import ClassKappa, LinearRow
from .errors import NumericalError
from .frames import FrameVectorSet, _fp_r_value, modified_frame_potential
from .tasks import TaskSpec, task_values

__all__ = [
    "ResilienceEvaluation",
    "build_frame",
    "resilience_value",
    "resilience_cbf",
    "resilience_constraint_rows",
    "DEFAULT_REGULARIZATION",
]

DEFAULT_REGULARIZATION = 1e-9


@dataclasses.dataclass(frozen=True)
class ResilienceEvaluation:
    h_R: float
    grad: np.ndarray
    frame: FrameVectorSet
    fp_r_value: float


def _sensitivities(positions, tasks: Sequence[TaskSpec], centroids=None) -> np.ndarray:
    """Own-position gradients, shape (N, M, 2)."""
    grads = []
    for task in tasks:
        c = centroids if task.kind == "coverage" else None
        grads.append(task_values(task, positions, c)[1])
    return np.stack(grads, axis=1)


def build_frame(positions, tasks: Sequence[TaskSpec], active: Sequence[int] | None = None, centroids=None) -> FrameVectorSet:
    if not tasks:
        raise ValueError("at least one task is needed to build a frame")
    pos = np.asarray(positions, dtype=float)
    active = list(range(pos.shape[0])) if active is None else [int(i) for i in active]
    sens = _sensitivities(pos, tasks, centroids)
    vecs, owners, cols = [], [], []
    for i in active:
        for k in range(pos.shape[1]):
            vecs.append(sens[i, :, k])
            owners.append(i)
            cols.append(k)
    return FrameVectorSet(np.array(vecs).reshape(len(vecs), len(tasks)), tuple(owners), tuple(cols))


def resilience_value(positions, tasks, active=None, regularization: float = DEFAULT_REGULARIZATION, centroids=None) -> float:
    """``FP_R`` of the frame at ``positions``."""
    frame = build_frame(positions, tasks, active, centroids)
    return modified_frame_potential(frame, eps=regularization)


def _probe(pos, tasks, active, regularization) -> float:
    # same value as resilience_value, without building a FrameVectorSet
    sens = _sensitivities(pos, tasks)[active]
    v = sens.transpose(0, 2, 1).reshape(-1, len(tasks))
    return _fp_r_value(v, 2, regularization)


def _check_finite(frame: FrameVectorSet, value: float) -> None:
    if np.isfinite(value):
        return
    bad = np.flatnonzero(~np.all(np.isfinite(frame.vectors), axis=1))
    if bad.size:
        owner, col = frame.label(int(bad[0]))
        raise NumericalError(f"non-finite resilience potential: robot {owner}, column {col}")
    raise NumericalError("non-finite resilience potential")


def resilience_cbf(
    positions,
    tasks: Sequence[TaskSpec],
    active: Sequence[int] | None = None,
    eps_fd: float = 1e-4,
    regularization: float = DEFAULT_REGULARIZATION,
) -> ResilienceEvaluation:
    """Evaluate ``h_R`` and ``d h_R / d x_i`` for every active robot.

    Inactive robots get a zero gradient row.  With ``regularization=0`` a
    zero frame vector raises :class:`~resilient_cdc.errors.DegenerateFrameError`.
    """
    if eps_fd <= 0:
        raise ValueError("eps_fd must be positive")
    pos = np.array(positions, dtype=float)
    active = list(range(pos.shape[0])) if active is None else [int(i) for i in active]
    frame = build_frame(pos, tasks, active)
    value = modified_frame_potential(frame, eps=regularization)
    _check_finite(frame, value)
    grad = np.zeros_like(pos)
    for i in active:
        for k in range(pos.shape[1]):
            orig = pos[i, k]
            pos[i, k] = orig + eps_fd
            up = _probe(pos, tasks, active, regularization)
            pos[i, k] = orig - eps_fd
            down = _probe(pos, tasks, active, regularization)
            pos[i, k] = orig
            grad[i, k] = -(up - down) / (2.0 * eps_fd)
    if not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite resilience gradient")
    return ResilienceEvaluation(-value, grad, frame, value)


def resilience_constraint_rows(
    ev: ResilienceEvaluation,
    alpha_r: ClassKappa,
    n_tasks: int,
    active: Sequence[int],
    *,
    normalize: bool = True,
) -> list[LinearRow]:
    """Per active robot: ``-dh_R/dx_i . u_i - alpha_R(h_R) <= delta_{i,M}`` (single integrator, ``L_f h_R = 0``).

    With ``normalize`` each row is divided by ``|dh_R/dx_i|`` before the slack
    is attached, so the slack is measured in speed units.  The set of inputs
    allowed by the row is unchanged; only the price of relaxing it is.
    FP_R spans many orders of magnitude, and an unscaled slack makes huge
    inputs cheaper than any relaxation.
    """
    rhs = float(alpha_r(ev.h_R))
    rows = []
    for i in active:
        g = np.asarray(ev.grad[i], dtype=float)
        norm = float(np.linalg.norm(g)) if normalize else 1.0
        if norm <= 0.0:
            norm = 1.0
        rows.append(LinearRow({i: -g / norm}, {(i, n_tasks): -1.0}, rhs / norm, f"resilience {i}"))
    return rows
