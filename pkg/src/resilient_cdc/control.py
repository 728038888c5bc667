"""Point-wise-in-time QP assembly for constraint-driven multi-robot control.

The decision vector is ``z = (u_1, ..., u_n, delta)`` over the *active*
(non-failed) robots only.  ``delta`` holds one slack per (robot, task) and,
in resilient mode, one extra slack per robot for the resilience row:
``delta[(i, j)]`` for ``j < M`` and ``delta[(i, M)]``.

Constraint rows are built symbolically (:class:`LinearRow`) by the task,
energy and resilience layers and laid out densely by :func:`assemble_qp`.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Mapping, Sequence

import numpy as np

from .qp import QpProblem

__all__ = [
    "ControlAffineModel",
    "single_integrator",
    "ClassKappa",
    "CbfEvaluation",
    "LinearRow",
    "DecisionLayout",
    "lie_derivatives",
    "task_constraint_row",
    "assemble_qp",
]


@dataclasses.dataclass(frozen=True)
class ControlAffineModel:
    """``xdot = f(x) + g(x) u``."""

    state_dim: int
    input_dim: int
    drift: Callable[[np.ndarray], np.ndarray]
    input_map: Callable[[np.ndarray], np.ndarray]


def single_integrator(dim: int = 2) -> ControlAffineModel:
    return ControlAffineModel(
        state_dim=dim,
        input_dim=dim,
        drift=lambda x: np.zeros(dim),
        input_map=lambda x: np.eye(dim),
    )


@dataclasses.dataclass(frozen=True)
class ClassKappa:
    """Linear extended class-K function ``alpha(h) = gain * h``."""

    gain: float

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError("class-K gain must be positive")

    def __call__(self, h):
        return self.gain * h


@dataclasses.dataclass(frozen=True)
class CbfEvaluation:
    """Value and ensemble state gradient of one CBF ``h_ij``.

    ``grad`` has one row per robot (zeros for robots the CBF does not touch).
    """

    value: float
    grad: np.ndarray
    owner: int
    task: int | str

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.grad, dtype=float))
        if not np.all(np.isfinite(g)) or not np.isfinite(self.value):
            raise ValueError(f"non-finite CBF evaluation for robot {self.owner}, task {self.task}")
        object.__setattr__(self, "grad", g)

    @property
    def owner_grad(self) -> np.ndarray:
        return self.grad[self.owner]


def lie_derivatives(model: ControlAffineModel, evaluation: CbfEvaluation, state) -> tuple[float, np.ndarray]:
    """``(L_f h, L_g h)`` along the owner's dynamics at the owner's ``state``."""
    grad = evaluation.owner_grad
    x = np.asarray(state, dtype=float)
    if grad.shape[0] != model.state_dim or x.shape[0] != model.state_dim:
        raise ValueError(
            f"gradient has {grad.shape[0]} entries but the model state dimension is {model.state_dim}"
        )
    lf = float(grad @ np.asarray(model.drift(x), dtype=float))
    lg = grad @ np.asarray(model.input_map(x), dtype=float).reshape(model.state_dim, model.input_dim)
    return lf, lg


@dataclasses.dataclass
class LinearRow:
    """``sum_i u_coeffs[i] . u_i + sum_s slack_coeffs[s] * delta_s <= rhs``."""

    u_coeffs: dict[int, np.ndarray]
    slack_coeffs: dict[tuple[int, int], float]
    rhs: float
    label: str


def task_constraint_row(
    evals: Sequence[CbfEvaluation],
    models: Mapping[int, ControlAffineModel] | ControlAffineModel,
    states,
    alpha: ClassKappa,
    task_index: int,
    label: str | None = None,
) -> LinearRow:
    """One summed row for a task over all robots in ``evals``:

    ``sum_i (-L_f h_ij - L_g h_ij u_i - alpha(h_ij)) <= sum_i delta_ij``.
    """
    u_coeffs: dict[int, np.ndarray] = {}
    slack: dict[tuple[int, int], float] = {}
    rhs = 0.0
    for ev in evals:
        i = ev.owner
        model = models[i] if isinstance(models, Mapping) else models
        lf, lg = lie_derivatives(model, ev, states[i])
        u_coeffs[i] = -lg
        slack[(i, task_index)] = -1.0
        rhs += lf + alpha(ev.value)
    return LinearRow(u_coeffs, slack, float(rhs), label or f"task {task_index}")


@dataclasses.dataclass(frozen=True)
class DecisionLayout:
    active: tuple[int, ...]
    n_tasks: int
    resilient: bool
    input_dim: int = 2

    @property
    def slacks_per_robot(self) -> int:
        return self.n_tasks + (1 if self.resilient else 0)

    @property
    def n_inputs(self) -> int:
        return self.input_dim * len(self.active)

    @property
    def n_vars(self) -> int:
        return self.n_inputs + self.slacks_per_robot * len(self.active)

    def u_slice(self, robot: int) -> slice:
        k = self.active.index(robot)
        return slice(self.input_dim * k, self.input_dim * (k + 1))

    def slack_index(self, robot: int, slot: int) -> int:
        if not 0 <= slot < self.slacks_per_robot:
            raise IndexError(f"slack slot {slot} out of range")
        return self.n_inputs + self.active.index(robot) * self.slacks_per_robot + slot

    def split(self, z) -> tuple[np.ndarray, np.ndarray]:
        """``(u, delta)`` with ``u`` shaped (n_active, input_dim), ``delta`` (n_active, slacks)."""
        z = np.asarray(z, dtype=float)
        u = z[: self.n_inputs].reshape(len(self.active), self.input_dim)
        d = z[self.n_inputs :].reshape(len(self.active), self.slacks_per_robot)
        return u, d


def assemble_qp(
    active: Sequence[int],
    task_rows: Sequence[LinearRow],
    energy_rows: Sequence[LinearRow] = (),
    resilience_rows: Sequence[LinearRow] | None = None,
    kappa: float = 1e4,
    kappa_r: float | None = None,
    input_dim: int = 2,
) -> tuple[QpProblem, DecisionLayout]:
    """Lay the rows out over ``z = (u, delta)`` with cost ``0.5 (|u|^2 + kappa |delta|^2)``.

    Without ``resilience_rows`` the slack vector has ``n_active * M`` entries;
    with them ``n_active * (M + 1)``, the last slot per robot weighted by
    ``kappa_r`` (defaults to ``kappa``).
    """
    if not active:
        raise ValueError("no active robots to control")
    if kappa <= 0 or (kappa_r is not None and kappa_r <= 0):
        raise ValueError("slack weights must be positive")
    resilient = resilience_rows is not None
    layout = DecisionLayout(tuple(int(i) for i in active), len(task_rows), resilient, input_dim)
    rows = list(task_rows) + list(energy_rows) + (list(resilience_rows) if resilient else [])

    weights = np.ones(layout.n_vars)
    nt = layout.slacks_per_robot
    for k in range(len(layout.active)):
        base = layout.n_inputs + k * nt
        weights[base : base + layout.n_tasks] = kappa
        if resilient:
            weights[base + layout.n_tasks] = kappa if kappa_r is None else kappa_r
    A = np.zeros((len(rows), layout.n_vars))
    b = np.zeros(len(rows))
    for r, row in enumerate(rows):
        for i, coeff in row.u_coeffs.items():
            if i in layout.active:
                A[r, layout.u_slice(i)] = coeff
        for (i, slot), c in row.slack_coeffs.items():
            if i in layout.active:
                A[r, layout.slack_index(i, slot)] = c
        b[r] = row.rhs
    problem = QpProblem(np.diag(weights), np.zeros(layout.n_vars), A, b, [row.label for row in rows])
    return problem, layout
