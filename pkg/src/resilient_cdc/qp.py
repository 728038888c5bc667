"""Dense strictly convex QP solver (Goldfarb-Idnani dual active set).

Problems have the form::

    minimize    0.5 z^T P z + q^T z
    subject to  A z <= b

with ``P`` symmetric positive definite.  The dual method starts from the
unconstrained minimizer and adds the most violated constraint at each major
iteration, dropping constraints whose multipliers would turn negative.  The
active-set factorization ``J^T N = [R; 0]`` (with ``J = L^{-T} Q``) is rebuilt
from a QR of ``L^{-1} N`` whenever the active set changes; problems here
have a few dozen variables, so this costs less than bookkeeping Givens
updates.
"""

from __future__ import annotations

import dataclasses
import enum
from typing import Sequence

import numpy as np

__all__ = ["QpProblem", "QpSettings", "QpSolution", "QpStatus", "solve", "kkt_residuals"]


class QpStatus(str, enum.Enum):
    SOLVED = "solved"
    INFEASIBLE = "infeasible"
    MAX_ITER = "max_iter"


@dataclasses.dataclass
class QpProblem:
    P: np.ndarray
    q: np.ndarray
    A: np.ndarray
    b: np.ndarray
    labels: Sequence[str] = ()

    def __post_init__(self):
        self.P = np.atleast_2d(np.asarray(self.P, dtype=float))
        n = self.P.shape[0]
        self.q = np.zeros(n) if self.q is None else np.asarray(self.q, dtype=float).reshape(n)
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        m = self.A.shape[0]
        if self.b.shape[0] != m:
            raise ValueError(f"A has {m} rows but b has {self.b.shape[0]} entries")
        if not self.labels:
            self.labels = tuple(f"row{i}" for i in range(m))
        self.labels = tuple(self.labels)
        if len(self.labels) != m:
            raise ValueError(f"{len(self.labels)} labels for {m} constraint rows")
        if self.P.shape != (n, n) or not np.allclose(self.P, self.P.T, rtol=0.0, atol=1e-12):
            raise ValueError("P must be square and symmetric")

    @property
    def n_vars(self) -> int:
        return self.P.shape[0]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def objective(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(0.5 * z @ self.P @ z + self.q @ z)


@dataclasses.dataclass(frozen=True)
class QpSettings:
    feas_tol: float = 1e-8
    opt_tol: float = 1e-8
    max_iter: int = 200


@dataclasses.dataclass
class QpSolution:
    z_star: np.ndarray
    duals: np.ndarray
    status: QpStatus
    kkt_residual: float
    iterations: int = 0
    active_set: tuple[int, ...] = ()
    # labels of the constraints blocking feasibility (best effort, infeasible only)
    conflict: tuple[str, ...] = ()

    @property
    def solved(self) -> bool:
        return self.status is QpStatus.SOLVED


def kkt_residuals(problem: QpProblem, solution: QpSolution) -> dict[str, float]:
    """Stationarity, primal feasibility and complementarity residuals (inf-norms)."""
    z = np.asarray(solution.z_star, dtype=float)
    lam = np.asarray(solution.duals, dtype=float)
    if z.shape != (problem.n_vars,) or lam.shape != (problem.n_rows,):
        raise ValueError("solution dimensions do not match the problem")
    grad = problem.P @ z + problem.q + problem.A.T @ lam
    slack = problem.A @ z - problem.b
    feas = float(np.max(slack, initial=0.0))
    return {
        "stationarity": float(np.max(np.abs(grad), initial=0.0)),
        "feasibility": max(feas, 0.0),
        "complementarity": float(np.max(np.abs(lam * slack), initial=0.0)),
    }


class _ActiveFactor:
    """``J`` and ``R`` for the current active normals ``N``."""

    def __init__(self, linv: np.ndarray):
        self.linv = linv
        self.n = linv.shape[0]
        self.J = linv.T.copy()
        self.R = np.zeros((0, 0))

    def rebuild(self, normals: np.ndarray) -> None:
        if normals.shape[1] == 0:
            self.J = self.linv.T.copy()
            self.R = np.zeros((0, 0))
            return
        qmat, rmat = np.linalg.qr(self.linv @ normals, mode="complete")
        self.J = self.linv.T @ qmat
        self.R = rmat[: normals.shape[1], :]


def solve(problem: QpProblem, settings: QpSettings | None = None) -> QpSolution:
    """Solve ``problem`` with the Goldfarb-Idnani dual active-set method.

    Constraints ``a_i^T z <= b_i`` are handled as ``n_i^T z >= c_i`` with
    ``n_i = -a_i``, ``c_i = -b_i``.  The returned duals are the multipliers of
    the ``A z <= b`` rows, so ``P z + q + A^T duals = 0`` at a solution.

    Rows are scaled to unit norm first; this leaves the feasible set and the
    optimum unchanged but keeps rows of very different magnitude comparable.
    """
    settings = settings or QpSettings()
    norms = np.linalg.norm(problem.A, axis=1)
    norms = np.where(norms > 0.0, norms, 1.0)
    scaled = QpProblem(problem.P, problem.q, problem.A / norms[:, None], problem.b / norms, problem.labels)
    sol = _solve_core(scaled, settings)
    sol.duals = sol.duals / norms
    sol.kkt_residual = max(kkt_residuals(problem, sol).values())
    return sol


def _solve_core(problem: QpProblem, settings: QpSettings) -> QpSolution:
    P, q, A, b = problem.P, problem.q, problem.A, problem.b
    n, m = problem.n_vars, problem.n_rows
    try:
        L = np.linalg.cholesky(P)
    except np.linalg.LinAlgError as exc:
        raise ValueError("P must be positive definite") from exc
    linv = np.linalg.solve(L, np.eye(n))
    factor = _ActiveFactor(linv)

    z = -(linv.T @ (linv @ q))
    normals = -A
    active: list[int] = []
    u = np.zeros(0)
    scale = 1.0 + np.linalg.norm(A, axis=1)
    it = 0

    def finish(status, conflict=()):
        duals = np.zeros(m)
        duals[active] = u
        sol = QpSolution(z, duals, status, 0.0, it, tuple(active), tuple(conflict))
        res = kkt_residuals(problem, sol)
        sol.kkt_residual = max(res.values())
        return sol

    while it < settings.max_iter:
        # step 1: choose the most violated constraint (scaled by row norm)
        s = (b - A @ z) / scale
        if active:
            s[active] = np.inf
        p = int(np.argmin(s)) if m else -1
        if m == 0 or s[p] >= -settings.feas_tol:
            return finish(QpStatus.SOLVED)
        n_plus = normals[p]
        u_plus = np.append(u, 0.0)
        while True:
            it += 1
            if it > settings.max_iter:
                return finish(QpStatus.MAX_ITER)
            q_act = len(active)
            d = factor.J.T @ n_plus
            step_dir = factor.J[:, q_act:] @ d[q_act:]
            r = np.linalg.solve(factor.R, d[:q_act]) if q_act else np.zeros(0)
            # partial (dual) step length
            t1, k = np.inf, -1
            pos = np.flatnonzero(r > settings.opt_tol * 1e-3)
            if pos.size:
                ratios = u_plus[pos] / r[pos]
                j = int(np.argmin(ratios))
                t1, k = float(ratios[j]), int(pos[j])
            # full (primal) step length
            zn = float(step_dir @ n_plus)
            viol = float(b[p] - A[p] @ z)
            if np.linalg.norm(step_dir) <= 1e-12 * (1.0 + np.linalg.norm(n_plus)) or zn <= 0.0:
                t2 = np.inf
            else:
                t2 = -viol / zn
            t = min(t1, t2)
            if not np.isfinite(t):
                labels = [problem.labels[i] for i in active] + [problem.labels[p]]
                return finish(QpStatus.INFEASIBLE, labels)
            if not np.isfinite(t2):
                # constraint p is linearly dependent on the active set: drop k
                u_plus[:q_act] -= t * r
                u_plus[-1] += t
                del active[k]
                u_plus = np.delete(u_plus, k)
                factor.rebuild(normals[active].T)
                continue
            z = z + t * step_dir
            u_plus[:q_act] -= t * r
            u_plus[-1] += t
            if t2 <= t1:
                active.append(p)
                u = u_plus
                factor.rebuild(normals[active].T)
                break
            del active[k]
            u_plus = np.delete(u_plus, k)
            factor.rebuild(normals[active].T)
    return finish(QpStatus.MAX_ITER)
