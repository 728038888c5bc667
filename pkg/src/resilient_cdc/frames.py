"""Finite frames in task space and their frame potentials.

A frame here is the set of per-robot, per-input-column task sensitivity
vectors ``v_ik`` in R^M (M = number of tasks).  The modified potential
``FP_R`` is minimized exactly by finite normalized tight frames (FNTFs).

Two details of the potential are configurable:

* ``norm_power`` -- the power of each norm in the pair denominator.  The
  default ``2`` normalizes every vector, so ``FP({v}) = FP({v/|v|})`` and the
  minima of ``FP_R`` are FNTFs with value ``n**2 / M``.  ``norm_power=1``
  evaluates the pair term as ``<v, w>**2 / (|v| |w|)``.
* ``eps`` -- a regularization added to every norm in a denominator so that
  zero vectors contribute nothing instead of raising.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np

from .errors import DegenerateFrameError, NumericalError

__all__ = [
    "FrameVectorSet",
    "TightnessReport",
    "frame_operator",
    "tightness_bounds",
    "frame_potential",
    "modified_frame_potential",
    "fp_r_gradient",
    "minimize_fp_r",
    "mismatch_samples",
    "expected_mismatch",
]


@dataclasses.dataclass(frozen=True)
class FrameVectorSet:
    """Ordered frame vectors with their (owner robot, input column) labels.

    ``vectors`` has shape ``(n, M)``; row ``a`` is labeled
    ``(owners[a], columns[a])``.
    """

    vectors: np.ndarray
    owners: tuple[int, ...]
    columns: tuple[int, ...]

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[1] < 1:
            raise ValueError(f"frame vectors must form an (n, M) array with M >= 1, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "owners", tuple(int(o) for o in self.owners))
        object.__setattr__(self, "columns", tuple(int(c) for c in self.columns))
        if not len(self.owners) == len(self.columns) == v.shape[0]:
            raise ValueError("owners/columns must have one entry per vector")
        labels = list(zip(self.owners, self.columns))
        if len(set(labels)) != len(labels):
            raise ValueError("owner/column index pairs must be unique")

    @classmethod
    def from_vectors(cls, vectors: Sequence[Sequence[float]]) -> FrameVectorSet:
        """Label each vector with its own owner index and column 0."""
        v = np.atleast_2d(np.asarray(vectors, dtype=float))
        n = v.shape[0]
        return cls(v, tuple(range(n)), (0,) * n)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def label(self, a: int) -> tuple[int, int]:
        return self.owners[a], self.columns[a]

    def with_vectors(self, vectors: np.ndarray) -> FrameVectorSet:
        return FrameVectorSet(vectors, self.owners, self.columns)


@dataclasses.dataclass(frozen=True)
class TightnessReport:
    lower_A: float
    upper_B: float
    is_tight: bool
    is_normalized: bool


def frame_operator(frame: FrameVectorSet) -> np.ndarray:
    """Return ``S = sum_a v_a v_a^T``."""
    if frame.n == 0:
        raise ValueError("empty frame")
    v = frame.vectors
    return v.T @ v


def tightness_bounds(frame: FrameVectorSet, tol: float = 1e-9) -> TightnessReport:
    """Optimal frame bounds: the extreme eigenvalues of the frame operator."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = frame_operator(frame)
    try:
        eig = np.linalg.eigvalsh(s)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue solver failed: {exc}") from exc
    lo = max(float(eig[0]), 0.0)
    hi = max(float(eig[-1]), lo)
    norms = np.linalg.norm(frame.vectors, axis=1)
    return TightnessReport(
        lower_A=lo,
        upper_B=hi,
        is_tight=bool(hi - lo <= tol),
        is_normalized=bool(np.all(np.abs(norms - 1.0) <= tol)),
    )


def _check_norms(frame: FrameVectorSet, eps: float) -> None:
    if eps > 0.0:
        return
    r = np.linalg.norm(frame.vectors, axis=1)
    zero = np.flatnonzero(r == 0.0)
    if zero.size:
        raise DegenerateFrameError(*frame.label(int(zero[0])))


def _potential_terms(v: np.ndarray, norm_power: int, eps: float):
    r = np.sqrt(np.einsum("ij,ij->i", v, v))
    rho = (r + eps) ** norm_power
    gram = v @ v.T
    w = gram / np.outer(rho, rho)
    return r, gram, w


def _fp_r_value(v: np.ndarray, norm_power: int, eps: float) -> float:
    r, gram, w = _potential_terms(v, norm_power, eps)
    return float(np.sum(gram * w) + np.sum((1.0 - r**2) ** 2))


def _fp_r_grad(v: np.ndarray, norm_power: int, eps: float) -> np.ndarray:
    r, gram, w = _potential_terms(v, norm_power, eps)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(r[:, None] > 0.0, v / r[:, None], 0.0)
    radial = 2.0 * norm_power * np.sum(gram * w, axis=1) / (r + eps)
    return 4.0 * (w @ v) - radial[:, None] * unit - 4.0 * (1.0 - r**2)[:, None] * v


def frame_potential(frame: FrameVectorSet, *, norm_power: int = 2, eps: float = 0.0) -> float:
    """Sum over all ordered pairs (self-pairs included) of ``<v_a, v_b>**2 / (|v_a||v_b|)**p``.

    For unit vectors this is the classical frame potential, whose minimum
    over ``n >= d`` unit vectors in R^d is ``n**2 / d``.
    """
    if frame.n == 0:
        raise ValueError("empty frame")
    _check_norms(frame, eps)
    _, gram, w = _potential_terms(frame.vectors, norm_power, eps)
    value = float(np.sum(gram * w))
    if not np.isfinite(value):
        raise NumericalError("non-finite frame potential")
    return value


def modified_frame_potential(frame: FrameVectorSet, *, norm_power: int = 2, eps: float = 0.0) -> float:
    """Frame potential plus the unit-norm penalty ``sum_a (1 - |v_a|^2)^2``."""
    fp = frame_potential(frame, norm_power=norm_power, eps=eps)
    sq = np.einsum("ij,ij->i", frame.vectors, frame.vectors)
    return fp + float(np.sum((1.0 - sq) ** 2))


def fp_r_gradient(frame: FrameVectorSet, *, norm_power: int = 2, eps: float = 0.0) -> np.ndarray:
    """Gradient of :func:`modified_frame_potential` w.r.t. each frame vector.

    Returns an ``(n, M)`` array; row ``a`` is ``d FP_R / d v_a``.  With
    ``norm_power=2`` the potential part is tangential to each ``v_a`` and the
    penalty part radial, so the gradient vanishes exactly at FNTFs.
    """
    if frame.n == 0:
        raise ValueError("empty frame")
    _check_norms(frame, eps)
    grad = _fp_r_grad(frame.vectors, norm_power, eps)
    if not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite frame potential gradient")
    return grad


def minimize_fp_r(
    initial: FrameVectorSet,
    step: float = 0.1,
    max_iters: int = 10_000,
    tol: float = 1e-6,
    *,
    norm_power: int = 2,
    armijo: float = 1e-4,
    return_iterations: bool = False,
):
    """Gradient descent on ``FP_R`` with halving backtracking (Armijo condition).

    Every local minimizer of the frame potential is global, so plain descent
    reaches the FNTF value ``n**2 / M`` from generic starts with ``n >= M``.
    Each line search starts from the Barzilai-Borwein step of the previous
    iterate (``step`` on the first iteration).
    """
    if step <= 0:
        raise ValueError("step must be positive")
    _check_norms(initial, 0.0)
    v = np.array(initial.vectors, dtype=float)
    value = _fp_r_value(v, norm_power, 0.0)
    g = _fp_r_grad(v, norm_power, 0.0)
    t = step
    it = 0
    for it in range(max_iters):
        gg = float(np.sum(g * g))
        if not np.isfinite(gg):
            raise NumericalError(f"non-finite gradient at iteration {it}")
        if np.sqrt(gg) <= tol:
            break
        for _ in range(80):
            trial = v - t * g
            with np.errstate(invalid="ignore", divide="ignore"):
                trial_value = _fp_r_value(trial, norm_power, 0.0)
            if trial_value <= value - armijo * t * gg:
                break
            t *= 0.5
        else:
            raise NumericalError(
                f"line search failed to decrease FP_R at iteration {it} (value {value:.6g})"
            )
        g_new = _fp_r_grad(trial, norm_power, 0.0)
        s, y = trial - v, g_new - g
        sy = float(np.sum(s * y))
        t = float(np.sum(s * s)) / sy if sy > 0 else 2.0 * t
        v, g, value = trial, g_new, trial_value
    else:
        it = max_iters
    frame = initial.with_vectors(v)
    if return_iterations:
        return frame, it
    return frame


def mismatch_samples(weighted_vectors, n_samples: int, seed: int) -> np.ndarray:
    """Per-direction integrand ``sum_k <w_k, y>**2`` for ``y`` uniform on the unit sphere.

    Directions are normalized standard-Gaussian draws from a PCG64 stream.
    """
    w = np.atleast_2d(np.asarray(weighted_vectors, dtype=float))
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    m = w.shape[1]
    rng = np.random.Generator(np.random.PCG64(seed))
    y = rng.standard_normal((n_samples, m))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    proj = y @ w.T
    return np.einsum("ij,ij->i", proj, proj)


def expected_mismatch(weighted_vectors, n_samples: int, seed: int = 0) -> float:
    """Monte-Carlo mean of :func:`mismatch_samples`.

    This is the expected mismatch divided by the measure of the sphere; an
    A-tight frame gives exactly ``A``.
    """
    return float(np.mean(mismatch_samples(weighted_vectors, n_samples, seed)))
