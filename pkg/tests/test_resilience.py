import numpy as np
import pytest

from resilient_cdc.control import ClassKappa
from resilient_cdc.errors import DegenerateFrameError
from resilient_cdc.frames import modified_frame_potential
from resilient_cdc.resilience import (
    ResilienceEvaluation,
    build_frame,
    resilience_cbf,
    resilience_constraint_rows,
    resilience_value,
)
from resilient_cdc.tasks import TaskSpec, hexagon_edges

# robot 0's Voronoi cell in this box has centroid (0.5, 0) when the robots sit at (0,0), (0,0.5)
BOX = np.array([[-0.5, -0.25], [1.5, -0.25], [1.5, 1.0], [-0.5, 1.0]])
IDENTITY_TASKS = (TaskSpec("coverage", domain=BOX), TaskSpec("consensus"))
IDENTITY_POS = np.array([[0.0, 0.0], [0.0, 0.5]])
DOMAIN = np.array([[-1.6, -1.0], [1.6, -1.0], [1.6, 1.0], [-1.6, 1.0]])
TWO_TASKS = (TaskSpec("coverage", domain=DOMAIN), TaskSpec("formation", edges=hexagon_edges(0.5)))


def test_identity_frame():
    frame = build_frame(IDENTITY_POS, IDENTITY_TASKS, active=[0], centroids=np.array([[0.5, 0.0], [0.5, 0.6]]))
    np.testing.assert_allclose(frame.vectors, np.eye(2), atol=1e-12)
    assert frame.owners == (0, 0) and frame.columns == (0, 1)


def test_fntf_configuration_value():
    ev = resilience_cbf(IDENTITY_POS, IDENTITY_TASKS, active=[0], regularization=0.0)
    np.testing.assert_allclose(ev.frame.vectors, np.eye(2), atol=1e-12)
    assert ev.h_R == pytest.approx(-2.0, abs=1e-12)  # -n^2/M with n = M = 2
    assert ev.fp_r_value == pytest.approx(2.0, abs=1e-12)


def test_two_task_dimensions():
    pos = np.random.default_rng(0).uniform([-1.5, -0.9], [1.5, 0.9], size=(6, 2))
    frame = build_frame(pos, TWO_TASKS)
    assert frame.vectors.shape == (12, 2)


def test_inactive_robots_excluded():
    pos = np.random.default_rng(1).uniform([-1.5, -0.9], [1.5, 0.9], size=(6, 2))
    ev = resilience_cbf(pos, TWO_TASKS, active=[0, 1, 2, 3])
    assert ev.frame.n == 8
    np.testing.assert_array_equal(ev.grad[4:], 0.0)


def test_value_is_negative_potential():
    pos = np.random.default_rng(2).uniform([-1.5, -0.9], [1.5, 0.9], size=(6, 2))
    ev = resilience_cbf(pos, TWO_TASKS)
    assert ev.h_R == pytest.approx(-modified_frame_potential(ev.frame, eps=1e-9))
    assert ev.h_R == pytest.approx(-resilience_value(pos, TWO_TASKS))


def test_zero_column_raises_without_regularization():
    tasks = (TaskSpec("consensus"), TaskSpec("formation", edges=((0, 1, 2.0),)))
    pos = np.array([[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(DegenerateFrameError) as info:
        resilience_cbf(pos, tasks, active=[0], regularization=0.0)
    assert "(0, 1)" in str(info.value)


def test_regularized_zero_column_is_finite():
    tasks = (TaskSpec("consensus"), TaskSpec("formation", edges=((0, 1, 2.0),)))
    pos = np.array([[0.0, 0.0], [1.0, 0.0]])
    ev = resilience_cbf(pos, tasks, active=[0])
    assert np.isfinite(ev.h_R)


def test_bad_step():
    with pytest.raises(ValueError):
        resilience_cbf(IDENTITY_POS, IDENTITY_TASKS, eps_fd=0.0)


@pytest.mark.parametrize("seed", range(5))
def test_fd_half_step_consistency(seed):
    pos = np.random.default_rng(seed).uniform([-1.5, -0.9], [1.5, 0.9], size=(6, 2))
    g1 = resilience_cbf(pos, TWO_TASKS, eps_fd=2e-4).grad
    g2 = resilience_cbf(pos, TWO_TASKS, eps_fd=1e-4).grad
    assert np.linalg.norm(g1 - g2) / np.linalg.norm(g2) < 5e-3


class TestRows:
    def test_hand_instance(self):
        ev = ResilienceEvaluation(-3.0, np.array([[0.5, -1.0]]), None, 3.0)
        (row,) = resilience_constraint_rows(ev, ClassKappa(0.5), n_tasks=2, active=[0], normalize=False)
        np.testing.assert_allclose(row.u_coeffs[0], [-0.5, 1.0])
        assert row.slack_coeffs == {(0, 2): -1.0}
        assert row.rhs == pytest.approx(-1.5)

    def test_normalized_row_has_unit_gradient(self):
        ev = ResilienceEvaluation(-3.0, np.array([[0.5, -1.0]]), None, 3.0)
        (row,) = resilience_constraint_rows(ev, ClassKappa(0.5), n_tasks=2, active=[0])
        norm = np.hypot(0.5, 1.0)
        np.testing.assert_allclose(row.u_coeffs[0], np.array([-0.5, 1.0]) / norm)
        assert row.slack_coeffs == {(0, 2): -1.0}
        assert row.rhs == pytest.approx(-1.5 / norm)

    def test_zero_gradient_row(self):
        ev = ResilienceEvaluation(1.0, np.zeros((1, 2)), None, -1.0)
        (row,) = resilience_constraint_rows(ev, ClassKappa(1.0), 1, [0])
        np.testing.assert_array_equal(row.u_coeffs[0], 0.0)
        assert row.rhs >= 0  # delta = 0 satisfies it

    def test_one_row_per_active_robot(self):
        ev = ResilienceEvaluation(-1.0, np.ones((6, 2)), None, 1.0)
        rows = resilience_constraint_rows(ev, ClassKappa(1.0), 2, range(6))
        assert len(rows) == 6
