import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resilient_cdc.geometry import voronoi_centroids
from resilient_cdc.tasks import (
    TaskSpec,
    consensus_cbf,
    coverage_cbf,
    formation_cbf,
    hexagon_edges,
    hexagon_vertices,
    task_values,
)

BOX = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


def test_coverage_at_centroid():
    ev = coverage_cbf(0, np.array([[0.2, 0.1]]), np.array([[0.2, 0.1]]))
    assert ev.value == 0.0
    np.testing.assert_array_equal(ev.owner_grad, 0.0)


def test_coverage_hand_example():
    ev = coverage_cbf(0, np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]]))
    assert ev.value == pytest.approx(-1.0)
    np.testing.assert_allclose(ev.owner_grad, [2.0, 0.0])


def test_formation_met():
    pos = hexagon_vertices(0.5)
    for i in range(6):
        ev = formation_cbf(i, pos, hexagon_edges(0.5))
        assert abs(ev.value) < 1e-12
        assert np.abs(ev.owner_grad).max() < 1e-12


def test_formation_hand_example():
    pos = np.array([[0.0, 0.0], [2.0, 0.0]])
    ev = formation_cbf(0, pos, ((0, 1, 1.0),))
    assert ev.value == pytest.approx(-9.0)
    np.testing.assert_allclose(ev.owner_grad, -12.0 * (pos[0] - pos[1]))


def test_consensus_coincident():
    ev = consensus_cbf(1, np.zeros((3, 2)))
    assert ev.value == 0.0
    np.testing.assert_array_equal(ev.grad, 0.0)


def test_hexagon_edges():
    edges = hexagon_edges(0.5)
    assert len(edges) == 9
    d = sorted({round(e[2], 12) for e in edges})
    assert d == [0.5, 1.0]


def test_task_spec_validation():
    with pytest.raises(ValueError):
        TaskSpec("formation", edges=((0, 0, 1.0),)).validate(2)
    with pytest.raises(ValueError):
        TaskSpec("formation", edges=((0, 5, 1.0),)).validate(2)
    with pytest.raises(ValueError):
        TaskSpec("swarm")


def _fd_own_grad(fn, pos, i, h=1e-6):
    g = np.zeros(2)
    for k in range(2):
        p, m = pos.copy(), pos.copy()
        p[i, k] += h
        m[i, k] -= h
        g[k] = (fn(p) - fn(m)) / (2 * h)
    return g


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_vectorized_values_match_per_robot(seed):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(-0.9, 0.9, size=(6, 2))
    cents = voronoi_centroids(pos, BOX)
    edges = hexagon_edges(0.4)
    for task, single in (
        (TaskSpec("coverage", domain=BOX), lambda i: coverage_cbf(i, pos, cents)),
        (TaskSpec("formation", edges=edges), lambda i: formation_cbf(i, pos, edges)),
        (TaskSpec("consensus"), lambda i: consensus_cbf(i, pos)),
    ):
        h, g = task_values(task, pos, cents)
        for i in range(6):
            ev = single(i)
            assert h[i] == pytest.approx(ev.value, rel=1e-12, abs=1e-12)
            np.testing.assert_allclose(g[i], ev.owner_grad, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("kind", ["formation", "consensus"])
def test_gradients_match_finite_differences(kind):
    rng = np.random.default_rng(1)
    pos = rng.uniform(-1, 1, size=(6, 2))
    edges = hexagon_edges(0.5)
    for i in range(6):
        if kind == "formation":
            ev = formation_cbf(i, pos, edges)
            fd = _fd_own_grad(lambda p: formation_cbf(i, p, edges).value, pos, i)
        else:
            ev = consensus_cbf(i, pos)
            fd = _fd_own_grad(lambda p: consensus_cbf(i, p).value, pos, i)
        np.testing.assert_allclose(ev.owner_grad, fd, rtol=1e-6, atol=1e-6)
