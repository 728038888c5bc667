import numpy as np
import pytest

from helpers import small_config
from resilient_cdc.config import FailureSchedule, bundled_scenario, parse_config
from resilient_cdc.geometry import contains
from resilient_cdc.sim import batch, check_energy, init_scenario, run, step


def test_fixed_positions():
    pos = [[0.1, 0.1], [0.9, 0.2], [0.5, 0.8]]
    cfg = small_config(robots={"count": 3, "initial_positions": pos})
    np.testing.assert_array_equal(init_scenario(cfg).positions, pos)


def test_seeded_sampler():
    cfg = small_config(robots={"count": 6, "seed": 7, "min_separation": 0.05})
    a, b = init_scenario(cfg), init_scenario(cfg)
    np.testing.assert_array_equal(a.positions, b.positions)
    for p in a.positions:
        assert contains(cfg.domain, p)
    d = np.linalg.norm(a.positions[:, None] - a.positions[None], axis=2)
    assert d[np.triu_indices(6, 1)].min() >= 0.05


def test_two_robot_consensus_step_moves_together():
    cfg = small_config(robots={"count": 2, "initial_positions": [[0.2, 0.5], [0.8, 0.5]]})
    s0 = init_scenario(cfg)
    s1, rec = step(s0, cfg)
    assert rec.status == "solved"
    before = np.linalg.norm(s0.positions[0] - s0.positions[1])
    after = np.linalg.norm(s1.positions[0] - s1.positions[1])
    assert after < before
    assert s1.positions[0, 0] > 0.2 and s1.positions[1, 0] < 0.8


def test_all_failed():
    cfg = small_config(
        failures=[{"robot": r, "iteration": 0} for r in (1, 2, 3)],
        energy={"enabled": True, "k_s": 0.1, "stations": [[0.1, 0.1], [0.5, 0.1], [0.9, 0.1]],
                "station_radius": 0.01, "k_alpha": 0.1},
        robots={"count": 3, "initial_positions": [[0.2, 0.5], [0.8, 0.5], [0.5, 0.9]]},
    )
    s0 = init_scenario(cfg)
    s1, rec = step(s0, cfg)
    np.testing.assert_array_equal(s1.positions, s0.positions)
    assert np.all(s1.energies < s0.energies)
    assert rec.status == "idle"


def test_failure_zeroes_input_from_iteration():
    cfg = parse_config(bundled_scenario()).replace(resilience_enabled=False, horizon=200)
    trace = run(cfg, 0)
    u = trace.inputs
    assert np.all(u[180:, 5] == 0.0)
    assert np.any(u[:180, 5] != 0.0)
    assert all(r.failed[5] for r in trace.records[180:])


def test_horizon_zero():
    assert len(run(small_config(horizon=0))) == 0


def test_default_trace_length():
    cfg = parse_config(bundled_scenario()).replace(resilience_enabled=False)
    assert len(run(cfg, 3)) == 360


def test_deterministic():
    cfg = small_config(horizon=15)
    a, b = run(cfg, 4), run(cfg, 4)
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.inputs, b.inputs)


def test_infeasible_qp_freezes(monkeypatch):
    from resilient_cdc import sim
    from resilient_cdc.qp import QpSolution, QpStatus

    def fail(problem, settings):
        return QpSolution(np.zeros(problem.n_vars), np.zeros(problem.n_rows), QpStatus.INFEASIBLE, np.inf,
                          conflict=("x",))

    monkeypatch.setattr(sim, "solve", fail)
    cfg = small_config()
    s0 = init_scenario(cfg)
    s1, rec = step(s0, cfg)
    assert rec.status == "infeasible"
    np.testing.assert_array_equal(s1.positions, s0.positions)


def test_batch_single_run_equals_trace():
    cfg = small_config(horizon=10)
    res = batch(cfg, 1, base_seed=2)
    tr = run(cfg, 2)
    np.testing.assert_allclose(res.task_abs[0], tr.task_abs(0))


def test_batch_of_identical_runs():
    cfg = small_config(horizon=10, robots={"count": 3, "initial_positions": [[0.2, 0.2], [0.7, 0.3], [0.4, 0.8]]})
    one = batch(cfg, 1)
    two = batch(cfg, 2)
    np.testing.assert_allclose(one.task_abs, two.task_abs)


def test_batch_rejects_zero_runs():
    with pytest.raises(ValueError):
        batch(small_config(), 0)


def test_energy_invariant_without_resilience():
    cfg = parse_config(bundled_scenario()).replace(resilience_enabled=False, failures=FailureSchedule())
    trace = run(cfg, 1)
    assert check_energy(trace, cfg.energy.params.e_min) == []


def test_coverage_only_converges():
    cfg = small_config(tasks=[{"kind": "coverage"}], horizon=300, robots={"count": 4, "seed": 3},
                       gains={"kappa": 1e6})
    trace, state = run(cfg, keep_final=True)
    from resilient_cdc.geometry import voronoi_centroids

    c = voronoi_centroids(state.positions, cfg.domain)
    assert np.sum((state.positions - c) ** 2) < 1e-3
