"""Discrete-time simulation: assemble -> solve -> failure mask -> integrate -> battery.

Each step records the state the QP was solved at, the applied inputs and
slacks, per-robot task CBF magnitudes, the resilience potential of the
active robots and the solver status.  Runs are fully determined by the
configuration and seed.
"""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
import numpy as np

from .config import ScenarioConfig
from .control import ClassKappa, CbfEvaluation, assemble_qp, single_integrator, task_constraint_row
from .energy import BatteryState, battery_step, energy_cbf, energy_constraint_row, energy_drift
from .errors import ConfigError
from .geometry import contains, project_to_polygon, voronoi_centroids
from .qp import solve
from .resilience import build_frame, resilience_cbf, resilience_constraint_rows
from .frames import modified_frame_potential
from .tasks import task_values

log = logging.getLogger(__name__)

__all__ = ["WorldState", "StepRecord", "RunTrace", "BatchResult", "init_scenario", "step", "run", "batch"]

_MODEL = single_integrator(2)


@dataclasses.dataclass(frozen=True)
class WorldState:
    time_step: int
    positions: np.ndarray
    batteries: tuple[BatteryState, ...]
    failed: np.ndarray
    rng_seed: int

    @property
    def energies(self) -> np.ndarray:
        return np.array([b.e for b in self.batteries])


@dataclasses.dataclass(frozen=True)
class StepRecord:
    step: int
    positions: np.ndarray
    energies: np.ndarray
    charging: np.ndarray
    failed: np.ndarray
    u: np.ndarray
    delta: np.ndarray
    h_abs: np.ndarray  # (M, N) per task and robot
    fp_r: float
    status: str


@dataclasses.dataclass
class RunTrace:
    task_names: tuple[str, ...]
    records: list[StepRecord] = dataclasses.field(default_factory=list)
    seed: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def task_abs(self, name_or_index) -> np.ndarray:
        """Ensemble aggregate ``sum_i |h_ij|`` per step."""
        j = name_or_index if isinstance(name_or_index, int) else self.task_names.index(name_or_index)
        return np.array([r.h_abs[j].sum() for r in self.records])

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energies for r in self.records]).reshape(len(self.records), -1)

    @property
    def fp_r(self) -> np.ndarray:
        return np.array([r.fp_r for r in self.records])

    @property
    def inputs(self) -> np.ndarray:
        return np.array([r.u for r in self.records])

    @property
    def positions(self) -> np.ndarray:
        return np.array([r.positions for r in self.records])

    @property
    def statuses(self) -> list[str]:
        return [r.status for r in self.records]


def _sample_positions(cfg: ScenarioConfig, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    lo, hi = cfg.domain.min(axis=0), cfg.domain.max(axis=0)
    pts: list[np.ndarray] = []
    for _ in range(100_000):
        if len(pts) == cfg.n_robots:
            break
        p = lo + (hi - lo) * rng.random(2)
        if not contains(cfg.domain, p, tol=0.0):
            continue
        if all(np.hypot(*(p - q)) >= cfg.min_separation for q in pts):
            pts.append(p)
    else:
        raise ConfigError("could not sample separated initial positions; lower robots.min_separation")
    return np.array(pts)


def init_scenario(cfg: ScenarioConfig, seed: int | None = None) -> WorldState:
    """Initial world: fixed or seeded-uniform positions, full (or configured) batteries."""
    seed = cfg.seed if seed is None else int(seed)
    if cfg.initial_positions is not None:
        pos = np.array(cfg.initial_positions, dtype=float)
    else:
        pos = _sample_positions(cfg, seed)
    p = cfg.energy.params
    energies = cfg.energy.initial_energy or (p.e_max,) * cfg.n_robots
    stations = cfg.energy.stations
    batteries = tuple(
        BatteryState(float(e), p.e_min, p.e_max, bool(stations and stations[i].contains(pos[i])))
        for i, e in enumerate(energies)
    )
    return WorldState(0, pos, batteries, np.zeros(cfg.n_robots, dtype=bool), seed)


def _separate(pos: np.ndarray, cfg: ScenarioConfig) -> None:
    """Push robots that landed on top of each other (typically in a domain corner) apart.

    Only needed when a coverage task builds a Voronoi partition.  The later
    robot moves toward the domain centroid until the pair is ``3 * fd_step``
    apart, so cells stay defined at every finite-difference probe.
    """
    if cfg.task_index("coverage") is None:
        return
    gap = 3.0 * cfg.fd_step
    center = cfg.domain.mean(axis=0)
    for _ in range(len(pos)):
        moved = False
        for i in range(len(pos)):
            for j in range(i + 1, len(pos)):
                if np.hypot(*(pos[i] - pos[j])) < gap:
                    d = center - pos[j]
                    norm = np.hypot(*d)
                    pos[j] = pos[j] + gap * (d / norm if norm > gap else np.array([1.0, 0.0]))
                    moved = True
        if not moved:
            return


def step(state: WorldState, cfg: ScenarioConfig) -> tuple[WorldState, StepRecord]:
    t = state.time_step
    n, m = cfg.n_robots, cfg.n_tasks
    failed = state.failed | cfg.failures.failed_at(t, n)
    active = [i for i in range(n) if not failed[i]]
    pos = state.positions
    gains = cfg.gains

    cov = cfg.task_index("coverage")
    centroids = voronoi_centroids(pos, cfg.tasks[cov].domain) if cov is not None else None
    values = [task_values(task, pos, centroids) for task in cfg.tasks]
    h_abs = np.abs(np.array([v[0] for v in values]))

    u = np.zeros((n, 2))
    delta = np.zeros((n, m + (1 if cfg.resilience_enabled else 0)))
    status = "idle"
    fp_r = float("nan")
    if active:
        if cfg.resilience_enabled:
            res_ev = resilience_cbf(pos, cfg.tasks, active, cfg.fd_step, cfg.regularization)
            fp_r = res_ev.fp_r_value
        else:
            frame = build_frame(pos, cfg.tasks, active, centroids)
            fp_r = modified_frame_potential(frame, eps=cfg.regularization)

        alpha = ClassKappa(gains.gamma_task)
        task_rows = []
        for j, (h, grad) in enumerate(values):
            evals = []
            for i in active:
                g = np.zeros((n, 2))
                g[i] = grad[i]
                evals.append(CbfEvaluation(float(h[i]), g, i, j))
            task_rows.append(task_constraint_row(evals, _MODEL, pos, alpha, j, cfg.tasks[j].name))

        energy_rows = []
        if cfg.energy.enabled:
            alpha_e = ClassKappa(gains.gamma_energy)
            for i in active:
                b = state.batteries[i]
                ev = energy_cbf(i, pos[i], b, cfg.energy.stations[i], cfg.energy.params.k_alpha)
                energy_rows.append(energy_constraint_row(i, ev, energy_drift(b, cfg.energy.params), alpha_e))

        res_rows = None
        if cfg.resilience_enabled:
            res_rows = resilience_constraint_rows(res_ev, ClassKappa(gains.gamma_resilience), m, active)

        problem, layout = assemble_qp(active, task_rows, energy_rows, res_rows, gains.kappa, gains.kappa_resilience)
        sol = solve(problem, cfg.solver)
        status = sol.status.value
        if sol.solved:
            ua, da = layout.split(sol.z_star)
            u[active] = ua
            delta[active] = da
        else:
            log.warning("step %d: QP %s (%s); freezing all robots", t, status, ", ".join(sol.conflict))
    u[failed] = 0.0

    new_pos = pos + cfg.dt * u
    for i in range(n):
        if not contains(cfg.domain, new_pos[i], tol=0.0):
            new_pos[i] = project_to_polygon(cfg.domain, new_pos[i])
    _separate(new_pos, cfg)

    batteries = state.batteries
    if cfg.energy.enabled:
        batteries = tuple(
            battery_step(b, u[i], cfg.energy.stations[i].contains(new_pos[i]), cfg.dt, cfg.energy.params)
            for i, b in enumerate(state.batteries)
        )

    record = StepRecord(
        step=t,
        positions=pos.copy(),
        energies=state.energies,
        charging=np.array([b.charging for b in state.batteries]),
        failed=failed.copy(),
        u=u,
        delta=delta,
        h_abs=h_abs,
        fp_r=fp_r,
        status=status,
    )
    return WorldState(t + 1, new_pos, batteries, failed, state.rng_seed), record


def run(cfg: ScenarioConfig, seed: int | None = None, *, keep_final: bool = False):
    """Simulate ``cfg.horizon`` steps.  With ``keep_final`` also return the last state."""
    state = init_scenario(cfg, seed)
    trace = RunTrace(tuple(t.name for t in cfg.tasks), seed=state.rng_seed)
    for k in range(cfg.horizon):
        try:
            state, rec = step(state, cfg)
        except Exception as exc:
            raise RuntimeError(f"step {k} failed: {exc}") from exc
        trace.records.append(rec)
    if keep_final:
        return trace, state
    return trace


@dataclasses.dataclass
class BatchResult:
    task_names: tuple[str, ...]
    task_abs: np.ndarray  # (M, T) mean over runs of sum_i |h_ij|
    energy: np.ndarray  # (T, N) mean over runs
    fp_r: np.ndarray  # (T,)
    n_runs: int
    seeds: tuple[int, ...]

    def task_mean(self, name: str) -> np.ndarray:
        return self.task_abs[self.task_names.index(name)]


def _run_metrics(args):
    cfg, seed = args
    trace = run(cfg, seed)
    t_abs = np.array([trace.task_abs(j) for j in range(cfg.n_tasks)]).reshape(cfg.n_tasks, len(trace))
    return t_abs, trace.energies.reshape(len(trace), cfg.n_robots), trace.fp_r


def batch(cfg: ScenarioConfig, n_runs: int, base_seed: int = 0, workers: int = 1) -> BatchResult:
    """Mean metrics over runs seeded ``base_seed .. base_seed + n_runs - 1``."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    seeds = tuple(range(base_seed, base_seed + n_runs))
    jobs = [(cfg, s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_metrics, jobs))
    else:
        results = []
        for k, job in enumerate(jobs):
            try:
                results.append(_run_metrics(job))
            except Exception as exc:
                raise RuntimeError(f"run {k} (seed {job[1]}) failed: {exc}") from exc
    t_abs = np.mean([r[0] for r in results], axis=0)
    energy = np.mean([r[1] for r in results], axis=0)
    fp = np.mean([r[2] for r in results], axis=0)
    return BatchResult(tuple(t.name for t in cfg.tasks), t_abs, energy, fp, n_runs, seeds)


def final_step_means(result: BatchResult) -> dict[str, float]:
    return {name: float(result.task_abs[j][-1]) if result.task_abs.shape[1] else float("nan")
            for j, name in enumerate(result.task_names)}


def check_energy(trace: RunTrace, e_min: float, tol: float = 1e-6) -> list[tuple[int, int, float]]:
    """``(step, robot, energy)`` for every non-failed robot below ``e_min - tol``."""
    out = []
    for r in trace.records:
        for i, e in enumerate(r.energies):
            if not r.failed[i] and e < e_min - tol:
                out.append((r.step, i, float(e)))
    return out


def summarize(trace: RunTrace) -> dict:
    last = trace.records[-1] if trace.records else None
    return {
        "steps": len(trace),
        "seed": trace.seed,
        "final_task_abs": {n: float(trace.task_abs(j)[-1]) for j, n in enumerate(trace.task_names)} if last else {},
        "final_fp_r": float(last.fp_r) if last else None,
        "min_energy": float(trace.energies.min()) if last else None,
        "qp_status_counts": {s: trace.statuses.count(s) for s in sorted(set(trace.statuses))},
    }

