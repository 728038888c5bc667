"""Scenario configuration: JSON files validated against ``config_schema.json``.

Robot ids in files (failures, formation edges) are 1-based, as in the
experiment description ("robot 6 fails at iteration 180").  Everything in
memory is 0-based.
"""

from __future__ import annotations

import dataclasses
import json
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .energy import ChargingStation, EnergyParams
from .errors import ConfigError, GeometryError
from .geometry import MIN_SEPARATION, contains, validate_convex_polygon
from .qp import QpSettings
from .tasks import TaskSpec, hexagon_edges

__all__ = [
    "Gains",
    "EnergyConfig",
    "FailureSchedule",
    "ScenarioConfig",
    "load_schema",
    "parse_config",
    "config_from_dict",
    "config_to_dict",
    "bundled_scenario",
]


@dataclasses.dataclass(frozen=True)
class Gains:
    gamma_task: float = 1.0
    gamma_energy: float = 1.0
    gamma_resilience: float = 0.5
    kappa: float = 1e4
    kappa_r: float | None = None

    @property
    def kappa_resilience(self) -> float:
        return self.kappa / 10.0 if self.kappa_r is None else self.kappa_r


@dataclasses.dataclass(frozen=True)
class EnergyConfig:
    enabled: bool = False
    params: EnergyParams = EnergyParams()
    stations: tuple[ChargingStation, ...] = ()
    initial_energy: tuple[float, ...] | None = None


@dataclasses.dataclass(frozen=True)
class FailureSchedule:
    """``(robot, iteration)`` pairs, 0-based robot index; the input is zero from that step on."""

    events: tuple[tuple[int, int], ...] = ()

    def failed_at(self, step: int, n_robots: int) -> np.ndarray:
        mask = np.zeros(n_robots, dtype=bool)
        for robot, it in self.events:
            if it <= step:
                mask[robot] = True
        return mask


@dataclasses.dataclass(frozen=True)
class ScenarioConfig:
    n_robots: int
    domain: np.ndarray
    tasks: tuple[TaskSpec, ...]
    seed: int = 0
    initial_positions: np.ndarray | None = None
    min_separation: float = 0.05
    energy: EnergyConfig = EnergyConfig()
    gains: Gains = Gains()
    solver: QpSettings = QpSettings()
    resilience_enabled: bool = False
    eps_fd: float | None = None
    regularization: float = 1e-9
    failures: FailureSchedule = FailureSchedule()
    horizon: int = 360
    dt: float = 0.05
    name: str = ""

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def fd_step(self) -> float:
        """Finite-difference step for the resilience gradient (1e-4 of the domain diagonal by default)."""
        if self.eps_fd is not None:
            return self.eps_fd
        lo, hi = self.domain.min(axis=0), self.domain.max(axis=0)
        return 1e-4 * float(np.hypot(*(hi - lo)))

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)

    def task_index(self, kind: str) -> int | None:
        for j, t in enumerate(self.tasks):
            if t.kind == kind:
                return j
        return None


def load_schema() -> dict:
    text = resources.files("resilient_cdc").joinpath("config_schema.json").read_text()
    return json.loads(text)


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _schema_errors(data: dict) -> None:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [f"{_path(e.absolute_path)}: {e.message}" for e in errors]
        raise ConfigError("schema violation:\n  " + "\n  ".join(lines))


def _build_task(raw: dict, j: int, n: int, domain: np.ndarray) -> TaskSpec:
    kind = raw["kind"]
    where = f"$.tasks[{j}]"
    name = raw.get("name", "")
    try:
        if kind == "coverage":
            return TaskSpec("coverage", domain=domain, name=name)
        if kind == "consensus":
            return TaskSpec("consensus", name=name)
        if "edges" in raw:
            edges = tuple((int(i) - 1, int(k) - 1, float(d)) for i, k, d in raw["edges"])
        elif "hexagon_radius" in raw:
            if n != 6:
                raise ConfigError("hexagon formation needs exactly 6 robots", where)
            edges = hexagon_edges(float(raw["hexagon_radius"]))
        else:
            raise ConfigError("formation task needs 'edges' or 'hexagon_radius'", where)
        task = TaskSpec("formation", edges=edges, name=name)
        task.validate(n)
        return task
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), where) from exc


def config_from_dict(data: dict[str, Any]) -> ScenarioConfig:
    """Validate a decoded scenario document and build a :class:`ScenarioConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("top-level value must be an object")
    if isinstance(data.get("tasks"), list) and not data["tasks"]:
        raise ConfigError("at least one task", "$.tasks")
    _schema_errors(data)

    robots = data["robots"]
    n = robots["count"]
    try:
        domain = validate_convex_polygon(data["domain"])
    except GeometryError as exc:
        raise ConfigError(str(exc), "$.domain") from exc

    init = robots.get("initial_positions")
    if init is not None:
        init = np.asarray(init, dtype=float)
        if init.shape != (n, 2):
            raise ConfigError(f"expected {n} initial positions", "$.robots.initial_positions")
        for i, p in enumerate(init):
            if not contains(domain, p):
                raise ConfigError(f"position {p.tolist()} is outside the domain", f"$.robots.initial_positions[{i}]")
        d = np.hypot(*(init[:, None, :] - init[None, :, :]).transpose(2, 0, 1))
        d[np.diag_indices(n)] = np.inf
        if d.min() < MIN_SEPARATION:
            raise ConfigError("initial positions must be pairwise distinct", "$.robots.initial_positions")

    tasks = tuple(_build_task(t, j, n, domain) for j, t in enumerate(data["tasks"]))

    e = data.get("energy", {})
    try:
        params = EnergyParams(
            **{k: float(e[k]) for k in ("e_min", "e_max", "k_alpha", "k_s", "k_m", "k_c") if k in e}
        )
    except ValueError as exc:
        raise ConfigError(str(exc), "$.energy") from exc
    enabled = bool(e.get("enabled", False))
    stations = tuple(
        ChargingStation(p, float(e.get("station_radius", 0.1)), i) for i, p in enumerate(e.get("stations", []))
    )
    if enabled and len(stations) != n:
        raise ConfigError(f"need one charging station per robot ({n}), got {len(stations)}", "$.energy.stations")
    for a in range(len(stations)):
        for b in range(a + 1, len(stations)):
            gap = np.linalg.norm(stations[a].position - stations[b].position)
            if gap < stations[a].radius + stations[b].radius:
                raise ConfigError(f"stations {a + 1} and {b + 1} overlap", "$.energy.stations")
    init_e = e.get("initial_energy")
    if init_e is None:
        init_e_t = None
    elif isinstance(init_e, list):
        if len(init_e) != n:
            raise ConfigError(f"expected {n} initial energies", "$.energy.initial_energy")
        init_e_t = tuple(float(v) for v in init_e)
    else:
        init_e_t = (float(init_e),) * n
    if init_e_t is not None and max(init_e_t) > params.e_max:
        raise ConfigError("initial energy above e_max", "$.energy.initial_energy")
    energy = EnergyConfig(enabled, params, stations, init_e_t)

    g = data.get("gains", {})
    gains = Gains(**{k: float(v) for k, v in g.items()})
    solver = QpSettings(**data.get("solver", {}))
    res = data.get("resilience", {})

    events = []
    for k, f in enumerate(data.get("failures", [])):
        if f["robot"] > n:
            raise ConfigError(f"robot {f['robot']} does not exist (count {n})", f"$.failures[{k}].robot")
        events.append((f["robot"] - 1, f["iteration"]))

    return ScenarioConfig(
        n_robots=n,
        domain=domain,
        tasks=tasks,
        seed=int(robots.get("seed", 0)),
        initial_positions=init,
        min_separation=float(robots.get("min_separation", 0.05)),
        energy=energy,
        gains=gains,
        solver=solver,
        resilience_enabled=bool(res.get("enabled", False)),
        eps_fd=res.get("eps_fd"),
        regularization=float(res.get("regularization", 1e-9)),
        failures=FailureSchedule(tuple(events)),
        horizon=int(data.get("horizon", 360)),
        dt=float(data.get("dt", 0.05)),
        name=str(data.get("name", "")),
    )


def parse_config(path) -> ScenarioConfig:
    """Load and validate a scenario file.

    Raises :class:`FileNotFoundError` for a missing file and
    :class:`ConfigError` (with line/column or field path) otherwise.
    """
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(data)


def config_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    """Inverse of :func:`config_from_dict` (formation edges are written explicitly)."""
    tasks = []
    for t in cfg.tasks:
        entry: dict[str, Any] = {"kind": t.kind}
        if t.name != t.kind:
            entry["name"] = t.name
        if t.kind == "formation":
            entry["edges"] = [[i + 1, k + 1, d] for i, k, d in t.edges]
        tasks.append(entry)
    e = cfg.energy
    energy: dict[str, Any] = {
        "enabled": e.enabled,
        **dataclasses.asdict(e.params),
        "stations": [s.position.tolist() for s in e.stations],
    }
    if e.stations:
        energy["station_radius"] = e.stations[0].radius
    if e.initial_energy is not None:
        energy["initial_energy"] = list(e.initial_energy)
    gains = {k: v for k, v in dataclasses.asdict(cfg.gains).items() if v is not None}
    out = {
        "name": cfg.name,
        "robots": {
            "count": cfg.n_robots,
            "seed": cfg.seed,
            "initial_positions": None if cfg.initial_positions is None else cfg.initial_positions.tolist(),
            "min_separation": cfg.min_separation,
        },
        "domain": cfg.domain.tolist(),
        "tasks": tasks,
        "energy": energy,
        "gains": gains,
        "solver": dataclasses.asdict(cfg.solver),
        "resilience": {
            "enabled": cfg.resilience_enabled,
            "eps_fd": cfg.eps_fd,
            "regularization": cfg.regularization,
        },
        "failures": [{"robot": r + 1, "iteration": it} for r, it in cfg.failures.events],
        "horizon": cfg.horizon,
        "dt": cfg.dt,
    }
    return out


def bundled_scenario(name: str = "default_scenario") -> Path:
    """Path of a scenario file shipped with the package."""
    ref = resources.files("resilient_cdc").joinpath("scenarios").joinpath(f"{name}.json")
    path = Path(str(ref))
    if not path.exists():
        raise FileNotFoundError(f"no bundled scenario named {name!r}")
    return path
