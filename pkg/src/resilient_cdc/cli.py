"""Command line entry point: ``resilient-cdc {run,compare,snapshot,validate-config}``.

Exit codes: 0 success, 1 numerical failure, 2 I/O error, 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import FailureSchedule, ScenarioConfig, bundled_scenario, parse_config
from .errors import ConfigError
from .sim import BatchResult, RunTrace, batch, run, summarize
from .svg import line_chart, snapshot, to_string

log = logging.getLogger("resilient_cdc")

EXIT_OK, EXIT_NUMERIC, EXIT_IO, EXIT_CONFIG = 0, 1, 2, 3
TRACE_HEADER = ["step", "robot", "x", "y", "e", "u_x", "u_y", "failed", "h_cov_abs", "h_form_abs", "fp_r", "qp_status"]
DEFAULT_SNAPSHOTS = (1, 40, 80, 120, 240, 360)


class _IoFailure(Exception):
    pass


def _g(v: float) -> str:
    return format(float(v), ".9g")


def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise _IoFailure(f"cannot write {path}: {exc.strerror or exc}") from exc


def trace_csv(trace: RunTrace, cfg: ScenarioConfig) -> str:
    cov, form = cfg.task_index("coverage"), cfg.task_index("formation")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in trace.records:
        for i in range(cfg.n_robots):
            w.writerow([
                r.step,
                i + 1,
                _g(r.positions[i, 0]),
                _g(r.positions[i, 1]),
                _g(r.energies[i]),
                _g(r.u[i, 0]),
                _g(r.u[i, 1]),
                int(r.failed[i]),
                "" if cov is None else _g(r.h_abs[cov, i]),
                "" if form is None else _g(r.h_abs[form, i]),
                _g(r.fp_r),
                r.status,
            ])
    return buf.getvalue()


def _load(args) -> ScenarioConfig:
    path = Path(args.config) if args.config else bundled_scenario()
    cfg = parse_config(path)
    if getattr(args, "no_resilience", False):
        cfg = cfg.replace(resilience_enabled=False)
    return cfg


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get("OUT_DIR") or "out")


def cmd_run(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    trace = run(cfg, args.seed)
    write_atomic(out / "trace.csv", trace_csv(trace, cfg))
    summary = {"version": __version__, "config": str(args.config or "default_scenario"),
               "resilience": cfg.resilience_enabled, **summarize(trace)}
    write_atomic(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(trace)} steps to {out / 'trace.csv'}")
    return EXIT_OK


def _series(result: BatchResult) -> dict[str, np.ndarray]:
    out = {name: result.task_abs[j] for j, name in enumerate(result.task_names)}
    out["energy_mean"] = result.energy.mean(axis=1) if result.energy.size else np.zeros(0)
    out["fp_r"] = result.fp_r
    return out


def compare_csv(results: dict[str, BatchResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "series", "metric", "value"])
    for series, res in results.items():
        for metric, values in _series(res).items():
            for t, v in enumerate(values):
                w.writerow([t, series, metric, _g(v)])
    return buf.getvalue()


def cmd_compare(args) -> int:
    cfg = _load(args).replace(resilience_enabled=False)
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1")
    base_seed = cfg.seed if args.seed is None else args.seed
    out = _out_dir(args)
    variants = {
        "baseline": cfg.replace(failures=FailureSchedule()),
        "no_resilience": cfg,
        "resilience": cfg.replace(resilience_enabled=True),
    }
    results = {}
    for name, variant in variants.items():
        log.info("batch %s: %d runs", name, args.runs)
        results[name] = batch(variant, args.runs, base_seed, workers=args.workers)
    write_atomic(out / "compare.csv", compare_csv(results))

    task_panels = {
        f"mean |h| {task}": {s: results[s].task_abs[j] for s in results}
        for j, task in enumerate(results["baseline"].task_names)
    }
    write_atomic(out / "task_cbfs.svg", to_string(line_chart(task_panels, title=f"task CBFs, {args.runs} runs")))
    energy_panels = {
        f"mean energy robot {i + 1}": {s: results[s].energy[:, i] for s in results}
        for i in range(cfg.n_robots)
    }
    write_atomic(out / "energy.svg", to_string(line_chart(energy_panels, title=f"energy, {args.runs} runs")))

    ok = True
    for j, task in enumerate(results["baseline"].task_names):
        finals = {s: float(results[s].task_abs[j][-1]) if results[s].task_abs.shape[1] else float("nan") for s in results}
        print(f"final mean |h_{task}|: " + ", ".join(f"{s}={v:.6g}" for s, v in finals.items()))
        ok &= finals["resilience"] < finals["no_resilience"]
    print(f"{'PASS' if ok else 'FAIL'} final-step mean |h|: resilience < no_resilience for every task")
    return EXIT_OK


def _parse_iterations(text: str | None, horizon: int) -> list[int]:
    if text is None:
        its = [k for k in DEFAULT_SNAPSHOTS if k <= horizon]
    elif text.strip() == "":
        its = []
    else:
        try:
            its = [int(tok) for tok in text.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad iteration list {text!r}") from exc
    for k in its:
        if not 1 <= k <= horizon:
            raise ConfigError(f"iteration {k} outside 1..{horizon}")
    return its


def cmd_snapshot(args) -> int:
    cfg = _load(args)
    its = _parse_iterations(args.iterations, cfg.horizon)
    if not its:
        return EXIT_OK
    out = _out_dir(args)
    trace = run(cfg.replace(horizon=max(its)), args.seed)
    form = cfg.task_index("formation")
    edges = [(i, k) for i, k, _ in cfg.tasks[form].edges] if form is not None else []
    stations = [(s.position, s.radius) for s in cfg.energy.stations]
    for k in its:
        rec = trace.records[k - 1]
        u = rec.u
        headings = np.arctan2(u[:, 1], u[:, 0])
        root = snapshot(rec.positions, cfg.domain, failed=rec.failed, stations=stations,
                        formation_edges=edges, headings=headings, title=f"iteration {k}")
        write_atomic(out / f"snapshot_{k:04d}.svg", to_string(root))
    print(f"wrote {len(its)} snapshots to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args)
    print(f"ok: {cfg.n_robots} robots, {cfg.n_tasks} tasks, horizon {cfg.horizon}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resilient-cdc", description="Resilient multi-robot task coordination experiments.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", help="scenario JSON (default: bundled default_scenario)")
        if out:
            sp.add_argument("--out", help="output directory (default: $OUT_DIR or ./out)")
        sp.add_argument("--seed", type=int, default=None, help="seed (default: the config's robots.seed)")
        sp.add_argument("--no-resilience", action="store_true", help="disable the resilience constraint")

    sp = sub.add_parser("run", help="simulate one run, write trace.csv and summary.json")
    common(sp)
    sp.set_defaults(func=cmd_run)
    sp = sub.add_parser("compare", help="baseline / no_resilience / resilience batches")
    common(sp)
    sp.add_argument("--runs", type=int, default=20)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_compare)
    sp = sub.add_parser("snapshot", help="SVG snapshots at chosen iterations")
    common(sp)
    sp.add_argument("--iterations", default=None, help="comma separated, 1-based (default: 1,40,80,120,240,360)")
    sp.set_defaults(func=cmd_snapshot)
    sp = sub.add_parser("validate-config", help="check a scenario file")
    common(sp, out=False)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _IoFailure as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RuntimeError, ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
