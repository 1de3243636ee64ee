"""Command-line front end: seeded runs, ablation grids, CSV reports.

Two subcommands. `run` executes one or more seeded missions on a
scenario and writes metrics.csv, trajectory.csv, map.snapshot,
trajectory.svg, and routes.log. `ablation` runs the four-cell toggle
grid (visibility clustering x route memory) over a seed list and writes
ablation.csv with per-cell averages.

Exit codes: 0 success, 2 input/parse error, 3 stall (with dump file).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import SimConfig, load_config
from .errors import ScenarioError, SearchSimError, StallError
from .globalplan import route_log_line
from .grid import save_snapshot
from .data import config_path, scenario_path
from .scenario import build_world, load_scenario
from .sim import run, run_ablation
from .svgplot import render_svg

__all__ = ["main", "cmd_run", "cmd_ablation"]

_METRIC_COLS = ("seed", "path_length_m", "model_time_s", "completeness",
                "targets_found", "replan_count", "route_inversions",
                "evals_total", "completed")


def _metric_row(seed, m):
    return (seed, m.path_length, m.model_time, m.completeness,
            len(m.targets_found), m.replan_count, m.route_inversion_count,
            sum(c.evals_total for c in m.cycles), int(m.completed))


def _fmt_cell(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_cell(v) for v in row) + "\n")


def _write_trajectory(path, trajectory):
    with open(path, "w") as fh:
        fh.write("t,x,y,z,yaw\n")
        for row in trajectory:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _seed_list(args):
    if getattr(args, "seeds", None):
        try:
            seeds = [int(s) for s in args.seeds.split(",") if s.strip() != ""]
        except ValueError:
            raise ScenarioError(f"bad --seeds list {args.seeds!r}")
        if not seeds:
            raise ScenarioError("--seeds produced an empty list")
        return seeds
    return [args.seed + k for k in range(args.runs)]


def cmd_run(args):
    sc = load_scenario(scenario_path(args.scenario))
    world = build_world(sc)
    cfg = load_config(config_path(args.config)) if args.config else SimConfig()
    if args.budget is not None:
        cfg.budget = args.budget
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = _seed_list(args)
    rows = []
    route_lines = []
    first_artifacts = None
    for run_idx, seed in enumerate(seeds):
        cfg.seed = seed
        lines = []
        hooks = {"on_route": lambda cyc, route: lines.append(
            route_log_line(cyc, route))}
        metrics, trajectory, grid = run(world, cfg, vc=args.vc,
                                        hagp=args.hagp, hooks=hooks)
        rows.append(_metric_row(seed, metrics))
        if run_idx == 0:
            first_artifacts = (metrics, trajectory, grid)
            route_lines = lines
        with open(out / "latency.txt", "a" if run_idx else "w") as fh:
            fh.write(f"seed={seed} mean_ms={metrics.latency_mean_ms:.3f} "
                     f"max_ms={metrics.latency_max_ms:.3f}\n")
    if len(rows) > 1:
        data = np.array([r[1:4] for r in rows], dtype=np.float64)
        rows.append(("mean", *[float(v) for v in data.mean(axis=0)],
                     "", "", "", "", ""))
        rows.append(("std", *[float(v) for v in data.std(axis=0)],
                     "", "", "", "", ""))
    _write_csv(out / "metrics.csv", _METRIC_COLS, rows)
    metrics, trajectory, grid = first_artifacts
    _write_trajectory(out / "trajectory.csv", trajectory)
    save_snapshot(grid, out / "map.snapshot")
    found = {idx for idx, _ in metrics.targets_found}
    (out / "trajectory.svg").write_text(render_svg(sc, trajectory, found))
    (out / "routes.log").write_text("\n".join(route_lines) + "\n"
                                    if route_lines else "")
    return 0


_CELLS = (("vc_off_hagp_off", False, False),
          ("vc_off_hagp_on", False, True),
          ("vc_on_hagp_off", True, False),
          ("vc_on_hagp_on", True, True))


def cmd_ablation(args):
    sc = load_scenario(scenario_path(args.scenario))
    world = build_world(sc)
    cfg = load_config(config_path(args.config)) if args.config else SimConfig()
    if args.budget is not None:
        cfg.budget = args.budget
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = _seed_list(args)
    header = ("cell", "vc", "hagp", "runs", "time_mean_s", "time_std_s",
              "length_mean_m", "length_std_m", "completeness_min",
              "inversions_mean", "evals_mean")
    rows = []
    per_run = []
    for name, vc, hagp in _CELLS:
        times, lengths, comps, invs, evals = [], [], [], [], []
        for seed in seeds:
            cfg.seed = seed
            m = run_ablation(world, cfg, {"vc": vc, "hagp": hagp})
            times.append(m.model_time)
            lengths.append(m.path_length)
            comps.append(m.completeness)
            invs.append(m.route_inversion_count)
            evals.append(sum(c.evals_total for c in m.cycles))
            per_run.append((name, seed, m.path_length, m.model_time,
                            m.completeness, m.route_inversion_count))
        rows.append((name, int(vc), int(hagp), len(seeds),
                     float(np.mean(times)), float(np.std(times)),
                     float(np.mean(lengths)), float(np.std(lengths)),
                     float(np.min(comps)), float(np.mean(invs)),
                     float(np.mean(evals))))
    _write_csv(out / "ablation.csv", header, rows)
    _write_csv(out / "ablation_runs.csv",
               ("cell", "seed", "path_length_m", "model_time_s",
                "completeness", "route_inversions"), per_run)
    return 0


def _build_parser():
    p = argparse.ArgumentParser(
        prog="searchsim",
        description="Deterministic target-search simulation and planning")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--scenario", required=True,
                        help="bundled scenario name or file path")
        sp.add_argument("--config", default=None,
                        help="bundled config name or file path")
        sp.add_argument("--out", required=True)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--runs", type=int, default=1)
        sp.add_argument("--seeds", type=str, default=None,
                        help="comma-separated seed list (overrides --seed/--runs)")
        sp.add_argument("--budget", type=float, default=None)

    rp = sub.add_parser("run", help="seeded mission runs")
    common(rp)
    rp.add_argument("--toggle-vc", dest="vc", action="store_false",
                    help="disable viewpoint clustering")
    rp.add_argument("--toggle-hagp", dest="hagp", action="store_false",
                    help="disable route memory")
    ap = sub.add_parser("ablation", help="4-cell toggle grid over seeds")
    common(ap)
    return p


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_ablation(args)
    except StallError as e:
        out = Path(getattr(args, "out", "."))
        out.mkdir(parents=True, exist_ok=True)
        dump_path = out / "stall_dump.txt"
        with open(dump_path, "w") as fh:
            fh.write(f"{e}\n")
            for k, v in (e.dump or {}).items():
                fh.write(f"{k}={v}\n")
        print(f"stall: {e} (dump: {dump_path})", file=sys.stderr)
        return 3
    except (ScenarioError, SearchSimError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
