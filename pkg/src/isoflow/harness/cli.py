"""Command-line interface.

Subcommands: run (execute an experiment config), constants (print the
deterministic constants for a kernel), report (render a result directory),
simulate (write raw trajectories), arratia-compare (smooth flow vs the
coalescing reference).  Exit status: 0 success / all claims pass, 1 a
claim failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import gzip
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import moments
from ..constants import moment_constants
from ..kernel import build_profile, load_profile_csv, make_bump_kernel
from ..flow.npoint import simulate_npoint_ensemble
from .config import ConfigError, load_config
from .report import render_report
from .runner import Heartbeat, load_report, run_experiment


def _set_workers(workers):
    if workers is None:
        return
    try:
        import numba

        numba.set_num_threads(max(1, min(int(workers), numba.config.NUMBA_NUM_THREADS)))
    except ImportError:
        pass


def _cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config = replace(config, ensemble=replace(config.ensemble, base_seed=args.seed))
    _set_workers(args.workers)
    try:
        report = run_experiment(config, output=args.output, progress=Heartbeat())
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(render_report(report))
    failed = [rec["claim_id"] for rec in report["claims"] if not rec["pass"]]
    if failed:
        print(f"failed claims: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def _cmd_constants(args) -> int:
    try:
        if args.table is not None:
            profile = load_profile_csv(args.table)
            kernel = None
        else:
            kernel = make_bump_kernel(args.epsilon)
            profile = build_profile(kernel)
        constants = moment_constants(profile, kernel, gamma=args.gamma)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(constants.to_json())
    return 0


def _cmd_report(args) -> int:
    path = Path(args.results) / "report.json"
    try:
        report = load_report(path)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(render_report(report))
    return 0


def _cmd_simulate(args) -> int:
    try:
        config = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config = replace(config, ensemble=replace(config.ensemble, base_seed=args.seed))
    _set_workers(args.workers)
    if config.kernel.type == "bump":
        profile = build_profile(make_bump_kernel(config.kernel.epsilon))
    else:
        profile = load_profile_csv(config.kernel.table_path)
    rec = config.dynamics.record_times or [config.dynamics.t_max]
    ens = simulate_npoint_ensemble(
        profile, sorted(config.particles), config.dynamics.t_max,
        config.dynamics.dt, config.ensemble.replications,
        config.ensemble.base_seed, rec,
        antithetic=config.ensemble.antithetic, progress=Heartbeat(),
    )
    out_dir = Path(args.output if args.output is not None else config.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = "trajectories.csv" + (".gz" if args.gzip else "")
    path = out_dir / name
    opener = gzip.open if args.gzip else open
    with opener(path, "wt") as fh:
        fh.write("replication,time,particle_index,position\n")
        for j, t in enumerate(ens.times):
            for i in range(ens.n):
                col = ens.positions[:, i, j]
                for r in range(ens.replications):
                    fh.write(f"{r},{float(t)!r},{i},{float(col[r])!r}\n")
    print(f"wrote {path}", file=sys.stderr)
    return 0


def _cmd_arratia_compare(args) -> int:
    _set_workers(args.workers)
    try:
        comp = moments.arratia_agreement(
            args.epsilons, args.distance, args.time, args.delta,
            replications=args.replications, base_seed=args.seed,
            progress=Heartbeat(),
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"reference meeting probability (closed form): {comp.oracle:.6f}")
    print(f"{'epsilon':>8}  {'P(|xi|<delta)':>14}  {'stderr':>9}  "
          f"{'ref P(met)':>10}  {'KS(marginal)':>12}  {'KS p':>8}")
    for r in comp.rows:
        print(f"{r.epsilon:8.3f}  {r.p_small_gap.value:14.5f}  "
              f"{r.p_small_gap.std_error:9.5f}  {r.p_coalesced.value:10.5f}  "
              f"{r.ks_marginal:12.5f}  {r.ks_pvalue:8.4f}")
    if args.output is not None:
        out_dir = Path(args.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        rec = {
            "schema_version": 1,
            "oracle": comp.oracle,
            "distance": comp.distance,
            "time": comp.time,
            "delta": comp.delta,
            "rows": [
                {
                    "epsilon": r.epsilon,
                    "p_small_gap": r.p_small_gap.value,
                    "std_error": r.p_small_gap.std_error,
                    "p_coalesced": r.p_coalesced.value,
                    "ks_marginal": r.ks_marginal,
                    "ks_pvalue": r.ks_pvalue,
                }
                for r in comp.rows
            ],
        }
        (out_dir / "arratia_compare.json").write_text(
            json.dumps(rec, sort_keys=True, indent=2) + "\n"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isoflow",
        description="Simulate an isotropic Brownian stochastic flow and "
                    "verify its moment asymptotics by Monte Carlo.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config base seed")
    p_run.add_argument("--workers", type=int, default=None)
    p_run.add_argument("--output", default=None,
                       help="override the config output directory")
    p_run.set_defaults(func=_cmd_run)

    p_const = sub.add_parser("constants", help="print flow constants as JSON")
    group = p_const.add_mutually_exclusive_group()
    group.add_argument("--epsilon", type=float, default=1.0)
    group.add_argument("--table", default=None, help="profile CSV path")
    p_const.add_argument("--gamma", type=float, default=float(np.sqrt(2.0)))
    p_const.set_defaults(func=_cmd_constants)

    p_rep = sub.add_parser("report", help="render a result directory")
    p_rep.add_argument("results")
    p_rep.set_defaults(func=_cmd_report)

    p_sim = sub.add_parser("simulate", help="write raw trajectories as CSV")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--workers", type=int, default=None)
    p_sim.add_argument("--output", default=None)
    p_sim.add_argument("--gzip", action="store_true")
    p_sim.set_defaults(func=_cmd_simulate)

    p_arr = sub.add_parser("arratia-compare",
                           help="compare small-kernel flows with the coalescing system")
    p_arr.add_argument("--epsilons", type=lambda s: [float(x) for x in s.split(",")],
                       default=[0.5, 0.2, 0.1, 0.05])
    p_arr.add_argument("--distance", type=float, default=0.5)
    p_arr.add_argument("--time", type=float, default=1.0)
    p_arr.add_argument("--delta", type=float, default=0.02)
    p_arr.add_argument("--replications", type=int, default=20_000)
    p_arr.add_argument("--seed", type=int, default=20260809)
    p_arr.add_argument("--workers", type=int, default=None)
    p_arr.add_argument("--output", default=None)
    p_arr.set_defaults(func=_cmd_arratia_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
