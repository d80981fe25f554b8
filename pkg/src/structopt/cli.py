"""Command-line front-end.

Subcommands map to the verification surfaces:

* ``derive-check``: validate every derivative rule against central
  finite differences and print per-rule maxima.
* ``solve``: run the selected solvers once on a scenario drawn from a
  config file; writes a JSON document with objective trajectories.
* ``sweep``: Monte-Carlo SNR sweep, CSV or JSON output.
* ``bench``: AO-vs-BCD runtime benchmark on passive-IRS capacity.
* ``selftest``: run the acceptance suite, one PASS/FAIL line each.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import acceptance, channel_sim
from .channel_sim import ExperimentConfig


def _load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
    else:
        cfg = ExperimentConfig()
    if args.seed is not None:
        cfg.master_seed = args.seed
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "format", None):
        cfg.format = args.format
    return cfg


def cmd_derive_check(args) -> int:
    res = acceptance.criterion_gradient_rules(trials=args.trials)
    print(f"[{'PASS' if res.passed else 'FAIL'}] {res.name}: {res.detail}")
    return 0 if res.passed else 1


def cmd_solve(args) -> int:
    cfg = _load_config(args)
    scenario, extra = channel_sim.build_scenario(cfg, args.snr_index, args.trial)
    results = []
    for solver in cfg.solvers:
        rep = channel_sim._run_solver(cfg, solver, scenario, args.trial)
        results.append({
            "solver": solver,
            "objective": rep.objective,
            "iterations": rep.iterations,
            "converged": rep.converged,
            "trajectory": [float(x) for x in rep.trajectory],
            "flags": rep.flags,
            "seed": cfg.master_seed,
        })
        print(f"{solver}: objective={rep.objective:.9g} "
              f"iterations={rep.iterations} converged={rep.converged}")
    doc = {"version": channel_sim.RESULT_SCHEMA_VERSION,
           "config": cfg.to_dict(), "noise": extra, "results": results}
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True,
                      default=channel_sim._json_default)
            fh.write("\n")
        print(f"wrote {cfg.out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    res = channel_sim.run_sweep(cfg)
    if cfg.out:
        channel_sim.write_results(res, cfg.out, cfg.format)
        print(f"wrote {cfg.out} ({len(res.rows)} rows)")
    else:
        sys.stdout.write(channel_sim.render_csv(res))
    return 0


def cmd_bench(args) -> int:
    cfg = _load_config(args)
    if not args.config:
        cfg.n_r = 8  # receiver size of the runtime comparison
    cfg.scenario = "irs-capacity"
    n_t_list = [int(x) for x in args.n_t.split(",")]
    res = channel_sim.bench_runtime(cfg, n_t_list, snr_db=args.snr_db,
                                    repeats=args.repeats)
    if cfg.out:
        channel_sim.write_results(res, cfg.out, cfg.format)
        print(f"wrote {cfg.out}")
    else:
        sys.stdout.write(channel_sim.render_csv(res))
    return 0


def cmd_selftest(args) -> int:
    names = set(args.only.split(",")) if args.only else None
    results = acceptance.run_all(names=names)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 0 if not failed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="structopt",
        description="Solvers for matrix-variate wireless designs under "
                    "diagonal and constant-modulus structure constraints.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--out", help="output path")
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("--seed", type=int, default=None,
                        help="override the master seed")

    p = sub.add_parser("derive-check", parents=[common],
                       help="validate all derivative rules against FD")
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(fn=cmd_derive_check)

    p = sub.add_parser("solve", parents=[common],
                       help="solve one scenario from the config")
    p.add_argument("--snr-index", type=int, default=0)
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("sweep", parents=[common],
                       help="Monte-Carlo sweep over the SNR grid")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("bench", parents=[common],
                       help="AO vs BCD runtime benchmark (passive IRS)")
    p.add_argument("--n-t", default="8,30", help="comma-separated n_t list")
    p.add_argument("--snr-db", type=float, default=-5.0)
    p.add_argument("--repeats", type=int, default=5)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("selftest", parents=[common],
                       help="run the acceptance suite")
    p.add_argument("--only", help="comma-separated criterion names")
    p.set_defaults(fn=cmd_selftest)

    args = parser.parse_args(argv)
    np.set_printoptions(precision=6, suppress=False)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
