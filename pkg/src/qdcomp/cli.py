"""Command line interface: run, sweep, compare, list-tasks.

Exit codes: 0 on success, 1 on runtime failure, 2 on usage or config
errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiment import (
    ALGORITHMS,
    ConfigError,
    ExperimentConfig,
    MAZE_MODES,
    SWEEPABLE,
    TASKS,
    apply_overrides,
    compare_runs,
    load_config,
    run_to_dir,
    sweep,
    write_comparisons,
)

_FLAG_KEYS = {
    "task": "task.name",
    "algo": "algo.name",
    "k": "algo.k",
    "l": "algo.l",
    "knov": "algo.k_nov",
    "cells": "algo.cells",
    "pop_size": "run.population_size",
    "batch_size": "run.batch_size",
    "generations": "run.generations",
    "seed": "run.seed",
}


def _add_config_flags(parser):
    parser.add_argument("--config", help="config file of 'section.key = value' lines")
    parser.add_argument("--task", help=f"task name ({', '.join(TASKS)})")
    parser.add_argument("--algo", help=f"algorithm ({', '.join(ALGORITHMS)})")
    parser.add_argument("--k", type=int, help="nearest fitter neighbours for dns")
    parser.add_argument("--l", type=float, help="distance threshold for threshold_elites")
    parser.add_argument("--knov", type=int, help="novelty neighbourhood size")
    parser.add_argument("--cells", type=int, help="grid cells / cluster centroids")
    parser.add_argument("--pop-size", dest="pop_size", type=int, help="population size")
    parser.add_argument("--batch-size", dest="batch_size", type=int, help="offspring per generation")
    parser.add_argument("--generations", type=int, help="number of generations")
    parser.add_argument("--seed", type=int, help="run seed")
    parser.add_argument(
        "--set",
        dest="extra",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key, e.g. --set task.n_samples=10",
    )


def _resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        cfg = load_config(args.config, base=cfg)
    overrides = {}
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    for item in args.extra:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    return apply_overrides(cfg, overrides)


def _parse_groups(specs) -> dict:
    groups = {}
    for spec in specs:
        if "=" not in spec:
            raise ConfigError(f"group spec must be LABEL=dir,dir,... got {spec!r}")
        label, _, raw = spec.partition("=")
        label = label.strip()
        dirs = [d.strip() for d in raw.split(",") if d.strip()]
        if label in groups:
            raise ConfigError(f"duplicate group label {label!r}")
        groups[label] = dirs
    return groups


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdcomp",
        description="Quality-diversity search with pluggable local competition",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment")
    _add_config_flags(p_run)
    p_run.add_argument("--out", default="runs", help="output root directory")

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep over seeds")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--out", default="runs", help="output root directory")
    p_sweep.add_argument(
        "--param", required=True, help=f"parameter to sweep ({', '.join(SWEEPABLE)})"
    )
    p_sweep.add_argument(
        "--values", required=True, help="comma-separated parameter values"
    )
    p_sweep.add_argument(
        "--seeds", default="0,1,2", help="comma-separated run seeds"
    )

    p_cmp = sub.add_parser("compare", help="statistical comparison across run groups")
    p_cmp.add_argument("groups", nargs="+", metavar="LABEL=DIR,DIR,...")
    p_cmp.add_argument("--metric", default="qd_score", help="metrics.csv column")
    p_cmp.add_argument("--alpha", type=float, default=0.05)
    p_cmp.add_argument("--out", default=".", help="where to write comparisons.csv")

    sub.add_parser("list-tasks", help="list available tasks")
    return parser


def _cmd_run(args) -> int:
    cfg = _resolve_config(args)
    run_dir = run_to_dir(cfg, args.out)
    print(f"run directory: {run_dir}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    rows, best = sweep(cfg, args.param, values, seeds, args.out)
    short = args.param.split(".", 1)[1]
    print(f"{short:>12}  {'median qd_score':>18}  {'median coverage':>16}")
    for value, med_qd, med_cov in rows:
        print(f"{value!s:>12}  {med_qd:>18.6g}  {med_cov:>16.6g}")
    print(f"best {args.param} by median qd_score: {best}")
    return 0


def _cmd_compare(args) -> int:
    groups = _parse_groups(args.groups)
    results = compare_runs(groups, metric=args.metric, alpha=args.alpha)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_comparisons(results, out / "comparisons.csv")
    width = max(len(r.label) for r in results)
    for res in results:
        verdict = "significant" if res.significant else "not significant"
        print(
            f"{res.label:<{width}}  U={res.u_statistic:<8g} "
            f"p={res.p_value:<12.6g} {verdict}"
        )
    print(f"wrote {out / 'comparisons.csv'}")
    return 0


def _cmd_list_tasks(args) -> int:
    print("arm        planar arm; descriptor = tip position in [0,1]^2")
    print("rastrigin  negated rastrigin; descriptor = first two genes")
    print("maze       point robot with walls; descriptor modes:")
    for mode in MAZE_MODES:
        print(f"           - {mode}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "compare": _cmd_compare,
    "list-tasks": _cmd_list_tasks,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
