"""Command-line entry points.

Exit codes: 0 success, 2 validation error, 3 work-budget refusal.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .checks import CAMPAIGNS
from .complexity import complexity_report
from .constructions import (atom_scenario, heavy_tail_scenario,
                            run_counterexample_trials, variance_scenario)
from .harness import (BudgetError, ConfigValidationError, _atomic_write,
                      _csv_text, build_direction_set, run_experiment,
                      scaling_sweep, validate_config)
from .models import ConfigurationError, VectorModel


def _load_config(path: str):
    with open(path) as fh:
        return validate_config(fh.read())


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    run_experiment(cfg, force=args.force)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    scaling_sweep(cfg, force=args.force)
    return 0


def _cmd_complexity(args) -> int:
    model = VectorModel(kind="gaussian", d=args.d)
    dirs, _label = build_direction_set(args.set, model, args.seed)
    rep = complexity_report(dirs)
    text = json.dumps(rep.as_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_counterexample(args) -> int:
    case = args.case.replace("-", "_")
    if case == "atom":
        scn = atom_scenario(args.m)
    elif case == "heavy_tail":
        scn = heavy_tail_scenario(args.m)
    elif case == "variance":
        scn = variance_scenario(args.m, d=args.d)
    else:
        raise ConfigurationError(f"unknown case {args.case!r}")
    sups, arg = run_counterexample_trials(scn, args.trials, args.seed)
    spike_axis = scn.dirs.sparse_k[arg]  # spike coordinate of the argmax
    csv_text = _csv_text(
        ["trial", "sup_pointwise_deviation", "predicted_floor", "argmax_k"],
        [[i, float(sups[i]), float(scn.predicted_floor), int(spike_axis[i])]
         for i in range(args.trials)])
    sidecar = json.dumps({"case": scn.case, "m": scn.m,
                          "t_probe": scn.t_probe,
                          "predicted_floor": scn.predicted_floor,
                          "params": scn.params}, indent=2, sort_keys=True) + "\n"
    if args.out:
        _atomic_write(args.out + ".trials.csv", csv_text)
        _atomic_write(args.out + ".params.json", sidecar)
    else:
        sys.stdout.write(csv_text)
        sys.stdout.write(sidecar)
    return 0


def _cmd_estimate(args) -> int:
    cfg_dict = {
        "experiment": "estimate",
        "model": {"kind": "gaussian", "d": args.d},
        "set": args.set,
        "m": args.m,
        "delta": [args.delta],
        "trials": 1,
        "base_seed": args.seed,
        "phis": args.phi,
        "output": args.out,
    }
    cfg = validate_config(json.dumps(cfg_dict))
    run_experiment(cfg, force=args.force)
    return 0


def _cmd_check(args) -> int:
    if args.campaign not in CAMPAIGNS:
        raise ConfigValidationError(
            [f"unknown campaign {args.campaign!r}; "
             f"choose from {sorted(CAMPAIGNS)}"])
    checks = CAMPAIGNS[args.campaign](args.seed)
    text = _csv_text(
        ["name", "lhs", "rhs", "holds", "slack", "context"],
        [[c.name, c.lhs, c.rhs, int(c.holds), c.slack,
          json.dumps(c.context, sort_keys=True)] for c in checks])
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dkw",
                                description="uniform empirical-CDF deviation "
                                            "simulation laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a configured experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--force", action="store_true")
    s.set_defaults(fn=_cmd_simulate)

    s = sub.add_parser("sweep", help="run a scaling sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--force", action="store_true")
    s.set_defaults(fn=_cmd_sweep)

    s = sub.add_parser("complexity", help="metric complexity of a set")
    s.add_argument("--set", required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(fn=_cmd_complexity)

    s = sub.add_parser("counterexample", help="run a counterexample scenario")
    s.add_argument("--case", required=True,
                   choices=["atom", "heavy-tail", "variance"])
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--d", type=int, default=None,
                   help="dimension override (variance case)")
    s.add_argument("--out")
    s.set_defaults(fn=_cmd_counterexample)

    s = sub.add_parser("estimate", help="quantile-integral estimates")
    s.add_argument("--phi", action="append", required=True,
                   help="identity | signed-square | relu-square | indicator:<tau>")
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--set", default="sphere_random:16,8")
    s.add_argument("--d", type=int, default=8)
    s.add_argument("--m", type=int, default=4096)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--force", action="store_true")
    s.add_argument("--out")
    s.set_defaults(fn=_cmd_estimate)

    s = sub.add_parser("check", help="run an inequality-check campaign")
    s.add_argument("--campaign", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(fn=_cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigValidationError, ConfigurationError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except BudgetError as exc:
        sys.stderr.write(f"refused: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
