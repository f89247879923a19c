"""Command-line front end: ``postdiff {run,sweep,phi-curve,power-table,reproduce}``."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .analysis import required_sample_size
from .harness import (
    DEFAULT_SEED,
    DEFAULT_SIMS,
    ExperimentConfig,
    load_config,
    load_grid,
    phi_curve,
    run_experiment,
    sweep,
)
from .policies import Branch, ConfigError, PolicyKind
from .report import ReportRow, emit_records, emit_table
from .tables import TABLES, table_grid

EXIT_OK = 0
EXIT_INVALID = 2


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_output(p: argparse.ArgumentParser):
    p.add_argument("--out", type=Path, help="write to this file instead of stdout")
    p.add_argument("--format", choices=("csv", "md", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1, help="threads for simulation chunks")


def _add_experiment(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON experiment config; flags below override it")
    p.add_argument("--policy", choices=[k.value for k in PolicyKind])
    p.add_argument("--c", type=float, help="TS PostDiff threshold")
    p.add_argument("--beta", type=float, help="Top-Two TS probability of playing the leader")
    p.add_argument("--epsilon", type=float, help="mixture weight of uniform allocation")
    p.add_argument("--p-max", type=float, help="probability clipping ceiling")
    p.add_argument("--schedule", choices=("inverse_sqrt", "inverse", "exponential"),
                   help="epsilon(t) schedule for the declining mixtures")
    p.add_argument("--schedule-scale", type=float)
    p.add_argument("--schedule-rate", type=float)
    p.add_argument("--mc-samples", type=int, help="posterior pairs per phi estimate")
    p.add_argument("--effect-size", type=float)
    p.add_argument("--n", type=int, help="participants per simulation")
    p.add_argument("--sims", type=int, help=f"simulations (default {DEFAULT_SIMS})")
    p.add_argument("--seed", type=int, help=f"base seed (default {DEFAULT_SEED})")
    p.add_argument("--alpha", type=float, help="significance level (default 0.05)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="postdiff",
        description="Two-arm adaptive experiment simulator (TS, Top-Two TS, TS PostDiff, ...).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment configuration")
    _add_experiment(p)
    _add_output(p)
    p.add_argument("--trace", action="store_true",
                   help="also write per-step traces to <out>.trace.csv (needs --out)")

    p = sub.add_parser("sweep", help="run every experiment in a JSON grid file")
    p.add_argument("grid", type=Path)
    _add_output(p)

    p = sub.add_parser("phi-curve", help="mean phi-hat across simulations at checkpoints")
    _add_experiment(p)
    p.add_argument("--checkpoints", type=_ints, help="comma-separated steps")
    p.add_argument("--every", type=int, default=25, help="checkpoint spacing when --checkpoints is absent")
    _add_output(p)

    p = sub.add_parser("power-table", help="UR sample sizes for 80%% power")
    p.add_argument("--effect-sizes", type=_floats, default=[0.1, 0.2])
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--power", type=float, default=0.8)
    _add_output(p)

    p = sub.add_parser("reproduce", help="run a built-in table grid")
    p.add_argument("table", choices=sorted(TABLES))
    p.add_argument("--sims", type=int, default=DEFAULT_SIMS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_output(p)
    return parser


def _config_from_args(args, **extra) -> ExperimentConfig:
    base = load_config(args.config).to_dict() if args.config else {}
    policy = dict(base.get("policy", {}))
    if args.policy is not None and args.policy != policy.get("kind"):
        policy = {"kind": args.policy}
    for flag, name in (("c", "c"), ("beta", "beta_top2"), ("epsilon", "epsilon"),
                       ("p_max", "p_max"), ("mc_samples", "mc_samples_phi")):
        if getattr(args, flag) is not None:
            policy[name] = getattr(args, flag)
    if args.schedule or args.schedule_scale is not None or args.schedule_rate is not None:
        sched = dict(policy.get("epsilon_schedule") or {})
        if args.schedule:
            sched["name"] = args.schedule
        if args.schedule_scale is not None:
            sched["scale"] = args.schedule_scale
        if args.schedule_rate is not None:
            sched["rate"] = args.schedule_rate
        policy["epsilon_schedule"] = sched
    if "kind" not in policy:
        raise ConfigError("policy: give --policy or a --config file")
    base["policy"] = policy
    for flag, name in (("effect_size", "effect_size"), ("n", "n"), ("sims", "n_sims"),
                       ("seed", "base_seed"), ("alpha", "alpha_level")):
        if getattr(args, flag) is not None:
            base[name] = getattr(args, flag)
    base.update(extra)
    return ExperimentConfig.from_dict(base)


def _write(args, text: str):
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)


def _write_traces(path: Path, results):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sim", "t", "arm", "reward", "branch"])
        for i, res in enumerate(results):
            tr = res.trace
            for t in range(len(tr.arms)):
                writer.writerow([i, t + 1, int(tr.arms[t]), int(tr.rewards[t]), Branch(int(tr.branches[t])).name])


def _cmd_run(args):
    if args.trace and not args.out:
        raise ConfigError("--trace needs --out (traces go to <out>.trace.csv)")
    config = _config_from_args(args)
    outcome = run_experiment(config, workers=args.workers, trace=args.trace)
    _write(args, emit_table([ReportRow.from_summary(config, outcome.summary)], args.format))
    if args.trace:
        _write_traces(args.out.with_suffix(args.out.suffix + ".trace.csv"), outcome.results)


def _cmd_sweep(args):
    grid = load_grid(args.grid)
    rows = [ReportRow.from_summary(r.config, r.summary) for r in sweep(grid, workers=args.workers)]
    _write(args, emit_table(rows, args.format))


def _cmd_phi_curve(args):
    n = args.n if args.n is not None else 785
    if args.checkpoints:
        checkpoints = args.checkpoints
    else:
        if args.every < 1:
            raise ConfigError("--every must be >= 1")
        checkpoints = sorted(set(range(args.every, n + 1, args.every)) | {1, n})
    config = _config_from_args(args, record_phi=True, phi_checkpoints=checkpoints)
    points = phi_curve(config, workers=args.workers)
    _write(args, emit_records(("t", "phi_hat"), points, args.format))


def _cmd_power_table(args):
    records = [(w, args.alpha, args.power, required_sample_size(w, args.alpha, args.power))
               for w in args.effect_sizes]
    _write(args, emit_records(("effect_size", "alpha", "power", "n"), records, args.format))


def _cmd_reproduce(args):
    grid = table_grid(args.table, n_sims=args.sims, seed=args.seed)
    rows = [ReportRow.from_summary(r.config, r.summary) for r in sweep(grid, workers=args.workers)]
    _write(args, emit_table(rows, args.format))


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "phi-curve": _cmd_phi_curve,
    "power-table": _cmd_power_table,
    "reproduce": _cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"postdiff {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
