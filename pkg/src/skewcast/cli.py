"""Command-line interface.

Subcommands:
  gen        synthesize a sales panel from a generator config
  fit        train one arm on a panel and save the model JSON
  backtest   run the rolling-origin experiment grid
  ladder     weight-escalation study (log target, Mse)
  sweep      Tweedie variance-power study
  convexity  deviance-vs-prediction curves for a fixed actual

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import backtest as bt
from .datagen import generate, load_gen_config
from .errors import ConfigError, DataError
from .learner import (
    LearnerConfig,
    in_sample_fit_report,
    save_model,
    write_pairs_csv,
)
from .losses import LossSpec, convexity_profile
from .panel import read_panel, write_panel


def _cmd_gen(args) -> int:
    cfg = load_gen_config(args.config)
    panel = generate(cfg)
    write_panel(panel, args.out)
    print(f"wrote {len(panel)} rows to {args.out}")
    return 0


def _load_arm(spec: str) -> bt.ExperimentArm:
    """An arm is either a standard grid id or a path to an arm JSON."""
    if os.path.exists(spec):
        try:
            with open(spec, "r", encoding="utf-8") as fh:
                return bt.ExperimentArm.from_json(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"arm file {spec} is not valid JSON: {exc}") from None
    return bt.arm_by_id(spec)


def _load_learner(path: str | None) -> LearnerConfig:
    if path is None:
        return LearnerConfig()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return LearnerConfig.from_json(json.load(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read learner config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"learner config {path} is not valid JSON: {exc}") from None


def _cmd_fit(args) -> int:
    arm = _load_arm(args.arm)
    learner_cfg = _load_learner(args.learner)
    panel = read_panel(args.panel)
    model = bt.fit_arm(arm, panel, learner_cfg)
    save_model(model, args.model_out)
    report = in_sample_fit_report(model, panel)
    if args.report is not None:
        write_pairs_csv(report, args.report)
    del report["pairs"]
    print(json.dumps(report, sort_keys=True))
    return 0


def _cmd_backtest(args) -> int:
    plan = bt.load_plan(args.plan)
    report = bt.run_backtest(plan)
    bt.write_backtest_outputs(report, args.out_dir)
    print(f"wrote metrics.csv and report.json to {args.out_dir}")
    return 0


def _cmd_ladder(args) -> int:
    plan = bt.load_plan(args.plan)
    report = bt.run_weight_ladder(plan)
    bt.write_trend_outputs(report, args.out_dir, "ladder.csv")
    print(f"wrote ladder.csv, metrics.csv and report.json to {args.out_dir}")
    return 0


def _cmd_sweep(args) -> int:
    plan = bt.load_plan(args.plan)
    report = bt.run_power_sweep(plan)
    bt.write_trend_outputs(report, args.out_dir, "sweep.csv")
    print(f"wrote sweep.csv, metrics.csv and report.json to {args.out_dir}")
    return 0


def _parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must look like start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"grid must be numeric, got {text!r}") from None
    if step <= 0 or stop < start:
        raise ConfigError("grid needs step > 0 and stop >= start")
    return np.arange(start, stop + 0.5 * step, step)


def _parse_losses(text: str) -> list[LossSpec]:
    specs = []
    for token in text.split(","):
        name, _, param = token.strip().partition(":")
        if name == "mse":
            specs.append(LossSpec.mse())
        elif name == "poisson":
            specs.append(LossSpec.poisson())
        elif name == "gamma":
            specs.append(LossSpec.gamma())
        elif name == "tweedie":
            if not param:
                raise ConfigError("tweedie needs a power, e.g. tweedie:1.5")
            specs.append(LossSpec.tweedie(float(param)))
        elif name == "pseudo_huber":
            specs.append(LossSpec.pseudo_huber(float(param) if param else 1.0))
        else:
            raise ConfigError(f"unknown loss {name!r}")
    return specs


_DEFAULT_CONVEXITY = "mse,tweedie:1.1,tweedie:1.3,tweedie:1.5,tweedie:1.7,tweedie:1.9"


def _cmd_convexity(args) -> int:
    specs = _parse_losses(args.losses)
    grid = _parse_grid(args.grid)
    table = convexity_profile(specs, args.actual, grid)
    table.write_csv(args.out)
    print(f"wrote {len(grid)} grid rows for {len(specs)} losses to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skewcast",
        description="Forecasting on skewed sales data: transforms, Tweedie "
                    "losses, bias correction, and rolling-origin backtests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic sales panel")
    p.add_argument("--config", required=True, help="generator config JSON")
    p.add_argument("--out", required=True, help="output panel CSV")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("fit", help="fit one arm on a panel")
    p.add_argument("--panel", required=True, help="panel CSV")
    p.add_argument("--arm", required=True, help="standard arm id or arm JSON path")
    p.add_argument("--model-out", required=True, help="output model JSON")
    p.add_argument("--learner", default=None, help="learner config JSON (optional)")
    p.add_argument("--report", default=None,
                   help="optional CSV of in-sample (actual, predicted) pairs")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("backtest", help="run the rolling-origin experiment grid")
    p.add_argument("--plan", required=True, help="backtest plan JSON")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_backtest)

    p = sub.add_parser("ladder", help="weight-escalation study")
    p.add_argument("--plan", required=True, help="backtest plan JSON")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_ladder)

    p = sub.add_parser("sweep", help="Tweedie variance-power study")
    p.add_argument("--plan", required=True, help="backtest plan JSON")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("convexity", help="deviance curves over a prediction grid")
    p.add_argument("--actual", type=float, default=100.0)
    p.add_argument("--grid", default="10:190:10", help="start:stop:step (inclusive)")
    p.add_argument("--losses", default=_DEFAULT_CONVEXITY,
                   help="comma list, e.g. mse,tweedie:1.5,poisson")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=_cmd_convexity)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
