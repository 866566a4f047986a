"""Command line entry point.

    epsbmc run CONFIG --out DIR [--parallelism N] [--seed S]
    epsbmc sweep CONFIG --out DIR [--parallelism N] [--seed S]
    epsbmc oracle gridworld CONFIG
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, expand_sweep, parse_config, read_toml
from .envs import bfs_optimal_steps
from .output import render_plot, write_csv
from .runner import RunError, aggregate, run_experiment

log = logging.getLogger("epsbmc")

YLABELS = {
    "gridworld": "steps to reach the final goal",
    "cartpole": "time steps the pole is balanced",
    "supplychain": "return",
}


def _write_outputs(config, records, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    curve = aggregate(records)
    write_csv(records, out / "records.csv")
    write_csv(curve, out / "curve.csv")
    render_plot([(config.name, curve)], out / "curve.svg", title=config.name, ylabel=YLABELS[config.env_kind])


def _with_seed(data: dict, seed: int | None) -> dict:
    if seed is not None:
        data = dict(data)
        data["base_seed"] = seed
    return data


def _point_dirname(point: dict) -> str:
    if not point:
        return "base"
    parts = []
    for key, value in point.items():
        text = str(value).replace(" ", "").replace("/", "_")
        parts.append(f"{key}={text}")
    return ",".join(parts)


def cmd_run(args) -> int:
    config = parse_config(_with_seed(read_toml(args.config), args.seed))
    log.info("running %s: %d runs x %d episodes", config.name, config.runs, config.episodes)
    records = run_experiment(config, args.parallelism)
    _write_outputs(config, records, Path(args.out))
    print(f"wrote {args.out}/records.csv, curve.csv, curve.svg")
    return 0


def cmd_sweep(args) -> int:
    points = expand_sweep(_with_seed(read_toml(args.config), args.seed))
    out = Path(args.out)
    for point, config in points:
        target = out / _point_dirname(point)
        log.info("sweep point %s", point)
        records = run_experiment(config, args.parallelism)
        _write_outputs(config, records, target)
        print(target)
    return 0


def cmd_oracle(args) -> int:
    config = parse_config(read_toml(args.config))
    if config.env_kind != "gridworld":
        raise ConfigError("env.kind", f"the oracle needs a gridworld config, got {config.env_kind!r}")
    print(bfs_optimal_steps(config.env_spec))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epsbmc", description="Adaptive epsilon-greedy experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, help_text in (
        ("run", cmd_run, "run one experiment"),
        ("sweep", cmd_sweep, "run every point of the config's sweep grid"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--parallelism", type=int, default=1)
        p.add_argument("--seed", type=int, default=None, help="override base_seed")
        p.set_defaults(func=func)

    p = sub.add_parser("oracle", help="print the BFS optimum of a grid-world layout")
    p.add_argument("domain", choices=["gridworld"])
    p.add_argument("config")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RunError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
