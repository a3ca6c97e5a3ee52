"""Command line: one subcommand per experiment.

Exit codes: 0 when every exercised invariant passes, 1 when a check fails
or errors, 2 when the configuration is invalid.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from geodesic_lab_core.exceptions import ConfigValidationError

from .config import EXPERIMENTS, PRESETS, ExperimentConfig, load_config, load_preset
from .run import run_experiment

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument("--config", type=Path, help="YAML experiment configuration")
    source.add_argument("--preset", choices=sorted(PRESETS), default=None,
                        help="Named configuration (default: figure1-default)")
    common.add_argument("--out", type=Path, default=None, help="Output directory (default: runs/<experiment>)")
    common.add_argument("--seed", type=int, default=None, help="Random seed; overrides the configuration")
    common.add_argument("--threads", type=int, default=None, help="Worker threads for independent tasks")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(
        prog="geodesic-lab",
        description="Numerical experiments on dumbbell surfaces of revolution with a perturbed flat band.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    return parser


def load(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {"experiment": args.experiment, "seed": args.seed, "threads": args.threads,
                 "output": str(args.out) if args.out is not None else None}
    if args.config is not None:
        return load_config(args.config, overrides)
    return load_preset(args.preset or "figure1-default", overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        config = load(args)
    except ConfigValidationError as err:
        print(f"[error] {len(err.errors)} configuration error(s) in {err.details.get('source') or 'configuration'}")
        for item in err.errors:
            where = item.get("key") or "<root>"
            if item.get("line") is not None:
                where += f" (line {item['line']})"
            print(f"  - {where}: {item['message']}")
        return 2
    except OSError as err:
        print(f"[error] cannot read configuration: {err}")
        return 2

    result = run_experiment(config)
    counts = result.summary["counts"]
    status = "OK" if result.passed else "FAIL"
    print(f"[{config.experiment}] {status} (pass={counts['pass']}, fail={counts['fail']}, "
          f"error={counts['error']}) -> {result.out_dir}")
    if not result.passed:
        for check in result.summary["checks"]:
            if check["result"] != "pass":
                print(f"  - {check['name']}: {check['result']} ({check['reason']})")
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
