"""
cli/commands/cutoff.py - Distance at which the optimised key rate vanishes
"""

import argparse
import math

from cli.config import load_config
from core.optimizer import RateMode, cutoff_distance


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "cutoff",
        help="Largest distance with a positive optimised key rate",
        description=(
            "Largest distance with a positive optimised key rate. "
            "Fibre loss alpha does not enter the rate at l = 0, so alpha alone cannot "
            "remove the key at the origin. A channel without key at l = 0 "
            "(for example eta_det = 0) exits with status 2."
        ),
    )
    parser.add_argument("--config", default=None, help="Run configuration (key = value or YAML)")
    parser.add_argument("--mode", choices=[m.value for m in RateMode], default=RateMode.PASSIVE.value)
    parser.set_defaults(handler=run)


def format_cutoff(mode: RateMode, distance_km: float) -> str:
    value = "inf" if math.isinf(distance_km) else f"{distance_km:.2f}"
    return f"{mode.value} cutoff_km={value}"


def run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    mode = RateMode(args.mode)
    # NoPositiveRateError propagates to the exit-code mapping
    distance = cutoff_distance(config.channel(), config.protocol(), mode, config.search_domain())
    print(format_cutoff(mode, distance))
    return 0
