"""
cli/commands/scan.py - Key rate versus distance as a CSV table
"""

import argparse
from typing import List

from cli.config import load_config
from cli.output import write_csv
from core.optimizer import ScanMode, ScanRow, scan

HEADER = [
    "distance_km",
    "eta",
    "mu1_opt",
    "mu2_opt",
    "R_passive",
    "R_active",
    "Q_total",
    "E_total",
    "Q_noclick",
    "E_noclick",
    "Y1_lower",
    "e1_upper",
    "Y0_lower",
    "Y0_upper",
]


def register(subparsers) -> None:
    parser = subparsers.add_parser("scan", help="Optimised key rates over a distance grid")
    parser.add_argument("--config", default=None, help="Run configuration (key = value or YAML)")
    parser.add_argument("--lmin", type=float, default=0.0, help="First distance in km")
    parser.add_argument("--lmax", type=float, default=150.0, help="Grid stops before this distance")
    parser.add_argument("--step", type=float, default=1.0, help="Distance step in km")
    parser.add_argument("--mode", choices=[m.value for m in ScanMode], default=ScanMode.BOTH.value)
    parser.add_argument("--output", default=None, help="CSV destination; '-' or omitted writes to stdout")
    parser.add_argument("--workers", type=int, default=None, help="Worker processes (overrides the config)")
    parser.set_defaults(handler=run)


def to_rows(rows: List[ScanRow]) -> list:
    return [
        [
            r.distance_km,
            r.eta,
            r.mu1_opt,
            r.mu2_opt,
            r.rate_passive,
            r.rate_active,
            r.q_total,
            r.e_total,
            r.q_noclick,
            r.e_noclick,
            r.y1_lower,
            r.e1_upper,
            r.y0_lower,
            r.y0_upper,
        ]
        for r in rows
    ]


def run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    workers = args.workers if args.workers is not None else config.workers
    rows = scan(
        config.channel(),
        config.protocol(),
        args.lmin,
        args.lmax,
        args.step,
        mode=ScanMode(args.mode),
        domain=config.search_domain(),
        workers=workers,
        fixed_source=None if config.reoptimize else config.source(),
    )
    write_csv(HEADER, to_rows(rows), args.output or config.output)
    return 0
