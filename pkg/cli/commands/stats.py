"""
cli/commands/stats.py - Photon-number statistics of mode a

Prints p^t_n, p^c̄_n, p^c_n, the conditional laws r^c_n and r^c̄_n, and the
Poisson law with the same mean as r^c, for n = 0..nmax.
"""

import argparse
import logging

import numpy as np

from cli.output import write_csv
from core.errors import DomainError
from core.numerics import poisson_table
from core.photon_stats import (
    DEFAULT_N_MAX,
    SourceConfig,
    click_distribution,
    conditional_distributions,
    estimation_certificate,
    noclick_distribution,
    noclick_total,
    total_distribution,
)

logger = logging.getLogger(__name__)

HEADER = ["n", "p_total", "p_noclick", "p_click", "r_click", "r_noclick", "poisson_same_mean_as_r_click"]


def register(subparsers) -> None:
    parser = subparsers.add_parser("stats", help="Photon-number distributions of the transmitted mode as CSV")
    parser.add_argument("--mu1", type=float, default=1.0, help="Mean photon number of pulse 1")
    parser.add_argument("--mu2", type=float, default=1.0, help="Mean photon number of pulse 2")
    parser.add_argument("--t", type=float, default=0.5, help="Beam-splitter transmittance")
    parser.add_argument("--nmax", type=int, default=8, help="Largest photon number printed")
    parser.set_defaults(handler=run)


def build_rows(cfg: SourceConfig, nmax: int) -> list:
    """
    Table rows for n = 0..nmax.

    The distributions are evaluated at max(nmax, 60) so that truncation is
    checked on the full vector. When the detector can never click the click
    columns are zero and the conditional click columns are left empty; the
    vacuum source prints only n = 0.
    """
    if nmax < 0:
        raise DomainError(f"--nmax must be non-negative, got {nmax}")
    n_max = max(nmax, DEFAULT_N_MAX)
    p_total = total_distribution(cfg, n_max)
    p_noclick = noclick_distribution(cfg, n_max)

    if cfg.is_vacuum():
        return [[0, p_total[0], p_noclick[0], 0.0, None, p_noclick[0], None]]

    if 1.0 - noclick_total(cfg) <= 1e-15:
        r_noclick = p_noclick.probs / p_noclick.mass
        return [
            [n, p_total[n], p_noclick[n], 0.0, None, float(r_noclick[n]), None]
            for n in range(nmax + 1)
        ]

    p_click = click_distribution(cfg, n_max)
    r_click, r_noclick = conditional_distributions(cfg, n_max)
    poisson = poisson_table(np.array([r_click.mean()]), n_max)[:, 0]
    return [
        [n, p_total[n], p_noclick[n], p_click[n], r_click[n], r_noclick[n], float(poisson[n])]
        for n in range(nmax + 1)
    ]


def run(args: argparse.Namespace) -> int:
    cfg = SourceConfig(mu1=args.mu1, mu2=args.mu2, t=args.t)
    write_csv(HEADER, build_rows(cfg, args.nmax))

    certificate = estimation_certificate(cfg)
    if not certificate.valid:
        logger.warning(
            f"Estimation certificate fails for mu1={cfg.mu1}, mu2={cfg.mu2}, t={cfg.t}: {'; '.join(certificate.reasons)}",
            extra={"event": "certificate_invalid", "d1": certificate.d1, "d0": certificate.d0},
        )
        return 2
    return 0
