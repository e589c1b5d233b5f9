"""
cli/commands/validate.py - Self-checks at the configured operating point

Runs the estimation certificate, normalisation residuals, the closed-form
versus quadrature comparison and the quadrature-degree check, printing one
line per check and an overall PASS/FAIL.
"""

import argparse
import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from cli.config import RunConfig, load_config
from core.errors import DegenerateBranchError, NumericalError, TruncationError
from core.photon_stats import (
    click_distribution,
    estimation_certificate,
    joint_matrix,
    low_order_closed_forms,
    noclick_distribution,
    noclick_prob,
    noclick_total,
    total_distribution,
    total_prob,
)

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-10
CLOSED_FORM_TOLERANCE = 1e-10


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{self.name}: {self.detail} {'PASS' if self.passed else 'FAIL'}"


def check_certificate(config: RunConfig) -> CheckResult:
    cert = estimation_certificate(config.source())
    detail = f"D1={cert.d1:.6e} D0={cert.d0:.6e} D_e={cert.d_e:.6e} sign={cert.s_sign:+d}"
    if cert.reasons:
        detail += f" ({'; '.join(cert.reasons)})"
    return CheckResult("certificate", cert.valid, detail)


def check_normalization(config: RunConfig) -> CheckResult:
    cfg, quad, n_max, tol = config.source(), config.quadrature(), config.n_max, config.tail_tolerance
    try:
        joint = abs(1.0 - float(joint_matrix(cfg, n_max, quad).sum()))
        total = abs(total_distribution(cfg, n_max, quad, tol).tail_mass)
        noclick = abs(noclick_distribution(cfg, n_max, quad, tol).tail_mass)
        click = abs(click_distribution(cfg, n_max, quad, tol).tail_mass) if noclick_total(cfg) < 1.0 else 0.0
    except (TruncationError, NumericalError, DegenerateBranchError) as e:
        return CheckResult("normalization", False, str(e))
    worst = max(joint, total, noclick, click)
    detail = f"joint={joint:.3e} total={total:.3e} noclick={noclick:.3e} click={click:.3e}"
    return CheckResult("normalization", worst <= NORMALIZATION_TOLERANCE, detail)


def check_closed_forms(config: RunConfig) -> CheckResult:
    cfg, quad = config.source(), config.quadrature()
    closed = low_order_closed_forms(cfg)
    numeric = [noclick_prob(cfg, n, quad) for n in range(3)] + [total_prob(cfg, n, quad) for n in range(3)]
    deviations = [abs(a - b) / abs(a) if a else abs(b) for a, b in zip(closed.as_tuple(), numeric)]
    worst = float(np.max(deviations))
    return CheckResult("closed_form_vs_quadrature", worst <= CLOSED_FORM_TOLERANCE, f"max_rel_dev={worst:.3e}")


def check_quadrature_degree(config: RunConfig) -> CheckResult:
    """The joint matrix integrates trigonometric polynomials of degree up to 2*n_max."""
    quad = config.quadrature()
    needed = 2 * config.n_max
    detail = f"points={quad.points} exact_degree={quad.exact_degree()} required={needed}"
    return CheckResult("quadrature_degree", quad.exact_degree() >= needed, detail)


def run_checks(config: RunConfig) -> List[CheckResult]:
    return [
        check_certificate(config),
        check_normalization(config),
        check_closed_forms(config),
        check_quadrature_degree(config),
    ]


def register(subparsers) -> None:
    parser = subparsers.add_parser("validate", help="Check the numerics at the configured operating point")
    parser.add_argument("--config", default=None, help="Run configuration (key = value or YAML)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    results = run_checks(config)
    for result in results:
        print(result.line())
        if not result.passed:
            logger.warning(f"Check {result.name} failed: {result.detail}", extra={"event": "validate_fail"})
    passed = all(r.passed for r in results)
    print(f"RESULT {'PASS' if passed else 'FAIL'}")
    return 0 if passed else 2
