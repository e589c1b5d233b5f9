"""
core/photon_stats.py - Photon-number statistics of two interfering phase-randomised WCP

Two weak coherent pulses with random phases meet at a beam splitter of
transmittance t. Mode a is sent to Bob; mode b hits a threshold detector.
This module gives the joint law of (n photons in a, m photons in b), the
marginal of mode a, its split into detector click / no-click branches, the
closed forms for n <= 2 that the estimator needs, and a numerical certificate
on the denominators those estimates divide by.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.errors import DegenerateBranchError, DomainError, NumericalError, TruncationError
from core.numerics import (
    QuadratureSpec,
    log_bessel_i0,
    phase_average,
    poisson_pmf,
    poisson_table,
    scaled_bessel_i,
)

logger = logging.getLogger(__name__)

DEFAULT_N_MAX = 60
DEFAULT_TAIL_TOLERANCE = 1e-10
NEGATIVE_CLAMP = 1e-14
CERTIFICATE_THRESHOLD = 1e-18
# A denominator this small relative to its two product terms is rounding noise
CERTIFICATE_RELATIVE = 1e-12


class SourceConfig(BaseModel):
    """Two pulse intensities and the beam-splitter transmittance."""

    model_config = ConfigDict(frozen=True)

    mu1: float = Field(..., ge=0.0, description="Mean photon number of pulse 1")
    mu2: float = Field(..., ge=0.0, description="Mean photon number of pulse 2")
    t: float = Field(0.5, ge=0.0, le=1.0, description="Beam-splitter transmittance")

    def is_vacuum(self) -> bool:
        return self.mu1 == 0.0 and self.mu2 == 0.0


@dataclass(frozen=True)
class InterferenceParams:
    """Derived quantities of the beam-splitter output: upsilon, xi, omega."""

    upsilon: float
    xi: float
    omega: float

    @property
    def detector_mean(self) -> float:
        """Mean photon number reaching the threshold detector, mu1(1-t) + mu2 t."""
        return max(self.upsilon - self.omega, 0.0)

    def gamma(self, theta: np.ndarray) -> np.ndarray:
        """Fraction of the total intensity sent to mode a at relative phase theta."""
        theta = np.asarray(theta, dtype=float)
        if self.upsilon == 0.0:
            return np.zeros_like(theta)
        return np.clip((self.omega + self.xi * np.cos(theta)) / self.upsilon, 0.0, 1.0)


@dataclass(frozen=True)
class PhotonDistribution:
    """
    Truncated photon-number vector for counts 0..n_max.

    `mass` is what the untruncated vector sums to (1 for a conditional law,
    F or 1 - F for a joint branch probability); `tail_mass` is the part of it
    beyond n_max.
    """

    probs: np.ndarray
    n_max: int
    tail_mass: float
    mass: float = 1.0
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if probs.shape != (self.n_max + 1,):
            raise DomainError(f"expected {self.n_max + 1} probabilities, got {probs.shape}")
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise NumericalError("photon distribution entries must lie in [0, 1]")
        if self.tail_mass < -1e-12:
            raise NumericalError(f"negative tail mass {self.tail_mass:.3e}")
        if self.tail_mass > self.tail_tolerance:
            raise TruncationError(
                f"tail mass {self.tail_mass:.3e} beyond n_max={self.n_max} exceeds tolerance {self.tail_tolerance:.1e}"
            )

    def __len__(self) -> int:
        return self.n_max + 1

    def __getitem__(self, n: int) -> float:
        return float(self.probs[n])

    def mean(self) -> float:
        """Mean photon number of the normalised vector."""
        counts = np.arange(self.n_max + 1)
        return float(np.dot(counts, self.probs) / self.probs.sum())


@dataclass(frozen=True)
class LowOrderStats:
    """p^c̄_n and p^t_n for n = 0, 1, 2; click-branch values follow by difference."""

    noclick: Tuple[float, float, float]
    total: Tuple[float, float, float]

    @property
    def click(self) -> Tuple[float, float, float]:
        return tuple(_clamp(pt - pn, "p^c") for pt, pn in zip(self.total, self.noclick))  # type: ignore[return-value]

    def as_tuple(self) -> Tuple[float, ...]:
        """(p^c̄_0, p^c̄_1, p^c̄_2, p^t_0, p^t_1, p^t_2)."""
        return self.noclick + self.total


@dataclass(frozen=True)
class EstimationCertificate:
    """Denominators used by the decoy estimates and whether they are safely non-zero."""

    d1: float
    d0: float
    d_e: float
    s_sign: int
    valid: bool
    reasons: List[str] = field(default_factory=list)


def _clamp(value: float, what: str) -> float:
    if value < -NEGATIVE_CLAMP:
        raise NumericalError(f"{what} evaluated to {value:.3e}, below the clamping threshold")
    return max(float(value), 0.0)


def _quad(quad: Optional[QuadratureSpec]) -> QuadratureSpec:
    return quad or QuadratureSpec()


def derive(cfg: SourceConfig) -> InterferenceParams:
    """Compute upsilon, xi and omega for a source configuration."""
    upsilon = cfg.mu1 + cfg.mu2
    xi = 2.0 * math.sqrt(cfg.mu1 * cfg.mu2 * (1.0 - cfg.t) * cfg.t)
    omega = cfg.mu1 * cfg.t + cfg.mu2 * (1.0 - cfg.t)
    return InterferenceParams(upsilon=upsilon, xi=xi, omega=omega)


def joint_prob(cfg: SourceConfig, n: int, m: int, quad: Optional[QuadratureSpec] = None) -> float:
    """p_{n,m}: n photons in mode a and m photons in mode b."""
    params = derive(cfg)

    def integrand(theta: np.ndarray) -> np.ndarray:
        gamma = params.gamma(theta)
        return poisson_pmf(params.upsilon * gamma, n) * poisson_pmf(params.upsilon * (1.0 - gamma), m)

    return phase_average(integrand, _quad(quad))


def total_prob(cfg: SourceConfig, n: int, quad: Optional[QuadratureSpec] = None) -> float:
    """p^t_n: n photons in mode a, detector outcome ignored."""
    params = derive(cfg)
    return phase_average(lambda theta: poisson_pmf(params.upsilon * params.gamma(theta), n), _quad(quad))


def noclick_prob(cfg: SourceConfig, n: int, quad: Optional[QuadratureSpec] = None) -> float:
    """p^c̄_n = p_{n,0}: n photons in mode a and no click."""
    return joint_prob(cfg, n, 0, quad)


def click_prob(cfg: SourceConfig, n: int, quad: Optional[QuadratureSpec] = None) -> float:
    """p^c_n = p^t_n - p^c̄_n, with round-off negatives clamped to zero."""
    return _clamp(total_prob(cfg, n, quad) - noclick_prob(cfg, n, quad), f"p^c_{n}")


def noclick_total(cfg: SourceConfig) -> float:
    """F, the probability that the threshold detector does not click."""
    params = derive(cfg)
    return math.exp(log_bessel_i0(params.xi) - params.detector_mean)


def _mode_tables(cfg: SourceConfig, n_max: int, quad: QuadratureSpec) -> Tuple[np.ndarray, np.ndarray]:
    params = derive(cfg)
    gamma = params.gamma(quad.nodes())
    mode_a = poisson_table(params.upsilon * gamma, n_max)
    mode_b = poisson_table(params.upsilon * (1.0 - gamma), n_max)
    return mode_a, mode_b


def joint_matrix(cfg: SourceConfig, n_max: int = DEFAULT_N_MAX, quad: Optional[QuadratureSpec] = None) -> np.ndarray:
    """All p_{n,m} for n, m <= n_max from a single quadrature pass."""
    quad = _quad(quad)
    mode_a, mode_b = _mode_tables(cfg, n_max, quad)
    return mode_a @ mode_b.T / quad.points


def _branch_vectors(cfg: SourceConfig, n_max: int, quad: QuadratureSpec) -> Tuple[np.ndarray, np.ndarray]:
    mode_a, mode_b = _mode_tables(cfg, n_max, quad)
    total = mode_a.mean(axis=1)
    noclick = (mode_a * mode_b[0][None, :]).mean(axis=1)
    return total, noclick


def _click_vector(total: np.ndarray, noclick: np.ndarray) -> np.ndarray:
    diff = total - noclick
    if np.any(diff < -NEGATIVE_CLAMP):
        raise NumericalError(f"p^c evaluated to {diff.min():.3e}, below the clamping threshold")
    return np.clip(diff, 0.0, None)


def total_distribution(
    cfg: SourceConfig,
    n_max: int = DEFAULT_N_MAX,
    quad: Optional[QuadratureSpec] = None,
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
) -> PhotonDistribution:
    """p^t_n for n <= n_max."""
    total, _ = _branch_vectors(cfg, n_max, _quad(quad))
    return PhotonDistribution(total, n_max, 1.0 - total.sum(), 1.0, tail_tolerance)


def noclick_distribution(
    cfg: SourceConfig,
    n_max: int = DEFAULT_N_MAX,
    quad: Optional[QuadratureSpec] = None,
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
) -> PhotonDistribution:
    """p^c̄_n for n <= n_max; the full vector sums to F."""
    _, noclick = _branch_vectors(cfg, n_max, _quad(quad))
    f_total = noclick_total(cfg)
    return PhotonDistribution(noclick, n_max, f_total - noclick.sum(), f_total, tail_tolerance)


def click_distribution(
    cfg: SourceConfig,
    n_max: int = DEFAULT_N_MAX,
    quad: Optional[QuadratureSpec] = None,
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
) -> PhotonDistribution:
    """p^c_n for n <= n_max; the full vector sums to 1 - F."""
    total, noclick = _branch_vectors(cfg, n_max, _quad(quad))
    click = _click_vector(total, noclick)
    click_mass = 1.0 - noclick_total(cfg)
    return PhotonDistribution(click, n_max, click_mass - click.sum(), click_mass, tail_tolerance)


def conditional_distributions(
    cfg: SourceConfig,
    n_max: int = DEFAULT_N_MAX,
    quad: Optional[QuadratureSpec] = None,
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
) -> Tuple[PhotonDistribution, PhotonDistribution]:
    """
    Photon-number laws of mode a conditioned on the detector outcome.

    Args:
        cfg: Source configuration
        n_max: Truncation order (>= 2)
        quad: Quadrature nodes
        tail_tolerance: Largest admissible probability beyond n_max

    Returns:
        (r^c, r^c̄): laws given a click and given no click

    Raises:
        DegenerateBranchError: If F = 1 (never clicks) or F = 0 (always clicks)
        TruncationError: If either law leaks more than tail_tolerance beyond n_max
    """
    if n_max < 2:
        raise DomainError(f"n_max must be at least 2, got {n_max}")
    f_total = noclick_total(cfg)
    if 1.0 - f_total <= 1e-15:
        raise DegenerateBranchError("F = 1: the detector never clicks, click branch undefined")
    if f_total <= 0.0:
        raise DegenerateBranchError("F = 0: the detector always clicks, no-click branch undefined")

    total, noclick = _branch_vectors(cfg, n_max, _quad(quad))
    click = _click_vector(total, noclick)
    r_click = np.clip(click / (1.0 - f_total), 0.0, 1.0)
    r_noclick = np.clip(noclick / f_total, 0.0, 1.0)
    logger.debug(
        "Conditional distributions computed",
        extra={"event": "conditional_distributions", "F": f_total, "n_max": n_max},
    )
    return (
        PhotonDistribution(r_click, n_max, 1.0 - r_click.sum(), 1.0, tail_tolerance),
        PhotonDistribution(r_noclick, n_max, 1.0 - r_noclick.sum(), 1.0, tail_tolerance),
    )


def low_order_closed_forms(cfg: SourceConfig) -> LowOrderStats:
    """Closed-form p^c̄_n and p^t_n for n = 0, 1, 2."""
    params = derive(cfg)
    upsilon, xi, omega = params.upsilon, params.xi, params.omega

    vacuum = math.exp(-upsilon)
    noclick = (vacuum, omega * vacuum, (2.0 * omega**2 + xi**2) * vacuum / 4.0)

    # I_q(xi) e^{-omega} = ive(q, xi) e^{xi - omega}, and xi <= omega
    damping = math.exp(xi - omega)
    i0 = scaled_bessel_i(0, xi) * damping
    i1 = scaled_bessel_i(1, xi) * damping
    i2 = scaled_bessel_i(2, xi) * damping
    total = (
        i0,
        omega * i0 - xi * i1,
        (omega**2 * i0 + (1.0 - 2.0 * omega) * xi * i1 + xi**2 * i2) / 2.0,
    )
    return LowOrderStats(
        noclick=tuple(_clamp(p, "p^c̄") for p in noclick),  # type: ignore[arg-type]
        total=tuple(_clamp(p, "p^t") for p in total),  # type: ignore[arg-type]
    )


def _vanishes(value: float, scale: float) -> bool:
    return abs(value) <= max(CERTIFICATE_THRESHOLD, CERTIFICATE_RELATIVE * scale)


def certificate_from_stats(stats: LowOrderStats) -> EstimationCertificate:
    """Evaluate the estimation denominators from the low-order probabilities."""
    pn0, pn1, pn2 = stats.noclick
    pt0, pt1, pt2 = stats.total
    d1 = pn2 * pt1 - pt2 * pn1
    d0 = pt1 * pn0 - pn1 * pt0
    d_e = pn0 * pt1 - pt0 * pn1
    s = pn2 * pt0 - pt2 * pn0

    reasons = []
    if _vanishes(d1, abs(pn2 * pt1) + abs(pt2 * pn1)):
        reasons.append(f"D1 = {d1:.3e} vanishes")
    if _vanishes(d0, abs(pt1 * pn0) + abs(pn1 * pt0)):
        reasons.append(f"D0 = {d0:.3e} vanishes")
    return EstimationCertificate(
        d1=d1,
        d0=d0,
        d_e=d_e,
        s_sign=int(np.sign(s)),
        valid=not reasons,
        reasons=reasons,
    )


def estimation_certificate(cfg: SourceConfig) -> EstimationCertificate:
    """Check that the decoy-estimate denominators are bounded away from zero for cfg."""
    return certificate_from_stats(low_order_closed_forms(cfg))


def total_variation_from_poisson(dist: PhotonDistribution) -> float:
    """Total-variation distance between dist and the Poisson law with the same mean."""
    mean = dist.mean()
    reference = poisson_table(np.array([mean]), dist.n_max)[:, 0]
    return 0.5 * float(np.abs(dist.probs - reference).sum())
