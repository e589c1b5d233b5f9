"""
core/decoy_bounds.py - Passive decoy-state estimation

Turns the observed click / no-click statistics into a lower bound on the
single-photon yield Y_1 and an upper bound on its error rate e_1, using only
p^t_n and p^c̄_n for n <= 2. Every bound is clamped into [0, 1]; the unclamped
values are kept on the result for diagnostics.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

from core.channel import RANDOM_BACKGROUND_ERROR, ObservedRates
from core.errors import CertificateError, DomainError
from core.photon_stats import CERTIFICATE_THRESHOLD, LowOrderStats, certificate_from_stats

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecoyBounds:
    """Bounds on the background and single-photon contributions."""

    y0_lower: float
    y0_upper: float
    y1_lower: float
    e1_upper: float
    valid: bool = True
    e1_vacuous: bool = False
    y0_lower_raw: float = 0.0
    y1_lower_raw: float = 0.0
    e1_upper_raw: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.y0_lower <= self.y0_upper <= 1.0):
            raise DomainError(f"inconsistent Y_0 bounds [{self.y0_lower}, {self.y0_upper}]")
        if not (0.0 <= self.y1_lower <= 1.0):
            raise DomainError(f"Y_1 lower bound {self.y1_lower} outside [0, 1]")
        if not (0.0 <= self.e1_upper <= 1.0):
            raise DomainError(f"e_1 upper bound {self.e1_upper} outside [0, 1]")


def _unit(value: float) -> float:
    return min(max(value, 0.0), 1.0)


def _require(denominator: float, name: str) -> float:
    if abs(denominator) <= CERTIFICATE_THRESHOLD:
        raise CertificateError(f"{name} = {denominator:.3e} vanishes; the estimate is undefined for this source")
    return denominator


def _y0_upper_raw(stats: LowOrderStats, obs: ObservedRates) -> float:
    pn0, pt0 = stats.noclick[0], stats.total[0]
    if pn0 <= 0.0 or pt0 <= 0.0:
        raise DomainError("vacuum probabilities must be positive to bound Y_0")
    return min(2.0 * obs.errors_noclick / pn0, 2.0 * obs.errors_total / pt0)


def _y0_lower_raw(stats: LowOrderStats, obs: ObservedRates) -> float:
    pn0, pn1, _ = stats.noclick
    pt0, pt1, _ = stats.total
    d0 = _require(pt1 * pn0 - pn1 * pt0, "D0")
    return (pt1 * obs.q_noclick - pn1 * obs.q_total) / d0


def y0_bounds(stats: LowOrderStats, obs: ObservedRates) -> Tuple[float, float]:
    """
    Lower and upper bounds on the background yield Y_0.

    Raises:
        CertificateError: If the lower-bound denominator vanishes
    """
    upper = _unit(_y0_upper_raw(stats, obs))
    lower = min(_unit(_y0_lower_raw(stats, obs)), upper)
    return lower, upper


def _y1_lower_raw(stats: LowOrderStats, obs: ObservedRates, y0_upper: float) -> float:
    pn0, pn1, pn2 = stats.noclick
    pt0, pt1, pt2 = stats.total
    d1 = _require(pn2 * pt1 - pt2 * pn1, "D1")
    numerator = pn2 * obs.q_total - pt2 * obs.q_noclick - (pn2 * pt0 - pt2 * pn0) * y0_upper
    return numerator / d1


def y1_lower(stats: LowOrderStats, obs: ObservedRates, y0_upper: float) -> float:
    """
    Lower bound on the single-photon yield Y_1.

    Raises:
        CertificateError: If the denominator p^c̄_2 p^t_1 - p^t_2 p^c̄_1 vanishes
    """
    return _unit(_y1_lower_raw(stats, obs, y0_upper))


def _e1_upper_raw(
    stats: LowOrderStats, obs: ObservedRates, y0_lower: float, y1_lower: float, e_0: float
) -> float:
    pn0, pn1, _ = stats.noclick
    pt0, pt1, _ = stats.total
    pc0, pc1, _ = stats.click
    d_e = _require(pn0 * pt1 - pt0 * pn1, "D_e")

    candidates = []
    if pn1 > 0.0:
        candidates.append((obs.errors_noclick - pn0 * y0_lower * e_0) / (pn1 * y1_lower))
    if pc1 > 0.0:
        candidates.append((obs.errors_click - pc0 * y0_lower * e_0) / (pc1 * y1_lower))
    candidates.append((pn0 * obs.errors_total - pt0 * obs.errors_noclick) / (d_e * y1_lower))
    return min(candidates)


def e1_upper(
    stats: LowOrderStats,
    obs: ObservedRates,
    y0_lower: float,
    y1_lower: float,
    e_0: float = RANDOM_BACKGROUND_ERROR,
) -> float:
    """
    Upper bound on the single-photon error rate e_1.

    A zero Y_1 lower bound makes every candidate vacuous; the bound is then 1.

    Raises:
        CertificateError: If the third candidate's denominator vanishes
    """
    if y1_lower <= 0.0:
        return 1.0
    return _unit(_e1_upper_raw(stats, obs, y0_lower, y1_lower, e_0))


def estimate_bounds(stats: LowOrderStats, obs: ObservedRates, e_0: float = RANDOM_BACKGROUND_ERROR) -> DecoyBounds:
    """
    Full estimation pipeline: Y_0 bounds, then Y_1^l, then e_1^u.

    Raises:
        CertificateError: If the source statistics fail the estimation certificate
    """
    certificate = certificate_from_stats(stats)
    if not certificate.valid:
        raise CertificateError("; ".join(certificate.reasons))

    y0_upper_raw = _y0_upper_raw(stats, obs)
    y0_lower_raw = _y0_lower_raw(stats, obs)
    y0_upper = _unit(y0_upper_raw)
    y0_lower = min(_unit(y0_lower_raw), y0_upper)

    y1_raw = _y1_lower_raw(stats, obs, y0_upper)
    y1 = _unit(y1_raw)

    if y1 > 0.0:
        e1_raw = _e1_upper_raw(stats, obs, y0_lower, y1, e_0)
        e1 = _unit(e1_raw)
        vacuous = False
    else:
        e1_raw, e1, vacuous = math.inf, 1.0, True
        logger.debug("Y_1 lower bound is zero; e_1 bound is vacuous", extra={"event": "vacuous_e1"})

    return DecoyBounds(
        y0_lower=y0_lower,
        y0_upper=y0_upper,
        y1_lower=y1,
        e1_upper=e1,
        valid=certificate.valid,
        e1_vacuous=vacuous,
        y0_lower_raw=y0_lower_raw,
        y1_lower_raw=y1_raw,
        e1_upper_raw=e1_raw,
    )
