"""
core/keyrate.py - Secret key rates for the passive scheme and the active benchmark

The passive rate distils key separately from click and no-click events,
R = max{R^c, 0} + max{R^c̄, 0}, each branch following the GLLP expression
q{-Q f H(E) + p_1 Y_1 [1 - H(e_1)] + p_0 Y_0}, where Y_0 is the background
rate of the channel and Y_1, e_1 are the decoy bounds. The active benchmark is the
infinite-decoy limit of a single Poissonian source, where Y_1 and e_1 are
known exactly from the channel model.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize_scalar

from core.channel import ChannelParams, ObservedRates, observed_active, observed_passive, transmittance
from core.decoy_bounds import DecoyBounds, estimate_bounds
from core.numerics import binary_entropy
from core.photon_stats import SourceConfig, low_order_closed_forms

logger = logging.getLogger(__name__)

ACTIVE_MU_BOUNDS = (1e-3, 2.0)
MAX_PHASE_ERROR = 0.5


class ProtocolParams(BaseModel):
    """Protocol efficiency q and error-correction inefficiency f."""

    model_config = ConfigDict(frozen=True)

    q_eff: float = Field(1.0, gt=0.0, le=1.0, description="Fraction of signals usable for key")
    f_ec: float = Field(1.22, ge=1.0, description="Error-correction inefficiency")


@dataclass(frozen=True)
class KeyRatePoint:
    """
    Passive key rate at one distance. `rate_click` and `rate_noclick` are the
    unclamped branch rates; `rate_total` is the sum of their positive parts.
    """

    distance_km: float
    eta: float
    rate_total: float
    rate_click: float
    rate_noclick: float
    source: SourceConfig
    bounds: Optional[DecoyBounds] = None
    observed: Optional[ObservedRates] = None

    def __post_init__(self):
        expected = max(self.rate_click, 0.0) + max(self.rate_noclick, 0.0)
        if self.rate_total != expected:
            raise ValueError(f"rate_total {self.rate_total} != max(R^c,0) + max(R^c̄,0) = {expected}")

    @property
    def raw_sum(self) -> float:
        return self.rate_click + self.rate_noclick


def branch_rate(
    gain: float,
    qber: float,
    p0: float,
    p1: float,
    y0: float,
    y1: float,
    e1: float,
    proto: ProtocolParams,
) -> float:
    """
    GLLP rate of one detector branch; may be negative.

    Args:
        gain: Branch gain Q
        qber: Branch QBER E
        p0, p1: Branch probabilities of zero and one photon
        y0: Background yield
        y1: Single-photon yield bound
        e1: Single-photon error bound
        proto: Protocol constants

    Returns:
        q (-Q f H(E) + p1 y1 (1 - H(min(e1, 1/2))) + p0 y0); 0 for an empty branch
    """
    if gain == 0.0:
        return 0.0
    leaked = gain * proto.f_ec * binary_entropy(qber)
    # Phase errors above 1/2 carry no more information than 1/2
    single_photon = p1 * y1 * (1.0 - binary_entropy(min(e1, MAX_PHASE_ERROR)))
    return proto.q_eff * (-leaked + single_photon + p0 * y0)


def passive_rate(cfg: SourceConfig, ch: ChannelParams, proto: ProtocolParams, distance_km: float) -> KeyRatePoint:
    """
    Key rate of the passive setup at one distance.

    Raises:
        CertificateError: If the estimation certificate fails for cfg
    """
    eta = transmittance(ch, distance_km)
    if cfg.is_vacuum():
        return KeyRatePoint(distance_km, eta, 0.0, 0.0, 0.0, cfg)

    stats = low_order_closed_forms(cfg)
    obs = observed_passive(cfg, ch, distance_km)
    bounds = estimate_bounds(stats, obs, ch.e_0)

    pc0, pc1, _ = stats.click
    pn0, pn1, _ = stats.noclick
    # The vacuum term credits the measured background rate, not its lower bound
    rate_click = branch_rate(
        obs.q_click, obs.e_click, pc0, pc1, ch.y_0, bounds.y1_lower, bounds.e1_upper, proto
    )
    rate_noclick = branch_rate(
        obs.q_noclick, obs.e_noclick, pn0, pn1, ch.y_0, bounds.y1_lower, bounds.e1_upper, proto
    )
    total = max(rate_click, 0.0) + max(rate_noclick, 0.0)
    if bounds.e1_vacuous and total == 0.0:
        logger.debug(
            f"No single-photon yield certified at {distance_km} km for mu1={cfg.mu1:.3e}, mu2={cfg.mu2:.4f}",
            extra={"event": "passive_rate_vacuous", "distance_km": distance_km},
        )
    return KeyRatePoint(distance_km, eta, total, rate_click, rate_noclick, cfg, bounds, obs)


def active_rate_raw(mu: float, ch: ChannelParams, proto: ProtocolParams, distance_km: float) -> float:
    """Unclamped active-benchmark rate; used as a smooth optimisation target."""
    if mu == 0.0:
        return 0.0
    rates = observed_active(mu, ch, distance_km)
    vacuum = math.exp(-mu)
    single_photon = mu * vacuum * rates.y1 * (1.0 - binary_entropy(rates.e1))
    leaked = rates.gain * proto.f_ec * binary_entropy(rates.qber)
    return proto.q_eff * (-leaked + single_photon + vacuum * ch.y_0)


def active_asymptotic_rate(mu: float, ch: ChannelParams, proto: ProtocolParams, distance_km: float) -> float:
    """Rate of an active decoy system with infinitely many decoys at intensity mu."""
    return max(active_rate_raw(mu, ch, proto, distance_km), 0.0)


def optimize_active_mu(
    ch: ChannelParams,
    proto: ProtocolParams,
    distance_km: float,
    bounds: Tuple[float, float] = ACTIVE_MU_BOUNDS,
) -> Tuple[float, float]:
    """
    Intensity maximising the active benchmark at one distance.

    Returns:
        (mu, rate) with rate = active_asymptotic_rate at mu
    """
    result = minimize_scalar(
        lambda mu: -active_rate_raw(mu, ch, proto, distance_km),
        bounds=bounds,
        method="bounded",
        options={"xatol": 1e-6},
    )
    mu = float(result.x)
    return mu, active_asymptotic_rate(mu, ch, proto, distance_km)
