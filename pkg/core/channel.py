"""
core/channel.py - Lossy fibre channel and Bob's detection model

Produces the gains and QBERs an experiment would observe in the absence of
eavesdropping: Y_n = 1 - (1 - Y_0)(1 - eta)^n and Y_n e_n = Y_0 e_0 + (Y_n - Y_0) e_d.
Quantities of the form 1 - (1 - Y_0) e^{-x} are evaluated through expm1/log1p;
at long distance they sit only a few Y_0 above zero.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field

from core.errors import DegenerateRatesError, DomainError, NumericalError
from core.numerics import log_bessel_i0
from core.photon_stats import SourceConfig, derive, noclick_total

logger = logging.getLogger(__name__)

# Values of the GYS experiment
GYS_Y0 = 1.7e-6
GYS_E_D = 0.033
GYS_ALPHA_DB_PER_KM = 0.21
GYS_ETA_DET = 0.045
RANDOM_BACKGROUND_ERROR = 0.5

GAIN_TOLERANCE = 1e-14


class ChannelParams(BaseModel):
    """Fibre loss, detector efficiency, misalignment and background of the link."""

    model_config = ConfigDict(frozen=True)

    alpha_db_per_km: float = Field(GYS_ALPHA_DB_PER_KM, ge=0.0, description="Fibre loss coefficient in dB/km")
    eta_det: float = Field(GYS_ETA_DET, ge=0.0, le=1.0, description="Bob's detection efficiency")
    e_d: float = Field(GYS_E_D, ge=0.0, le=1.0, description="Misalignment error probability")
    e_0: float = Field(RANDOM_BACKGROUND_ERROR, ge=0.0, le=1.0, description="Error rate of background counts")
    y_0: float = Field(GYS_Y0, ge=0.0, le=1.0, description="Background (dark count) yield")


@dataclass(frozen=True)
class ObservedRates:
    """
    Gains and QBERs of the no-click and total ensembles, plus the click branch
    derived from them. A branch with zero gain reports a QBER of 0.
    """

    q_noclick: float
    e_noclick: float
    q_total: float
    e_total: float
    q_click: float
    e_click: float

    def __post_init__(self):
        for name in ("q_noclick", "q_total", "q_click", "e_noclick", "e_total", "e_click"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1], got {value}")
        if self.q_noclick > self.q_total * (1.0 + 1e-12) + GAIN_TOLERANCE:
            raise DomainError(f"no-click gain {self.q_noclick} exceeds total gain {self.q_total}")

    @property
    def errors_noclick(self) -> float:
        return self.q_noclick * self.e_noclick

    @property
    def errors_total(self) -> float:
        return self.q_total * self.e_total

    @property
    def errors_click(self) -> float:
        """Q^c E^c = Q^t E^t - Q^c̄ E^c̄."""
        return max(self.errors_total - self.errors_noclick, 0.0)

    @classmethod
    def from_branches(cls, q_noclick: float, e_noclick: float, q_total: float, e_total: float) -> "ObservedRates":
        """Build the record from the measured no-click and total statistics."""
        q_click = q_total - q_noclick
        if q_click < -GAIN_TOLERANCE:
            raise NumericalError(f"click gain evaluated to {q_click:.3e}")
        q_click = max(q_click, 0.0)
        errors_click = max(q_total * e_total - q_noclick * e_noclick, 0.0)
        e_click = min(errors_click / q_click, 1.0) if q_click > 0.0 else 0.0
        return cls(
            q_noclick=q_noclick,
            e_noclick=e_noclick,
            q_total=q_total,
            e_total=e_total,
            q_click=q_click,
            e_click=e_click,
        )


@dataclass(frozen=True)
class ActiveRates:
    """Gain and QBER of a single Poissonian source, with the true single-photon yield and error."""

    gain: float
    qber: float
    y1: float
    e1: float


def transmittance(ch: ChannelParams, distance_km: float) -> float:
    """Overall transmittance eta = eta_det * 10^{-alpha l / 10}."""
    if distance_km < 0.0:
        raise DomainError(f"distance must be non-negative, got {distance_km}")
    if distance_km == 0.0:
        return ch.eta_det
    return ch.eta_det * 10.0 ** (-ch.alpha_db_per_km * distance_km / 10.0)


def yield_n(ch: ChannelParams, eta: float, n: int) -> float:
    """Yield of an n-photon signal, Y_n = 1 - (1 - Y_0)(1 - eta)^n."""
    if not (0.0 <= eta <= 1.0):
        raise DomainError(f"eta must lie in [0, 1], got {eta}")
    if n < 0:
        raise DomainError(f"photon number must be non-negative, got {n}")
    if n == 0:
        return ch.y_0
    if eta == 1.0:
        return 1.0
    return -math.expm1(math.log1p(-ch.y_0) + n * math.log1p(-eta))


def true_single_photon(ch: ChannelParams, eta: float) -> Tuple[float, float]:
    """Channel-model single-photon yield Y_1 and error rate e_1."""
    y1 = yield_n(ch, eta, 1)
    if y1 == 0.0:
        return 0.0, ch.e_0
    e1 = (ch.e_0 * ch.y_0 + ch.e_d * (y1 - ch.y_0)) / y1
    return y1, min(max(e1, 0.0), 1.0)


def _survival_gain(y_0: float, log_factor: float) -> float:
    """1 - (1 - y_0) e^{log_factor} without cancellation."""
    if y_0 == 1.0:
        return 1.0
    return min(max(-math.expm1(math.log1p(-y_0) + log_factor), 0.0), 1.0)


def _qber(errors: float, gain: float) -> float:
    return min(max(errors / gain, 0.0), 1.0) if gain > 0.0 else 0.0


def observed_passive(cfg: SourceConfig, ch: ChannelParams, distance_km: float) -> ObservedRates:
    """
    Gains and QBERs of the passive source at the given distance.

    Raises:
        DegenerateRatesError: If the total gain is exactly zero
    """
    eta = transmittance(ch, distance_km)
    params = derive(cfg)
    f_total = noclick_total(cfg)

    q_total = _survival_gain(ch.y_0, -eta * params.omega + log_bessel_i0(eta * params.xi))
    if q_total == 0.0:
        raise DegenerateRatesError("total gain is zero; QBER undefined")

    # Q^c̄ = F [1 - (1 - Y_0) e^{-eta omega} I_0((1 - eta) xi) / I_0(xi)]
    log_ratio = -eta * params.omega + log_bessel_i0((1.0 - eta) * params.xi) - log_bessel_i0(params.xi)
    q_noclick = f_total * _survival_gain(ch.y_0, log_ratio)

    errors_noclick = (ch.e_0 - ch.e_d) * ch.y_0 * f_total + ch.e_d * q_noclick
    errors_total = (ch.e_0 - ch.e_d) * ch.y_0 + ch.e_d * q_total

    return ObservedRates.from_branches(
        q_noclick=q_noclick,
        e_noclick=_qber(errors_noclick, q_noclick),
        q_total=q_total,
        e_total=_qber(errors_total, q_total),
    )


def observed_active(mu: float, ch: ChannelParams, distance_km: float) -> ActiveRates:
    """
    Gain and QBER of a Poissonian source of mean mu, with the true Y_1 and e_1.

    Raises:
        DegenerateRatesError: If the gain is exactly zero
    """
    if mu < 0.0:
        raise DomainError(f"intensity must be non-negative, got {mu}")
    eta = transmittance(ch, distance_km)
    gain = _survival_gain(ch.y_0, -eta * mu)
    if gain == 0.0:
        raise DegenerateRatesError("gain is zero; QBER undefined")
    qber = _qber((ch.e_0 - ch.e_d) * ch.y_0 + ch.e_d * gain, gain)
    y1, e1 = true_single_photon(ch, eta)
    return ActiveRates(gain=gain, qber=qber, y1=y1, e1=e1)
