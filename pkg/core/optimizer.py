"""
core/optimizer.py - Intensity optimisation, cutoff distances and distance scans

The passive rate is maximised over (mu1, mu2) on a logarithmic grid and then
refined with a bounded Nelder-Mead search in log10 coordinates. Where the rate
is clamped to zero, the search follows the unclamped branch sum instead, so it
can still walk towards the positive region close to the cutoff.

At t = 1/2 the rate is unchanged when the two pulses are exchanged, so only
mu1 <= mu2 is searched. The rate is nearly flat in mu1 once the weak pulse is
far below the strong one; there the optimum is moved up to a reference weak
intensity whenever that costs less than FLAT_TOLERANCE of the rate.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import minimize

from core.channel import ChannelParams, transmittance
from core.errors import CertificateError, DegenerateRatesError, DomainError, NoPositiveRateError, NumericalError
from core.keyrate import KeyRatePoint, ProtocolParams, optimize_active_mu, passive_rate
from core.photon_stats import SourceConfig

logger = logging.getLogger(__name__)

# log10(1 + 1e-4): a relative step of 1e-4 in the intensities
SIMPLEX_XATOL = 4.343e-5
SIMPLEX_FATOL = 1e-9
SIMPLEX_MAXITER = 400
T_GRID_POINTS = 5

# Weak-pulse intensities preferred, in order, on a flat rate surface
WEAK_PULSE_LADDER = (1e-4, 1e-5)
FLAT_TOLERANCE = 2e-3

CUTOFF_RESOLUTION_KM = 0.01
CUTOFF_STEP_KM = 16.0
CUTOFF_HORIZON_KM = 1000.0


class RateMode(str, Enum):
    PASSIVE = "passive"
    ACTIVE = "active"


class ScanMode(str, Enum):
    BOTH = "both"
    PASSIVE = "passive"
    ACTIVE = "active"

    @property
    def includes_passive(self) -> bool:
        return self is not ScanMode.ACTIVE

    @property
    def includes_active(self) -> bool:
        return self is not ScanMode.PASSIVE


class SearchDomain(BaseModel):
    """Box searched by optimize_intensities."""

    model_config = ConfigDict(frozen=True)

    mu1_min: float = Field(1e-6, gt=0.0)
    mu1_max: float = Field(1.0, gt=0.0)
    mu2_min: float = Field(1e-3, gt=0.0)
    mu2_max: float = Field(2.0, gt=0.0)
    grid_points: int = Field(17, ge=2, description="Grid points per intensity axis")
    t: float = Field(0.5, ge=0.0, le=1.0, description="Beam-splitter transmittance when t is not optimised")
    optimize_t: bool = False
    t_min: float = Field(0.05, ge=0.0, le=1.0)
    t_max: float = Field(0.95, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def validate_ranges(self) -> "SearchDomain":
        for low, high in (("mu1_min", "mu1_max"), ("mu2_min", "mu2_max"), ("t_min", "t_max")):
            if getattr(self, low) >= getattr(self, high):
                raise ValueError(f"{low} must be smaller than {high}")
        return self

    @property
    def symmetric(self) -> bool:
        """True when the rate is invariant under exchanging mu1 and mu2."""
        return not self.optimize_t and self.t == 0.5

    def log_bounds(self) -> List[Tuple[float, float]]:
        """Bounds of the search coordinates (log10 mu1, log10 mu2[, t])."""
        bounds = [
            (math.log10(self.mu1_min), math.log10(self.mu1_max)),
            (math.log10(self.mu2_min), math.log10(self.mu2_max)),
        ]
        if self.optimize_t:
            bounds.append((self.t_min, self.t_max))
        return bounds

    def grid(self) -> np.ndarray:
        """Coarse grid points in search coordinates, one per row, in a fixed order."""
        axes = [np.linspace(low, high, self.grid_points) for low, high in self.log_bounds()[:2]]
        if self.optimize_t:
            axes.append(np.linspace(self.t_min, self.t_max, T_GRID_POINTS))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def grid_steps(self) -> np.ndarray:
        steps = [(high - low) / (self.grid_points - 1) for low, high in self.log_bounds()[:2]]
        if self.optimize_t:
            steps.append((self.t_max - self.t_min) / (T_GRID_POINTS - 1))
        return np.array(steps)


@dataclass(frozen=True)
class IntensityOptimum:
    """Best source found at one distance. `point` is None when no source could be evaluated."""

    mu1: float
    mu2: float
    t: float
    rate: float
    point: Optional[KeyRatePoint] = None


@dataclass(frozen=True)
class ScanRow:
    """One distance of a scan; fields of a mode that was not requested are None."""

    distance_km: float
    eta: float
    mu1_opt: Optional[float] = None
    mu2_opt: Optional[float] = None
    rate_passive: Optional[float] = None
    rate_active: Optional[float] = None
    mu_active: Optional[float] = None
    q_total: Optional[float] = None
    e_total: Optional[float] = None
    q_noclick: Optional[float] = None
    e_noclick: Optional[float] = None
    y1_lower: Optional[float] = None
    e1_upper: Optional[float] = None
    y0_lower: Optional[float] = None
    y0_upper: Optional[float] = None


class _PassiveObjective:
    """
    Negated key rate in search coordinates, with the unclamped surrogate where
    R = 0. Sources with mu1 > mu2 score inf on a symmetric domain.
    """

    def __init__(self, ch: ChannelParams, proto: ProtocolParams, distance_km: float, domain: SearchDomain):
        self.ch = ch
        self.proto = proto
        self.distance_km = distance_km
        self.domain = domain
        self.evaluations = 0

    def source(self, x: np.ndarray) -> SourceConfig:
        bounds = self.domain.log_bounds()
        clipped = [min(max(float(v), low), high) for v, (low, high) in zip(x, bounds)]
        t = clipped[2] if self.domain.optimize_t else self.domain.t
        return SourceConfig(mu1=10.0 ** clipped[0], mu2=10.0 ** clipped[1], t=t)

    def evaluate(self, x: np.ndarray) -> Tuple[float, Optional[KeyRatePoint]]:
        self.evaluations += 1
        source = self.source(x)
        if self.domain.symmetric and source.mu1 > source.mu2:
            return math.inf, None
        try:
            point = passive_rate(source, self.ch, self.proto, self.distance_km)
        except (CertificateError, DegenerateRatesError, NumericalError):
            return math.inf, None
        if point.rate_total > 0.0:
            return -point.rate_total, point
        return -point.raw_sum, point

    def __call__(self, x: np.ndarray) -> float:
        return self.evaluate(x)[0]


def _initial_simplex(x0: np.ndarray, domain: SearchDomain) -> np.ndarray:
    """Simplex of half a grid step around x0, stepping inwards at the box edges."""
    steps = domain.grid_steps() / 2.0
    simplex = [x0.copy()]
    for i, (low, high) in enumerate(domain.log_bounds()):
        vertex = x0.copy()
        vertex[i] = x0[i] + steps[i] if x0[i] + steps[i] <= high else x0[i] - steps[i]
        vertex[i] = max(vertex[i], low)
        simplex.append(vertex)
    return np.array(simplex)


def _settle_weak_pulse(
    objective: _PassiveObjective,
    x: np.ndarray,
    value: float,
    grid_value: float,
) -> Tuple[np.ndarray, float]:
    """
    Move mu1 up to the first WEAK_PULSE_LADDER intensity that keeps the rate
    within FLAT_TOLERANCE of the optimum and no lower than the best grid point.
    """
    if value >= 0.0:
        return x, value
    low, high = objective.domain.log_bounds()[0]
    current = objective.source(x).mu1
    for mu1 in WEAK_PULSE_LADDER:
        if mu1 <= current:
            break
        if not low <= math.log10(mu1) <= high:
            continue
        candidate = np.array(x, dtype=float)
        candidate[0] = math.log10(mu1)
        candidate_value = objective(candidate)
        if candidate_value <= grid_value and candidate_value <= value * (1.0 - FLAT_TOLERANCE):
            return candidate, candidate_value
    return x, value


def optimize_intensities(
    ch: ChannelParams,
    proto: ProtocolParams,
    distance_km: float,
    domain: Optional[SearchDomain] = None,
) -> IntensityOptimum:
    """
    Maximise the passive key rate over the source intensities at one distance.
    On a symmetric domain the returned mu1 never exceeds mu2.

    Args:
        ch: Channel parameters
        proto: Protocol constants
        distance_km: Fibre length
        domain: Search box (defaults to mu1 in [1e-6, 1], mu2 in [1e-3, 2], t = 1/2)

    Returns:
        IntensityOptimum whose rate equals passive_rate at the returned source;
        rate 0 when no positive-rate source exists in the box
    """
    domain = domain or SearchDomain()
    objective = _PassiveObjective(ch, proto, distance_km, domain)

    grid = domain.grid()
    values = np.array([objective(x) for x in grid])
    best_index = int(np.argmin(values))
    best_x, best_value = grid[best_index], float(values[best_index])
    grid_value = best_value

    if math.isfinite(best_value):
        scale = abs(best_value) or 1.0
        result = minimize(
            lambda x: objective(x) / scale,
            best_x,
            method="Nelder-Mead",
            bounds=domain.log_bounds(),
            options={
                "initial_simplex": _initial_simplex(best_x, domain),
                "xatol": SIMPLEX_XATOL,
                "fatol": SIMPLEX_FATOL,
                "maxiter": SIMPLEX_MAXITER,
            },
        )
        refined_value = objective(result.x)
        if refined_value < best_value:
            best_x, best_value = np.asarray(result.x, dtype=float), refined_value
        best_x, best_value = _settle_weak_pulse(objective, best_x, best_value, grid_value)

    _, point = objective.evaluate(best_x)
    source = objective.source(best_x)
    rate = point.rate_total if point is not None else 0.0
    logger.debug(
        f"Optimised intensities at {distance_km} km: mu1={source.mu1:.3e}, mu2={source.mu2:.4f}, R={rate:.4e}",
        extra={"event": "optimize_intensities", "distance_km": distance_km, "evaluations": objective.evaluations},
    )
    return IntensityOptimum(mu1=source.mu1, mu2=source.mu2, t=source.t, rate=rate, point=point)


def optimized_rate(
    ch: ChannelParams,
    proto: ProtocolParams,
    mode: RateMode,
    distance_km: float,
    domain: Optional[SearchDomain] = None,
) -> float:
    """Best achievable rate of the given mode at one distance."""
    if RateMode(mode) is RateMode.ACTIVE:
        return optimize_active_mu(ch, proto, distance_km)[1]
    return optimize_intensities(ch, proto, distance_km, domain).rate


def cutoff_distance(
    ch: ChannelParams,
    proto: ProtocolParams,
    mode: RateMode = RateMode.PASSIVE,
    domain: Optional[SearchDomain] = None,
    resolution_km: float = CUTOFF_RESOLUTION_KM,
    step_km: float = CUTOFF_STEP_KM,
    horizon_km: float = CUTOFF_HORIZON_KM,
) -> float:
    """
    Largest distance at which the optimised rate is still positive.

    The positivity boundary is bracketed with fixed steps and then bisected
    down to `resolution_km`.

    Returns:
        Cutoff in km, or math.inf if the rate is still positive at `horizon_km`

    Raises:
        NoPositiveRateError: If the optimised rate is already zero at l = 0
    """
    mode = RateMode(mode)
    if resolution_km <= 0.0 or step_km <= 0.0:
        raise DomainError("cutoff resolution and step must be positive")

    def positive(distance_km: float) -> bool:
        return optimized_rate(ch, proto, mode, distance_km, domain) > 0.0

    if not positive(0.0):
        raise NoPositiveRateError(f"{mode.value} key rate is zero at l = 0")

    low, high = 0.0, step_km
    while positive(high):
        low = high
        if high >= horizon_km:
            logger.warning(
                f"{mode.value} rate still positive at {horizon_km} km; cutoff reported as infinite",
                extra={"event": "cutoff_horizon", "mode": mode.value},
            )
            return math.inf
        high = min(high + step_km, horizon_km)

    while high - low > resolution_km:
        middle = 0.5 * (low + high)
        if positive(middle):
            low = middle
        else:
            high = middle

    logger.info(
        f"{mode.value} cutoff at {low:.2f} km",
        extra={"event": "cutoff", "mode": mode.value, "distance_km": low},
    )
    return low


def scan_distances(l_min: float, l_max: float, step: float) -> List[float]:
    """Half-open grid l_min + k*step < l_max."""
    if not (0.0 <= l_min < l_max):
        raise DomainError(f"distance range must satisfy 0 <= lmin < lmax, got [{l_min}, {l_max}]")
    if step <= 0.0:
        raise DomainError(f"step must be positive, got {step}")
    distances = []
    k = 0
    while l_min + k * step < l_max:
        distances.append(l_min + k * step)
        k += 1
    return distances


def _scan_row(
    task: Tuple[float, ChannelParams, ProtocolParams, ScanMode, SearchDomain, Optional[SourceConfig]],
) -> ScanRow:
    distance_km, ch, proto, mode, domain, fixed_source = task
    fields = {"distance_km": distance_km, "eta": transmittance(ch, distance_km)}

    if mode.includes_passive:
        if fixed_source is None:
            optimum = optimize_intensities(ch, proto, distance_km, domain)
            point, mu1, mu2, rate = optimum.point, optimum.mu1, optimum.mu2, optimum.rate
        else:
            point = passive_rate(fixed_source, ch, proto, distance_km)
            mu1, mu2, rate = fixed_source.mu1, fixed_source.mu2, point.rate_total
        fields.update(mu1_opt=mu1, mu2_opt=mu2, rate_passive=rate)
        if point is not None and point.observed is not None and point.bounds is not None:
            fields.update(
                q_total=point.observed.q_total,
                e_total=point.observed.e_total,
                q_noclick=point.observed.q_noclick,
                e_noclick=point.observed.e_noclick,
                y1_lower=point.bounds.y1_lower,
                e1_upper=point.bounds.e1_upper,
                y0_lower=point.bounds.y0_lower,
                y0_upper=point.bounds.y0_upper,
            )

    if mode.includes_active:
        mu_active, rate_active = optimize_active_mu(ch, proto, distance_km)
        fields.update(mu_active=mu_active, rate_active=rate_active)

    return ScanRow(**fields)


def scan(
    ch: ChannelParams,
    proto: ProtocolParams,
    l_min: float,
    l_max: float,
    step: float,
    mode: ScanMode = ScanMode.BOTH,
    domain: Optional[SearchDomain] = None,
    workers: int = 1,
    fixed_source: Optional[SourceConfig] = None,
) -> List[ScanRow]:
    """
    Key rates over a distance grid, one row per distance in increasing order.

    Args:
        ch: Channel parameters
        proto: Protocol constants
        l_min, l_max, step: Half-open distance grid
        mode: Which rates to compute
        domain: Passive search box
        workers: Worker processes; rows are returned in distance order regardless
        fixed_source: Use these intensities at every distance instead of re-optimising

    Raises:
        DomainError: On an empty or malformed range
        CertificateError: If fixed_source fails the estimation certificate
    """
    mode = ScanMode(mode)
    domain = domain or SearchDomain()
    if workers < 1:
        raise DomainError(f"workers must be at least 1, got {workers}")

    distances = scan_distances(l_min, l_max, step)
    tasks = [(d, ch, proto, mode, domain, fixed_source) for d in distances]
    logger.info(
        f"Scanning {len(distances)} distances from {distances[0]} km ({mode.value}, workers={workers})",
        extra={"event": "scan_start", "rows": len(distances), "mode": mode.value},
    )

    if workers == 1:
        rows = [_scan_row(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(_scan_row, tasks))

    logger.info("Scan complete", extra={"event": "scan_done", "rows": len(rows)})
    return rows
