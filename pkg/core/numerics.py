"""
core/numerics.py - Special functions and quadrature shared by every model module

Bessel functions come from scipy.special with the domain guards the models
rely on; the phase average is the equispaced trapezoid rule on one full
period, which is spectrally accurate for smooth periodic integrands.
"""

import logging
import math
from typing import Callable, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import special

from core.errors import DomainError

logger = logging.getLogger(__name__)

BESSEL_MAX_ARGUMENT = 700.0
DEFAULT_QUADRATURE_POINTS = 512

ArrayLike = Union[float, np.ndarray]


class QuadratureSpec(BaseModel):
    """Equispaced nodes on [0, 2*pi) for the phase average."""

    model_config = ConfigDict(frozen=True)

    points: int = Field(DEFAULT_QUADRATURE_POINTS, ge=16, description="Number of nodes (even, >= 16)")

    @field_validator("points")
    @classmethod
    def validate_even(cls, v: int) -> int:
        if v % 2:
            raise ValueError("points must be even")
        return v

    def nodes(self) -> np.ndarray:
        """Return the node angles 2*pi*k/points for k = 0..points-1."""
        return 2.0 * np.pi * np.arange(self.points) / self.points

    def exact_degree(self) -> int:
        """Largest trigonometric-polynomial degree integrated exactly with margin (points/2 - 1)."""
        return self.points // 2 - 1


def _check_count(name: str, value: int) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    if value < 0:
        raise DomainError(f"{name} must be non-negative, got {value}")
    return int(value)


def bessel_i(order: int, z: float) -> float:
    """
    Modified Bessel function of the first kind I_order(z).

    Args:
        order: Non-negative integer order
        z: Real argument in [0, 700]

    Returns:
        I_order(z), non-negative

    Raises:
        DomainError: If order is negative or z lies outside [0, 700]
    """
    order = _check_count("order", order)
    if not (0.0 <= z <= BESSEL_MAX_ARGUMENT):
        raise DomainError(f"bessel_i argument must lie in [0, {BESSEL_MAX_ARGUMENT}], got {z}")
    return float(special.iv(order, z))


def scaled_bessel_i(order: int, z: float) -> float:
    """e^{-z} I_order(z); finite for every z >= 0."""
    order = _check_count("order", order)
    if z < 0.0:
        raise DomainError(f"scaled_bessel_i argument must be non-negative, got {z}")
    return float(special.ive(order, z))


def log_bessel_i0(z: float) -> float:
    """log I_0(z) through the exponentially scaled function, safe for any z >= 0."""
    if z < 0.0:
        raise DomainError(f"log_bessel_i0 argument must be non-negative, got {z}")
    return float(np.log(special.ive(0, z)) + z)


def phase_average(integrand: Callable[[np.ndarray], ArrayLike], spec: QuadratureSpec | None = None) -> float:
    """
    Average of a 2*pi-periodic integrand over one period.

    The integrand is called once with the full node array and must be
    vectorised (a constant return value is broadcast).

    Args:
        integrand: Function of the phase angle theta
        spec: Quadrature nodes (defaults to 512 points)

    Returns:
        (1/2pi) * integral of integrand over [0, 2pi)
    """
    spec = spec or QuadratureSpec()
    thetas = spec.nodes()
    values = np.broadcast_to(np.asarray(integrand(thetas), dtype=float), thetas.shape)
    return float(values.mean())


def binary_entropy(x: float) -> float:
    """
    Binary Shannon entropy H(x) in bits, with H(0) = H(1) = 0.

    Raises:
        DomainError: If x lies outside [0, 1]
    """
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"binary_entropy argument must lie in [0, 1], got {x}")
    return float((special.entr(x) + special.entr(1.0 - x)) / math.log(2.0))


def poisson_pmf(mean: ArrayLike, n: int) -> ArrayLike:
    """
    Poisson probability e^{-mean} mean^n / n!, evaluated in log space.

    `mean` may be a scalar or an array (evaluated element-wise); a scalar
    argument returns a float.

    Raises:
        DomainError: If any mean is negative or n is not a non-negative integer
    """
    n = _check_count("n", n)
    means = np.asarray(mean, dtype=float)
    if np.any(means < 0.0):
        raise DomainError(f"poisson_pmf mean must be non-negative, got {mean}")
    values = np.exp(special.xlogy(n, means) - means - special.gammaln(n + 1))
    if values.ndim == 0:
        return float(values)
    return values


def poisson_table(means: np.ndarray, n_max: int) -> np.ndarray:
    """
    Poisson probabilities for every count 0..n_max and every mean.

    Returns:
        Array of shape (n_max + 1, len(means)); row n holds poisson_pmf(means, n)
    """
    n_max = _check_count("n_max", n_max)
    means = np.asarray(means, dtype=float)
    if np.any(means < 0.0):
        raise DomainError("poisson_table means must be non-negative")
    counts = np.arange(n_max + 1, dtype=float)[:, None]
    log_terms = special.xlogy(counts, means[None, :]) - means[None, :] - special.gammaln(counts + 1.0)
    return np.exp(log_terms)
