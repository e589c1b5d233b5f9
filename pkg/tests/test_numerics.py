import math
import os
import sys
import unittest

import numpy as np
import pytest
from pydantic import ValidationError

# Add project root to path
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.append(project_root)

from core.errors import DomainError
from core.numerics import (
    QuadratureSpec,
    bessel_i,
    binary_entropy,
    log_bessel_i0,
    phase_average,
    poisson_pmf,
    poisson_table,
    scaled_bessel_i,
)


def series_bessel_i(order, z, terms=80):
    """Power series sum_k (z/2)^(2k+order) / (k! (k+order)!)."""
    total = 0.0
    for k in range(terms):
        total += (z / 2.0) ** (2 * k + order) / (math.factorial(k) * math.factorial(k + order))
    return total


class TestBessel(unittest.TestCase):
    def test_values_at_zero(self):
        self.assertEqual(bessel_i(0, 0.0), 1.0)
        self.assertEqual(bessel_i(2, 0.0), 0.0)

    def test_values_at_one(self):
        self.assertAlmostEqual(bessel_i(0, 1.0), 1.2660658778, places=9)
        self.assertAlmostEqual(bessel_i(1, 1.0), 0.5651591040, places=10)

    def test_matches_power_series(self):
        for order in range(4):
            for z in (1e-6, 0.0148, 0.5, 1.0, 5.0, 12.0):
                expected = series_bessel_i(order, z)
                self.assertLessEqual(abs(bessel_i(order, z) - expected), 1e-12 * max(expected, 1e-300))

    def test_recurrence(self):
        for q in range(1, 6):
            for z in (0.5, 1.0, 5.0, 20.0):
                lhs = bessel_i(q - 1, z) - bessel_i(q + 1, z) - (2 * q / z) * bessel_i(q, z)
                self.assertLessEqual(abs(lhs), 1e-10 * bessel_i(q - 1, z))

    def test_domain_guard(self):
        with self.assertRaises(DomainError):
            bessel_i(0, -0.1)
        with self.assertRaises(DomainError):
            bessel_i(0, 700.5)
        with self.assertRaises(DomainError):
            bessel_i(-1, 1.0)

    def test_scaled_and_log_forms(self):
        self.assertAlmostEqual(scaled_bessel_i(1, 1.0), 0.5651591040 * math.exp(-1.0), places=10)
        self.assertAlmostEqual(log_bessel_i0(1.0), math.log(1.2660658778), places=9)
        # Far beyond the overflow point of I_0 itself
        self.assertTrue(math.isfinite(log_bessel_i0(2000.0)))
        self.assertAlmostEqual(log_bessel_i0(2000.0), 2000.0 - 0.5 * math.log(2 * math.pi * 2000.0), places=3)


def test_phase_average_values():
    spec = QuadratureSpec(points=64)
    assert phase_average(lambda theta: 1.0, spec) == pytest.approx(1.0, abs=1e-15)
    assert abs(phase_average(np.cos, spec)) <= 1e-14
    assert phase_average(lambda theta: np.cos(theta) ** 2, spec) == pytest.approx(0.5, abs=1e-14)


def test_phase_average_exact_below_half_the_points():
    spec = QuadratureSpec(points=64)
    assert abs(phase_average(lambda theta: np.cos(31 * theta), spec)) <= 1e-13
    # mean of cos^30 is C(30, 15) / 2^30
    expected = math.comb(30, 15) / 2**30
    assert abs(phase_average(lambda theta: np.cos(theta) ** 30, spec) - expected) <= 1e-13


def test_quadrature_spec_validation():
    assert QuadratureSpec().points == 512
    assert QuadratureSpec(points=64).exact_degree() == 31
    with pytest.raises(ValidationError):
        QuadratureSpec(points=15)
    with pytest.raises(ValidationError):
        QuadratureSpec(points=33)
    with pytest.raises(ValidationError):
        QuadratureSpec(points=8)


def test_binary_entropy():
    assert binary_entropy(0.5) == pytest.approx(1.0, abs=1e-15)
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    expected = -0.11 * math.log2(0.11) - 0.89 * math.log2(0.89)
    assert binary_entropy(0.11) == pytest.approx(expected, abs=1e-14)
    assert binary_entropy(0.11) == pytest.approx(0.49992, abs=1e-4)


def test_binary_entropy_symmetry_and_domain():
    for x in np.linspace(0.0, 1.0, 41):
        assert abs(binary_entropy(float(x)) - binary_entropy(float(1.0 - x))) <= 1e-14
    with pytest.raises(DomainError):
        binary_entropy(-0.01)
    with pytest.raises(DomainError):
        binary_entropy(1.01)


def test_poisson_pmf_values():
    assert poisson_pmf(0.0, 0) == 1.0
    assert poisson_pmf(0.0, 3) == 0.0
    assert poisson_pmf(1.0, 1) == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert poisson_pmf(0.55, 2) == pytest.approx(math.exp(-0.55) * 0.55**2 / 2, rel=1e-13)
    assert poisson_pmf(0.55, 2) == pytest.approx(0.0872, abs=1e-4)


def test_poisson_pmf_large_counts_and_arrays():
    # n! overflows a float long before n = 200
    assert poisson_pmf(150.0, 200) > 0.0
    values = poisson_pmf(np.array([0.0, 0.5, 2.0]), 1)
    assert values.shape == (3,)
    assert values[0] == 0.0
    with pytest.raises(DomainError):
        poisson_pmf(-0.1, 0)
    with pytest.raises(DomainError):
        poisson_pmf(1.0, -1)


def test_poisson_normalization():
    for mu in (0.01, 0.55, 1.0, 5.0, 20.0):
        n_max = int(mu + 20 * math.sqrt(mu) + 30)
        table = poisson_table(np.array([mu]), n_max)
        assert table[:, 0].sum() >= 1.0 - 1e-12
