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

from core.errors import DegenerateBranchError, DomainError, TruncationError
from core.numerics import QuadratureSpec, poisson_pmf
from core.photon_stats import (
    PhotonDistribution,
    SourceConfig,
    click_distribution,
    click_prob,
    conditional_distributions,
    derive,
    estimation_certificate,
    joint_matrix,
    joint_prob,
    low_order_closed_forms,
    noclick_distribution,
    noclick_prob,
    noclick_total,
    total_distribution,
    total_prob,
    total_variation_from_poisson,
)

# I_0(1), I_1(1), I_2(1)
I0_ONE = 1.2660658777520082
I1_ONE = 0.5651591039924851
I2_ONE = 0.1357476697670383

SYMMETRIC = SourceConfig(mu1=1.0, mu2=1.0, t=0.5)
OPERATING_POINT = SourceConfig(mu1=0.55, mu2=1e-4, t=0.5)
FINE = QuadratureSpec(points=4096)

GRID = [
    SourceConfig(mu1=mu1, mu2=mu2, t=t)
    for mu1 in (1e-4, 0.1, 0.55, 1.0, 2.0)
    for mu2 in (1e-4, 0.1, 0.55, 1.0, 2.0)
    for t in (0.1, 0.5, 0.9)
]


class TestDerive(unittest.TestCase):
    def test_symmetric_point(self):
        params = derive(SYMMETRIC)
        self.assertEqual(params.upsilon, 2.0)
        self.assertAlmostEqual(params.xi, 1.0, places=15)
        self.assertEqual(params.omega, 1.0)

    def test_single_source(self):
        params = derive(SourceConfig(mu1=1.0, mu2=0.0, t=0.3))
        self.assertEqual(params.upsilon, 1.0)
        self.assertEqual(params.xi, 0.0)
        self.assertAlmostEqual(params.omega, 0.3, places=15)

    def test_operating_point(self):
        params = derive(OPERATING_POINT)
        self.assertAlmostEqual(params.upsilon, 0.5501, places=15)
        self.assertAlmostEqual(params.xi, 2 * math.sqrt(0.55 * 1e-4 * 0.25), places=15)
        self.assertAlmostEqual(params.xi, 0.0074162, places=7)
        self.assertAlmostEqual(params.omega, 0.27505, places=15)

    def test_gamma_stays_in_unit_interval(self):
        params = derive(SourceConfig(mu1=0.3, mu2=2.0, t=0.2))
        gamma = params.gamma(np.linspace(0, 2 * np.pi, 97))
        self.assertTrue(np.all(gamma >= 0.0) and np.all(gamma <= 1.0))
        self.assertTrue(np.all(derive(SourceConfig(mu1=0.0, mu2=0.0)).gamma(np.zeros(3)) == 0.0))

    def test_invalid_source(self):
        with self.assertRaises(ValidationError):
            SourceConfig(mu1=-0.1, mu2=0.5)
        with self.assertRaises(ValidationError):
            SourceConfig(mu1=0.1, mu2=0.5, t=1.5)


def test_joint_prob_values():
    assert joint_prob(SYMMETRIC, 0, 0) == pytest.approx(math.exp(-2.0), rel=1e-13)
    single = SourceConfig(mu1=1.0, mu2=0.0, t=0.5)
    assert joint_prob(single, 1, 1) == pytest.approx(poisson_pmf(0.5, 1) ** 2, rel=1e-13)
    assert joint_prob(single, 1, 1) == pytest.approx(0.0919699, abs=1e-7)
    assert joint_prob(SYMMETRIC, 2, 0, FINE) == pytest.approx(0.75 * math.exp(-2.0), rel=1e-12)


def test_total_prob_values():
    assert total_prob(SYMMETRIC, 0, FINE) == pytest.approx(I0_ONE * math.exp(-1.0), rel=1e-12)
    assert total_prob(SYMMETRIC, 0) == pytest.approx(0.4657596076, abs=1e-10)
    assert total_prob(SourceConfig(mu1=1.0, mu2=0.0, t=0.5), 1) == pytest.approx(0.3032653299, abs=1e-10)
    # [omega I_0(xi) - xi I_1(xi)] e^{-omega} with omega = xi = 1
    assert total_prob(SYMMETRIC, 1, FINE) == pytest.approx((I0_ONE - I1_ONE) * math.exp(-1.0), rel=1e-12)
    assert total_prob(SYMMETRIC, 1) == pytest.approx(0.2578491922, abs=1e-9)


def test_noclick_and_click_values():
    e2 = math.exp(-2.0)
    assert noclick_prob(SYMMETRIC, 0) == pytest.approx(e2, rel=1e-13)
    assert noclick_prob(SYMMETRIC, 1, FINE) == pytest.approx(e2, rel=1e-12)
    assert noclick_prob(SYMMETRIC, 2, FINE) == pytest.approx(0.75 * e2, rel=1e-12)

    assert click_prob(SYMMETRIC, 0) == pytest.approx(0.4657596076 - e2, abs=1e-9)
    assert click_prob(SYMMETRIC, 1) == pytest.approx((I0_ONE - I1_ONE) * math.exp(-1.0) - e2, abs=1e-12)
    # t = 1 sends pulse 1 entirely to mode a; the detector never sees light
    assert click_prob(SourceConfig(mu1=1.0, mu2=0.0, t=1.0), 0) == 0.0
    assert click_prob(SourceConfig(mu1=1.0, mu2=0.0, t=1.0), 3) == 0.0


def test_noclick_total_values():
    assert noclick_total(SourceConfig(mu1=0.0, mu2=0.0)) == 1.0
    assert noclick_total(SYMMETRIC) == pytest.approx(math.exp(-1.0) * I0_ONE, rel=1e-14)
    assert noclick_total(SourceConfig(mu1=1.0, mu2=0.0, t=0.3)) == pytest.approx(math.exp(-0.7), rel=1e-14)
    noclick = noclick_distribution(SYMMETRIC)
    assert abs(noclick_total(SYMMETRIC) - noclick.probs.sum()) <= 1e-10


def test_conditional_distributions_symmetric_point():
    r_click, r_noclick = conditional_distributions(SYMMETRIC)
    assert r_noclick[0] == pytest.approx(math.exp(-1.0) / I0_ONE, rel=1e-12)
    assert r_noclick[0] == pytest.approx(0.290569, abs=1e-6)
    # No click selects phases where most of the light left through mode a
    assert r_noclick.mean() == pytest.approx(1.4463899659, abs=1e-8)
    assert r_click.mean() == pytest.approx(0.6108298468, abs=1e-8)
    assert r_noclick.mean() > 1.0 > r_click.mean()
    assert abs(1.0 - r_click.probs.sum()) <= 1e-10
    assert abs(1.0 - r_noclick.probs.sum()) <= 1e-10


def test_conditional_distributions_degenerate():
    with pytest.raises(DegenerateBranchError):
        conditional_distributions(SourceConfig(mu1=0.0, mu2=0.0))
    with pytest.raises(DomainError):
        conditional_distributions(SYMMETRIC, n_max=1)


def test_non_poissonian_witness():
    r_click, r_noclick = conditional_distributions(SYMMETRIC)
    tv_click = total_variation_from_poisson(r_click)
    tv_noclick = total_variation_from_poisson(r_noclick)
    print(f"TV(r^c, Poisson) = {tv_click:.6f}, TV(r^nc, Poisson) = {tv_noclick:.6f}")
    assert tv_click > 0.01
    assert tv_noclick > 0.01
    # A Poissonian input stays Poissonian
    assert total_variation_from_poisson(total_distribution(SourceConfig(mu1=1.0, mu2=0.0, t=0.5))) <= 1e-12


def test_low_order_closed_forms_values():
    e2 = math.exp(-2.0)
    stats = low_order_closed_forms(SYMMETRIC)
    assert stats.noclick == pytest.approx((e2, e2, 0.75 * e2), rel=1e-14)
    expected_total = (
        I0_ONE * math.exp(-1.0),
        (I0_ONE - I1_ONE) * math.exp(-1.0),
        (I0_ONE - I1_ONE + I2_ONE) * math.exp(-1.0) / 2.0,
    )
    assert stats.total == pytest.approx(expected_total, rel=1e-13)
    assert stats.total[2] == pytest.approx(0.1538940, abs=1e-7)

    single = low_order_closed_forms(SourceConfig(mu1=0.5, mu2=0.0, t=0.5))
    for n in range(3):
        assert single.total[n] == pytest.approx(poisson_pmf(0.25, n), rel=1e-13)
        assert single.noclick[n] == pytest.approx(math.exp(-0.25) * poisson_pmf(0.25, n), rel=1e-13)
    assert single.noclick[0] == pytest.approx(math.exp(-0.5), rel=1e-14)


def test_closed_forms_match_quadrature_on_grid():
    worst = 0.0
    for cfg in GRID:
        stats = low_order_closed_forms(cfg)
        numeric = [noclick_prob(cfg, n) for n in range(3)] + [total_prob(cfg, n) for n in range(3)]
        for closed, quad in zip(stats.as_tuple(), numeric):
            worst = max(worst, abs(closed - quad) / closed)
    assert worst <= 1e-10


def test_click_branch_of_low_order_stats():
    stats = low_order_closed_forms(SYMMETRIC)
    for n in range(3):
        assert stats.click[n] + stats.noclick[n] == pytest.approx(stats.total[n], rel=1e-15)
        assert stats.click[n] >= 0.0


def test_estimation_certificate():
    symmetric = estimation_certificate(SYMMETRIC)
    assert symmetric.valid
    assert symmetric.d1 > 0.0
    assert symmetric.d_e == pytest.approx(symmetric.d0, rel=1e-15)

    for t in (0.1, 0.5, 0.9):
        degenerate = estimation_certificate(SourceConfig(mu1=1.0, mu2=0.0, t=t))
        assert not degenerate.valid
        assert abs(degenerate.d1) <= 1e-15 and abs(degenerate.d0) <= 1e-15
        assert degenerate.reasons

    assert estimation_certificate(OPERATING_POINT).valid
    assert estimation_certificate(SourceConfig(mu1=1e-4, mu2=0.55, t=0.5)).valid


class TestDistributionInvariants(unittest.TestCase):
    CONFIGS = [
        SourceConfig(mu1=1.0, mu2=1.0, t=0.5),
        SourceConfig(mu1=2.5, mu2=2.5, t=0.3),
        SourceConfig(mu1=1e-4, mu2=0.55, t=0.5),
        SourceConfig(mu1=4.0, mu2=0.7, t=0.8),
    ]

    def test_joint_normalization(self):
        for cfg in self.CONFIGS:
            self.assertGreaterEqual(joint_matrix(cfg).sum(), 1.0 - 1e-10)

    def test_marginal_consistency(self):
        for cfg in self.CONFIGS:
            joint = joint_matrix(cfg)
            for n in range(21):
                self.assertLessEqual(abs(joint[n].sum() - total_prob(cfg, n)), 1e-10)

    def test_mode_a_mean(self):
        for cfg in self.CONFIGS:
            dist = total_distribution(cfg)
            counts = np.arange(dist.n_max + 1)
            self.assertLessEqual(abs(float(np.dot(counts, dist.probs)) - derive(cfg).omega), 1e-9)

    def test_symmetry_at_half(self):
        joint = joint_matrix(SourceConfig(mu1=0.8, mu2=0.3, t=0.5), n_max=20)
        self.assertLessEqual(float(np.max(np.abs(joint - joint.T))), 1e-12)

    def test_relabeling_invariance(self):
        a = joint_matrix(SourceConfig(mu1=0.8, mu2=0.3, t=0.2), n_max=20)
        b = joint_matrix(SourceConfig(mu1=0.3, mu2=0.8, t=0.8), n_max=20)
        self.assertLessEqual(float(np.max(np.abs(a - b))), 1e-13)

    def test_degenerate_factorization(self):
        cfg = SourceConfig(mu1=1.3, mu2=0.0, t=0.4)
        joint = joint_matrix(cfg, n_max=15)
        for n in range(16):
            for m in range(16):
                expected = poisson_pmf(1.3 * 0.4, n) * poisson_pmf(1.3 * 0.6, m)
                self.assertLessEqual(abs(joint[n, m] - expected), 1e-12)

    def test_branch_completeness(self):
        for cfg in self.CONFIGS:
            total = total_distribution(cfg)
            noclick = noclick_distribution(cfg)
            click = click_distribution(cfg)
            self.assertGreaterEqual(float((click.probs + noclick.probs).sum()), 1.0 - 1e-10)
            self.assertLessEqual(float(np.max(np.abs(click.probs + noclick.probs - total.probs))), 1e-15)
            self.assertLessEqual(abs(noclick_total(cfg) - float(noclick.probs.sum())), 1e-10)


def test_photon_distribution_validation():
    dist = PhotonDistribution(np.array([0.5, 0.3, 0.2]), n_max=2, tail_mass=0.0)
    assert len(dist) == 3
    assert dist[1] == 0.3
    with pytest.raises(ValueError):
        dist.probs[0] = 0.1
    with pytest.raises(DomainError):
        PhotonDistribution(np.array([0.5, 0.5]), n_max=2, tail_mass=0.0)
    with pytest.raises(TruncationError):
        PhotonDistribution(np.array([0.5, 0.3, 0.1]), n_max=2, tail_mass=0.1)


def test_truncation_error_for_bright_sources():
    with pytest.raises(TruncationError):
        total_distribution(SourceConfig(mu1=30.0, mu2=30.0, t=0.5), n_max=20)
