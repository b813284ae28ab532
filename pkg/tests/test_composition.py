"""
Unit tests for Gaussian composition, the CLT asymptote and sigma planning
"""

import numpy as np
import pytest

from src.accounting.composition import (
    PlanInput,
    clt_mu,
    clt_mu_rounds,
    compose_gaussian,
    h_of_sigma,
    h_of_sigma_quadrature,
    round_count,
    sigma_for_budget,
)
from src.accounting.pld import RoundSpec, pld_delta
from src.utils.errors import AsymptoticRegimeError, PrivacyDomainError


class TestComposeGaussian:
    def test_root_sum_of_squares(self):
        assert compose_gaussian([3.0, 4.0]).mu == pytest.approx(5.0)

    def test_empty_is_perfect(self):
        assert compose_gaussian([]).mu == 0.0

    def test_negative_rejected(self):
        with pytest.raises(PrivacyDomainError):
            compose_gaussian([1.0, -0.5])


class TestH:
    """h(sigma) in closed form and by quadrature"""

    def test_reference_value(self):
        assert h_of_sigma(1.0) == pytest.approx(1.71014, abs=1e-4)
        assert h_of_sigma(2.0) == pytest.approx(0.62754, abs=1e-4)

    def test_large_sigma_from_above(self):
        assert 5.0 * h_of_sigma(5.0) == pytest.approx(1.0873, abs=1e-3)
        scaled = 1000.0 * h_of_sigma(1000.0)
        assert 1.0 < scaled < 1.0 + 1e-3

    def test_second_order_expansion(self):
        for sigma in (20.0, 50.0, 100.0):
            expansion = np.sqrt(1.0 + 2.0 / (np.sqrt(2.0 * np.pi) * sigma))
            assert sigma * h_of_sigma(sigma) == pytest.approx(expansion, abs=2.0 / sigma ** 2)

    @pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0, 5.0, 20.0])
    def test_quadrature_agrees(self, sigma):
        assert h_of_sigma(sigma) == pytest.approx(h_of_sigma_quadrature(sigma), rel=1e-6)

    def test_sigma_must_be_positive(self):
        with pytest.raises(PrivacyDomainError):
            h_of_sigma(0.0)


class TestCltMu:
    @pytest.mark.parametrize("N,m,E,rounds", [
        (100, 30, 3, 10),
        (256, 16, 1.5, 24),
        (30, 1, 0.1, 3),
        (1000, 100, 0.01, 1),
    ])
    def test_round_count_rounds_up(self, N, m, E, rounds):
        assert round_count(N, m, E) == rounds
        assert PlanInput(N, m, E, 1.0).T == rounds

    def test_plan_example(self):
        plan = PlanInput(N=10_000, m=100, E=10, sigma=2.0)
        assert plan.T == 1000
        assert plan.p == 0.01
        guarantee = clt_mu(plan)
        assert guarantee.mu == pytest.approx(0.19845, abs=1e-5)
        assert guarantee.asymptotic

    def test_rounds_form_agrees(self):
        assert clt_mu_rounds(0.01, 2.0, 1000).mu == pytest.approx(clt_mu(PlanInput(10_000, 100, 10, 2.0)).mu)

    def test_small_sigma_refused(self):
        with pytest.raises(AsymptoticRegimeError):
            clt_mu(PlanInput(10_000, 100, 10, 0.3))
        with pytest.raises(AsymptoticRegimeError):
            clt_mu_rounds(0.01, 0.49, 100)

    @pytest.mark.parametrize("N,m,E,sigma", [
        (100, 200, 1, 1.0),
        (100, 0, 1, 1.0),
        (100, 10, 0, 1.0),
        (100, 10, 1, -1.0),
    ])
    def test_invalid_plan(self, N, m, E, sigma):
        with pytest.raises(PrivacyDomainError):
            PlanInput(N, m, E, sigma)


class TestSigmaForBudget:
    def test_reference_value(self):
        calibrated = sigma_for_budget(2.0, 1e-5, 10_000, 100, 10_000)
        assert calibrated.sigma == pytest.approx(3.6760, abs=1e-4)
        assert calibrated.certified
        assert calibrated.max_rounds == pytest.approx(10_000)

    def test_too_many_rounds_not_certified(self):
        assert not sigma_for_budget(2.0, 1e-5, 10_000, 100, 20_000).certified

    def test_invalid_targets(self):
        with pytest.raises(PrivacyDomainError):
            sigma_for_budget(0.0, 1e-5, 100, 10, 10)
        with pytest.raises(PrivacyDomainError):
            sigma_for_budget(1.0, 1.0, 100, 10, 10)

    @pytest.mark.parametrize("eps,delta,N,m", [
        (2.0, 1e-5, 10_000, 100),
        (1.0, 1e-5, 10_000, 100),
        (4.0, 1e-5, 10_000, 100),
        (2.0, 1e-6, 60_000, 600),
        (0.5, 1e-5, 10_000, 200),
    ])
    def test_numeric_confirmation_at_certified_rounds(self, eps, delta, N, m):
        calibrated = sigma_for_budget(eps, delta, N, m, 1)
        T = int(calibrated.max_rounds)
        numeric = pld_delta([RoundSpec(m / N, calibrated.sigma, T)], [eps])
        assert numeric[0] <= delta
