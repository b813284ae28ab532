"""
Unit tests for numeric composition with privacy-loss distributions
"""

import numpy as np
import pytest

from src.accounting.composition import clt_mu_rounds
from src.accounting.gaussian_dp import delta_of_eps, gaussian_curve
from src.accounting.pld import (
    PrivacyLossDistribution,
    RoundSpec,
    add_profile,
    compose_rounds,
    pld_delta,
    remove_profile,
    round_profile,
)
from src.accounting.subsampling import cp_operator
from src.tradeoff.curves import curve_delta
from src.tradeoff.normal import gaussian_delta
from src.utils.errors import PrivacyDomainError, ResolutionError, UnreachableDeltaError

COARSE = 1e-3


class TestRoundSpec:
    @pytest.mark.parametrize("p,sigma,count", [
        (-0.1, 1.0, 1),
        (1.1, 1.0, 1),
        (0.5, 0.0, 1),
        (0.5, float("inf"), 1),
        (0.5, 1.0, 0),
        (0.5, 1.0, 2.5),
    ])
    def test_invalid(self, p, sigma, count):
        with pytest.raises(PrivacyDomainError):
            RoundSpec(p, sigma, count)

    def test_same_mechanism_ignores_count(self):
        assert RoundSpec(0.1, 2.0, 3).same_mechanism(RoundSpec(0.1, 2.0, 7))
        assert not RoundSpec(0.1, 2.0).same_mechanism(RoundSpec(0.2, 2.0))


class TestRoundProfile:
    """Excess delta of one subsampled round"""

    def test_full_batch_is_gaussian(self):
        eps = np.array([0.0, 0.5, 1.0, 3.0])
        np.testing.assert_allclose(round_profile(1.0, 2.0, eps), gaussian_delta(0.5, eps), rtol=1e-12)

    def test_symmetrized_profile_dominates_both_directions(self):
        eps = np.linspace(-2.0, 2.0, 41)
        both = round_profile(0.2, 1.0, eps)
        assert np.all(both >= remove_profile(0.2, 1.0, eps))
        assert np.all(both >= add_profile(0.2, 1.0, eps))

    def test_matches_operator_profile(self):
        p, sigma = 0.1, 1.0
        eps = np.array([0.0, 0.25, 0.5, 1.0])
        operator = cp_operator(gaussian_curve(1.0 / sigma), p)
        np.testing.assert_allclose(round_profile(p, sigma, eps), curve_delta(operator, eps), atol=1e-5)


class TestPrivacyLossDistribution:
    def test_delta_of_two_atoms(self):
        pld = PrivacyLossDistribution(np.array([0.5, 0.5]), 0, 1.0)
        assert pld.delta(0.0) == pytest.approx(0.5 * (1.0 - np.exp(-1.0)))
        assert pld.delta(1.0) == 0.0

    def test_infinite_mass_blocks_small_delta(self):
        pld = PrivacyLossDistribution(np.array([0.5]), 0, 1e-4, infinity_mass=0.5)
        with pytest.raises(UnreachableDeltaError):
            pld.epsilon(0.1)

    def test_single_full_batch_round_exact_on_grid(self):
        pld = PrivacyLossDistribution.subsampled_gaussian(1.0, 2.0)
        eps = np.array([0.0, 0.5, 1.0, 2.0])
        exact = gaussian_delta(0.5, eps)
        numeric = pld.delta(eps)
        assert np.all(numeric >= exact - 1e-12)
        np.testing.assert_allclose(numeric, exact, atol=1e-9)

    def test_identity_for_zero_rate(self):
        pld = PrivacyLossDistribution.subsampled_gaussian(0.0, 1.0)
        assert pld.delta(0.0) == 0.0

    def test_different_grids_do_not_compose(self):
        a = PrivacyLossDistribution.identity(1e-3)
        b = PrivacyLossDistribution.identity(1e-4)
        with pytest.raises(PrivacyDomainError):
            a.compose(b)

    def test_trim_moves_top_tail_to_infinity(self):
        pld = PrivacyLossDistribution(np.array([0.6, 0.4 - 1e-20, 1e-20]), 0, 1.0)
        trimmed = pld.trim()
        assert len(trimmed.masses) == 2
        assert trimmed.infinity_mass == pytest.approx(1e-20)
        assert trimmed.overflow == pytest.approx(1e-20)


class TestComposeRounds:
    def test_full_batch_rounds_are_gaussian(self):
        eps = np.linspace(0.0, 5.0, 20)
        numeric = pld_delta([RoundSpec(1.0, 2.0, 4)], eps)
        np.testing.assert_allclose(numeric, delta_of_eps(1.0, eps), atol=1e-6)

    def test_order_does_not_matter(self):
        a, b = RoundSpec(0.1, 1.0, 3), RoundSpec(0.3, 2.0, 2)
        eps = np.array([0.0, 0.5, 1.0])
        forward = pld_delta([a, b], eps, resolution=COARSE)
        backward = pld_delta([b, a], eps, resolution=COARSE)
        np.testing.assert_allclose(forward, backward, atol=1e-10)

    def test_count_equals_repetition(self):
        eps = np.array([0.0, 1.0])
        merged = pld_delta([RoundSpec(0.2, 1.5, 2)], eps, resolution=COARSE)
        split = pld_delta([RoundSpec(0.2, 1.5), RoundSpec(0.2, 1.5)], eps, resolution=COARSE)
        np.testing.assert_allclose(merged, split, atol=1e-9)

    def test_more_rounds_cost_more(self):
        eps = np.array([0.5, 1.0])
        few = pld_delta([RoundSpec(0.1, 1.0, 10)], eps, resolution=COARSE)
        many = pld_delta([RoundSpec(0.1, 1.0, 20)], eps, resolution=COARSE)
        assert np.all(many > few)

    def test_zero_rate_rounds_are_free(self):
        assert compose_rounds([RoundSpec(0.0, 1.0, 50)]).delta(0.0) == 0.0

    def test_narrow_window_raises(self):
        with pytest.raises(ResolutionError):
            pld_delta([RoundSpec(1.0, 2.0, 16)], [0.0], resolution=COARSE, tail_sigmas=1.0)

    def test_negative_eps_rejected(self):
        with pytest.raises(PrivacyDomainError):
            pld_delta([RoundSpec(1.0, 2.0)], [-1.0])

    def test_epsilon_inverts_delta(self):
        pld = compose_rounds([RoundSpec(1.0, 2.0, 4)])
        target = float(delta_of_eps(1.0, 1.0))
        assert pld.epsilon(target) == pytest.approx(1.0, abs=1e-4)


class TestCentralLimit:
    """Numeric composition against the asymptotic Gaussian guarantee"""

    def test_many_subsampled_rounds_approach_gaussian(self):
        eps = np.linspace(0.05, 5.0, 34)
        mu = clt_mu_rounds(0.01, 2.0, 1000).mu
        assert mu == pytest.approx(0.19845, abs=1e-5)
        numeric = pld_delta([RoundSpec(0.01, 2.0, 1000)], eps)
        np.testing.assert_allclose(numeric, delta_of_eps(mu, eps), atol=5e-3)
