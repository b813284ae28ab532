"""
Unit tests for subsampling amplification
"""

import numpy as np
import pytest

from src.accounting.subsampling import cp_operator, np_mixture_oracle
from src.tradeoff.curves import CurveKind, TradeoffCurve, inverse, sup_distance, symmetrize, validate
from src.tradeoff.grid import alpha_grid
from src.utils.errors import PrivacyDomainError


class TestCpOperator:
    def test_zero_rate_is_perfect(self):
        assert cp_operator(TradeoffCurve.gaussian(1.0), 0.0).kind == CurveKind.PERFECT

    def test_full_rate_keeps_symmetric_curve(self):
        g = TradeoffCurve.gaussian(1.0)
        assert cp_operator(g, 1.0) is g

    def test_rate_outside_unit_interval(self):
        with pytest.raises(PrivacyDomainError):
            cp_operator(TradeoffCurve.gaussian(1.0), -0.1)

    def test_result_is_valid_and_symmetric(self):
        c = cp_operator(TradeoffCurve.gaussian(1.0), 0.2)
        assert validate(c) == []
        assert sup_distance(inverse(c), c) < 1e-8

    def test_subsampling_never_hurts(self):
        g = TradeoffCurve.gaussian(2.0)
        grid = alpha_grid(513, 4)
        heavy = cp_operator(g, 0.5)
        light = cp_operator(g, 0.05)
        assert np.all(heavy(grid) >= g(grid) - 1e-7)
        assert np.all(light(grid) >= heavy(grid) - 1e-6)


class TestNeymanPearsonOracle:
    """Brute-force optimal test of the subsampled Gaussian pair"""

    @pytest.mark.parametrize("p", [0.01, 0.1, 0.5])
    @pytest.mark.parametrize("sigma", [1.0, 2.0, 4.0])
    def test_matches_operator(self, p, sigma):
        operator = cp_operator(TradeoffCurve.gaussian(1.0 / sigma), p)
        oracle = symmetrize(np_mixture_oracle(p, sigma))
        assert sup_distance(operator, oracle) <= 1e-4

    def test_oracle_is_a_valid_curve(self):
        assert validate(np_mixture_oracle(0.3, 1.0, grid=2001)) == []

    def test_zero_rate(self):
        assert np_mixture_oracle(0.0, 1.0).kind == CurveKind.PERFECT

    def test_bad_arguments(self):
        with pytest.raises(PrivacyDomainError):
            np_mixture_oracle(0.5, 0.0)
        with pytest.raises(PrivacyDomainError):
            np_mixture_oracle(1.5, 1.0)
