"""
Unit tests for the privacy ledger and its reports
"""

import json

import numpy as np
import pytest

from src.accounting.gaussian_dp import delta_of_eps, eps_of_delta
from src.accounting.ledger import AccountLedger, clt_delta_curve, ledger_report
from src.accounting.pld import RoundSpec
from src.utils.errors import ConfigError, LedgerError, PrivacyDomainError

COARSE = 1e-3


@pytest.fixture
def full_batch_ledger():
    """Four full-batch rounds at sigma=2, exactly 1-GDP"""
    return AccountLedger([RoundSpec(1.0, 2.0, 4)], target_delta=1e-5)


class TestAccountLedger:
    def test_append_merges_equal_mechanisms(self):
        ledger = AccountLedger()
        ledger.append(RoundSpec(0.1, 1.0)).append(RoundSpec(0.1, 1.0, 4))
        assert ledger.rounds == [RoundSpec(0.1, 1.0, 5)]
        assert ledger.total_rounds == 5

    def test_different_mechanisms_stay_separate(self):
        ledger = AccountLedger()
        ledger.append(RoundSpec(0.1, 1.0)).append(RoundSpec(0.2, 1.0)).append(RoundSpec(0.1, 1.0))
        assert len(ledger.rounds) == 3
        assert not ledger.is_homogeneous

    def test_empty_ledger_is_not_homogeneous(self):
        assert not AccountLedger().is_homogeneous

    def test_json_form(self):
        ledger = AccountLedger([RoundSpec(0.01, 2.0, 10)], target_delta=1e-6, budget_eps=3.0)
        back = AccountLedger.from_dict(json.loads(json.dumps(ledger.to_dict())))
        assert back == ledger

    def test_missing_count_defaults_to_one(self):
        ledger = AccountLedger.from_dict({"rounds": [{"p": 0.5, "sigma": 1.0}]})
        assert ledger.rounds == [RoundSpec(0.5, 1.0, 1)]
        assert ledger.target_delta == 1e-5

    @pytest.mark.parametrize("payload,field", [
        ([], "ledger"),
        ({"rounds": {}}, "rounds"),
        ({"rounds": [{"p": 0.5, "sigma": 1.0}, {"p": 0.5}]}, "rounds[1]"),
        ({"rounds": [{"p": 2.0, "sigma": 1.0}]}, "rounds[0]"),
        ({"target_delta": "tiny"}, "target_delta"),
        ({"target_delta": 0.0}, "target_delta"),
    ])
    def test_malformed_payload_names_field(self, payload, field):
        with pytest.raises(ConfigError) as info:
            AccountLedger.from_dict(payload)
        assert info.value.field == field


class TestLedgerReport:
    def test_empty_ledger(self):
        with pytest.raises(LedgerError):
            ledger_report(AccountLedger())

    def test_bad_group(self, full_batch_ledger):
        with pytest.raises(PrivacyDomainError):
            ledger_report(full_batch_ledger, group=0, resolution=COARSE)

    def test_full_batch_closed_form(self, full_batch_ledger):
        report = ledger_report(full_batch_ledger, resolution=COARSE)
        clt = report.entry("clt")
        assert clt.mu == pytest.approx(1.0, rel=1e-12)
        assert clt.zcdp_rho == pytest.approx(0.5)
        assert clt.eps_at_delta == pytest.approx(eps_of_delta(1.0, 1e-5))

        pld = report.entry("pld")
        assert pld.eps_at_delta >= clt.eps_at_delta - 1e-6
        assert pld.eps_at_delta - clt.eps_at_delta < 0.05
        assert report.eps == pld.eps_at_delta

    def test_budget_points_decrease(self, full_batch_ledger):
        report = ledger_report(full_batch_ledger, resolution=COARSE)
        points = sorted(report.budget_points)
        assert points == [0.5, 1.0, 2.0, 4.0, 8.0]
        values = [report.budget_points[e] for e in points]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert report.budget_points[1.0] == pytest.approx(float(delta_of_eps(1.0, 1.0)), abs=1e-4)

    def test_group_scaling(self, full_batch_ledger):
        single = ledger_report(full_batch_ledger, resolution=COARSE)
        pair = ledger_report(full_batch_ledger, group=2, resolution=COARSE)
        assert pair.entry("clt").mu == pytest.approx(2.0)
        assert pair.entry("clt").zcdp_rho == pytest.approx(2.0)
        assert pair.entry("pld").group == 2
        assert pair.eps > single.eps

    def test_budget_flag(self, full_batch_ledger):
        full_batch_ledger.budget_eps = 1.0
        assert ledger_report(full_batch_ledger, resolution=COARSE).budget_exceeded
        full_batch_ledger.budget_eps = 50.0
        assert not ledger_report(full_batch_ledger, resolution=COARSE).budget_exceeded

    def test_heterogeneous_ledger_reports_pld_only(self):
        ledger = AccountLedger([RoundSpec(0.1, 1.0, 5), RoundSpec(0.2, 1.0, 5)])
        report = ledger_report(ledger, resolution=COARSE)
        assert report.entry("clt") is None
        assert report.entry("pld").p is None
        assert report.warnings

    def test_small_sigma_skips_clt(self):
        ledger = AccountLedger([RoundSpec(0.1, 0.4, 10)])
        report = ledger_report(ledger, resolution=COARSE)
        assert report.entry("clt") is None
        assert any("refused" in w for w in report.warnings)
        assert report.eps is not None

    def test_report_json_form(self, full_batch_ledger):
        payload = json.loads(json.dumps(ledger_report(full_batch_ledger, resolution=COARSE).to_dict()))
        assert [r["method"] for r in payload["reports"]] == ["clt", "pld"]
        assert "0.5" in payload["delta_at_eps"]
        assert payload["budget_exceeded"] is False


class TestLedgerGrowth:
    """Appending rounds can only spend more budget"""

    def test_eps_never_decreases_over_random_appends(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            ledger = AccountLedger(target_delta=1e-5)
            previous = 0.0
            for _ in range(3):
                spec = RoundSpec(float(rng.choice([0.01, 0.05, 0.2, 1.0])),
                                 float(rng.choice([1.5, 2.0, 4.0])),
                                 int(rng.integers(1, 20)))
                ledger.append(spec)
                eps = ledger_report(ledger, resolution=COARSE).entry("pld").eps_at_delta
                assert eps >= previous - 1e-6
                previous = eps


def test_clt_delta_curve_matches_closed_form():
    eps = np.array([0.0, 1.0, 2.0])
    np.testing.assert_allclose(clt_delta_curve(0.5, eps), delta_of_eps(0.5, eps))
