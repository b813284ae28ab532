"""
End-to-end tests of the command-line entry point
"""

import json

import numpy as np
import pytest

from main import main
from src.accounting.gaussian_dp import delta_of_eps
from src.cli import selfcheck
from src.simulation import simulator
from src.tradeoff.curves import validate
from src.tradeoff.io import CSV_HEADER, curve_from_json, read_curve_csv
from src.utils.errors import DivergenceError


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    """Isolated working directory with coarse, fast settings"""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("DPLEDGER_OUTPUT_DIR", raising=False)
    settings = tmp_path / "settings.json"
    settings.write_text(json.dumps({
        "pld_resolution": 1e-3,
        "tail_knots": 0,
        "output_dir": str(tmp_path / "out"),
        "log_file": str(tmp_path / "logs" / "dpledger.log"),
    }))
    return tmp_path


def run(workspace, *argv) -> int:
    return main(["--settings", str(workspace / "settings.json"), *argv])


def write_run_config(path, **overrides):
    raw = {
        "seed": 1,
        "data": [{"N": 128, "test_size": 64}],
        "clients": [{"m": 16, "E": 2, "clip": 1.0, "sigma": 1.0}],
        "server": {"step_schedule": {"rule": "constant", "eta0": 0.5}},
        "accounting": {"delta": 1e-5, "budget_eps": 100.0},
    }
    raw.update(overrides)
    path.write_text(json.dumps(raw))
    return path


class TestParser:
    def test_missing_verb(self, workspace):
        assert run(workspace) == 2

    def test_unknown_verb(self, workspace):
        assert run(workspace, "audit") == 2

    def test_help(self, workspace, capsys):
        assert run(workspace, "--help") == 0
        assert "simulate" in capsys.readouterr().out

    def test_log_file_created(self, workspace):
        run(workspace, "plan", "--N", "100")
        assert (workspace / "logs" / "dpledger.log").exists()


class TestPlan:
    def test_forward(self, workspace):
        out = workspace / "plan.json"
        code = run(workspace, "plan", "--N", "10000", "--m", "100", "--E", "10", "--sigma", "2",
                   "--delta", "1e-4", "--out", str(out))
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["T"] == 1000
        clt = payload["report"]["reports"][0]
        assert clt["method"] == "clt"
        assert clt["mu"] == pytest.approx(0.19845, abs=1e-5)
        assert clt["delta"] == 1e-4
        profile = payload["clt_delta_curve"]
        assert profile["eps"] == [0.5, 1.0, 2.0, 4.0, 8.0]
        expected = np.asarray(delta_of_eps(clt["mu"], np.asarray(profile["eps"])))
        assert profile["delta"] == pytest.approx(expected.tolist())
        assert profile["delta"] == sorted(profile["delta"], reverse=True)

    def test_inverse(self, workspace, capsys):
        code = run(workspace, "plan", "--eps", "2", "--delta", "1e-5", "--N", "10000", "--m", "100",
                   "--T", "10000")
        assert code == 0
        payload = json.loads((workspace / "out" / "plan_inverse.json").read_text())
        assert payload["sigma"] == pytest.approx(3.6760, abs=1e-4)
        assert payload["certified"] is True
        assert payload["pld_delta_at_eps"] <= 1e-5
        assert "sigma = 3.6760" in capsys.readouterr().out

    def test_needs_sigma_or_eps(self, workspace, capsys):
        assert run(workspace, "plan", "--N", "100", "--m", "10", "--E", "1") == 2
        assert "--eps" in capsys.readouterr().err

    def test_batch_larger_than_data(self, workspace):
        assert run(workspace, "plan", "--N", "10", "--m", "20", "--E", "1", "--sigma", "1") == 2


class TestCurve:
    def test_gaussian_on_grid(self, workspace):
        assert run(workspace, "curve", "--family", "gaussian", "--mu", "1", "--grid", "5") == 0
        lines = (workspace / "out" / "curve_gaussian.csv").read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 6
        assert lines[1] == "0,1"

    @pytest.mark.parametrize("argv", [
        ["--family", "epsdelta", "--eps", "1", "--delta", "0.01"],
        ["--family", "subsampled", "--sigma", "2", "--p", "0.1"],
        ["--family", "group", "--mu", "0.5", "--g", "2"],
        ["--family", "dpsgd", "--sigma", "1", "--N", "1000", "--m", "100", "--E", "1"],
    ])
    def test_families_write_valid_curves(self, workspace, argv):
        out = workspace / "curve.csv"
        assert run(workspace, "curve", *argv, "--out", str(out)) == 0
        assert validate(read_curve_csv(out)) == []

    def test_grid_defaults_to_setting(self, workspace):
        settings = workspace / "settings.json"
        settings.write_text(json.dumps({**json.loads(settings.read_text()), "grid_size": 9}))
        assert run(workspace, "curve", "--family", "gaussian", "--mu", "1") == 0
        assert len((workspace / "out" / "curve_gaussian.csv").read_text().splitlines()) == 10

    def test_json_curve_feeds_other_families(self, workspace):
        stored = workspace / "g.json"
        assert run(workspace, "curve", "--family", "gaussian", "--mu", "1", "--json", "--out", str(stored)) == 0
        assert curve_from_json(json.loads(stored.read_text())).mu == 1.0

        from_file, direct = workspace / "a.csv", workspace / "b.csv"
        assert run(workspace, "curve", "--family", "subsampled", "--p", "0.1", "--input", str(stored),
                   "--out", str(from_file)) == 0
        assert run(workspace, "curve", "--family", "subsampled", "--p", "0.1", "--mu", "1",
                   "--out", str(direct)) == 0
        assert from_file.read_text() == direct.read_text()

    def test_unreadable_input(self, workspace):
        assert run(workspace, "curve", "--family", "group", "--g", "2", "--input", str(workspace / "absent.json")) == 2
        (workspace / "bad.json").write_text("[1, 2]")
        assert run(workspace, "curve", "--family", "group", "--g", "2", "--input", str(workspace / "bad.json")) == 2

    def test_unknown_family(self, workspace):
        assert run(workspace, "curve", "--family", "laplace") == 2

    def test_missing_parameter(self, workspace, capsys):
        assert run(workspace, "curve", "--family", "gaussian") == 2
        assert "--mu" in capsys.readouterr().err


class TestAccount:
    def test_append_accumulates(self, workspace):
        ledger = workspace / "ledger.json"
        assert run(workspace, "account", "--ledger", str(ledger), "--append", "0.01,2,500") == 0
        assert run(workspace, "account", "--ledger", str(ledger), "--append", "0.01,2,500") == 0
        payload = json.loads(ledger.read_text())
        assert payload["rounds"] == [{"p": 0.01, "sigma": 2.0, "count": 1000}]

    def test_empty_ledger(self, workspace, capsys):
        ledger = workspace / "ledger.json"
        assert run(workspace, "account", "--ledger", str(ledger)) == 0
        assert "Ledger is empty" in capsys.readouterr().out
        assert json.loads(ledger.read_text())["rounds"] == []

    def test_budget_exceeded(self, workspace):
        ledger = workspace / "ledger.json"
        code = run(workspace, "account", "--ledger", str(ledger), "--append", "1,1,4", "--budget", "0.5")
        assert code == 3
        assert json.loads(ledger.read_text())["budget_eps"] == 0.5

    def test_report_file(self, workspace):
        report = workspace / "report.json"
        code = run(workspace, "account", "--ledger", str(workspace / "l.json"), "--append", "0.1,1.5,20",
                   "--group", "2", "--report", str(report))
        assert code == 0
        payload = json.loads(report.read_text())
        assert {r["group"] for r in payload["reports"]} == {2}

    @pytest.mark.parametrize("text", ["0.1", "a,b", "2,1", "0.1,1,0"])
    def test_bad_round(self, workspace, text):
        assert run(workspace, "account", "--ledger", str(workspace / "l.json"), "--append", text) == 2

    def test_corrupt_ledger(self, workspace):
        ledger = workspace / "ledger.json"
        ledger.write_text("{not json")
        assert run(workspace, "account", "--ledger", str(ledger)) == 2


class TestSimulate:
    def test_outputs(self, workspace):
        config = write_run_config(workspace / "run.json")
        out = workspace / "sim"
        assert run(workspace, "simulate", "--config", str(config), "--out", str(out)) == 0

        metrics = (out / "metrics.csv").read_text().splitlines()
        assert metrics[0].startswith("epoch,client,train_acc")
        assert len(metrics) == 3

        report = json.loads((out / "privacy_report.json").read_text())
        entry = report["clients"]["0"]
        assert entry["unaccounted"] is False
        assert entry["ledger"]["rounds"] == [{"p": 0.125, "sigma": 1.0, "count": 16}]
        assert [r["method"] for r in entry["report"]["reports"]] == ["clt", "pld"]

        echoed = json.loads((out / "config.json").read_text())
        assert echoed["seed"] == 1

    def test_same_seed_byte_identical(self, workspace):
        config = write_run_config(workspace / "run.json")
        for name in ("a", "b"):
            assert run(workspace, "simulate", "--config", str(config), "--out", str(workspace / name)) == 0
        for produced in ("metrics.csv", "privacy_report.json", "config.json"):
            assert (workspace / "a" / produced).read_bytes() == (workspace / "b" / produced).read_bytes()

    def test_seed_override(self, workspace):
        config = write_run_config(workspace / "run.json")
        out = workspace / "sim"
        assert run(workspace, "simulate", "--config", str(config), "--out", str(out), "--seed", "42") == 0
        assert json.loads((out / "config.json").read_text())["seed"] == 42

    def test_noise_free_client_has_no_report(self, workspace):
        config = write_run_config(workspace / "run.json",
                                  clients=[{"m": 16, "E": 1, "clip": None, "sigma": 0.0}])
        assert run(workspace, "simulate", "--config", str(config)) == 0
        report = json.loads((workspace / "out" / "privacy_report.json").read_text())
        assert report["clients"]["0"]["report"] is None

    def test_budget_exceeded(self, workspace):
        config = write_run_config(workspace / "run.json", accounting={"budget_eps": 0.01})
        assert run(workspace, "simulate", "--config", str(config)) == 3

    def test_invalid_config(self, workspace, capsys):
        config = write_run_config(workspace / "run.json", clients=[{"m": 0, "E": 1}])
        assert run(workspace, "simulate", "--config", str(config)) == 2
        assert "clients[0].m" in capsys.readouterr().err

    def test_stalled_run(self, workspace):
        config = write_run_config(
            workspace / "run.json",
            max_ticks=20,
            clients=[{"m": 16, "E": 1, "clip": 1.0, "sigma": 1.0, "staleness_bound": 0}],
            server={"drop_prob": 1.0},
        )
        assert run(workspace, "simulate", "--config", str(config)) == 4

    def test_divergence(self, workspace, monkeypatch):
        def exploding(*args, **kwargs):
            raise DivergenceError("client 0 epoch 0 round 0: model is no longer finite")

        monkeypatch.setattr(simulator, "local_round", exploding)
        config = write_run_config(workspace / "run.json")
        assert run(workspace, "simulate", "--config", str(config)) == 4


def test_selfcheck_failure_exit_code(workspace, monkeypatch, capsys):
    monkeypatch.setattr(selfcheck, "CHECKS", [("clt", selfcheck.check_clt)])
    real = selfcheck.composition.h_of_sigma
    monkeypatch.setattr(selfcheck.composition, "h_of_sigma", lambda sigma: real(sigma) + 1e-2)
    assert run(workspace, "selfcheck") == 1
    assert "Failed checks: clt" in capsys.readouterr().out
