import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from cyclesynth.cli import main

FIXTURES = Path(__file__).parent / "fixtures"
PD_MDP = str(FIXTURES / "pickup_delivery_mdp.json")
PD_DRA = str(FIXTURES / "pickup_delivery_dra.json")
PD_DRA_V2 = str(FIXTURES / "pickup_delivery.dra")
TWO_AMEC = str(FIXTURES / "two_amec_mdp.json")
TRIVIAL_DRA = str(FIXTURES / "always_accepting_dra.json")


class TestSynthesizeCommand:
    def test_optimal_exit_zero(self, tmp_path, capsys):
        out = tmp_path / "policy.json"
        code = main(["synthesize", "--mdp", PD_MDP, "--dra", PD_DRA,
                     "--pi", "pickup", "--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "optimal cost" in printed
        data = json.loads(out.read_text())
        assert data["type"] == "product-stationary"
        assert data["optimal"] is True
        assert data["lambda"] > 0
        assert all(":" in key for key in data["choices"])

    def test_v2_automaton_accepted(self, tmp_path):
        out = tmp_path / "policy.json"
        code = main(["synthesize", "--mdp", PD_MDP, "--dra", PD_DRA_V2,
                     "--pi", "pickup", "--out", str(out)])
        assert code == 0

    def test_missing_file_exit_one(self, capsys):
        code = main(["synthesize", "--mdp", "/nonexistent.json",
                     "--dra", PD_DRA, "--pi", "pickup"])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_unsatisfiable_exit_one(self, tmp_path, capsys):
        # dropoff never labeled: the task is unsatisfiable
        mdp = json.loads(Path(PD_MDP).read_text())
        for st in mdp["states"]:
            if "dropoff" in st["label"]:
                st["label"] = []
        path = tmp_path / "broken.json"
        path.write_text(json.dumps(mdp))
        code = main(["synthesize", "--mdp", str(path), "--dra", PD_DRA,
                     "--pi", "pickup"])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_tolerance_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CYCLESYNTH_TOL", "1e-6")
        assert main(["synthesize", "--mdp", PD_MDP, "--dra", PD_DRA,
                     "--pi", "pickup"]) == 0
        monkeypatch.setenv("CYCLESYNTH_TOL", "-1")
        assert main(["synthesize", "--mdp", PD_MDP, "--dra", PD_DRA,
                     "--pi", "pickup"]) == 1

    def test_retries_and_jobs_flags(self, tmp_path):
        assert main(["synthesize", "--mdp", TWO_AMEC, "--dra", TRIVIAL_DRA,
                     "--pi", "pi", "--retries", "3", "--jobs", "2"]) == 0


class TestSimulateCommand:
    def _policy(self, tmp_path):
        out = tmp_path / "policy.json"
        assert main(["synthesize", "--mdp", PD_MDP, "--dra", PD_DRA,
                     "--pi", "pickup", "--out", str(out)]) == 0
        return out

    def test_report(self, tmp_path, capsys):
        policy = self._policy(tmp_path)
        report = tmp_path / "report.json"
        csv = tmp_path / "cycles.csv"
        code = main(["simulate", "--mdp", PD_MDP, "--dra", PD_DRA,
                     "--policy", str(policy), "--stages", "20000",
                     "--seed", "7", "--pi", "pickup",
                     "--out", str(report), "--csv", str(csv)])
        assert code == 0
        data = json.loads(report.read_text())
        assert data["stages"] == 20000
        assert data["rng"] == "python-random-mt19937"
        assert data["pairs"][0]["countL"] == 0
        assert data["pairs"][0]["countK"] > 0
        lines = csv.read_text().splitlines()
        assert lines[0] == "cycle,cost"
        assert len(lines) >= data["cycles"] - 1

    def test_seed_reproducible(self, tmp_path):
        policy = self._policy(tmp_path)
        reports = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            assert main(["simulate", "--mdp", PD_MDP, "--dra", PD_DRA,
                         "--policy", str(policy), "--stages", "5000",
                         "--seed", "21", "--out", str(out)]) == 0
            reports.append(out.read_text())
        assert reports[0] == reports[1]

    def test_default_pi_is_first_labeled(self, tmp_path, capsys):
        # sorted labeled propositions: dropoff < pickup, so the default
        # cycle set counts arrivals at the dropoff cell
        policy = self._policy(tmp_path)
        assert main(["simulate", "--mdp", PD_MDP, "--dra", PD_DRA,
                     "--policy", str(policy), "--stages", "1000",
                     "--seed", "2"]) == 0
        assert "cycles" in capsys.readouterr().out

    def test_mismatched_policy_rejected(self, tmp_path, capsys):
        policy = self._policy(tmp_path)
        data = json.loads(policy.read_text())
        first = next(iter(data["choices"]))
        data["choices"][first] = "not-an-action"
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(data))
        code = main(["simulate", "--mdp", PD_MDP, "--dra", PD_DRA,
                     "--policy", str(bad), "--stages", "10"])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_incomplete_policy_rejected(self, tmp_path, capsys):
        policy = self._policy(tmp_path)
        data = json.loads(policy.read_text())
        data["choices"].popitem()
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(data))
        assert main(["simulate", "--mdp", PD_MDP, "--dra", PD_DRA,
                     "--policy", str(bad), "--stages", "10"]) == 1


class TestOracleCommand:
    def test_two_amec(self, capsys):
        code = main(["oracle", "--mdp", TWO_AMEC, "--pi", "pi"])
        assert code == 0
        out = capsys.readouterr().out
        assert "lambda" in out and "2" in out

    def test_k_filter(self, capsys):
        code = main(["oracle", "--mdp", PD_MDP, "--pi", "pickup",
                     "--k", "5"])
        assert code == 0
        assert "lambda" in capsys.readouterr().out


class TestEntryPoint:
    def test_console_script(self):
        proc = subprocess.run(["cyclesynth", "--help"], capture_output=True,
                              text=True)
        assert proc.returncode == 0
        assert "synthesize" in proc.stdout
