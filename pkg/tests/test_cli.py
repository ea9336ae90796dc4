import csv
import pathlib

import pytest
import yaml
from click.testing import CliRunner

from dustlab.cli import (EXIT_CONTRADICTION, EXIT_HYPOTHESIS, EXIT_NUMERIC,
                         EXIT_OK, EXIT_VALIDATION, main)

SCENARIOS = pathlib.Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def runner():
    return CliRunner()


def write_yaml(path, doc):
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def fast_scenario(tmp_path, **overrides):
    doc = {
        "geometry": "slab1d", "dimension": 1, "lambda": 0.0, "v_sup": 2.0,
        "marker_count": 16, "t_end": 5.0,
        "initial_profile": {
            "density": {"kind": "uniform", "value": 0.5, "support": [-1.0, 1.0]},
            "velocity": {"kind": "zero"},
        },
        "tolerances": {"rel_tol": 1e-8, "abs_tol": 1e-10},
    }
    doc.update(overrides)
    return write_yaml(tmp_path / "scenario.yaml", doc)


class TestSimulate:
    def test_equilibrium_no_event(self, runner, tmp_path):
        path = write_yaml(tmp_path / "eq.yaml", {
            "geometry": "slab1d", "lambda": 0.5, "v_sup": 2.0,
            "marker_count": 16, "t_end": 1.0,
            "initial_profile": {
                "density": {"kind": "uniform", "value": 0.5, "support": [-1.0, 1.0]},
                "velocity": {"kind": "zero"}},
        })
        out = tmp_path / "out"
        result = runner.invoke(main, ["simulate", "--scenario", path, "--out", str(out)])
        assert result.exit_code == EXIT_OK, result.output
        assert "no event" in result.output
        assert (out / "manifest.yaml").exists()
        assert (out / "trajectory.csv").exists()
        assert not (out / "event.yaml").exists()

    def test_collapse_writes_event_and_snapshots(self, runner, tmp_path):
        path = fast_scenario(tmp_path)
        out = tmp_path / "out"
        result = runner.invoke(main, ["simulate", "--scenario", path,
                                      "--out", str(out),
                                      "--snapshot-times", "0.0,1.0"])
        assert result.exit_code == EXIT_OK, result.output
        event = yaml.safe_load((out / "event.yaml").read_text())
        assert event["t_hi"] == pytest.approx(2.0, abs=1e-3)
        assert event["t_hi"] >= event["t_lo"]
        snaps = sorted(out.glob("markers_t*.csv"))
        assert len(snaps) == 2
        with open(out / "trajectory.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert float(rows[0]["h_value"]) == 0.0
        assert float(rows[0]["total_mass"]) == pytest.approx(1.0)
        assert "certificate honored" in result.output

    def test_invalid_scenario_exit_1(self, runner, tmp_path):
        path = fast_scenario(tmp_path, v_sup=1.0)  # support 2 > v_sup
        result = runner.invoke(main, ["simulate", "--scenario", path,
                                      "--out", str(tmp_path / "out")])
        assert result.exit_code == EXIT_VALIDATION
        assert "invalid" in result.output

    def test_escape_scenario_exit_2(self, runner, tmp_path):
        result = runner.invoke(main, [
            "simulate", "--scenario", str(SCENARIOS / "hubble_escape_1d.yaml"),
            "--out", str(tmp_path / "out")])
        assert result.exit_code == EXIT_HYPOTHESIS
        assert "escaped" in result.output

    def test_deterministic_rerun(self, runner, tmp_path):
        path = fast_scenario(tmp_path, t_end=1.0)
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = runner.invoke(main, ["simulate", "--scenario", path,
                                          "--out", str(out)])
            assert result.exit_code == EXIT_OK
            outs.append((out / "trajectory.csv").read_text())
        assert outs[0] == outs[1]


class TestCertify:
    def test_case_one_certificate_document(self, runner, tmp_path):
        path = fast_scenario(tmp_path)
        out = tmp_path / "out"
        result = runner.invoke(main, ["certify", "--scenario", path, "--out", str(out)])
        assert result.exit_code == EXIT_OK, result.output
        doc = yaml.safe_load((out / "certificate.yaml").read_text())
        assert doc["case"] == "CaseOne"
        # M=1, v_sup=2, N=1, h0=0: T = (pi/2) / sqrt(1/2)
        assert doc["t_bound"] == pytest.approx(2.221441469, abs=1e-8)
        assert doc["formula"] == "arctan"
        assert doc["oracle_cross_check"]["agrees"] is True
        lo, hi = doc["oracle_cross_check"]["pole_bracket"]
        # bracket is tight to the oracle's own tolerance (~1e-10 relative)
        assert lo - 1e-8 <= doc["t_bound"] <= hi + 1e-8
        assert doc["initial_vorticity_zero"] is True
        # lambda = 0: per-characteristic bounds section present, but a cold
        # start has no contracting characteristics
        assert doc["chae_tadmor"]["applicable_markers"] == 0

    def test_chae_tadmor_bound_for_contracting_start(self, runner, tmp_path):
        path = fast_scenario(tmp_path, initial_profile={
            "density": {"kind": "uniform", "value": 0.5, "support": [-1.0, 1.0]},
            "velocity": {"kind": "hubble", "rate": -2.0}})
        out = tmp_path / "out"
        result = runner.invoke(main, ["certify", "--scenario", path, "--out", str(out)])
        assert result.exit_code == EXIT_OK
        doc = yaml.safe_load((out / "certificate.yaml").read_text())
        assert doc["chae_tadmor"]["applicable_markers"] == 16
        assert doc["chae_tadmor"]["min_bound"] == pytest.approx(0.5)

    def test_no_certificate_case(self, runner, tmp_path):
        path = fast_scenario(tmp_path, **{"lambda": 2.0, "v_sup": 4.0})
        out = tmp_path / "out"
        result = runner.invoke(main, ["certify", "--scenario", path, "--out", str(out)])
        assert result.exit_code == EXIT_OK
        doc = yaml.safe_load((out / "certificate.yaml").read_text())
        assert doc["case"] == "NoCertificate"
        assert doc["t_bound"] is None
        assert "t_bound: none" in result.output


class TestVerify:
    def test_collapse_proof_chain(self, runner, tmp_path):
        path = fast_scenario(tmp_path)
        out = tmp_path / "out"
        result = runner.invoke(main, ["verify", "--scenario", path, "--out", str(out)])
        assert result.exit_code == EXIT_OK, result.output
        assert "all inequalities hold" in result.output
        assert (out / "report.txt").exists()
        with open(out / "proof_chain.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) > 10
        asserted = [r for r in rows if r["informational"] == "False"]
        for r in asserted:
            assert float(r["riccati_residual"]) <= 1e-6

    def test_escape_run_reports_hypothesis_steps(self, runner, tmp_path):
        result = runner.invoke(main, [
            "verify", "--scenario", str(SCENARIOS / "hubble_escape_1d.yaml"),
            "--out", str(tmp_path / "out")])
        assert result.exit_code == EXIT_OK
        assert "HypothesisViolated" in result.output


class TestSweep:
    def test_lambda_grid_flips_certificate(self, runner, tmp_path):
        # M=1, v_sup=2: certificate boundary at lambda = 0.5
        path = fast_scenario(tmp_path, t_end=3.0)
        out = tmp_path / "out"
        result = runner.invoke(main, ["sweep", "--scenario", path,
                                      "--out", str(out),
                                      "--lambda-grid", "0.0:1.0:5"])
        assert result.exit_code == EXIT_OK, result.output
        with open(out / "sweep.csv") as fh:
            rows = list(csv.DictReader(fh))
        cases = [r["case"] for r in rows]
        assert cases[0] == "CaseOne" and cases[1] == "CaseOne"
        # lambda = 0.5 sits exactly on the boundary; the cold start h0 = 0
        # does not qualify for the boundary extension (it needs h0 < 0)
        assert cases[2] == "NoCertificate"
        assert cases[3] == "NoCertificate" and cases[4] == "NoCertificate"

    def test_h0_grid_flips_certificate(self, runner, tmp_path):
        # lambda=2, M=1, v_sup=1 (support [-0.5, 0.5]): threshold |h0| = 1
        path = fast_scenario(tmp_path, t_end=1.0, v_sup=1.0, initial_profile={
            "density": {"kind": "uniform", "value": 1.0, "support": [-0.5, 0.5]},
            "velocity": {"kind": "zero"}}, **{"lambda": 2.0})
        out = tmp_path / "out"
        result = runner.invoke(main, ["sweep", "--scenario", path,
                                      "--out", str(out),
                                      "--h0-grid", "-2.0:0.0:5"])
        assert result.exit_code == EXIT_OK, result.output
        with open(out / "sweep.csv") as fh:
            rows = list(csv.DictReader(fh))
        cases = [r["case"] for r in rows]
        assert cases[0] == "CaseTwo"      # h0 = -2
        assert cases[1] == "CaseTwo"      # h0 = -1.5
        assert cases[2] == "NoCertificate"  # h0 = -1 exactly (strict)
        assert cases[3] == "NoCertificate"
        assert cases[4] == "NoCertificate"

    def test_requires_exactly_one_grid(self, runner, tmp_path):
        path = fast_scenario(tmp_path)
        result = runner.invoke(main, ["sweep", "--scenario", path,
                                      "--out", str(tmp_path / "out")])
        assert result.exit_code == EXIT_VALIDATION
