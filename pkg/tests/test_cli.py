"""End-to-end contract of the ``tip`` command line."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from tip import save_scenario, stable_u64
from tip.cli import main
from conftest import broadside_blocker, ghost_wall, straight_scenario


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def pair(tmp_path):
    gt = tmp_path / "gt.json"
    pred = tmp_path / "pred.json"
    save_scenario(straight_scenario("m30", 12.6, [broadside_blocker(30.0)]), str(gt))
    save_scenario(straight_scenario("m30", 12.6, []), str(pred))
    return gt, pred


def invoke(runner, args, **kwargs):
    return runner.invoke(main, args, catch_exceptions=False, **kwargs)


class TestScore:
    def test_miss_scores_negative(self, runner, pair, tmp_path):
        gt, pred = pair
        out = tmp_path / "out"
        r = invoke(runner, ["--planner", "av1", "--out", str(out), "score", str(gt), str(pred)])
        assert r.exit_code == 0
        assert "tip_score -66.740675" in r.output
        report = json.loads((out / "report.json").read_text())
        assert report["schema"] == "tip-report/1"
        assert report["a_star_id"] == "a-4.0|o+0.0"
        rows = list(csv.DictReader((out / "score.csv").open()))
        assert len(rows) == 1 and rows[0]["scenario_id"] == "m30"

    def test_identity_scores_zero(self, runner, pair, tmp_path):
        gt, _ = pair
        out = tmp_path / "out"
        r = invoke(runner, ["--planner", "av1", "--out", str(out), "score", str(gt), str(gt)])
        assert r.exit_code == 0
        assert "tip_score 0.000000" in r.output

    def test_malformed_pred_exits_2_without_report(self, runner, pair, tmp_path):
        gt, _ = pair
        bad = tmp_path / "bad.json"
        bad.write_text("{oops")
        out = tmp_path / "out"
        r = runner.invoke(main, ["--out", str(out), "score", str(gt), str(bad)])
        assert r.exit_code == 2
        assert not (out / "report.json").exists()

    def test_missing_file_exits_2(self, runner, pair, tmp_path):
        gt, _ = pair
        r = runner.invoke(main, ["score", str(gt), str(tmp_path / "absent.json")])
        assert r.exit_code == 2

    def test_bad_aggregation_exits_3(self, runner, pair, tmp_path):
        gt, pred = pair
        r = runner.invoke(
            main, ["--agg", "median", "--out", str(tmp_path / "o"), "score", str(gt), str(pred)]
        )
        assert r.exit_code == 3


class TestSweep:
    @pytest.fixture()
    def scenario_dir(self, tmp_path):
        d = tmp_path / "scenarios"
        d.mkdir()
        save_scenario(
            straight_scenario("s_a", 12.6, [broadside_blocker(30.0)]), str(d / "a.json")
        )
        save_scenario(
            straight_scenario("s_b", 10.0, [broadside_blocker(45.0)]), str(d / "b.json")
        )
        return d

    def sweep_args(self, scenario_dir, out, seed="7"):
        return [
            "--seed", seed, "--planner", "av1", "--out", str(out),
            "sweep", str(scenario_dir), "--kind", "location",
            "--magnitudes", "0,0.5", "--seeds", "2",
        ]

    def test_rows_and_seed_formula(self, runner, scenario_dir, tmp_path):
        out = tmp_path / "out"
        r = invoke(runner, self.sweep_args(scenario_dir, out))
        assert r.exit_code == 0
        rows = list(csv.DictReader((out / "sweep.csv").open()))
        assert len(rows) == 8  # 2 scenarios x 2 magnitudes x 2 seeds
        assert list(rows[0]) == [
            "scenario_id", "noise_kind", "magnitude", "seed", "tip", "behavior_divergence",
        ]
        # deterministic (scenario, magnitude, seed) order with contract seeds
        assert rows[0]["scenario_id"] == "s_a" and rows[-1]["scenario_id"] == "s_b"
        assert int(rows[0]["seed"]) == stable_u64(7, "s_a", 0, 0)
        assert int(rows[3]["seed"]) == stable_u64(7, "s_a", 1, 1)
        # zero-magnitude rows are exact zeros
        for row in rows:
            if row["magnitude"] == "0":
                assert row["tip"] == "0" and row["behavior_divergence"] == "0"
            assert float(row["tip"]) <= 0.0

    def test_rerun_is_byte_identical(self, runner, scenario_dir, tmp_path):
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        invoke(runner, self.sweep_args(scenario_dir, out1))
        invoke(runner, self.sweep_args(scenario_dir, out2))
        assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()

    def test_seed_changes_rows(self, runner, scenario_dir, tmp_path):
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        invoke(runner, self.sweep_args(scenario_dir, out1, seed="7"))
        invoke(runner, self.sweep_args(scenario_dir, out2, seed="8"))
        assert (out1 / "sweep.csv").read_bytes() != (out2 / "sweep.csv").read_bytes()

    def test_tip_seed_env_overrides_flag(self, runner, scenario_dir, tmp_path):
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        invoke(runner, self.sweep_args(scenario_dir, out1, seed="8"))
        r = runner.invoke(
            main,
            self.sweep_args(scenario_dir, out2, seed="7"),
            env={"TIP_SEED": "8"},
            catch_exceptions=False,
        )
        assert r.exit_code == 0
        assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()

    def test_bad_kind_exits_2(self, runner, scenario_dir, tmp_path):
        r = runner.invoke(
            main,
            ["--out", str(tmp_path / "o"), "sweep", str(scenario_dir),
             "--kind", "teleport", "--magnitudes", "0,1"],
        )
        assert r.exit_code == 2

    def test_single_magnitude_exits_2(self, runner, scenario_dir, tmp_path):
        r = runner.invoke(
            main,
            ["--out", str(tmp_path / "o"), "sweep", str(scenario_dir),
             "--kind", "location", "--magnitudes", "1"],
        )
        assert r.exit_code == 2

    def test_empty_dir_exits_2(self, runner, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        r = runner.invoke(
            main,
            ["--out", str(tmp_path / "o"), "sweep", str(empty),
             "--kind", "location", "--magnitudes", "0,1"],
        )
        assert r.exit_code == 2

    def test_partial_failure_exits_4_keeps_good_rows(self, runner, scenario_dir, tmp_path):
        out = tmp_path / "o"
        r = runner.invoke(
            main,
            ["--out", str(out), "sweep", str(scenario_dir),
             "--kind", "false_positive", "--magnitudes", "0,1.5", "--seeds", "1"],
        )
        assert r.exit_code == 4
        rows = list(csv.DictReader((out / "sweep.csv").open()))
        assert len(rows) == 2  # the two integer-magnitude rows survived


class TestDecompose:
    def test_offset_case(self, runner, tmp_path):
        out = tmp_path / "o"
        r = invoke(runner, ["--out", str(out), "decompose", "offset"])
        assert r.exit_code == 0
        assert "delta_xi -10.000000" in r.output
        assert "pce_energy_fraction 0.333333" in r.output
        assert "pie_energy_fraction 0.666667" in r.output
        rows = list(csv.reader((out / "decompose.csv").open()))
        assert rows[0] == ["x_mid", "delta_mu", "parallel", "perpendicular"]
        assert len(rows) == 6001

    def test_shrink_case(self, runner, tmp_path):
        r = invoke(runner, ["--out", str(tmp_path / "o"), "decompose", "shrink"])
        assert r.exit_code == 0
        assert "xi_p 1.666667" in r.output
        assert "xi_q 5.000000" in r.output
        assert "delta_xi 3.333333" in r.output
        assert "pce_energy_fraction 0.111111" in r.output

    def test_custom_spec(self, runner, tmp_path):
        spec = {
            "domain": {"lo": -3.0, "hi": 3.0, "cells": 600},
            "p": {"kind": "uniform", "a": -2.0, "b": -1.0},
            "q": {"kind": "uniform", "a": -1.0, "b": 0.0},
            "u_star": {"id": "go", "pieces": [[-1.0, 1.0, -10.0]], "base": 0.0, "bound_m": 10.0},
            "u_alt": {"id": "stay", "base": -5.0, "bound_m": 10.0},
        }
        path = tmp_path / "case.json"
        path.write_text(json.dumps(spec))
        r = invoke(runner, ["--out", str(tmp_path / "o"), "decompose", str(path)])
        assert r.exit_code == 0
        assert "delta_xi -10.000000" in r.output

    def test_indistinct_actions_exit_3(self, runner, tmp_path):
        spec = {
            "domain": {"lo": -3.0, "hi": 3.0, "cells": 600},
            "p": {"kind": "uniform", "a": -2.0, "b": -1.0},
            "q": {"kind": "uniform", "a": -1.0, "b": 0.0},
            "u_star": {"id": "a", "base": -5.0, "bound_m": 10.0},
            "u_alt": {"id": "b", "base": -5.0, "bound_m": 10.0},
        }
        path = tmp_path / "case.json"
        path.write_text(json.dumps(spec))
        r = runner.invoke(main, ["--out", str(tmp_path / "o"), "decompose", str(path)])
        assert r.exit_code == 3

    def test_unknown_case_exits_2(self, runner, tmp_path):
        r = runner.invoke(main, ["--out", str(tmp_path / "o"), "decompose", "nonsense"])
        assert r.exit_code == 2


class TestBoundAndCalibrate:
    def test_bound_table(self, runner):
        r = invoke(runner, ["bound", "--n", "55", "--epsilon", "1.0", "--m", "10", "--variance", "4"])
        assert r.exit_code == 0
        lines = r.output.strip().splitlines()
        assert lines[0] == "n,epsilon,m,variance,l_value,probability"
        fields = lines[1].split(",")
        assert fields[0] == "55"
        assert float(fields[4]) == pytest.approx(22.0 / 3.0)
        assert float(fields[5]) == pytest.approx(0.0470354917, abs=1e-6)

    def test_bound_rejects_bad_params(self, runner):
        r = runner.invoke(main, ["bound", "--n", "0", "--epsilon", "1.0", "--m", "10"])
        assert r.exit_code == 2
        r = runner.invoke(main, ["bound", "--n", "5", "--epsilon", "-1", "--m", "10"])
        assert r.exit_code == 2

    def test_calibrate_pins(self, runner):
        r = invoke(runner, ["calibrate", "--v0", "14"])
        assert r.exit_code == 0
        lines = r.output.strip().splitlines()
        table = {ln.split(",")[0]: float(ln.split(",")[-1]) for ln in lines[1:]}
        assert table["av1"] == pytest.approx(31.33, abs=0.01)
        assert table["av2"] == pytest.approx(19.77, abs=0.01)

    def test_ghost_pair_shipped_scenarios(self, runner, tmp_path):
        repo = Path(__file__).resolve().parents[1]
        gt = repo / "scenarios" / "ghost_walls_true.json"
        pred = repo / "scenarios" / "ghost_walls_perceived.json"
        r = invoke(
            runner,
            ["--planner", "av1", "--out", str(tmp_path / "o"), "score", str(gt), str(pred)],
        )
        assert r.exit_code == 0
        assert "tip_score -5.101871" in r.output
