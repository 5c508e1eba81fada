import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from ksomt import RunConfig, ScenarioSpec, generate, interpret, run, save_curves
from ksomt.cli import main
from ksomt.errors import ConfigError


@pytest.fixture()
def dataset_file(tmp_path):
    ds = generate(ScenarioSpec(sizes=(8, 8, 8), J=10, seed=5))
    path = tmp_path / "curves.csv"
    save_curves(ds, path)
    return str(path)


def strip_volatile(payload: dict) -> dict:
    out = dict(payload)
    out.pop("timing_seconds", None)
    out.pop("version", None)
    return out


class TestRunConfig:
    def test_factorization_enforced_early(self):
        with pytest.raises(ConfigError):
            RunConfig(input_path="x", B=999, n_R=30, n_S=25)

    def test_bad_rank(self):
        with pytest.raises(ConfigError):
            RunConfig(input_path="x", rank=0, B=999, n_R=40, n_S=25)

    def test_custom_pairs_parse(self):
        cfg = RunConfig(input_path="x", pairs="custom:1-2,1-3", B=19, n_R=4, n_S=5)
        assert cfg.selection().pairs(3) == ((1, 2), (1, 3))


class TestPipeline:
    def test_k3_default_shape(self, dataset_file):
        cfg = RunConfig(input_path=dataset_file, B=19, n_R=4, n_S=5, rank=5)
        report = run(cfg)
        assert report.pairs == [[1, 2], [1, 3], [2, 3]]
        assert report.method == "omt"
        assert 1 / 4 - 1e-12 <= report.p_hat <= 1.0
        assert np.isclose(sum(report.contributions), 1.0, atol=1e-12)
        assert report.v_rank_used is not None

    def test_k2_classical_bypass(self, tmp_path):
        ds = generate(ScenarioSpec(sizes=(6, 6), J=8, seed=2))
        path = tmp_path / "two.csv"
        save_curves(ds, path)
        cfg = RunConfig(input_path=str(path), B=19, n_R=4, n_S=5, rank=4)
        report = run(cfg)
        assert report.method == "classical"
        assert report.p_tilde is None
        assert 0 < report.p_hat <= 1

    def test_degenerate_data_flagged(self, tmp_path):
        path = tmp_path / "flat.csv"
        rows = ["label,t1,t2,t3"]
        rows += ["A,1,1,1"] * 3 + ["B,1,1,1"] * 3
        path.write_text("\n".join(rows) + "\n")
        cfg = RunConfig(
            input_path=str(path), statistic="cov-sqrt", B=19, n_R=4, n_S=5
        )
        report = run(cfg)
        assert report.degenerate

    def test_determinism(self, dataset_file):
        cfg = RunConfig(input_path=dataset_file, B=19, n_R=4, n_S=5, rank=5, seed=77)
        a = run(cfg)
        b = run(cfg)
        assert strip_volatile(a.to_dict()) == strip_volatile(b.to_dict())

    def test_cov_sqrt_statistic(self, dataset_file):
        cfg = RunConfig(
            input_path=dataset_file, statistic="cov-sqrt", B=19, n_R=4, n_S=5
        )
        report = run(cfg)
        assert report.method == "omt"
        assert all(v >= 0 for v in report.t0)

    def test_custom_v_matrix(self, dataset_file, tmp_path):
        vpath = tmp_path / "v.csv"
        np.savetxt(vpath, np.eye(10), delimiter=",")
        cfg = RunConfig(
            input_path=dataset_file, v_matrix=f"custom:{vpath}", B=19, n_R=4, n_S=5
        )
        report = run(cfg)
        assert report.method == "omt"


class TestInterpret:
    def _report(self, dataset_file, **kw):
        cfg = RunConfig(input_path=dataset_file, B=19, n_R=4, n_S=5, rank=5, **kw)
        return run(cfg)

    def test_threshold_rule(self, dataset_file):
        report = self._report(dataset_file)
        summary = interpret(report, 0.05)
        assert summary.reject == (report.nonconformity > 0.95**2)
        assert summary.ranked_pairs[0][1] == max(report.contributions)

    def test_reject_at_outermost_radius(self):
        # nonconformity (40/41)^2 exceeds (1-0.05)^2
        payload = {
            "method": "omt",
            "config": {"n_R": 40},
            "p_hat": 1 / 40,
            "nonconformity": (40 / 41) ** 2,
            "pairs": [[1, 2], [1, 3], [2, 3]],
            "contributions": [0.062, 0.909, 0.028],
        }
        summary = interpret(payload, 0.05)
        assert summary.reject
        assert summary.at_attainable_minimum
        assert summary.ranked_pairs[0][0] == (1, 3)
        assert "significant" in summary.note

    def test_fail_to_reject_innermost(self):
        payload = {
            "method": "omt",
            "config": {"n_R": 40},
            "p_hat": 1.0,
            "nonconformity": (1 / 41) ** 2,
            "pairs": [[1, 2]],
            "contributions": [1.0],
        }
        assert not interpret(payload, 0.05).reject

    def test_alpha_validation(self, dataset_file):
        report = self._report(dataset_file)
        with pytest.raises(ConfigError):
            interpret(report, 1.5)


class TestCli:
    def test_run_writes_report(self, dataset_file, tmp_path):
        out = tmp_path / "report.json"
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["run", dataset_file, "-B", "19", "--n-r", "4", "--n-s", "5",
             "--rank", "5", "-o", str(out)],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(out.read_text())
        assert payload["schema_version"] == 1
        assert payload["config"]["B"] == 19
        assert "p_hat" in result.output

    def test_config_error_exit_code(self, dataset_file, tmp_path):
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["run", dataset_file, "-B", "999", "--n-r", "30", "--n-s", "25",
             "-o", str(tmp_path / "r.json")],
        )
        assert result.exit_code == 2
        assert not (tmp_path / "r.json").exists()

    def test_data_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("label,t1,t2\nA,1,2\nA,2,3\n")  # single group
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["run", str(bad), "-B", "19", "--n-r", "4", "--n-s", "5",
             "-o", str(tmp_path / "r.json")],
        )
        assert result.exit_code == 3

    def test_emit_points(self, dataset_file, tmp_path):
        out = tmp_path / "report.json"
        pts = tmp_path / "pts"
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["run", dataset_file, "-B", "19", "--n-r", "4", "--n-s", "5",
             "--rank", "5", "-o", str(out), "--emit-points",
             "--points-dir", str(pts)],
        )
        assert result.exit_code == 0, result.output
        for name in ("cloud.csv", "grid.csv", "map.csv"):
            assert (pts / name).exists()

    def test_figures_rendered(self, dataset_file, tmp_path):
        out = tmp_path / "report.json"
        figs = tmp_path / "figs"
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["run", dataset_file, "-B", "19", "--n-r", "4", "--n-s", "5",
             "--rank", "5", "-o", str(out), "--figures", str(figs)],
        )
        assert result.exit_code == 0, result.output
        for name in ("curves.png", "cloud.png", "transport.png"):
            assert (figs / name).exists()
            assert os.path.getsize(figs / name) > 0

    def test_simulate_round_trip(self, tmp_path):
        data = tmp_path / "sim.csv"
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["simulate", str(data), "--sizes", "6,6,6", "-J", "8", "--seed", "3",
             "--scale", "1,1,2"],
        )
        assert result.exit_code == 0, result.output
        result2 = runner.invoke(
            main,
            ["run", str(data), "-B", "19", "--n-r", "4", "--n-s", "5",
             "--rank", "5", "-o", str(tmp_path / "r.json")],
        )
        assert result2.exit_code == 0, result2.output

    def test_interpret_command(self, dataset_file, tmp_path):
        out = tmp_path / "report.json"
        runner = CliRunner()
        runner.invoke(
            main,
            ["run", dataset_file, "-B", "19", "--n-r", "4", "--n-s", "5",
             "--rank", "5", "-o", str(out)],
        )
        result = runner.invoke(main, ["interpret", str(out), "--alpha", "0.05"])
        assert result.exit_code == 0, result.output
        assert "H0" in result.output
