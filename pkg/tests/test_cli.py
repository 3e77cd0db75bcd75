import json
import math

import jsonschema
import numpy as np
import pytest
from scipy.stats import spearmanr

from crosshedge.cli import main
from crosshedge.config import (
    PRESETS,
    ConfigError,
    apply_overrides,
    config_hash,
    load_config,
    load_schema,
    resolve_config,
)
from crosshedge.verify import riccati_vs_rk4


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestConfig:
    def test_preset_fidelity(self):
        # figure presets carry exactly the caption parameters
        f1 = PRESETS["fig1_right"]["model"]
        assert (f1["mu"], f1["beta"], f1["sigma"], f1["eta"], f1["rho"]) == (0.0, 0.0, 1.0, 1.0, 0.5)
        assert (f1["b"], f1["c"], f1["k"], f1["gamma"], f1["alpha"]) == (1e-2, 1e-3, 1e-2, 1.0, 0.05)
        f3 = PRESETS["fig3"]
        assert f3["model"]["k"] == 1e-3 and f3["model"]["gamma"] == 0.0
        assert f3["exposure"]["n_options"] == 100.0 and f3["exposure"]["dt_offset"] == 1e-5
        f5 = PRESETS["fig5"]["model"]
        assert f5["c"] == 0.0 and f5["gamma"] == 1e-3
        f7 = PRESETS["fig7"]["model"]
        assert f7["c"] == 1e-3 and f7["gamma"] == 2e-3

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError, match="posterior"):
            resolve_config({"preset": "fig3", "posterior": 1}, experiment="paths")

    def test_unknown_nested_field_rejected(self):
        with pytest.raises(ConfigError, match="model"):
            resolve_config({"preset": "fig3", "model": {"vol_of_vol": 0.1}}, experiment="paths")

    def test_ill_posed_model_named(self):
        with pytest.raises(ConfigError, match="2\\*alpha - b"):
            resolve_config({"preset": "fig3", "model": {"b": 0.2}}, experiment="paths")

    def test_dot_path_overrides(self):
        doc = apply_overrides({"preset": "fig3"}, ["model.gamma=0.001", "n_paths=77"])
        cfg = resolve_config(doc, experiment="distribution")
        assert cfg.model.gamma == 0.001
        assert cfg.n_paths == 77

    def test_experiment_conflict(self):
        with pytest.raises(ConfigError, match="subcommand"):
            resolve_config({"preset": "fig3", "experiment": "stats"}, experiment="paths")

    def test_config_hash_stable(self):
        a = resolve_config({"preset": "fig3"}, experiment="paths")
        b = resolve_config({"preset": "fig3"}, experiment="paths")
        assert config_hash(a.raw) == config_hash(b.raw)

    def test_schemas_are_valid_json_schema(self):
        for name in ("config.schema.json", "manifest.schema.json", "verify_report.schema.json"):
            jsonschema.Draft202012Validator.check_schema(load_schema(name))

    def test_preset_unknown(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            resolve_config({"preset": "fig99"}, experiment="paths")


class TestLinearPathRun:
    def test_fig1_right_long_horizon_column(self, tmp_path):
        cfg = write_config(tmp_path, {"preset": "fig1_right", "n_steps": 300})
        out = tmp_path / "out"
        assert main(["linear-path", "--config", cfg, "--out", str(out)]) == 0
        rows = (out / "linear_path.csv").read_text().strip().split("\n")
        assert rows[0] == "t,Q_closed_form,Q_almgren_chriss,Q_long_horizon"
        data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
        assert np.all(data[:, 3] == -0.5)
        mid = data[(data[:, 0] >= 0.75) & (data[:, 0] <= 2.25)]
        assert np.max(np.abs(mid[:, 1] + 0.5)) < 0.02
        # no exposure, no drift: the baseline column is identically zero
        assert np.all(data[:, 2] == 0.0)

    def test_fig1_left_never_reaches_level(self, tmp_path):
        cfg = write_config(tmp_path, {"preset": "fig1_left", "n_steps": 200})
        out = tmp_path / "out"
        main(["linear-path", "--config", cfg, "--out", str(out)])
        rows = (out / "linear_path.csv").read_text().strip().split("\n")[1:]
        q = np.array([float(r.split(",")[1]) for r in rows])
        assert q.min() > -0.5

    def test_zero_exposure_flat(self, tmp_path):
        cfg = write_config(tmp_path, {"preset": "fig1_right", "exposure": {"type": "linear", "frak_n": 0.0}})
        out = tmp_path / "out"
        main(["linear-path", "--config", cfg, "--out", str(out)])
        rows = (out / "linear_path.csv").read_text().strip().split("\n")[1:]
        q = np.array([float(r.split(",")[1]) for r in rows])
        assert np.all(q == 0.0)

    def test_bit_reproducibility(self, tmp_path):
        cfg = write_config(tmp_path, {"preset": "fig1_right", "n_steps": 100})
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["linear-path", "--config", cfg, "--out", str(out_a)])
        main(["linear-path", "--config", cfg, "--out", str(out_b)])
        assert (out_a / "linear_path.csv").read_bytes() == (out_b / "linear_path.csv").read_bytes()


class TestPathsRun:
    def test_five_paths_with_rank_column(self, tmp_path):
        cfg = write_config(tmp_path, {"preset": "fig3", "n_steps": 300})
        out = tmp_path / "out"
        assert main(["paths", "--config", cfg, "--out", str(out)]) == 0
        names = sorted(p.name for p in out.glob("path_*.csv"))
        assert names == [f"path_{i:02d}.csv" for i in range(5)]
        summary = (out / "paths_summary.csv").read_text().strip().split("\n")
        assert summary[0] == "path_index,stream,u_rank,U_T,Q_T,X_T"
        ranks = sorted(int(r.split(",")[2]) for r in summary[1:])
        assert ranks == [0, 1, 2, 3, 4]

    def test_same_increments_across_presets(self, tmp_path):
        # figs 3/5/7 share the master seed, so the Brownian draws coincide;
        # factor paths differ only through impact feedback
        out3, out5 = tmp_path / "f3", tmp_path / "f5"
        main(["paths", "--config", write_config(tmp_path, {"preset": "fig3", "n_steps": 100}, "c3.json"), "--out", str(out3)])
        main(["paths", "--config", write_config(tmp_path, {"preset": "fig5", "n_steps": 100}, "c5.json"), "--out", str(out5)])
        u3 = [float(r.split(",")[3]) for r in (out3 / "path_00.csv").read_text().strip().split("\n")[1:]]
        u5 = [float(r.split(",")[3]) for r in (out5 / "path_00.csv").read_text().strip().split("\n")[1:]]
        # identical shocks, tiny divergence from the c*nu feedback only
        assert u3[1] != u5[1] or math.isclose(u3[1], u5[1])
        assert max(abs(a - b) for a, b in zip(u3, u5)) < 0.05

    def test_fig5_short_hedge_phase(self, tmp_path):
        cfg = write_config(tmp_path, {"preset": "fig5", "n_steps": 500, "seed": 12345})
        out = tmp_path / "out"
        main(["paths", "--config", cfg, "--out", str(out)])
        for i in range(5):
            q = np.array([float(r.split(",")[1]) for r in (out / f"path_{i:02d}.csv").read_text().strip().split("\n")[1:]])
            assert q.min() < 0.0


class TestDistributionRun:
    def test_requires_enough_paths(self, tmp_path):
        cfg = write_config(tmp_path, {"preset": "fig3", "n_paths": 10})
        assert main(["distribution", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_fig3_monotone_scatter(self, tmp_path):
        cfg = write_config(tmp_path, {"preset": "fig3", "n_paths": 4000, "n_steps": 300})
        out = tmp_path / "out"
        main(["distribution", "--config", cfg, "--out", str(out)])
        rows = (out / "distribution.csv").read_text().strip().split("\n")[1:]
        data = np.array([[float(v) for v in r.split(",")[1:]] for r in rows])
        rho = spearmanr(data[:, 0], data[:, 1]).statistic
        assert rho > 0.95

    def test_fig5_concentrated_near_zero(self, tmp_path):
        # risk-aversion case: terminal inventory is mostly unwound (small
        # relative to the mid-horizon short of order -2) and the association
        # with U_T is negative, unlike the cross-impact sigmoid
        cfg = write_config(tmp_path, {"preset": "fig5", "n_paths": 4000, "n_steps": 300})
        out = tmp_path / "out"
        main(["distribution", "--config", cfg, "--out", str(out)])
        rows = (out / "distribution.csv").read_text().strip().split("\n")[1:]
        data = np.array([[float(v) for v in r.split(",")[1:]] for r in rows])
        assert abs(np.median(data[:, 0])) < 0.3
        assert spearmanr(data[:, 0], data[:, 1]).statistic < 0.0

    def test_degenerate_without_feedback(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {"preset": "fig3", "model": {"c": 0.0}, "n_paths": 1500, "n_steps": 150},
        )
        out = tmp_path / "out"
        main(["distribution", "--config", cfg, "--out", str(out)])
        rows = (out / "distribution.csv").read_text().strip().split("\n")[1:]
        q = np.array([float(r.split(",")[1]) for r in rows])
        assert q.std() < 1e-10


class TestStatsRun:
    def test_degenerate_zero_std(self, tmp_path):
        cfg = write_config(tmp_path, {"preset": "fig3", "model": {"c": 0.0}, "n_paths": 1000, "n_steps": 100})
        out = tmp_path / "out"
        main(["stats", "--config", cfg, "--out", str(out)])
        rows = (out / "stats.csv").read_text().strip().split("\n")
        assert rows[0] == "t,mean_Q,std_Q"
        stds = np.array([float(r.split(",")[2]) for r in rows[1:]])
        assert np.all(stds < 1e-10)

    def test_fig7_interior_peak_and_initial_moments(self, tmp_path):
        cfg = write_config(tmp_path, {"preset": "fig7", "n_paths": 4000, "n_steps": 250, "initial": {"q": 0.25}})
        out = tmp_path / "out"
        main(["stats", "--config", cfg, "--out", str(out)])
        data = np.array(
            [[float(v) for v in r.split(",")] for r in (out / "stats.csv").read_text().strip().split("\n")[1:]]
        )
        assert data[0, 1] == 0.25  # mean Q at t=0 is exactly q0
        assert data[0, 2] == 0.0
        peak = data[np.argmax(data[:, 2]), 0]
        assert 0.2 < peak < 0.8


class TestManifest:
    def test_manifest_written_and_valid(self, tmp_path):
        cfg = write_config(tmp_path, {"preset": "fig1_right", "n_steps": 60})
        out = tmp_path / "out"
        main(["linear-path", "--config", cfg, "--out", str(out), "--gnuplot"])
        doc = json.loads((out / "manifest.json").read_text())
        jsonschema.validate(doc, load_schema("manifest.schema.json"))
        assert doc["outputs"] == ["linear_path.csv", "plot.gp"]
        assert doc["experiment"] == "linear-path"
        assert (out / "plot.gp").exists()

    def test_seed_flag_overrides(self, tmp_path):
        cfg = write_config(tmp_path, {"preset": "fig3", "n_steps": 50})
        out = tmp_path / "out"
        main(["paths", "--config", cfg, "--seed", "777", "--out", str(out)])
        doc = json.loads((out / "manifest.json").read_text())
        assert doc["seed"] == 777


class TestVerifyPlumbing:
    def test_fault_injection_breaks_riccati_check(self):
        ok, measured, _ = riccati_vs_rk4(seed=0, n_random=2)
        assert ok
        corrupted, measured, _ = riccati_vs_rk4(
            seed=0, n_random=2, h2_fn=lambda p, t, _h2=__import__("crosshedge").h2: _h2(p, t) + 1e-3
        )
        assert not corrupted
        assert measured["sup_error"] >= 1e-3

    def test_cli_verify_nonzero_exit_on_failure(self, tmp_path, monkeypatch):
        import crosshedge.cli as cli_mod
        from crosshedge.verify import CheckResult, VerifyReport

        fake = VerifyReport(
            passed=False,
            checks=[CheckResult("riccati-closed-form-vs-rk4", False, 0.01, {}, "injected failure")],
            seed=1,
            wall_clock_seconds=0.01,
        )
        monkeypatch.setattr(cli_mod, "run_verification", lambda **kw: fake)
        cfg = write_config(tmp_path, {"preset": "fig3"})
        code = main(["verify", "--config", cfg, "--out", str(tmp_path / "v")])
        assert code == 1
        report = json.loads((tmp_path / "v" / "verify_report.json").read_text())
        assert report["passed"] is False
        assert report["checks"][0]["name"] == "riccati-closed-form-vs-rk4"

    def test_config_error_exit_code(self, tmp_path):
        cfg = write_config(tmp_path, {"preset": "fig3", "model": {"b": 0.2}})
        assert main(["verify", "--config", cfg, "--out", str(tmp_path / "v")]) == 2
