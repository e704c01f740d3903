import json

import numpy as np
import pytest

from vhd import ScenarioConfig
from vhd.cli import (
    ConfigError,
    config_values,
    load_config,
    main,
    resolved_config_text,
    run_command,
)

TINY = """
sim.duration = 40
sim.outage_start = 20
sim.outage_duration = 10
sim.history_window = 20
sim.mc_runs = 2
traj.turn_start = 10
traj.turn_duration = 5
"""


def tiny_cfg_file(tmp_path, extra=""):
    path = tmp_path / "run.cfg"
    path.write_text(TINY + extra, encoding="utf-8")
    return path


class TestConfigParsing:
    def test_empty_file_gives_pure_defaults(self, tmp_path):
        path = tmp_path / "empty.cfg"
        path.write_text("", encoding="utf-8")
        assert config_values(load_config(path)) == config_values(ScenarioConfig())

    def test_comments_and_blanks_ignored(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text(
            "# full line comment\n\nsim.mc_runs = 7  # trailing comment\n", encoding="utf-8"
        )
        assert load_config(path).mc_runs == 7

    def test_unknown_key_named_with_location(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("sim.mc_runs = 5\nsim.bogus = 1\n", encoding="utf-8")
        with pytest.raises(ConfigError, match=r"bad\.cfg:2: unknown key 'sim\.bogus'"):
            load_config(path)

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "dup.cfg"
        path.write_text("vhd.alpha = 0.01\nvhd.alpha = 0.02\n", encoding="utf-8")
        with pytest.raises(ConfigError, match=r"dup\.cfg:2: duplicate key .*first set on line 1"):
            load_config(path)

    def test_type_mismatch_reported_with_line(self, tmp_path):
        path = tmp_path / "t.cfg"
        path.write_text("sim.mc_runs = soon\n", encoding="utf-8")
        with pytest.raises(ConfigError, match=r"t\.cfg:1: .*must be int"):
            load_config(path)

    def test_non_assignment_line_rejected(self, tmp_path):
        path = tmp_path / "n.cfg"
        path.write_text("just some words\n", encoding="utf-8")
        with pytest.raises(ConfigError, match=r"n\.cfg:1: expected 'key = value'"):
            load_config(path)

    @pytest.mark.parametrize(
        "text,value",
        [("true", True), ("1", True), ("yes", True), ("on", True),
         ("false", False), ("0", False), ("no", False), ("off", False)],
    )
    def test_bool_spellings(self, tmp_path, text, value):
        path = tmp_path / "b.cfg"
        path.write_text(f"sensor.imu_during_outage = {text}\n", encoding="utf-8")
        assert load_config(path).sensor.imu_during_outage is value

    def test_bad_bool_rejected(self, tmp_path):
        path = tmp_path / "b.cfg"
        path.write_text("sensor.imu_during_outage = maybe\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="must be bool"):
            load_config(path)

    def test_invalid_alpha_names_the_invariant(self, tmp_path):
        path = tmp_path / "a.cfg"
        path.write_text("vhd.alpha = -1\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="AdaptiveConfidenceParams invariant"):
            load_config(path)

    def test_scalar_r_base_becomes_isotropic_matrix(self, tmp_path):
        path = tmp_path / "r.cfg"
        path.write_text("vhd.r_base = 2.5\n", encoding="utf-8")
        np.testing.assert_array_equal(load_config(path).vhd_params.r_base, np.diag([2.5, 2.5]))

    def test_missing_file_is_a_config_error(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config"):
            load_config(tmp_path / "nope.cfg")

    def test_echo_round_trips_to_the_same_config(self, tmp_path):
        original = load_config(tiny_cfg_file(tmp_path))
        echo = tmp_path / "echo.cfg"
        echo.write_text(resolved_config_text(original), encoding="utf-8")
        reloaded = load_config(echo)
        assert config_values(reloaded) == config_values(original)
        # a second echo is textually identical, not merely equivalent
        assert resolved_config_text(reloaded) == resolved_config_text(original)


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle")
    cfg = load_config(tiny_cfg_file(out))
    return run_command(cfg, out / "res", quiet=True), cfg


class TestRunCommand:
    def test_writes_the_full_bundle(self, bundle):
        out, _ = bundle
        names = {p.name for p in out.paths.values()}
        assert names == {
            "resolved_config.cfg", "summary.txt", "summary.json",
            "error_series.csv", "trajectory.csv",
        }
        for p in out.paths.values():
            assert p.is_file()

    def test_error_series_schema(self, bundle):
        out, cfg = bundle
        lines = out.paths["error_series"].read_text().splitlines()
        assert lines[0] == "time_s,ukf_mean_err_m,lagrange_mean_err_m,vhd_mean_err_m"
        assert len(lines) == 1 + cfg.outage_steps + 1
        first = lines[1].split(",")
        assert first[0] == "20"
        assert float(first[1]) == float(first[2]) == float(first[3])  # shared branch point

    def test_trajectory_schema(self, bundle):
        out, cfg = bundle
        lines = out.paths["trajectory"].read_text().splitlines()
        assert lines[0] == (
            "time_s,truth_x,truth_y,ukf_x,ukf_y,lagrange_x,lagrange_y,vhd_x,vhd_y"
        )
        assert len(lines) == 1 + cfg.outage_steps + 1

    def test_cells_use_six_significant_digits(self, bundle):
        out, _ = bundle
        row = out.paths["error_series"].read_text().splitlines()[2].split(",")
        for cell in row:
            mantissa = cell.lstrip("-").replace(".", "").split("e")[0].lstrip("0")
            assert len(mantissa) <= 6

    def test_summary_json_structure(self, bundle):
        out, cfg = bundle
        payload = json.loads(out.paths["summary_json"].read_text())
        assert payload["mc_runs"] == 2
        assert payload["base_seed"] == cfg.base_seed
        assert set(payload["predictors"]) == {"ukf", "lagrange", "vhd"}
        assert "reduction_vs_ukf_pct" in payload["predictors"]["vhd"]
        assert "reduction_vs_ukf_pct" not in payload["predictors"]["ukf"]
        assert payload["config"]["sim.duration"] == 40.0
        assert "mean across runs" in payload["aggregation"]

    def test_summary_text_has_one_row_per_predictor(self, bundle):
        out, _ = bundle
        text = out.paths["summary_text"].read_text()
        for name in ("ukf", "lagrange", "vhd"):
            assert f"\n  {name}" in text

    def test_vhd_only_selection_filters_columns(self, tmp_path):
        cfg = load_config(tiny_cfg_file(tmp_path))
        out = run_command(cfg, tmp_path / "only", predictors=("vhd",), quiet=True)
        assert out.paths["error_series"].read_text().splitlines()[0] == "time_s,vhd_mean_err_m"
        assert out.paths["trajectory"].read_text().splitlines()[0] == (
            "time_s,truth_x,truth_y,vhd_x,vhd_y"
        )
        payload = json.loads(out.paths["summary_json"].read_text())
        assert set(payload["predictors"]) == {"vhd"}
        # no ukf in the selection, so no reduction column anywhere
        assert "reduction_vs_ukf_pct" not in payload["predictors"]["vhd"]
        assert "--" in out.paths["summary_text"].read_text()

    def test_selection_is_reordered_canonically(self, tmp_path):
        cfg = load_config(tiny_cfg_file(tmp_path))
        out = run_command(cfg, tmp_path / "pair", predictors=("vhd", "ukf"), quiet=True)
        header = out.paths["error_series"].read_text().splitlines()[0]
        assert header == "time_s,ukf_mean_err_m,vhd_mean_err_m"

    def test_empty_selection_rejected(self, tmp_path):
        cfg = load_config(tiny_cfg_file(tmp_path))
        with pytest.raises(ConfigError, match="empty"):
            run_command(cfg, tmp_path / "none", predictors=())

    def test_stdout_control(self, tmp_path, capsys):
        cfg = load_config(tiny_cfg_file(tmp_path))
        run_command(cfg, tmp_path / "loud")
        assert "outage prediction summary" in capsys.readouterr().out
        run_command(cfg, tmp_path / "quiet", quiet=True)
        assert capsys.readouterr().out == ""

    def test_repeat_invocations_byte_identical(self, tmp_path):
        cfg = load_config(tiny_cfg_file(tmp_path))
        a = run_command(cfg, tmp_path / "a", quiet=True)
        b = run_command(cfg, tmp_path / "b", quiet=True)
        for key in a.paths:
            assert a.paths[key].read_bytes() == b.paths[key].read_bytes()


class TestMain:
    def test_success_path(self, tmp_path, capsys):
        cfg_path = tiny_cfg_file(tmp_path)
        code = main(["--config", str(cfg_path), "--runs", "1", "--out-dir", str(tmp_path / "out")])
        assert code == 0
        assert (tmp_path / "out" / "summary.json").is_file()
        assert "outage prediction summary" in capsys.readouterr().out

    def test_flag_overrides_land_in_the_echo(self, tmp_path):
        cfg_path = tiny_cfg_file(tmp_path)
        out = tmp_path / "out"
        code = main(
            ["--config", str(cfg_path), "--runs", "1", "--seed", "42",
             "--out-dir", str(out), "--quiet"]
        )
        assert code == 0
        echo = (out / "resolved_config.cfg").read_text()
        assert "sim.mc_runs = 1" in echo
        assert "sim.base_seed = 42" in echo

    def test_determinism_from_the_command_line(self, tmp_path):
        cfg_path = tiny_cfg_file(tmp_path)
        for sub in ("one", "two"):
            assert main(
                ["--config", str(cfg_path), "--runs", "1", "--seed", "42",
                 "--out-dir", str(tmp_path / sub), "--quiet"]
            ) == 0
        for name in ("error_series.csv", "trajectory.csv", "summary.json"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()

    def test_bad_config_file_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("sim.mc_runs = many\n", encoding="utf-8")
        assert main(["--config", str(bad), "--out-dir", str(tmp_path / "o")]) == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file_exits_2(self, tmp_path, capsys):
        assert main(["--config", str(tmp_path / "ghost.cfg")]) == 2
        assert "cannot read" in capsys.readouterr().err

    def test_zero_runs_exits_2(self, tmp_path, capsys):
        cfg_path = tiny_cfg_file(tmp_path)
        assert main(["--config", str(cfg_path), "--runs", "0", "--out-dir", str(tmp_path / "o")]) == 2
        assert "mc_runs" in capsys.readouterr().err

    def test_zero_jobs_exits_2(self, tmp_path, capsys):
        cfg_path = tiny_cfg_file(tmp_path)
        assert main(["--config", str(cfg_path), "--jobs", "0", "--out-dir", str(tmp_path / "o")]) == 2
        assert "--jobs" in capsys.readouterr().err

    def test_unknown_predictor_exits_2(self, tmp_path, capsys):
        cfg_path = tiny_cfg_file(tmp_path)
        assert main(
            ["--config", str(cfg_path), "--predictors", "vhd,ekf", "--out-dir", str(tmp_path / "o")]
        ) == 2
        assert "unknown predictors: ekf" in capsys.readouterr().err

    def test_unwritable_out_dir_exits_3(self, tmp_path, capsys):
        cfg_path = tiny_cfg_file(tmp_path)
        blocker = tmp_path / "blocked"
        blocker.write_text("a file, not a directory", encoding="utf-8")
        code = main(["--config", str(cfg_path), "--runs", "1", "--out-dir", str(blocker), "--quiet"])
        assert code == 3
        assert "error" in capsys.readouterr().err
