import numpy as np
import pytest
from pathlib import Path

import sqeiar as sq
from sqeiar.cli import main
from sqeiar.config import ConfigError, parse_config_text, render_defaults
from sqeiar.runner import read_field_csv


class TestConfigParsing:
    def test_empty_text_yields_defaults(self):
        config = parse_config_text("")
        default = sq.ScenarioConfig()
        assert config.params == default.params
        assert config.grid == default.grid
        assert config.regions.regions == ((0.0, 1.0),)
        assert config.mode == "both"

    def test_comments_and_blank_lines_ignored(self):
        config = parse_config_text("# a comment\n\nmodel.beta = 2e-5  # inline\n")
        assert config.params.beta == 2e-5

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="model.gamma"):
            parse_config_text("model.gamma = 0.1")

    def test_missing_section_rejected(self):
        with pytest.raises(ConfigError, match="section"):
            parse_config_text("beta = 1e-5")

    def test_out_of_range_alpha_rejected(self):
        with pytest.raises((ConfigError, sq.ContractError), match="alpha"):
            parse_config_text("model.alpha = 1.5")

    def test_tiny_grid_rejected(self):
        with pytest.raises((ConfigError, sq.ContractError)):
            parse_config_text("grid.nx = 2")

    def test_cfl_violation_rejected(self):
        with pytest.raises((ConfigError, sq.ContractError), match="CFL"):
            parse_config_text("grid.nx = 101\ngrid.nt = 30")

    def test_regions_and_caps(self):
        config = parse_config_text("regions.1 = 0.1, 0.4\nregions.2 = 0.6, 0.9")
        assert config.regions.n == 2
        assert config.regions.v_max == 0.5

    def test_region_outside_domain_rejected(self):
        with pytest.raises((ConfigError, sq.ContractError)):
            parse_config_text("regions.1 = 0.5, 1.5")

    def test_uniform_and_per_compartment_diffusion(self):
        config = parse_config_text("model.diffusion = 0.002")
        assert config.params.diffusion == (0.002,) * 6
        config = parse_config_text("model.d3 = 0.005")
        assert config.params.diffusion[2] == 0.005
        assert config.params.diffusion[0] == 0.001

    def test_profile_names_validated(self):
        with pytest.raises(ConfigError):
            parse_config_text("initial.s = banana")
        config = parse_config_text("initial.e = zero")
        assert np.all(config.initial_array()[2] == 0.0)

    def test_profile_from_file(self, tmp_path):
        path = tmp_path / "profile.csv"
        grid = sq.Grid(nx=11, tau=1.0, nt=100)
        np.savetxt(path, 7.0 * np.ones(grid.nx))
        config = parse_config_text(
            f"grid.nx = 11\ngrid.tau = 1\ngrid.nt = 100\ninitial.a = file:{path.name}",
            base_dir=tmp_path)
        np.testing.assert_allclose(config.initial_array()[3], 7.0)

    def test_render_defaults_round_trips(self):
        config = parse_config_text(render_defaults())
        default = sq.ScenarioConfig()
        assert config.params == default.params
        assert config.weights == default.weights
        assert config.grid == default.grid


class TestOutputs:
    def test_field_csv_round_trip(self, tmp_path, small_config):
        from dataclasses import replace

        config = replace(small_config, output_dir=tmp_path / "run",
                         mode="baseline", stride=10)
        summary = sq.run_scenario(config)
        t, x, values = read_field_csv(tmp_path / "run" / "baseline" / "S.csv")
        assert x.size == config.grid.nx
        assert t[0] == 0.0 and t[-1] == pytest.approx(config.grid.tau)
        stored = summary.baseline.trajectory.s
        np.testing.assert_array_equal(values[0], stored[0])
        np.testing.assert_array_equal(values[-1], stored[-1])

    def test_aggregates_initial_population(self, tmp_path):
        from dataclasses import replace

        grid = sq.Grid(nx=101, tau=3.0, nt=300)
        config = replace(sq.ScenarioConfig(), grid=grid,
                         output_dir=tmp_path / "run", mode="baseline")
        sq.run_scenario(config)
        path = tmp_path / "run" / "baseline" / "aggregates.csv"
        header = path.read_text().splitlines()[0]
        assert header == "t,S,Q,E,A,I,R,N"
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data[0, -1] == pytest.approx(9454.0, rel=5e-3)

    def test_summary_file_written(self, tmp_path, small_config):
        from dataclasses import replace

        config = replace(small_config, output_dir=tmp_path / "run")
        sq.run_scenario(config)
        text = (tmp_path / "run" / "summary.txt").read_text()
        assert "deaths averted" in text
        for name in ("S", "Q", "E", "A", "I", "R", "u", "v"):
            assert (tmp_path / "run" / "optimal" / f"{name}.csv").exists()


class TestCli:
    def write_config(self, tmp_path, extra=""):
        path = tmp_path / "scenario.conf"
        path.write_text(
            "grid.nx = 21\ngrid.tau = 3\ngrid.nt = 300\n"
            f"output.dir = {tmp_path / 'out'}\noutput.stride = 50\n" + extra)
        return path

    def test_run_baseline_exit_zero(self, tmp_path, capsys):
        config = self.write_config(tmp_path)
        assert main(["run", "--config", str(config), "--mode", "baseline"]) == 0
        out = capsys.readouterr().out
        assert "baseline" in out and "outputs written" in out

    def test_bad_config_exit_one(self, tmp_path, capsys):
        config = self.write_config(tmp_path, "model.alpha = 1.5\n")
        assert main(["run", "--config", str(config)]) == 1
        assert "configuration error" in capsys.readouterr().err

    def test_missing_config_file_exit_one(self, tmp_path, capsys):
        missing = tmp_path / "nope.conf"
        assert main(["run", "--config", str(missing)]) == 1

    def test_check_exit_zero(self, tmp_path, capsys):
        config = self.write_config(tmp_path)
        assert main(["check", "--config", str(config)]) == 0
        out = capsys.readouterr().out
        for name in ("mass_balance", "positivity", "gradient_oracle",
                     "sensitivity_oracle"):
            assert name in out
        assert "FAIL" not in out

    def test_defaults_prints_parseable_config(self, capsys):
        assert main(["defaults"]) == 0
        text = capsys.readouterr().out
        parse_config_text(text)

    def test_runs_are_deterministic(self, tmp_path):
        config = self.write_config(tmp_path)
        main(["run", "--config", str(config), "--mode", "baseline",
              "--out", str(tmp_path / "a")])
        main(["run", "--config", str(config), "--mode", "baseline",
              "--out", str(tmp_path / "b")])
        for name in ("S", "I", "aggregates"):
            first = (tmp_path / "a" / "baseline" / f"{name}.csv").read_bytes()
            second = (tmp_path / "b" / "baseline" / f"{name}.csv").read_bytes()
            assert first == second
