"""
Tests for scenario configuration and ScenarioService.
"""

import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from nlcf.exceptions import ConfigurationError
from nlcf.schemas.kernel import PiecewisePowerKernelSpec, kernel_spec_adapter
from nlcf.schemas.scenario import GridConfig, ScenarioConfig
from nlcf.services.kernels import kernel_service
from nlcf.services.scenario_service import scenario_service

ROOT = Path(__file__).resolve().parents[2]


class TestScenarioConfig:
    """Validation of run configurations."""

    def test_unknown_top_level_key(self):
        with pytest.raises(ValidationError):
            ScenarioConfig.model_validate({"scenario": "ball", "colour": "red"})

    def test_unknown_scenario(self):
        with pytest.raises(ValidationError):
            ScenarioConfig.model_validate({"scenario": "torus"})

    def test_unknown_scenario_parameter(self):
        with pytest.raises(ValidationError):
            ScenarioConfig.model_validate({"scenario": "ball", "params": {"radius": 1.0}})

    def test_params_filled_with_defaults(self):
        config = ScenarioConfig.model_validate({"scenario": "minimality"})
        assert config.params["R"] == 2.0
        assert len(config.params["r_grid"]) == 10
        assert config.typed_params().frame == "standard"

    def test_default_kernels(self):
        assert ScenarioConfig(scenario="ball").kernel.type == "fractional"
        assert isinstance(ScenarioConfig(scenario="cross-weak").kernel, PiecewisePowerKernelSpec)

    def test_grid_ladder(self):
        grid = GridConfig(h=0.05)
        assert grid.shifts == pytest.approx([0.05, 0.1, 0.2])
        assert grid.flow_params(ladder=True).truncation == pytest.approx(0.2 + 8 * 0.05)
        assert grid.flow_params().truncation is None

    def test_ladder_shifts_positive(self):
        with pytest.raises(ValidationError):
            GridConfig(ladder=[0.1, -0.1])


class TestScenarioRuns:
    """Runs that finish quickly."""

    def test_kernel_info(self, tmp_path):
        config = ScenarioConfig(scenario="kernel-info", output_dir=tmp_path / "info")
        outcome = scenario_service.run(config)
        assert outcome.exit_code == 0
        info = json.loads((tmp_path / "info" / "kernel_info.json").read_text())
        assert info["regime"]["verdict"] == "Strong"
        summary = json.loads((tmp_path / "info" / "summary.json").read_text())
        assert summary["passed"] is True
        assert (tmp_path / "info" / "schema.json").exists()
        meta = json.loads((tmp_path / "info" / "meta.json").read_text())
        assert meta["config"]["scenario"] == "kernel-info"

    def test_minimality_zero_kernel_fails_soft(self, tmp_path):
        config = ScenarioConfig(
            scenario="minimality",
            kernel={"type": "zero"},
            params={"r_grid": [0.25, 0.5]},
            output_dir=tmp_path / "zero",
        )
        outcome = scenario_service.run(config)
        assert outcome.exit_code == 1
        checks = {c.name: c.passed for c in outcome.checks}
        assert checks == {"witness_found": False, "cross_bound": True}
        assert (tmp_path / "zero" / "minimality.csv").read_text().startswith("r,diff,bound")

    def test_curvature_profile(self, tmp_path, weak_kernel):
        config = ScenarioConfig(
            scenario="curvature-profile",
            kernel={"type": "piecewise_power", "alpha": 1.0, "tail_exponent": 3.0},
            params={"shape": {"shape": "ball", "R": 1.0}, "spacing": 0.5},
            output_dir=tmp_path / "profile",
        )
        outcome = scenario_service.run(config)
        assert outcome.passed
        assert outcome.results["evaluated"] == outcome.results["samples"]

    def test_error_recorded_before_raise(self, tmp_path):
        """A ball that never shrinks is a configuration error, still summarized."""
        config = ScenarioConfig(scenario="ball", kernel={"type": "zero"}, output_dir=tmp_path / "ball")
        with pytest.raises(ConfigurationError):
            scenario_service.run(config)
        summary = json.loads((tmp_path / "ball" / "summary.json").read_text())
        assert summary["passed"] is False
        assert summary["error"]["error"] == "ConfigurationError"

    @pytest.mark.slow
    def test_minimality_fractional(self, tmp_path):
        config = ScenarioConfig(scenario="minimality", output_dir=tmp_path / "min")
        outcome = scenario_service.run(config)
        assert outcome.exit_code == 0
        assert outcome.results["best_r"] is not None

    @pytest.mark.slow
    def test_ball_extinction(self, tmp_path):
        config = ScenarioConfig(
            scenario="ball",
            grid={"h": 1.0 / 32.0, "n_records": 6},
            params={"R": 0.5, "scale": None, "tolerance": 0.1},
            output_dir=tmp_path / "ball",
        )
        outcome = scenario_service.run(config)
        checks = {c.name: c for c in outcome.checks}
        assert checks["extinction_time"].passed
        assert (tmp_path / "ball" / "frames" / "frame_0000.csv").exists()


class TestBundledConfigs:
    """The configs shipped in scenarios/ and kernels/ validate."""

    @pytest.mark.parametrize("name", sorted(p.name for p in (ROOT / "scenarios").glob("*.json")))
    def test_scenario_config(self, name):
        data = json.loads((ROOT / "scenarios" / name).read_text())
        assert ScenarioConfig.model_validate(data).scenario == data["scenario"]

    @pytest.mark.parametrize("name", sorted(p.name for p in (ROOT / "kernels").glob("*.json")))
    def test_kernel_config(self, name):
        spec = kernel_spec_adapter.validate_python(json.loads((ROOT / "kernels" / name).read_text()))
        assert kernel_service.check_integrability(kernel_service.make_kernel(spec)).passed
