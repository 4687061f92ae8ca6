"""
Tests for the command-line entry point and SVG rendering.
"""

import json

import numpy as np
import pytest

from nlcf.exceptions import ConfigurationError
from nlcf.main import apply_overrides, main
from nlcf.models.flow import FlowFrame, FlowTrace
from nlcf.services.rendering import gap_path, render_service
from nlcf.storage.trace_repository import TraceRepository


def circle(radius: float, points: int = 64) -> np.ndarray:
    theta = np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)
    return radius * np.column_stack([np.cos(theta), np.sin(theta)])


@pytest.fixture
def run_dir(tmp_path):
    mask = np.zeros((9, 9), dtype=bool)
    members = {
        eta: [FlowFrame(t=t, area=0.0, contours=(circle(0.5 + eta),), mask=mask) for t in (0.0, 0.1)]
        for eta in (0.1, -0.1)
    }
    trace = FlowTrace(
        shape_name="ball",
        kernel={"type": "fractional", "s": 0.5},
        h=0.125,
        half_width=1.0,
        truncation=0.5,
        times=[0.0, 0.1],
        members=members,
        diagnostics=[{"t": t, "finest_gap_area": 0.5} for t in (0.0, 0.1)],
    )
    repo = TraceRepository.create(tmp_path / "run")
    repo.write_meta({"config": {"scenario": "ball"}})
    repo.write_trace(trace)
    return repo.root


class TestOverrides:
    """--h, --T and --s."""

    def test_grid_and_kernel(self):
        data = apply_overrides({"scenario": "ball", "grid": {"n_records": 4}}, 0.05, 0.2, 0.3)
        assert data["grid"] == {"n_records": 4, "h": 0.05, "T": 0.2}
        assert data["kernel"] == {"type": "fractional", "s": 0.3}

    def test_input_left_untouched(self):
        data = {"scenario": "ball", "grid": {"h": 0.1}}
        apply_overrides(data, 0.05, None, None)
        assert data["grid"] == {"h": 0.1}

    def test_rejects_non_object(self):
        with pytest.raises(ConfigurationError):
            apply_overrides([1, 2], None, None, None)


class TestMain:
    """Exit codes."""

    def test_malformed_config(self, tmp_path, capsys):
        config = tmp_path / "bad.json"
        config.write_text("{scenario: ball")
        output = tmp_path / "out"
        assert main(["run", str(config), "--output", str(output)]) == 2
        assert not output.exists()
        assert "malformed JSON" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path):
        config = tmp_path / "extra.json"
        config.write_text(json.dumps({"scenario": "ball", "grid": {"spacing": 0.1}}))
        assert main(["run", str(config), "--output", str(tmp_path / "out")]) == 2
        assert not (tmp_path / "out").exists()

    def test_missing_config(self, tmp_path):
        assert main(["run", str(tmp_path / "nothing.json")]) == 2

    def test_kernel_info(self, tmp_path, capsys):
        kernel = tmp_path / "kernel.json"
        kernel.write_text(json.dumps({"type": "fractional", "s": 0.5}))
        assert main(["kernel-info", str(kernel)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["regime"]["verdict"] == "Strong"
        assert report["integrability"]["pass"] is True

    def test_invalid_kernel(self, tmp_path):
        kernel = tmp_path / "kernel.json"
        kernel.write_text(json.dumps({"type": "fractional", "s": 1.5}))
        assert main(["kernel-info", str(kernel)]) == 2

    def test_run_kernel_info_scenario(self, tmp_path, capsys):
        config = tmp_path / "info.json"
        config.write_text(json.dumps({"scenario": "kernel-info"}))
        assert main(["run", str(config), "--s", "0.3", "--output", str(tmp_path / "info")]) == 0
        assert json.loads(capsys.readouterr().out)["passed"] is True

    def test_render_without_frames(self, tmp_path):
        assert main(["render", str(tmp_path)]) == 2


class TestRendering:
    """SVG output of a run directory."""

    def test_one_svg_per_frame(self, run_dir):
        paths = render_service.render_frames(run_dir)
        assert [p.name for p in paths] == ["frame_0000.svg", "frame_0001.svg"]
        text = paths[0].read_text()
        assert text.startswith("<?xml")
        assert 'id="gap"' in text

    def test_deterministic_bytes(self, run_dir, tmp_path):
        a = render_service.render_frames(run_dir, tmp_path / "a")
        b = render_service.render_frames(run_dir, tmp_path / "b")
        assert a[1].read_bytes() == b[1].read_bytes()

    def test_missing_viewport(self, tmp_path):
        repo = TraceRepository.create(tmp_path / "bare")
        repo.write_meta({"config": {}})
        with pytest.raises(ConfigurationError):
            render_service.render_frames(repo.root)

    def test_gap_path_orientation(self):
        path = gap_path([circle(1.0)], [circle(0.5)])
        assert path.contains_point((0.75, 0.0))
        assert not path.contains_point((0.0, 0.0))
        assert gap_path([], []) is None
