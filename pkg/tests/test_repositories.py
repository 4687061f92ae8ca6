"""
Tests for TraceRepository - run directory files.
"""

import json

import numpy as np
import pytest

from nlcf.exceptions import ConfigurationError
from nlcf.models.flow import FlowFrame, FlowTrace
from nlcf.storage.trace_repository import DIAGNOSTIC_COLUMNS, SCHEMA, TraceRepository


def circle(radius: float, points: int = 16) -> np.ndarray:
    theta = np.linspace(0.0, 2.0 * np.pi, points)
    return radius * np.column_stack([np.cos(theta), np.sin(theta)])


@pytest.fixture
def trace() -> FlowTrace:
    mask = np.zeros((5, 5), dtype=bool)
    members = {
        0.1: [
            FlowFrame(t=0.0, area=0.5, contours=(circle(0.4),), mask=mask),
            FlowFrame(t=0.5, area=0.3, contours=(circle(0.3), circle(0.1)), mask=mask),
        ],
        -0.1: [
            FlowFrame(t=0.0, area=0.2, contours=(circle(0.25),), mask=mask),
            FlowFrame(t=0.5, area=0.0, contours=(), mask=mask),
        ],
    }
    return FlowTrace(
        shape_name="ball",
        kernel={"type": "fractional", "s": 0.5},
        h=0.25,
        half_width=0.5,
        truncation=0.5,
        times=[0.0, 0.5],
        members=members,
        extinction_time={0.1: None, -0.1: 0.4},
        diagnostics=[
            {"t": 0.0, "outer_area": 0.4, "inner_area": 0.3, "gap_area": 0.1, "finest_gap_area": 0.3},
            {"t": 0.5, "outer_area": 0.2, "inner_area": 0.0, "gap_area": 0.2, "finest_gap_area": 0.3},
        ],
        steps=12,
    )


@pytest.fixture
def repo(tmp_path) -> TraceRepository:
    return TraceRepository.create(tmp_path / "run")


class TestJson:
    """JSON files of a run."""

    def test_sorted_keys(self, repo):
        path = repo.write_json("summary.json", {"b": 1, "a": float("inf"), "c": np.float64(0.5)})
        text = path.read_text()
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')
        assert json.loads(text) == {"a": "inf", "b": 1, "c": 0.5}

    def test_missing_file(self, repo):
        with pytest.raises(ConfigurationError):
            repo.read_json("meta.json")

    def test_malformed_file(self, repo):
        (repo.root / "meta.json").write_text("{not json")
        with pytest.raises(ConfigurationError):
            repo.read_json("meta.json")

    def test_schema_lists_run_files(self, repo):
        repo.write_schema()
        assert set(repo.read_json("schema.json")) == set(SCHEMA)

    def test_update_meta_merges(self, repo):
        repo.write_meta({"scenario": "ball"})
        repo.update_meta({"exit_code": 0})
        assert repo.read_json("meta.json") == {"exit_code": 0, "scenario": "ball"}


class TestTables:
    """CSV tables."""

    def test_write_and_read(self, repo):
        repo.write_table("profile.csv", ("x", "value", "passed", "note"), [{"x": 0.5, "value": 1, "passed": True}])
        rows = repo.read_table("profile.csv")
        assert rows == [{"x": "5.000000000000e-01", "value": "1", "passed": "true", "note": ""}]

    def test_missing_table(self, repo):
        with pytest.raises(ConfigurationError):
            repo.read_table("profile.csv")


class TestTrace:
    """Frames, diagnostics and the trace block of meta.json."""

    def test_frames_round_trip(self, repo, trace):
        paths = repo.write_frames(trace)
        assert [p.name for p in paths] == ["frame_0000.csv", "frame_0001.csv"]
        frames = repo.read_frames()
        assert sorted(frames[1]) == [0.1]
        assert len(frames[1][0.1]) == 2
        assert np.allclose(frames[0][-0.1][0], circle(0.25))

    def test_no_frames(self, repo):
        with pytest.raises(ConfigurationError):
            repo.read_frames()

    def test_diagnostics_columns(self, repo, trace):
        repo.write_diagnostics(trace)
        rows = repo.read_table("diagnostics.csv")
        assert tuple(rows[0]) == DIAGNOSTIC_COLUMNS
        assert float(rows[1]["gap_area"]) == pytest.approx(0.2)

    def test_single_evolution_diagnostics(self, repo, trace):
        trace.diagnostics = []
        trace.members = {0.0: trace.members[0.1]}
        repo.write_diagnostics(trace)
        rows = repo.read_table("diagnostics.csv")
        assert [float(r["outer_area"]) for r in rows] == pytest.approx([0.5, 0.3])
        assert all(float(r["gap_area"]) == 0.0 for r in rows)

    def test_write_trace_meta(self, repo, trace):
        repo.write_trace(trace)
        block = repo.read_json("meta.json")["trace"]
        assert block["viewport"] == [-0.5, 0.5, -0.5, 0.5]
        assert block["extinction_time"] == {"-0.1": 0.4, "0.1": None}
        assert block["steps"] == 12

    def test_reproducible_bytes(self, tmp_path, trace):
        a = TraceRepository.create(tmp_path / "a")
        b = TraceRepository.create(tmp_path / "b")
        a.write_trace(trace)
        b.write_trace(trace)
        for name in ("frames/frame_0001.csv", "diagnostics.csv", "meta.json"):
            assert (a.root / name).read_bytes() == (b.root / name).read_bytes()
