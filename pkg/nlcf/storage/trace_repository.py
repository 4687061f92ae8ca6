"""
Repository для файлов прогона.

Один каталог на прогон: meta.json, frames/frame_XXXX.csv, diagnostics.csv,
summary.json, schema.json и таблицы отчётов. JSON пишется с отсортированными
ключами, вещественные числа в CSV в формате %.12e, так что повторный прогон
даёт побайтно те же файлы.
"""

import csv
import json
import math
from pathlib import Path
from typing import Any

import numpy as np
import structlog
from pydantic import BaseModel

from nlcf.exceptions import ConfigurationError
from nlcf.models.flow import FlowTrace

logger = structlog.get_logger(__name__)

FLOAT_FORMAT = "%.12e"
FRAME_COLUMNS = ("level", "contour", "x", "y")
DIAGNOSTIC_COLUMNS = (
    "t",
    "outer_area",
    "inner_area",
    "gap_area",
    "finest_gap_area",
    "inscribed_radius",
    "finest_inscribed_radius",
)

SCHEMA: dict[str, dict[str, str]] = {
    "frames/frame_XXXX.csv": {
        "level": "ladder shift η of the member (0 for a single evolution)",
        "contour": "index of the zero-contour polyline within the member",
        "x": "vertex abscissa",
        "y": "vertex ordinate",
    },
    "diagnostics.csv": {
        "t": "recorded time",
        "outer_area": "area of the outer superlevel set, extrapolated to η = 0",
        "inner_area": "area of the inner superlevel set, extrapolated to η = 0",
        "gap_area": "area of outer minus inner, extrapolated to η = 0",
        "finest_gap_area": "gap area at the smallest shift",
        "inscribed_radius": "radius of the largest gap ball centred at 0, extrapolated to η = 0",
        "finest_inscribed_radius": "the same radius at the smallest shift",
    },
    "barrier_<family>.csv": {
        "t": "family time",
        "x": "sample abscissa",
        "y": "sample ordinate",
        "regularity": "Smooth, Angular or Excluded (outside the checked domain)",
        "velocity": "closed-form outer normal velocity",
        "curvature": "principal-value K-curvature",
        "rhs": "−H ∓ δ",
        "margin": "signed distance to the inequality (≥ 0 holds)",
        "bar": "certified error of the curvature",
        "passed": "inequality holds within the bar",
    },
    "profile.csv": {
        "arclength": "arclength of the sample within the window",
        "x": "sample abscissa",
        "y": "sample ordinate",
        "regularity": "Smooth or Angular",
        "value": "principal-value K-curvature",
        "bar": "certified error",
        "skipped_reason": "why no value was computed",
    },
    "minimality.csv": {
        "r": "side half-width of the added square",
        "diff": "Per(C_r, B_R) − Per(C, B_R)",
        "bound": "−2∫Ψ over W_r",
        "quadrature_error": "certified error of diff",
        "bound_error": "certified error of the bound",
    },
}


def _plain(value: Any) -> Any:
    """JSON-ready copy: pydantic models dumped, numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(value, BaseModel):
        return _plain(value.model_dump(mode="python"))
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    return str(value)


class TraceRepository:
    """Repository для одного каталога прогона."""

    def __init__(self, root: Path):
        self.root = Path(root)

    @classmethod
    def create(cls, root: Path) -> "TraceRepository":
        """Create the run directory (and frames/) if needed."""
        repo = cls(root)
        (repo.root / "frames").mkdir(parents=True, exist_ok=True)
        return repo

    # ============ JSON ============

    def write_json(self, name: str, payload: Any) -> Path:
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        text = json.dumps(_plain(payload), sort_keys=True, indent=2, ensure_ascii=False)
        path.write_text(text + "\n", encoding="utf-8")
        return path

    def read_json(self, name: str) -> Any:
        path = self.root / name
        if not path.exists():
            raise ConfigurationError("missing run file", path=str(path))
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigurationError("malformed JSON", path=str(path), error=str(e)) from e

    def write_meta(self, meta: dict[str, Any]) -> Path:
        return self.write_json("meta.json", meta)

    def write_summary(self, summary: dict[str, Any]) -> Path:
        return self.write_json("summary.json", summary)

    def write_schema(self) -> Path:
        return self.write_json("schema.json", SCHEMA)

    # ============ CSV ============

    def write_table(self, name: str, columns: tuple[str, ...] | list[str], rows: list[dict[str, Any]]) -> Path:
        """CSV with a header row; floats as %.12e, None as empty."""
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(row.get(c)) for c in columns])
        return path

    def write_frames(self, trace: FlowTrace) -> list[Path]:
        """One CSV per recorded time with every member's zero contours."""
        paths = []
        for index in range(len(trace.times)):
            blocks = []
            for eta, frame in sorted(trace.frames_at(index).items()):
                for number, contour in enumerate(frame.contours):
                    pts = np.asarray(contour, dtype=float)
                    block = np.column_stack([np.full(len(pts), eta), np.full(len(pts), number), pts])
                    blocks.append(block)
            table = np.concatenate(blocks) if blocks else np.empty((0, 4))
            path = self.root / "frames" / f"frame_{index:04d}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savetxt(
                path,
                table,
                fmt=[FLOAT_FORMAT, "%d", FLOAT_FORMAT, FLOAT_FORMAT],
                delimiter=",",
                header=",".join(FRAME_COLUMNS),
                comments="",
            )
            paths.append(path)
        logger.debug("frames_written", root=str(self.root), frames=len(paths))
        return paths

    def write_diagnostics(self, trace: FlowTrace) -> Path:
        """diagnostics.csv; single evolutions fill the area columns from their only member."""
        rows = trace.diagnostics
        if not rows:
            frames = trace.single()
            rows = [
                {"t": f.t, "outer_area": f.area, "inner_area": f.area, "gap_area": 0.0, "finest_gap_area": 0.0}
                for f in frames
            ]
        return self.write_table("diagnostics.csv", DIAGNOSTIC_COLUMNS, rows)

    def update_meta(self, extra: dict[str, Any]) -> Path:
        meta = self.read_json("meta.json") if (self.root / "meta.json").exists() else {}
        meta.update(_plain(extra))
        return self.write_meta(meta)

    def write_trace(self, trace: FlowTrace) -> None:
        """Frames, diagnostics and the trace block of meta.json (viewport, times, levels)."""
        self.write_frames(trace)
        self.write_diagnostics(trace)
        self.update_meta(
            {
                "trace": {
                    "shape": trace.shape_name,
                    "h": trace.h,
                    "half_width": trace.half_width,
                    "truncation": trace.truncation,
                    "times": trace.times,
                    "thresholds": trace.thresholds,
                    "extinction_time": {f"{eta:g}": te for eta, te in sorted(trace.extinction_time.items())},
                    "steps": trace.steps,
                    "viewport": [-trace.half_width, trace.half_width, -trace.half_width, trace.half_width],
                }
            }
        )

    def read_frames(self) -> list[dict[float, list[np.ndarray]]]:
        """Contours per recorded time, keyed by ladder level."""
        paths = sorted((self.root / "frames").glob("frame_*.csv"))
        if not paths:
            raise ConfigurationError("no frames in run directory", path=str(self.root))
        frames = []
        for path in paths:
            table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            members: dict[float, list[np.ndarray]] = {}
            if table.size:
                for level in np.unique(table[:, 0]):
                    rows = table[table[:, 0] == level]
                    members[float(level)] = [rows[rows[:, 1] == c][:, 2:] for c in np.unique(rows[:, 1])]
            frames.append(members)
        return frames

    def read_table(self, name: str) -> list[dict[str, str]]:
        path = self.root / name
        if not path.exists():
            raise ConfigurationError("missing run file", path=str(path))
        with path.open(newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))
