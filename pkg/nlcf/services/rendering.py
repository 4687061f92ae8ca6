"""
SVG rendering of recorded frames.

One file per recorded time with every member's zero contours; the region
between the finest ±η members is shaded when the finest gap holds more
than two cells. Output is byte-deterministic: fixed viewport, fixed hash
salt, no date in the metadata.
"""

from pathlib import Path

import matplotlib as mpl
import numpy as np
import structlog
from matplotlib.figure import Figure
from matplotlib.patches import PathPatch
from matplotlib.path import Path as MplPath
from numpy.typing import NDArray

from nlcf.exceptions import ConfigurationError
from nlcf.storage.trace_repository import TraceRepository

logger = structlog.get_logger(__name__)

SHADE_AREA_CELLS = 2.0
OUTER_COLOR = "#1f4e9c"
INNER_COLOR = "#b3261e"
SINGLE_COLOR = "#202020"
GAP_COLOR = "#f2b134"
FIGURE_INCHES = 5.0


def _signed_area(points: NDArray[np.float64]) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _oriented(points: NDArray[np.float64], counterclockwise: bool) -> NDArray[np.float64]:
    if (_signed_area(points) > 0.0) != counterclockwise:
        return points[::-1]
    return points


def gap_path(outer: list[NDArray[np.float64]], inner: list[NDArray[np.float64]]) -> MplPath | None:
    """Compound path of the outer contours minus the inner ones (nonzero winding)."""
    vertices: list[NDArray[np.float64]] = []
    codes: list[NDArray[np.uint8]] = []
    for contours, ccw in ((outer, True), (inner, False)):
        for c in contours:
            if len(c) < 3:
                continue
            pts = _oriented(np.asarray(c, dtype=float), ccw)
            vertices.append(np.vstack([pts, pts[:1]]))
            block = np.full(len(pts) + 1, MplPath.LINETO, dtype=np.uint8)
            block[0], block[-1] = MplPath.MOVETO, MplPath.CLOSEPOLY
            codes.append(block)
    if not vertices:
        return None
    return MplPath(np.concatenate(vertices), np.concatenate(codes))


class RenderService:
    """Отрисовка кадров прогона в SVG."""

    def __init__(self) -> None:
        self.logger = logger.bind(service="rendering")

    def render_frames(self, trace_dir: Path, output_dir: Path | None = None) -> list[Path]:
        """
        Render frames/frame_XXXX.csv of a run directory to svg/frame_XXXX.svg.

        Raises:
            ConfigurationError: missing meta.json, frames or viewport
        """
        repo = TraceRepository(trace_dir)
        meta = repo.read_json("meta.json")
        block = meta.get("trace")
        if not block or "viewport" not in block:
            raise ConfigurationError("meta.json carries no trace viewport", path=str(trace_dir))
        frames = repo.read_frames()
        h = float(block["h"])
        times = [float(t) for t in block.get("times", [])]
        diagnostics = repo.read_table("diagnostics.csv") if (repo.root / "diagnostics.csv").exists() else []
        gaps = [float(row.get("finest_gap_area") or 0.0) for row in diagnostics]

        target = Path(output_dir) if output_dir is not None else repo.root / "svg"
        target.mkdir(parents=True, exist_ok=True)
        x0, x1, y0, y1 = (float(v) for v in block["viewport"])
        paths = []
        with mpl.rc_context({"svg.hashsalt": "nlcf", "svg.fonttype": "none", "path.simplify": False}):
            for index, members in enumerate(frames):
                fig = Figure(figsize=(FIGURE_INCHES, FIGURE_INCHES))
                ax = fig.add_subplot(1, 1, 1)
                ax.set_xlim(x0, x1)
                ax.set_ylim(y0, y1)
                ax.set_aspect("equal")
                t = times[index] if index < len(times) else float(index)
                ax.set_title(f"t = {t:.6g}")

                levels = sorted(members)
                outer = [e for e in levels if e > 0.0]
                inner = [e for e in levels if e < 0.0]
                gap = gaps[index] if index < len(gaps) else 0.0
                if outer and inner and gap > SHADE_AREA_CELLS * h * h:
                    path = gap_path(members[min(outer)], members[max(inner)])
                    if path is not None:
                        ax.add_patch(PathPatch(path, facecolor=GAP_COLOR, edgecolor="none", alpha=0.6, gid="gap"))

                scale = max((abs(e) for e in levels), default=1.0) or 1.0
                for eta in levels:
                    color = OUTER_COLOR if eta > 0.0 else INNER_COLOR if eta < 0.0 else SINGLE_COLOR
                    width = 0.6 + 0.8 * (1.0 - abs(eta) / scale)
                    for contour in members[eta]:
                        ax.plot(contour[:, 0], contour[:, 1], color=color, linewidth=width)

                path_out = target / f"frame_{index:04d}.svg"
                fig.savefig(path_out, format="svg", metadata={"Date": None})
                paths.append(path_out)
        self.logger.info("frames_rendered", trace_dir=str(trace_dir), frames=len(paths))
        return paths


# Глобальный экземпляр
render_service = RenderService()
