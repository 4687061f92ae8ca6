"""
Grid fields and flow traces.

Nodes sit at x_i = −W + i·h, i = 0..n−1, on both axes (axis 0 is x); every
node is the centre of a square cell of side h.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Literal

import numpy as np
from numpy.typing import NDArray

from nlcf.models.shape import AsymptoticModel

AsymptoticLabel = Literal["cross", "box", "vanishing", "constant"]


def asymptotic_label(model: AsymptoticModel, name: str) -> AsymptoticLabel:
    """Label of the out-of-window behaviour used by the grid tail correction."""
    if model.kind != "cone":
        return model.kind
    return "box" if "box" in name else "cross"


@dataclass(frozen=True, eq=False)
class GridField:
    """Truncated level-set function on a square window."""

    values: NDArray[np.float64]
    h: float
    half_width: float
    truncation: float
    asymptotic: AsymptoticModel
    label: AsymptoticLabel
    edge_values: NDArray[np.float64] | None = field(default=None, repr=False)
    shape_name: str = ""

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def dims(self) -> tuple[int, int]:
        return int(self.values.shape[0]), int(self.values.shape[1])

    @property
    def origin(self) -> tuple[float, float]:
        return -self.half_width, -self.half_width

    @property
    def axis(self) -> NDArray[np.float64]:
        return -self.half_width + self.h * np.arange(self.n)

    def coordinates(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """X, Y arrays with X[i, j] = x_i, Y[i, j] = y_j."""
        a = self.axis
        return np.meshgrid(a, a, indexing="ij")

    def node_of(self, x: float, y: float) -> tuple[int, int]:
        """Nearest node index."""
        i = int(round((x + self.half_width) / self.h))
        j = int(round((y + self.half_width) / self.h))
        return min(max(i, 0), self.n - 1), min(max(j, 0), self.n - 1)

    @property
    def superlevel(self) -> NDArray[np.bool_]:
        return self.values >= 0.0

    def with_values(self, values: NDArray[np.float64]) -> "GridField":
        return replace(self, values=values)

    def lipschitz_constant(self) -> float:
        """Largest difference quotient between axis neighbours."""
        u = self.values
        dx = np.abs(np.diff(u, axis=0)).max(initial=0.0)
        dy = np.abs(np.diff(u, axis=1)).max(initial=0.0)
        return float(max(dx, dy) / self.h)


@dataclass(frozen=True)
class FlowFrame:
    """One recorded time of one evolved field."""

    t: float
    area: float
    contours: tuple[NDArray[np.float64], ...]
    mask: NDArray[np.bool_] = field(repr=False)


@dataclass
class FlowTrace:
    """
    Recorded evolution of one set (threshold 0.0) or of an η-ladder.

    members maps the initial shift η (u₀ = clamp(d_E + η)) to its frames;
    positive η are outer members, negative η inner members.
    """

    shape_name: str
    kernel: dict[str, Any]
    h: float
    half_width: float
    truncation: float
    times: list[float]
    members: dict[float, list[FlowFrame]]
    extinction_time: dict[float, float | None] = field(default_factory=dict)
    diagnostics: list[dict[str, float]] = field(default_factory=list)
    final_fields: dict[float, GridField] = field(default_factory=dict, repr=False)
    params: dict[str, Any] = field(default_factory=dict)
    steps: int = 0

    @property
    def thresholds(self) -> list[float]:
        return sorted(self.members)

    @property
    def outer(self) -> list[float]:
        return sorted(e for e in self.members if e > 0.0)

    @property
    def inner(self) -> list[float]:
        return sorted((e for e in self.members if e < 0.0), reverse=True)

    def frames_at(self, index: int) -> dict[float, FlowFrame]:
        return {eta: frames[index] for eta, frames in self.members.items() if index < len(frames)}

    def single(self) -> list[FlowFrame]:
        """Frames of the unshifted member."""
        if 0.0 in self.members:
            return self.members[0.0]
        return self.members[min(self.members, key=abs)]
