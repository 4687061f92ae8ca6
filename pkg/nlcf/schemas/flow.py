"""
Pydantic schemas for flow runs.
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class FlowParams(BaseModel):
    """Grid and time-stepping parameters of one evolution."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    h: float = Field(gt=0.0, description="Grid spacing")
    window: float | None = Field(default=None, gt=0.0, description="Half-width W of [−W, W]²; shape window if omitted")
    truncation: float | None = Field(default=None, gt=0.0, description="Level-set truncation M; 8h if omitted")
    cfl: float | None = Field(default=None, gt=0.0, le=1.0, description="Overrides Settings.cfl")
    redistance_every: int | None = Field(default=None, ge=1, description="Overrides Settings.redistance_every")
    n_records: int = Field(default=20, ge=1, description="Equally spaced recorded times after t = 0")
    record_times: list[float] | None = Field(default=None, description="Explicit recorded times (sorted, ≥ 0)")
    engine: Literal["fft", "direct"] = "fft"
    band_width: float = Field(default=4.0, gt=1.0, description="Band |u| ≤ band_width·h")
    edge_margin: int = Field(default=2, ge=1, description="Frozen node rows along the window edge")
    stencil: int = Field(default=8, ge=1, description="Half-width of the exact near stencil (nodes)")
    max_steps: int = Field(default=200_000, ge=1)

    @model_validator(mode="after")
    def check_records(self) -> "FlowParams":
        if self.record_times is not None:
            times = self.record_times
            if not times or any(t < 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError("record_times must be nonnegative and strictly increasing")
        return self

    @property
    def resolved_truncation(self) -> float:
        return self.truncation if self.truncation is not None else 8.0 * self.h
