"""
Pydantic schemas for scenario configuration files.

Every model forbids unknown keys; scenario-specific parameters are validated
against the scenario's own model before anything is computed.
"""

from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from nlcf.schemas.flow import FlowParams
from nlcf.schemas.kernel import FractionalKernelSpec, KernelSpec, PiecewisePowerKernelSpec
from nlcf.schemas.shape import ShapeSpec, shape_spec_adapter

ScenarioName = Literal[
    "ball",
    "cross-strong",
    "cross-weak",
    "droplet",
    "tangent-balls",
    "minimality",
    "barriers",
    "curvature-profile",
    "kernel-info",
]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ============ Grid ============


class GridConfig(_Strict):
    """Grid, time stepping and η-ladder of a flow scenario."""

    h: float = Field(default=1.0 / 64.0, gt=0.0, description="Grid spacing")
    window: float | None = Field(default=None, gt=0.0, description="Half-width W of [−W, W]²")
    M: float | None = Field(default=None, gt=0.0, description="Level-set truncation")
    cfl: float | None = Field(default=None, gt=0.0, le=1.0)
    redistance_every: int | None = Field(default=None, ge=1)
    T: float | None = Field(default=None, gt=0.0, description="Final time; scenario default if omitted")
    n_records: int = Field(default=20, ge=1)
    ladder: list[float] | None = Field(
        default=None, description="Positive shifts η; the ladder uses ±η. Defaults to {4h, 2h, h}"
    )
    engine: Literal["fft", "direct"] = "fft"
    band_width: float = Field(default=4.0, gt=1.0)
    stencil: int = Field(default=8, ge=1)

    @model_validator(mode="after")
    def check_ladder(self) -> "GridConfig":
        if self.ladder is not None and (not self.ladder or any(e <= 0 for e in self.ladder)):
            raise ValueError("ladder shifts must be positive")
        return self

    @property
    def shifts(self) -> list[float]:
        return sorted(self.ladder) if self.ladder else [self.h, 2.0 * self.h, 4.0 * self.h]

    def flow_params(self, ladder: bool = False) -> FlowParams:
        """FlowParams for one run; ladders get a truncation above the largest shift plus the band."""
        truncation = self.M
        if truncation is None and ladder:
            truncation = max(self.shifts) + (self.band_width + 4.0) * self.h
        return FlowParams(
            h=self.h,
            window=self.window,
            truncation=truncation,
            cfl=self.cfl,
            redistance_every=self.redistance_every,
            n_records=self.n_records,
            engine=self.engine,
            band_width=self.band_width,
            stencil=self.stencil,
        )


# ============ Scenario parameters ============


class BallParams(_Strict):
    R: float = Field(default=1.0, gt=0.0)
    scale: float | None = Field(default=2.0, gt=0.0, description="λ of the scaled rerun; None skips it")
    nested: tuple[float, float] | None = Field(
        default=None, description="Radii of a nested pair checked for comparison preservation"
    )
    tolerance: float = Field(default=0.05, gt=0.0)


class CrossParams(_Strict):
    frame: Literal["standard", "rotated"] = "rotated"
    r_target: float = Field(default=0.3, gt=0.0, description="T defaults to Λ(r_target)")
    exponent_tolerance: float = Field(default=0.15, gt=0.0)
    T_weak: float = Field(default=0.1, gt=0.0, description="T when Λ is unavailable")


class DropletParams(_Strict):
    T: float = Field(default=0.05, gt=0.0)
    exponent_tolerance: float = Field(default=0.20, gt=0.0)


class TangentBallsParams(_Strict):
    T: float = Field(default=0.05, gt=0.0)


class MinimalityParams(_Strict):
    R: float = Field(default=2.0, gt=0.0)
    r_grid: list[float] = Field(default_factory=lambda: [0.1 * i for i in range(1, 11)], min_length=1)
    tol: float | None = Field(default=None, gt=0.0)
    frame: Literal["standard", "rotated"] = "standard"


class BarriersParams(_Strict):
    families: list[Literal["a", "b", "c", "d", "e"]] = Field(default_factory=lambda: ["a", "b", "c", "d", "e"])
    n_points: int = Field(default=16, ge=1)
    n_times: int = Field(default=3, ge=1)
    tol: float | None = Field(default=None, gt=0.0)
    family_params: dict[str, dict[str, float]] = Field(default_factory=dict)
    weak_kernel: KernelSpec = Field(
        default_factory=lambda: PiecewisePowerKernelSpec(alpha=1.0, tail_exponent=3.0),
        description="Kernel of the shrinking-box family",
    )


class CurvatureProfileParams(_Strict):
    shape: ShapeSpec = Field(default_factory=lambda: shape_spec_adapter.validate_python({"shape": "perturbed_cross", "r": 0.5}))
    spacing: float = Field(default=0.1, gt=0.0)
    window: float | None = Field(default=None, gt=0.0)
    tol: float | None = Field(default=None, gt=0.0)


class KernelInfoParams(_Strict):
    dominating_kernel: KernelSpec | None = Field(default=None, description="K₁ for Φ when K₀ is not monotone")


SCENARIO_PARAMS: dict[str, type[_Strict]] = {
    "ball": BallParams,
    "cross-strong": CrossParams,
    "cross-weak": CrossParams,
    "droplet": DropletParams,
    "tangent-balls": TangentBallsParams,
    "minimality": MinimalityParams,
    "barriers": BarriersParams,
    "curvature-profile": CurvatureProfileParams,
    "kernel-info": KernelInfoParams,
}


def _default_kernel(scenario: str) -> KernelSpec:
    if scenario == "cross-weak":
        return PiecewisePowerKernelSpec(alpha=1.0, tail_exponent=3.0)
    return FractionalKernelSpec(s=0.5)


class ScenarioConfig(_Strict):
    """One run of the laboratory."""

    scenario: ScenarioName
    kernel: KernelSpec | None = None
    grid: GridConfig = Field(default_factory=GridConfig)
    params: dict[str, Any] = Field(default_factory=dict)
    output_dir: Path | None = None
    seed: int = 0

    @model_validator(mode="after")
    def resolve(self) -> "ScenarioConfig":
        if self.kernel is None:
            self.kernel = _default_kernel(self.scenario)
        model = SCENARIO_PARAMS[self.scenario]
        self.params = model.model_validate(self.params).model_dump(mode="json")
        return self

    def typed_params(self) -> Any:
        """Scenario parameters as their validated model."""
        return SCENARIO_PARAMS[self.scenario].model_validate(self.params)
