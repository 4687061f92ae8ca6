"""
Pydantic schemas for computed reports.

Reports are frozen and serialize to the JSON files written by the trace
repository.
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class _Report(BaseModel):
    model_config = ConfigDict(frozen=True)


# ============ Kernel Reports ============


class IntegrabilityReport(_Report):
    """∫₀¹ ρ²K₀ and ∫₁^∞ ρK₀ with their convergence status."""

    near_field: float
    tail: float
    near_status: Literal["converged", "diverged", "undetermined"]
    tail_status: Literal["converged", "diverged", "undetermined"]
    passed: bool = Field(alias="pass")
    failures: list[str] = Field(default_factory=list)

    model_config = ConfigDict(frozen=True, populate_by_name=True)


class PositivitySample(_Report):
    """Sampled inf over p ∈ B_{3√2 r} of the kernel mass of B_{r/4}(3r/4, 0) − p."""

    r: float
    infimum: float


class RegimeReport(_Report):
    """Outcome of classify_regime with its decision trail."""

    verdict: Literal["Strong", "Weak", "Undetermined"]
    kersi_status: Literal["converged", "diverged", "undetermined"]
    kersi_value: float | None = None
    kersi_panel_sums: list[float] = Field(default_factory=list)
    positivity: list[PositivitySample] = Field(default_factory=list)
    phi_one: float | None = None
    hig_status: Literal["converged", "diverged", "undetermined", "skipped"] = "skipped"
    hig_panel_sums: list[float] = Field(default_factory=list)
    trail: list[str] = Field(default_factory=list)


class KernelInfoReport(_Report):
    """Printed by `nlcf kernel-info`."""

    kernel: dict
    nonincreasing: bool
    strictly_positive_radius: float | None
    integrability: IntegrabilityReport
    regime: RegimeReport
    psi_one: float
    ball_curvature_one: float
    extinction_time_one: float | None


# ============ Curvature ============


class CurvatureEstimate(_Report):
    """PV curvature with its certified error decomposition."""

    value: float
    near_field_bound: float
    mid_field_error: float
    tail_bound: float
    eps_pv: float
    truncation_radius: float
    warning: str | None = None

    @property
    def bar(self) -> float:
        """Total certified error."""
        return self.near_field_bound + self.mid_field_error + self.tail_bound


class ProfileEntry(_Report):
    """One row of a curvature profile; estimate is None for skipped samples."""

    arclength: float
    x: float
    y: float
    regularity: Literal["Smooth", "Angular"]
    estimate: CurvatureEstimate | None = None
    skipped_reason: str | None = None


# ============ Perimeter ============


class PerimeterValue(_Report):
    """Localized perimeter Per_K(E, B_R) with its quadrature bar."""

    value: float
    error: float
    R: float


class PerimeterDiffReport(_Report):
    """Per_K(C_r, B_R) − Per_K(C, B_R) from the W_r identity, with its bound."""

    r: float
    R: float
    diff: float
    bound: float
    quadrature_error: float
    bound_error: float
    frame: Literal["standard", "rotated"] = "standard"
    region: str = "W_r = {|x1| < |x2| < r}"

    @property
    def certified_negative(self) -> bool:
        return self.diff + self.quadrature_error < 0.0

    @property
    def within_bound(self) -> bool:
        return self.diff <= self.bound + self.quadrature_error + self.bound_error


class WitnessReport(_Report):
    """Result of the r-grid scan for a non-minimality witness."""

    found: bool
    best_r: float | None
    margin: float | None
    scan: list[PerimeterDiffReport]


# ============ Analysis ============


class FatteningReport(_Report):
    verdict: Literal["Fattening", "NoFattening", "Inconclusive"]
    times: list[float]
    gap_area: list[float]
    finest_gap_area: list[float]
    inscribed_radius: list[float]
    fitted_exponent: float | None = None
    fitted_constant: float | None = None
    exponent_band: tuple[float, float] | None = None
    thresholds: list[float]
    h: float
    flags: list[str] = Field(default_factory=list)


class ExponentFit(_Report):
    p: float
    c: float
    confidence: tuple[float, float]
    n_points: int


class BarrierSample(_Report):
    t: float
    x: float
    y: float
    regularity: Literal["Smooth", "Angular", "Excluded"]
    velocity: float
    curvature: float | None
    rhs: float | None
    margin: float | None
    bar: float | None
    passed: bool | None


class BarrierReport(_Report):
    """Normal velocity against −H^K ± δ along a barrier family."""

    family: str
    inequality: Literal["le", "ge"]
    parameters: dict[str, float]
    samples: list[BarrierSample]
    pass_fraction: float
    worst_margin: float
    angular_excluded: int
    domain_excluded: int
    passed: bool


class BoundSample(_Report):
    x: float
    y: float
    value: float
    bar: float
    bound: float
    margin: float


class NamedBoundsReport(_Report):
    case: str
    samples: list[BoundSample]
    passed: bool
    fitted: dict[str, float] = Field(default_factory=dict)


class PropertyCheck(_Report):
    """One entry of the `checks` list in summary.json."""

    name: str
    value: float | str | bool | None
    threshold: float | str | None = None
    passed: bool
