"""
Pydantic schemas for kernel specifications.

JSON form:
    {"type": "fractional", "s": 0.5}
    {"type": "piecewise_power", "alpha": 1.0, "tail_exponent": 3.0}
    {"type": "table", "rho": [...], "k0": [...], "interp": "loglog"}
    {"type": "zero"}
"""

from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator


class _KernelSpecBase(BaseModel):
    """Fields shared by every kernel profile."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    cutoff: float = Field(
        default=0.0,
        ge=0.0,
        description="K is set to zero on B_cutoff (delta regularization)",
    )
    support_radius: float | None = Field(
        default=None,
        gt=0.0,
        description="K is set to zero outside B_support_radius",
    )


class FractionalKernelSpec(_KernelSpecBase):
    """K₀(ρ) = ρ^-(2+s)."""

    type: Literal["fractional"] = "fractional"
    s: float = Field(description="Fractional order, strictly inside (0, 1)")


class PiecewisePowerKernelSpec(_KernelSpecBase):
    """K₀(ρ) = ρ^-alpha for ρ ≤ 1 and ρ^-tail_exponent for ρ > 1."""

    type: Literal["piecewise_power"] = "piecewise_power"
    alpha: float = Field(description="Near-field exponent")
    tail_exponent: float = Field(description="Far-field exponent")


class TableKernelSpec(_KernelSpecBase):
    """Tabulated radial profile with an interpolation rule."""

    type: Literal["table"] = "table"
    rho: list[float] = Field(min_length=2, description="Strictly increasing radii")
    k0: list[float] = Field(min_length=2, description="Profile values at rho")
    interp: Literal["loglog", "linear"] = Field(
        default="loglog",
        description="loglog: power law between nodes and beyond the ends; "
        "linear: piecewise linear, constant extension below rho[0], zero above rho[-1]",
    )

    @model_validator(mode="after")
    def check_table(self) -> "TableKernelSpec":
        if len(self.rho) != len(self.k0):
            raise ValueError("rho and k0 must have the same length")
        if any(b <= a for a, b in zip(self.rho, self.rho[1:])):
            raise ValueError("rho must be strictly increasing")
        if self.rho[0] <= 0:
            raise ValueError("rho must be positive")
        return self


class ZeroKernelSpec(_KernelSpecBase):
    """Identically zero kernel."""

    type: Literal["zero"] = "zero"


KernelSpec = Annotated[
    Union[FractionalKernelSpec, PiecewisePowerKernelSpec, TableKernelSpec, ZeroKernelSpec],
    Field(discriminator="type"),
]

kernel_spec_adapter: TypeAdapter[KernelSpec] = TypeAdapter(KernelSpec)
