"""
Pydantic schemas for shape specifications.

JSON form:
    {"shape": "perturbed_cross", "r": 0.5}
    {"shape": "tangent_balls"}
    {"shape": "box_pair", "r": 0.25, "modifiers": [{"op": "dilate", "amount": 0.125}]}

Range checks live in the shape builders and raise ShapeError.
"""

from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ============ Modifiers ============


class ErodeModifier(_Spec):
    op: Literal["erode"] = "erode"
    amount: float = Field(ge=0.0, description="λ in {d_E ≥ λ}")


class DilateModifier(_Spec):
    op: Literal["dilate"] = "dilate"
    amount: float = Field(ge=0.0, description="λ in {d_E ≥ −λ}")


class ScaleModifier(_Spec):
    op: Literal["scale"] = "scale"
    factor: float = Field(gt=0.0)


class RotateModifier(_Spec):
    op: Literal["rotate"] = "rotate"
    theta: float


class TranslateModifier(_Spec):
    op: Literal["translate"] = "translate"
    v: tuple[float, float]


class ComplementModifier(_Spec):
    op: Literal["complement"] = "complement"


class UnionModifier(_Spec):
    op: Literal["union"] = "union"
    other: "ShapeSpec"


class IntersectionModifier(_Spec):
    op: Literal["intersection"] = "intersection"
    other: "ShapeSpec"


Modifier = Annotated[
    Union[
        ErodeModifier,
        DilateModifier,
        ScaleModifier,
        RotateModifier,
        TranslateModifier,
        ComplementModifier,
        UnionModifier,
        IntersectionModifier,
    ],
    Field(discriminator="op"),
]


# ============ Shapes ============


class _ShapeBase(_Spec):
    modifiers: list[Modifier] = Field(default_factory=list)
    window: float | None = Field(default=None, gt=0.0, description="Half-width of the evaluation window")

    def params(self) -> dict[str, object]:
        return self.model_dump(exclude={"shape", "modifiers", "window"})


class BallSpec(_ShapeBase):
    shape: Literal["ball"] = "ball"
    center: tuple[float, float] = (0.0, 0.0)
    R: float = 1.0


class HalfplaneSpec(_ShapeBase):
    """{x · normal ≤ offset}."""

    shape: Literal["halfplane"] = "halfplane"
    normal: tuple[float, float] = (0.0, 1.0)
    offset: float = 0.0


class CrossSpec(_ShapeBase):
    shape: Literal["cross"] = "cross"


class RotatedCrossSpec(_ShapeBase):
    shape: Literal["rotated_cross"] = "rotated_cross"


class PerturbedCrossSpec(_ShapeBase):
    shape: Literal["perturbed_cross"] = "perturbed_cross"
    r: float


class ComplementCrossSquareSpec(_ShapeBase):
    shape: Literal["complement_cross_square"] = "complement_cross_square"
    r: float


class BoxPairSpec(_ShapeBase):
    shape: Literal["box_pair"] = "box_pair"
    r: float


class RotatedBoxPairSpec(_ShapeBase):
    shape: Literal["rotated_box_pair"] = "rotated_box_pair"
    r: float


class DropletSpec(_ShapeBase):
    shape: Literal["droplet"] = "droplet"


class DropletSquareSpec(_ShapeBase):
    """G₀ when r is omitted, G_r = [−r, r]² ∪ G₀ otherwise."""

    shape: Literal["droplet_square"] = "droplet_square"
    r: float | None = None


class PinchedDropletSpec(_ShapeBase):
    shape: Literal["pinched_droplet"] = "pinched_droplet"
    delta: float
    r: float


class TangentBallsSpec(_ShapeBase):
    shape: Literal["tangent_balls"] = "tangent_balls"


class NearTangentSpec(_ShapeBase):
    shape: Literal["near_tangent"] = "near_tangent"
    delta: float
    r: float


class BarrierPairSpec(_ShapeBase):
    shape: Literal["barrier_pair"] = "barrier_pair"
    eps: float
    mu: float = 0.0
    C0: float = 1.0
    t: float = 0.0


class StadiumSpec(_ShapeBase):
    shape: Literal["stadium"] = "stadium"
    a: float
    R: float


ShapeSpec = Annotated[
    Union[
        BallSpec,
        HalfplaneSpec,
        CrossSpec,
        RotatedCrossSpec,
        PerturbedCrossSpec,
        ComplementCrossSquareSpec,
        BoxPairSpec,
        RotatedBoxPairSpec,
        DropletSpec,
        DropletSquareSpec,
        PinchedDropletSpec,
        TangentBallsSpec,
        NearTangentSpec,
        BarrierPairSpec,
        StadiumSpec,
    ],
    Field(discriminator="shape"),
]

UnionModifier.model_rebuild()
IntersectionModifier.model_rebuild()

shape_spec_adapter: TypeAdapter[ShapeSpec] = TypeAdapter(ShapeSpec)
