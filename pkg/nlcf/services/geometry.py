"""
Shape library: named constructions, boolean and morphological operations,
boundary sampling and boundary-to-boundary distances.

Boolean results and offsets keep exact line/arc boundaries: every candidate
piece is clipped against the other operand by sampling plus bisection.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, replace
from typing import Any

import numpy as np
import structlog
from numpy.typing import ArrayLike, NDArray
from pydantic import ValidationError
from scipy.spatial import cKDTree

from nlcf.config import get_settings
from nlcf.exceptions import ConfigurationError, ShapeError
from nlcf.models.shape import (
    TWO_PI,
    ArcPiece,
    BoundarySample,
    Indicator,
    LinePiece,
    Piece,
    PlanarSet,
    Point,
    as_points,
    rotation,
)
from nlcf.schemas.shape import (
    ComplementModifier,
    DilateModifier,
    ErodeModifier,
    IntersectionModifier,
    RotateModifier,
    ScaleModifier,
    ShapeSpec,
    TranslateModifier,
    UnionModifier,
    shape_spec_adapter,
)

logger = structlog.get_logger(__name__)

SQRT2 = math.sqrt(2.0)
_HALF_LINE = np.concatenate([np.linspace(0.0, 64.0, 1025), np.geomspace(64.0, 1e7, 241)[1:]])
_CLIP_TOL = 1e-12
_BISECTIONS = 60


@dataclass(frozen=True)
class SetDistance:
    """Distance between two boundaries with its certified lower bound."""

    value: float
    lower_bound: float
    spacing: float


# ============ Clipping ============


def _param_samples(piece: Piece) -> NDArray[np.float64]:
    if piece.bounded:
        n = 257 if isinstance(piece, LinePiece) else max(257, int(64 * abs(piece.sweep)))
        return np.linspace(piece.s0, piece.s1, n)
    if math.isinf(piece.s0) and math.isinf(piece.s1):
        return np.concatenate([-_HALF_LINE[:0:-1], _HALF_LINE])
    if math.isinf(piece.s1):
        return piece.s0 + _HALF_LINE
    return piece.s1 - _HALF_LINE[::-1]


def clip_pieces(pieces: list[Piece] | tuple[Piece, ...], keep: Callable[[NDArray[np.float64]], NDArray[np.float64]]) -> list[Piece]:
    """Sub-pieces where keep(point) ≥ 0; transitions located by bisection."""
    out: list[Piece] = []
    for piece in pieces:
        s = _param_samples(piece)
        ok = keep(piece.point(s)) > -_CLIP_TOL
        if np.all(ok):
            out.append(piece)
            continue
        if not np.any(ok):
            continue
        idx = np.nonzero(ok[1:] != ok[:-1])[0]
        lo, hi, ok_lo = s[idx].copy(), s[idx + 1].copy(), ok[idx]
        for _ in range(_BISECTIONS):
            mid = 0.5 * (lo + hi)
            same = (keep(piece.point(mid)) > -_CLIP_TOL) == ok_lo
            lo, hi = np.where(same, mid, lo), np.where(same, hi, mid)
        cuts = 0.5 * (lo + hi)

        intervals: list[tuple[float, float]] = []
        start = piece.s0 if ok[0] else None
        for cut, leaving in zip(cuts, ok_lo, strict=True):
            if leaving:
                intervals.append((start, float(cut)))  # type: ignore[arg-type]
                start = None
            else:
                start = float(cut)
        if start is not None:
            intervals.append((start, piece.s1))
        if piece.closed and ok[0] and ok[-1] and len(intervals) > 1:
            first, last = intervals.pop(0), intervals.pop()
            intervals.append((last[0], piece.s1 + first[1]))
        out.extend(piece.sub(a, b) for a, b in intervals if b - a > 1e-12)
    return out


# ============ Primitive builders ============


def _segment(a: Point, b: Point) -> LinePiece:
    length = math.dist(a, b)
    return LinePiece(a, ((b[0] - a[0]) / length, (b[1] - a[1]) / length), 0.0, length)


def _ray_in(end: Point, direction: Point) -> LinePiece:
    """Ray arriving from infinity at `end`, travelling along `direction`."""
    return LinePiece(end, direction, -math.inf, 0.0)


def _ray_out(start: Point, direction: Point) -> LinePiece:
    return LinePiece(start, direction, 0.0, math.inf)


def _convex_polygon(vertices: list[Point]) -> tuple[list[Piece], Indicator]:
    """Counter-clockwise convex polygon."""
    pieces: list[Piece] = [_segment(vertices[i], vertices[(i + 1) % len(vertices)]) for i in range(len(vertices))]

    def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
        ok = np.ones(len(pts), dtype=bool)
        for i, a in enumerate(vertices):
            b = vertices[(i + 1) % len(vertices)]
            ok &= (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0]) >= -1e-12
        return ok

    return pieces, inside


def _disk(center: Point, radius: float) -> tuple[list[Piece], Indicator]:
    c = np.asarray(center, dtype=float)

    def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
        return np.hypot(*(pts - c).T) <= radius

    return [ArcPiece(center, radius, 0.0, TWO_PI)], inside


def _hull_with_apex(center: Point, radius: float, apex: Point) -> tuple[list[Piece], Indicator]:
    """Convex hull of a disk and an outside point: two tangent segments and the far arc."""
    c, a = np.asarray(center, dtype=float), np.asarray(apex, dtype=float)
    d = float(np.hypot(*(c - a)))
    if d <= radius:
        raise ShapeError("apex must lie outside the disk", center=center, radius=radius)
    u = (c - a) / d
    length = math.sqrt(d * d - radius * radius)
    alpha = math.asin(radius / d)
    t1 = a + length * (rotation(-alpha) @ u)
    t2 = a + length * (rotation(alpha) @ u)
    th1 = math.atan2(t1[1] - c[1], t1[0] - c[0])
    th2 = math.atan2(t2[1] - c[1], t2[0] - c[0])
    p1, p2 = (float(t1[0]), float(t1[1])), (float(t2[0]), float(t2[1]))
    pieces: list[Piece] = [
        _segment(apex, p1),
        ArcPiece(center, radius, th1, (th2 - th1) % TWO_PI),
        _segment(p2, apex),
    ]
    _, in_disk = _disk(center, radius)
    _, in_triangle = _convex_polygon([apex, p1, p2])

    def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
        return in_disk(pts) | in_triangle(pts)

    return pieces, inside


def _any_of(*indicators: Indicator) -> Indicator:
    def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
        out = np.zeros(len(pts), dtype=bool)
        for ind in indicators:
            out |= ind(pts)
        return out

    return inside


def _positive(name: str, **values: float) -> None:
    for key, value in values.items():
        if not (value > 0.0 and math.isfinite(value)):
            raise ShapeError(f"{name}: {key} must be positive", **{key: value})


def _ball(center: tuple[float, float] = (0.0, 0.0), R: float = 1.0) -> PlanarSet:
    _positive("ball", R=R)
    c = (float(center[0]), float(center[1]))
    pieces, inside = _disk(c, R)
    return PlanarSet("ball", {"center": c, "R": R}, tuple(pieces), inside)


def _halfplane(normal: tuple[float, float] = (0.0, 1.0), offset: float = 0.0) -> PlanarSet:
    norm = math.hypot(*normal)
    if norm == 0.0:
        raise ShapeError("halfplane: normal must be nonzero")
    n = np.asarray(normal, dtype=float) / norm
    foot = (float(offset * n[0]), float(offset * n[1]))
    direction = (float(-n[1]), float(n[0]))

    def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
        return pts @ n <= offset

    line = LinePiece(foot, direction, -math.inf, math.inf)
    return PlanarSet(
        "halfplane",
        {"normal": tuple(n.tolist()), "offset": offset},
        (line,),
        inside,
        antisymmetry_lines=((foot, direction),),
    )


def _cross() -> PlanarSet:
    """{|x₁| ≥ |x₂|}."""
    h = 1.0 / SQRT2
    origin = (0.0, 0.0)
    pieces = (
        _ray_in(origin, (-h, -h)),
        _ray_out(origin, (h, -h)),
        _ray_in(origin, (h, h)),
        _ray_out(origin, (-h, h)),
    )

    def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
        return np.abs(pts[:, 0]) >= np.abs(pts[:, 1])

    return PlanarSet("cross", {}, pieces, inside, antisymmetry_lines=((origin, (h, h)), (origin, (h, -h))))


def _rotated_cross() -> PlanarSet:
    """{x₁x₂ ≥ 0}: the cross in the frame rotated by π/4."""

    def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
        return pts[:, 0] * pts[:, 1] >= 0.0

    base = _cross().transformed(angle=math.pi / 4)
    return replace(base, name="rotated_cross", inside=inside, frame="rotated")


def _perturbed_cross(r: float) -> PlanarSet:
    """C_r = [−r, r]² ∪ {|x₁| ≥ |x₂|}."""
    _positive("perturbed_cross", r=r)
    h = 1.0 / SQRT2
    pieces = (
        _ray_in((r, r), (-h, -h)),
        _segment((r, r), (-r, r)),
        _ray_out((-r, r), (-h, h)),
        _ray_in((-r, -r), (h, h)),
        _segment((-r, -r), (r, -r)),
        _ray_out((r, -r), (h, -h)),
    )

    def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
        ax, ay = np.abs(pts[:, 0]), np.abs(pts[:, 1])
        return (ax >= ay) | (np.maximum(ax, ay) <= r)

    return PlanarSet("perturbed_cross", {"r": r}, pieces, inside)


def _complement_cross_square(r: float) -> PlanarSet:
    """C^r = closure(ℝ² ∖ cross) ∪ [−r, r]²."""

    def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
        ax, ay = np.abs(pts[:, 0]), np.abs(pts[:, 1])
        return (ay >= ax) | (np.maximum(ax, ay) <= r)

    base = _perturbed_cross(r).transformed(angle=math.pi / 2)
    return replace(base, name="complement_cross_square", inside=inside)


def _box_pair(r: float) -> PlanarSet:
    """N_r = [r, ∞)² ∪ (−∞, −r]², in the rotated frame."""
    _positive("box_pair", r=r)
    pieces = (
        _ray_in((r, r), (0.0, -1.0)),
        _ray_out((r, r), (1.0, 0.0)),
        _ray_in((-r, -r), (0.0, 1.0)),
        _ray_out((-r, -r), (-1.0, 0.0)),
    )

    def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
        x, y = pts[:, 0], pts[:, 1]
        return ((x >= r) & (y >= r)) | ((x <= -r) & (y <= -r))

    return PlanarSet("box_pair", {"r": r}, pieces, inside, frame="rotated")


def _rotated_box_pair(r: float) -> PlanarSet:
    """N^r = ((−∞, −r] × [r, ∞)) ∪ ([r, ∞) × (−∞, −r])."""

    def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
        x, y = pts[:, 0], pts[:, 1]
        return ((x <= -r) & (y >= r)) | ((x >= r) & (y <= -r))

    base = _box_pair(r).transformed(angle=math.pi / 2)
    return replace(base, name="rotated_box_pair", inside=inside)


def _droplet_parts(centers: list[Point], radius: float) -> tuple[list[Piece], Indicator]:
    pieces: list[Piece] = []
    indicators = []
    for c in centers:
        p, ind = _hull_with_apex(c, radius, (0.0, 0.0))
        pieces.extend(p)
        indicators.append(ind)
    return pieces, _any_of(*indicators)


def _droplet() -> PlanarSet:
    """G: hulls of B₁(−1, 1) and B₁(1, −1) with the origin."""
    pieces, inside = _droplet_parts([(-1.0, 1.0), (1.0, -1.0)], 1.0)
    return PlanarSet("droplet", {}, tuple(pieces), inside, frame="standard")


def _droplet_square(r: float | None = None) -> PlanarSet:
    """G₀ (hulls of B₁(±√2, 0) with the origin), or G_r = [−r, r]² ∪ G₀."""
    pieces, inside = _droplet_parts([(SQRT2, 0.0), (-SQRT2, 0.0)], 1.0)
    g0 = PlanarSet("droplet_square", {"r": None}, tuple(pieces), inside, frame="rotated")
    if r is None:
        return g0
    _positive("droplet_square", r=r)
    if r >= 0.5:
        raise ShapeError("droplet_square: r must lie in (0, 1/2)", r=r)
    sq_pieces, sq_inside = _convex_polygon([(r, -r), (r, r), (-r, r), (-r, -r)])
    square = PlanarSet("square", {"r": r}, tuple(sq_pieces), sq_inside)
    return replace(geometry_service.union(square, g0), name="droplet_square", params={"r": r}, frame="rotated")


def _pinched_droplet(delta: float, r: float) -> PlanarSet:
    """G_{δ,r} = ([−2r, 2r] × [−r, r]) ∪ hulls of B_{1−δ}(±√2, 0) with the origin."""
    _positive("pinched_droplet", delta=delta, r=r)
    if delta >= r:
        raise ShapeError("pinched_droplet: delta must be smaller than r", delta=delta, r=r)
    if r >= 0.5:
        raise ShapeError("pinched_droplet: r must lie in (0, 1/2)", r=r)
    pieces, inside = _droplet_parts([(SQRT2, 0.0), (-SQRT2, 0.0)], 1.0 - delta)
    hulls = PlanarSet("hulls", {}, tuple(pieces), inside)
    rect_pieces, rect_inside = _convex_polygon([(2 * r, -r), (2 * r, r), (-2 * r, r), (-2 * r, -r)])
    rect = PlanarSet("rectangle", {}, tuple(rect_pieces), rect_inside)
    joined = geometry_service.union(rect, hulls)
    return replace(joined, name="pinched_droplet", params={"delta": delta, "r": r}, frame="rotated")


def _ball_pair(name: str, params: dict[str, Any], radius: float, center_x: float) -> PlanarSet:
    left, in_left = _disk((-center_x, 0.0), radius)
    right, in_right = _disk((center_x, 0.0), radius)
    touching = abs(center_x - radius) <= 1e-14 * max(1.0, radius)
    return PlanarSet(
        name,
        params,
        (*right, *left),
        _any_of(in_right, in_left),
        singular_points=((0.0, 0.0),) if touching else (),
    )


def _tangent_balls() -> PlanarSet:
    """O = B₁(−1, 0) ∪ B₁(1, 0)."""
    return _ball_pair("tangent_balls", {}, 1.0, 1.0)


def _near_tangent(delta: float, r: float) -> PlanarSet:
    """Z_{δ,r} = B_r((1+δ)r, 0) ∪ B_r(−(1+δ)r, 0), δ ∈ [0, 1/8]."""
    _positive("near_tangent", r=r)
    if not 0.0 <= delta <= 0.125:
        raise ShapeError("near_tangent: delta must lie in [0, 1/8]", delta=delta)
    return _ball_pair("near_tangent", {"delta": delta, "r": r}, r, (1.0 + delta) * r)


def barrier_radius(eps: float, C0: float, t: float) -> float:
    return 1.0 - eps - C0 * t


def _barrier_pair(eps: float, mu: float = 0.0, C0: float = 1.0, t: float = 0.0) -> PlanarSet:
    """F_{ε,μ}(t): balls of radius 1 − ε − C₀t centred at ±(r(t) + ε − μt, 0)."""
    if not 0.0 < eps < 1.0:
        raise ShapeError("barrier_pair: eps must lie in (0, 1)", eps=eps)
    if not 0.0 <= mu <= math.sqrt(eps):
        raise ShapeError("barrier_pair: mu must lie in [0, sqrt(eps)]", mu=mu, eps=eps)
    if C0 < 0.0 or t < 0.0:
        raise ShapeError("barrier_pair: C0 and t must be nonnegative", C0=C0, t=t)
    radius = barrier_radius(eps, C0, t)
    gap = eps - mu * t
    if radius <= 0.0 or gap < 0.0:
        raise ShapeError("barrier_pair: t beyond the lifetime of the family", t=t, radius=radius, gap=gap)
    params = {"eps": eps, "mu": mu, "C0": C0, "t": t}
    return _ball_pair("barrier_pair", params, radius, radius + gap)


def _stadium(a: float, R: float) -> PlanarSet:
    """Convex hull of B_R(±a, 0)."""
    _positive("stadium", R=R)
    if a < 0.0:
        raise ShapeError("stadium: a must be nonnegative", a=a)
    if a == 0.0:
        return replace(_ball((0.0, 0.0), R), name="stadium", params={"a": a, "R": R})
    pieces = (
        _segment((-a, -R), (a, -R)),
        ArcPiece((a, 0.0), R, -math.pi / 2, math.pi),
        _segment((a, R), (-a, R)),
        ArcPiece((-a, 0.0), R, math.pi / 2, math.pi),
    )

    def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
        x = np.clip(pts[:, 0], -a, a)
        return np.hypot(pts[:, 0] - x, pts[:, 1]) <= R

    return PlanarSet("stadium", {"a": a, "R": R}, pieces, inside)


SHAPES: dict[str, Callable[..., PlanarSet]] = {
    "ball": _ball,
    "halfplane": _halfplane,
    "cross": _cross,
    "rotated_cross": _rotated_cross,
    "perturbed_cross": _perturbed_cross,
    "complement_cross_square": _complement_cross_square,
    "box_pair": _box_pair,
    "rotated_box_pair": _rotated_box_pair,
    "droplet": _droplet,
    "droplet_square": _droplet_square,
    "pinched_droplet": _pinched_droplet,
    "tangent_balls": _tangent_balls,
    "near_tangent": _near_tangent,
    "barrier_pair": _barrier_pair,
    "stadium": _stadium,
}


# ============ Service ============


class GeometryService:
    """Построение множеств, их преобразования и выборка границы."""

    def __init__(self) -> None:
        self.logger = logger.bind(service="geometry")

    # ---------- construction ----------

    def make_shape(self, name: str, params: dict[str, Any] | None = None, window: float | None = None) -> PlanarSet:
        builder = SHAPES.get(name)
        if builder is None:
            raise ShapeError(f"unknown shape {name!r}", known=sorted(SHAPES))
        try:
            shape = builder(**(params or {}))
        except TypeError as e:
            raise ShapeError(f"bad parameters for {name}: {e}", params=params) from e
        return replace(shape, window=window if window is not None else get_settings().default_window)

    def parse_spec(self, data: dict[str, Any]) -> ShapeSpec:
        try:
            return shape_spec_adapter.validate_python(data)
        except ValidationError as e:
            raise ConfigurationError("invalid shape spec", errors=e.errors(include_url=False)) from e

    def from_spec(self, spec: ShapeSpec | dict[str, Any]) -> PlanarSet:
        """Build a shape from its JSON description, modifiers applied in order."""
        if isinstance(spec, dict):
            spec = self.parse_spec(spec)
        shape = self.make_shape(spec.shape, spec.params(), window=spec.window)
        for mod in spec.modifiers:
            shape = self.apply_modifier(shape, mod)
        return shape

    def apply_modifier(self, shape: PlanarSet, mod: Any) -> PlanarSet:
        if isinstance(mod, ErodeModifier):
            out = self.erode(shape, mod.amount)
        elif isinstance(mod, DilateModifier):
            out = self.dilate(shape, mod.amount)
        elif isinstance(mod, ScaleModifier):
            out = self.scale(shape, mod.factor)
        elif isinstance(mod, RotateModifier):
            out = self.rotate(shape, mod.theta)
        elif isinstance(mod, TranslateModifier):
            out = self.translate(shape, mod.v)
        elif isinstance(mod, ComplementModifier):
            out = self.complement(shape)
        elif isinstance(mod, UnionModifier):
            out = self.union(shape, self.from_spec(mod.other))
        elif isinstance(mod, IntersectionModifier):
            out = self.intersection(shape, self.from_spec(mod.other))
        else:  # pragma: no cover
            raise ConfigurationError(f"unknown modifier {mod!r}")
        return replace(out, modifiers=(*shape.modifiers, mod.model_dump()))

    # ---------- affine maps ----------

    def scale(self, shape: PlanarSet, factor: float) -> PlanarSet:
        if factor <= 0.0:
            raise ShapeError("scale factor must be positive", factor=factor)
        return shape.transformed(scale=factor)

    def rotate(self, shape: PlanarSet, theta: float) -> PlanarSet:
        return shape.transformed(angle=theta)

    def translate(self, shape: PlanarSet, v: tuple[float, float]) -> PlanarSet:
        return shape.transformed(shift=(float(v[0]), float(v[1])))

    # ---------- boolean operations ----------

    def complement(self, shape: PlanarSet) -> PlanarSet:
        base = shape.inside

        def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
            return ~base(pts) | (shape.unsigned_distance(pts) <= 1e-12)

        return replace(
            shape,
            name=f"complement({shape.name})",
            pieces=tuple(p.reversed() for p in shape.pieces),
            inside=inside,
        )

    def union(self, a: PlanarSet, b: PlanarSet) -> PlanarSet:
        pieces = clip_pieces(a.pieces, lambda p: -b.signed_distance(p)) + clip_pieces(
            b.pieces, lambda p: -a.signed_distance(p)
        )
        return PlanarSet(
            f"union({a.name},{b.name})",
            {},
            tuple(pieces),
            _any_of(a.inside, b.inside),
            singular_points=a.singular_points + b.singular_points,
            frame=a.frame,
            window=max(a.window, b.window),
        )

    def intersection(self, a: PlanarSet, b: PlanarSet) -> PlanarSet:
        pieces = clip_pieces(a.pieces, b.signed_distance) + clip_pieces(b.pieces, a.signed_distance)

        def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
            return a.inside(pts) & b.inside(pts)

        return PlanarSet(
            f"intersection({a.name},{b.name})",
            {},
            tuple(pieces),
            inside,
            frame=a.frame,
            window=max(a.window, b.window),
        )

    def difference(self, a: PlanarSet, b: PlanarSet) -> PlanarSet:
        return self.intersection(a, self.complement(b))

    # ---------- morphology ----------

    def dilate(self, shape: PlanarSet, amount: float) -> PlanarSet:
        """{d_E ≥ −λ}: offsets of every piece plus arcs around convex corners."""
        if amount < 0.0:
            raise ShapeError("dilation amount must be nonnegative", amount=amount)
        if amount == 0.0:
            return shape
        candidates: list[Piece] = []
        for piece in shape.pieces:
            moved = piece.offset(amount)
            if moved is not None:
                candidates.append(moved)
        for corner in shape.corners:
            if corner.convex and len(corner.normals) == 2:
                (ax, ay), (bx, by) = corner.normals
                a0 = math.atan2(ay, ax)
                sweep = (math.atan2(by, bx) - a0) % TWO_PI
                candidates.append(ArcPiece(corner.point, amount, a0, sweep))
        slack = 1e-9 * max(1.0, amount)
        pieces = clip_pieces(candidates, lambda p: (slack - amount) - shape.signed_distance(p))

        def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
            return shape.signed_distance(pts) >= -amount

        return PlanarSet(
            f"dilate({shape.name},{amount:g})",
            {**shape.params},
            tuple(pieces),
            inside,
            frame=shape.frame,
            window=shape.window,
            modifiers=shape.modifiers,
        )

    def erode(self, shape: PlanarSet, amount: float) -> PlanarSet:
        """{d_E ≥ λ} = complement(dilate(complement(E), λ))."""
        if amount == 0.0:
            return shape
        eroded = self.complement(self.dilate(self.complement(shape), amount))

        def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
            return shape.signed_distance(pts) >= amount

        return replace(eroded, name=f"erode({shape.name},{amount:g})", inside=inside)

    # ---------- queries ----------

    def signed_distance(self, shape: PlanarSet, x: ArrayLike) -> NDArray[np.float64]:
        return shape.signed_distance(x)

    def closest_point(self, shape: PlanarSet, x: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Nearest boundary points and their outward normals."""
        pts = as_points(x)
        best = np.full(len(pts), np.inf)
        closest = np.zeros_like(pts)
        normals = np.zeros_like(pts)
        for piece in shape.pieces:
            q, s = piece.project(pts)
            d = np.hypot(*(pts - q).T)
            better = d < best
            best = np.where(better, d, best)
            closest[better] = q[better]
            normals[better] = piece.normal(s)[better]
        return closest, normals

    def boundary_sample(self, shape: PlanarSet, spacing: float, window: float | None = None) -> list[BoundarySample]:
        """
        Samples along every piece with gaps ≤ spacing, corners included.

        Pieces leaving the window [−W, W]² are cut there and their samples
        are flagged partial.
        """
        if spacing <= 0.0:
            raise ShapeError("spacing must be positive", spacing=spacing)
        half_width = window if window is not None else shape.window
        samples: list[BoundarySample] = []
        emitted_ends: list[Point] = []
        offset = 0.0
        partial_any = False
        for index, piece in enumerate(shape.pieces):
            rng = piece.box_range(half_width)
            if rng is None:
                partial_any = True
                continue
            a, b = rng
            partial = a > piece.s0 + 1e-12 or b < piece.s1 - 1e-12
            partial_any |= partial
            n = max(1, math.ceil((b - a) / spacing - 1e-9))
            params = np.linspace(a, b, n + 1)
            if piece.closed and not partial:
                params = params[:-1]
            points = piece.point(params)
            normals = piece.normal(params)
            for k, (s, p, nu) in enumerate(zip(params, points, normals, strict=True)):
                pt = (float(p[0]), float(p[1]))
                is_end = k == 0 or k == len(params) - 1
                if is_end:
                    if any(math.dist(pt, e) <= 1e-12 for e in emitted_ends):
                        continue
                    emitted_ends.append(pt)
                angular = shape.is_corner(pt)
                samples.append(
                    BoundarySample(
                        point=pt,
                        normal=(float(nu[0]), float(nu[1])),
                        regularity="Angular" if angular else "Smooth",
                        local_curvature_bound=None if angular else abs(piece.curvature),
                        arclength=offset + float(s - a),
                        piece=index,
                        partial=partial,
                    )
                )
            offset += b - a
        if partial_any:
            self.logger.warning("boundary_sample_partial", shape=shape.name, window=half_width)
        return samples

    def set_distance(self, a: PlanarSet, b: PlanarSet, window: float | None = None) -> SetDistance:
        """
        Distance between ∂a and ∂b inside the window.

        The sampled minimum is refined by alternating projections; the lower
        bound subtracts the sample spacing.
        """
        half_width = window if window is not None else max(a.window, b.window)
        spacing = half_width / 512.0
        sa = np.array([s.point for s in self.boundary_sample(a, spacing, half_width)])
        sb = np.array([s.point for s in self.boundary_sample(b, spacing, half_width)])
        if sa.size == 0 or sb.size == 0:
            raise ShapeError("empty boundary in window", window=half_width)
        dist, _ = cKDTree(sb).query(sa)
        sampled = float(np.min(dist))
        best = sampled
        for i in np.argsort(dist)[:8]:
            p = sa[i : i + 1]
            for _ in range(50):
                q, _ = self.closest_point(b, p)
                p, _ = self.closest_point(a, q)
            q, _ = self.closest_point(b, p)
            best = min(best, float(np.hypot(*(p - q)[0])))
        return SetDistance(best, max(0.0, sampled - spacing), spacing)


geometry_service = GeometryService()
