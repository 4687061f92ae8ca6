"""
Planar sets bounded by straight and circular pieces.

Every boundary piece is oriented with the set on its left, so the outward
normal is the unit tangent turned clockwise: ν = (t_y, −t_x).
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

Point = tuple[float, float]
Indicator = Callable[[NDArray[np.float64]], NDArray[np.bool_]]

TWO_PI = 2.0 * math.pi
JOIN_TOL = 1e-10
NORMAL_TOL = 1e-9


def as_points(x: ArrayLike) -> NDArray[np.float64]:
    """(..., 2) array viewed as (n, 2)."""
    return np.asarray(x, dtype=float).reshape(-1, 2)


def rotation(angle: float) -> NDArray[np.float64]:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def _map_point(p: Point, scale: float, angle: float, shift: Point) -> Point:
    q = scale * (rotation(angle) @ np.asarray(p, dtype=float)) + np.asarray(shift, dtype=float)
    return float(q[0]), float(q[1])


@dataclass(frozen=True)
class LinePiece:
    """Segment, ray or full line: origin + s·direction for s in [s0, s1]."""

    origin: Point
    direction: Point
    s0: float
    s1: float

    @property
    def curvature(self) -> float:
        return 0.0

    @property
    def length(self) -> float:
        return self.s1 - self.s0

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.s0) and math.isfinite(self.s1)

    @property
    def closed(self) -> bool:
        return False

    def _at(self, s: float) -> Point:
        return (self.origin[0] + s * self.direction[0], self.origin[1] + s * self.direction[1])

    @property
    def start(self) -> Point | None:
        return None if math.isinf(self.s0) else self._at(self.s0)

    @property
    def end(self) -> Point | None:
        return None if math.isinf(self.s1) else self._at(self.s1)

    def point(self, s: ArrayLike) -> NDArray[np.float64]:
        s = np.asarray(s, dtype=float).reshape(-1, 1)
        return np.asarray(self.origin) + s * np.asarray(self.direction)

    def tangent(self, s: ArrayLike) -> NDArray[np.float64]:
        n = np.asarray(s, dtype=float).size
        return np.tile(np.asarray(self.direction, dtype=float), (n, 1))

    def normal(self, s: ArrayLike) -> NDArray[np.float64]:
        t = self.tangent(s)
        return np.column_stack([t[:, 1], -t[:, 0]])

    def project(self, pts: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        s = (pts - np.asarray(self.origin)) @ np.asarray(self.direction)
        s = np.clip(s, self.s0, self.s1)
        return self.point(s), s

    def distance(self, pts: NDArray[np.float64]) -> NDArray[np.float64]:
        closest, _ = self.project(pts)
        return np.hypot(*(pts - closest).T)

    def offset(self, lam: float) -> "LinePiece":
        nx, ny = self.direction[1], -self.direction[0]
        return replace(self, origin=(self.origin[0] + lam * nx, self.origin[1] + lam * ny))

    def transformed(self, scale: float, angle: float, shift: Point) -> "LinePiece":
        d = rotation(angle) @ np.asarray(self.direction)
        return LinePiece(
            _map_point(self.origin, scale, angle, shift),
            (float(d[0]), float(d[1])),
            self.s0 * scale,
            self.s1 * scale,
        )

    def reversed(self) -> "LinePiece":
        return LinePiece(self.origin, (-self.direction[0], -self.direction[1]), -self.s1, -self.s0)

    def sub(self, a: float, b: float) -> "LinePiece":
        return replace(self, s0=a, s1=b)

    def box_range(self, half_width: float) -> tuple[float, float] | None:
        """Parameter interval inside [−W, W]² (slab clipping)."""
        lo, hi = self.s0, self.s1
        for o, d in zip(self.origin, self.direction, strict=True):
            if abs(d) < 1e-15:
                if abs(o) > half_width:
                    return None
                continue
            a, b = (-half_width - o) / d, (half_width - o) / d
            lo, hi = max(lo, min(a, b)), min(hi, max(a, b))
        return (lo, hi) if hi > lo else None


@dataclass(frozen=True)
class ArcPiece:
    """
    Circular arc from angle theta0 through `sweep` radians.

    sweep > 0 runs counter-clockwise (convex, κ = 1/R); sweep < 0 runs
    clockwise (concave, κ = −1/R). The parameter is arclength from theta0.
    """

    center: Point
    radius: float
    theta0: float
    sweep: float

    @property
    def orientation(self) -> float:
        return 1.0 if self.sweep > 0 else -1.0

    @property
    def curvature(self) -> float:
        return self.orientation / self.radius

    @property
    def s0(self) -> float:
        return 0.0

    @property
    def s1(self) -> float:
        return self.radius * abs(self.sweep)

    @property
    def length(self) -> float:
        return self.s1

    @property
    def bounded(self) -> bool:
        return True

    @property
    def closed(self) -> bool:
        return abs(self.sweep) >= TWO_PI - 1e-12

    def angle(self, s: ArrayLike) -> NDArray[np.float64]:
        return self.theta0 + self.orientation * np.asarray(s, dtype=float) / self.radius

    @property
    def start(self) -> Point | None:
        if self.closed:
            return None
        p = self.point(0.0)[0]
        return float(p[0]), float(p[1])

    @property
    def end(self) -> Point | None:
        if self.closed:
            return None
        p = self.point(self.s1)[0]
        return float(p[0]), float(p[1])

    def point(self, s: ArrayLike) -> NDArray[np.float64]:
        th = self.angle(s).reshape(-1)
        return np.asarray(self.center) + self.radius * np.column_stack([np.cos(th), np.sin(th)])

    def tangent(self, s: ArrayLike) -> NDArray[np.float64]:
        th = self.angle(s).reshape(-1)
        return self.orientation * np.column_stack([-np.sin(th), np.cos(th)])

    def normal(self, s: ArrayLike) -> NDArray[np.float64]:
        th = self.angle(s).reshape(-1)
        return self.orientation * np.column_stack([np.cos(th), np.sin(th)])

    def project(self, pts: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        rel = pts - np.asarray(self.center)
        phi = np.arctan2(rel[:, 1], rel[:, 0])
        u = np.mod(self.orientation * (phi - self.theta0), TWO_PI)
        s = self.radius * u
        if not self.closed:
            off = u > abs(self.sweep)
            if np.any(off):
                ends = self.point(np.array([0.0, self.s1]))
                d0 = np.hypot(*(pts[off] - ends[0]).T)
                d1 = np.hypot(*(pts[off] - ends[1]).T)
                s[off] = np.where(d0 <= d1, 0.0, self.s1)
        return self.point(s), s

    def distance(self, pts: NDArray[np.float64]) -> NDArray[np.float64]:
        closest, _ = self.project(pts)
        return np.hypot(*(pts - closest).T)

    def offset(self, lam: float) -> "ArcPiece | None":
        radius = self.radius + self.orientation * lam
        if radius <= 1e-14:
            return None
        return replace(self, radius=radius)

    def transformed(self, scale: float, angle: float, shift: Point) -> "ArcPiece":
        return ArcPiece(
            _map_point(self.center, scale, angle, shift),
            self.radius * scale,
            self.theta0 + angle,
            self.sweep,
        )

    def reversed(self) -> "ArcPiece":
        return ArcPiece(self.center, self.radius, self.theta0 + self.sweep, -self.sweep)

    def sub(self, a: float, b: float) -> "ArcPiece":
        return ArcPiece(self.center, self.radius, float(self.angle(a)), self.orientation * (b - a) / self.radius)

    def box_range(self, half_width: float) -> tuple[float, float] | None:
        s = np.linspace(0.0, self.s1, 513)
        inside = np.all(np.abs(self.point(s)) <= half_width, axis=1)
        if np.all(inside):
            return 0.0, self.s1
        if not np.any(inside):
            return None
        idx = np.nonzero(inside)[0]
        return float(s[idx[0]]), float(s[idx[-1]])


Piece = LinePiece | ArcPiece


@dataclass(frozen=True)
class Corner:
    """Boundary point where one-sided normals differ (or a declared singular point)."""

    point: Point
    normals: tuple[Point, ...]
    convex: bool | None


@dataclass(frozen=True)
class AsymptoticModel:
    """
    Shape of the set far away.

    vanishing: bounded set inside B(center, radius); constant: complement of
    such a set; cone: the boundary is a finite family of rays outside that ball.
    """

    kind: Literal["vanishing", "constant", "cone"]
    center: Point
    radius: float
    rays: tuple[tuple[Point, Point], ...] = ()
    inside_fraction: float = 0.0

    @property
    def angular_excess(self) -> float:
        """Limit of (out-measure − in-measure) on large circles."""
        if self.kind == "vanishing":
            return TWO_PI
        if self.kind == "constant":
            return -TWO_PI
        return TWO_PI * (1.0 - 2.0 * self.inside_fraction)


@dataclass(frozen=True)
class BoundarySample:
    point: Point
    normal: Point
    regularity: Literal["Smooth", "Angular"]
    local_curvature_bound: float | None
    arclength: float
    piece: int
    partial: bool = False


@dataclass(frozen=True)
class PieceHit:
    """A boundary piece passing within tolerance of a query point."""

    index: int
    param: float
    distance: float


@dataclass(frozen=True, eq=False)
class PlanarSet:
    """
    Closed planar set with an analytic indicator and an exact boundary.

    The signed distance is positive inside and is computed from the pieces;
    the indicator decides the sign.
    """

    name: str
    params: dict[str, Any]
    pieces: tuple[Piece, ...]
    inside: Indicator
    singular_points: tuple[Point, ...] = ()
    antisymmetry_lines: tuple[tuple[Point, Point], ...] = ()
    frame: str = "standard"
    window: float = 8.0
    modifiers: tuple[dict[str, Any], ...] = field(default=())

    def indicator(self, x: ArrayLike) -> NDArray[np.bool_]:
        arr = np.asarray(x, dtype=float)
        return np.asarray(self.inside(as_points(arr))).reshape(arr.shape[:-1])

    def unsigned_distance(self, x: ArrayLike) -> NDArray[np.float64]:
        arr = np.asarray(x, dtype=float)
        pts = as_points(arr)
        if not self.pieces:
            return np.full(arr.shape[:-1], np.inf)
        dist = np.min(np.stack([p.distance(pts) for p in self.pieces]), axis=0)
        return dist.reshape(arr.shape[:-1])

    def signed_distance(self, x: ArrayLike) -> NDArray[np.float64]:
        dist = self.unsigned_distance(x)
        return np.where(self.indicator(x), dist, -dist)

    def locate(self, x: ArrayLike, tol: float = 1e-9) -> list[PieceHit]:
        """Pieces within tol of the point x, nearest first."""
        pts = as_points(x)[:1]
        hits = []
        for i, piece in enumerate(self.pieces):
            closest, s = piece.project(pts)
            d = float(np.hypot(*(pts[0] - closest[0])))
            if d <= tol:
                hits.append(PieceHit(i, float(s[0]), d))
        return sorted(hits, key=lambda h: h.distance)

    @property
    def bounded(self) -> bool:
        return all(p.bounded for p in self.pieces)

    @property
    def curvature_bound(self) -> float:
        return max((abs(p.curvature) for p in self.pieces), default=0.0)

    @cached_property
    def corners(self) -> tuple[Corner, ...]:
        found: list[Corner] = []
        for i, a in enumerate(self.pieces):
            if a.end is None:
                continue
            for j, b in enumerate(self.pieces):
                if i == j or b.start is None:
                    continue
                if math.dist(a.end, b.start) > JOIN_TOL:
                    continue
                n_in = a.normal(np.array([a.s1]))[0]
                n_out = b.normal(np.array([b.s0]))[0]
                if np.hypot(*(n_in - n_out)) <= NORMAL_TOL:
                    continue
                t_in, t_out = a.tangent(np.array([a.s1]))[0], b.tangent(np.array([b.s0]))[0]
                convex = bool(t_in[0] * t_out[1] - t_in[1] * t_out[0] > 0.0)
                normals = ((float(n_in[0]), float(n_in[1])), (float(n_out[0]), float(n_out[1])))
                found.append(Corner(a.end, normals, convex))
        for p in self.singular_points:
            if all(math.dist(p, c.point) > JOIN_TOL for c in found):
                found.append(Corner(p, (), None))
        return tuple(found)

    def is_corner(self, x: ArrayLike, tol: float = 1e-9) -> bool:
        p = as_points(x)[0]
        return any(math.dist((float(p[0]), float(p[1])), c.point) <= tol for c in self.corners)

    @cached_property
    def core(self) -> tuple[Point, float]:
        """Centre and radius of a disk holding every bounded feature of the boundary."""
        pts: list[NDArray[np.float64]] = []
        for p in self.pieces:
            if isinstance(p, ArcPiece):
                pts.append(np.asarray(p.center) + p.radius * np.array([[1, 0], [-1, 0], [0, 1], [0, -1]]))
            for end in (p.start, p.end):
                if end is not None:
                    pts.append(np.asarray([end]))
            if isinstance(p, LinePiece) and math.isinf(p.s0) and math.isinf(p.s1):
                pts.append(p.point(np.array([0.0])))
        if not pts:
            return (0.0, 0.0), 0.0
        cloud = np.concatenate(pts)
        center = 0.5 * (cloud.min(axis=0) + cloud.max(axis=0))
        radius = float(np.max(np.hypot(*(cloud - center).T)))
        return (float(center[0]), float(center[1])), radius

    @property
    def diameter(self) -> float:
        return 2.0 * self.core[1]

    @cached_property
    def asymptotic(self) -> AsymptoticModel:
        center, radius = self.core
        rays: list[tuple[Point, Point]] = []
        for p in self.pieces:
            if not isinstance(p, LinePiece):
                continue
            if math.isinf(p.s1):
                o = p.start if p.start is not None else p._at(0.0)
                rays.append((o, p.direction))
            if math.isinf(p.s0):
                o = p.end if p.end is not None else p._at(0.0)
                rays.append((o, (-p.direction[0], -p.direction[1])))
        if not rays:
            far = np.asarray(center) + np.array([[1e12, 0.0]])
            kind: Literal["vanishing", "constant"] = "constant" if bool(self.inside(far)[0]) else "vanishing"
            return AsymptoticModel(kind, center, radius)
        theta = np.linspace(0.0, TWO_PI, 4096, endpoint=False) + 1e-3
        far = np.asarray(center) + 1e9 * np.column_stack([np.cos(theta), np.sin(theta)])
        fraction = float(np.mean(self.inside(far)))
        return AsymptoticModel("cone", center, radius, tuple(rays), fraction)

    def transformed(self, scale: float = 1.0, angle: float = 0.0, shift: Point = (0.0, 0.0), name: str | None = None) -> "PlanarSet":
        """Image under x ↦ scale·R(angle)·x + shift."""
        inverse = rotation(-angle) / scale
        offset = np.asarray(shift, dtype=float)
        base = self.inside

        def inside(pts: NDArray[np.float64]) -> NDArray[np.bool_]:
            return base((pts - offset) @ inverse.T)

        lines = tuple(
            (_map_point(o, scale, angle, shift), tuple(rotation(angle) @ np.asarray(d)))
            for o, d in self.antisymmetry_lines
        )
        return replace(
            self,
            name=name or self.name,
            pieces=tuple(p.transformed(scale, angle, shift) for p in self.pieces),
            inside=inside,
            singular_points=tuple(_map_point(p, scale, angle, shift) for p in self.singular_points),
            antisymmetry_lines=lines,  # type: ignore[arg-type]
            window=self.window * scale + float(np.max(np.abs(offset))),
        )
