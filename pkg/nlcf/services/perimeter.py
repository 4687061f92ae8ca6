"""
Nonlocal perimeters and the perturbed-cross comparison.

    Per_K(E, B_R) = ∫_{B_R∩E} ∫_{Eᶜ} K(x − y) dy dx + ∫_{B_R∖E} ∫_{E∖B_R} K(x − y) dy dx

Every inner integral is a kernel potential of a set F, evaluated on circles
around x:

    ∫_F K(x − y) dy = ∫_d^∞ ρ K₀(ρ) m_F(x, ρ) dρ,

where m_F is the exact angular measure of ∂B_ρ(x) ∩ F and d is a lower bound
for the distance from x to F. Outer integrals use Gauss-Legendre panels
graded towards every boundary crossing; the reported bar compares two rule
orders on the same panels and adds the far-field bound.
"""

import math
from collections.abc import Callable, Sequence
from typing import Literal

import numpy as np
import structlog
from numpy.typing import NDArray

from nlcf.exceptions import ConfigurationError, KernelError
from nlcf.models.kernel import Kernel
from nlcf.models.shape import TWO_PI, ArcPiece, LinePiece, Piece, PlanarSet
from nlcf.schemas.reports import PerimeterDiffReport, PerimeterValue, WitnessReport
from nlcf.services.curvature import inside_measure
from nlcf.services.geometry import geometry_service
from nlcf.services.kernels import kernel_service
from nlcf.services.quadrature import adaptive_integrate, gauss_legendre
from nlcf.utils.parallel import deterministic_map

logger = structlog.get_logger(__name__)

SQRT2 = math.sqrt(2.0)

ORDER = 6
COARSE_ORDER = 4
GRADE_LEVELS = 16
THETA_PANELS = 16
RADIAL_PANELS = 32
ONSET_LEVELS = 6
FAR_FACTOR = 4.0
FAR_FACTOR_CONE = 64.0
CROSS_FAR_FACTOR = 256.0
POINT_CHUNK = 512

Measure = Callable[[NDArray[np.float64], NDArray[np.float64]], NDArray[np.float64]]


# ============ Rules ============


def graded_breaks(a: float, b: float, left: bool, right: bool, levels: int = GRADE_LEVELS) -> NDArray[np.float64]:
    """Breakpoints of [a, b], halved geometrically towards each flagged end."""
    if b <= a:
        return np.array([a, b], dtype=float)
    if left and right:
        m = 0.5 * (a + b)
        return np.concatenate([graded_breaks(a, m, True, False, levels), graded_breaks(m, b, False, True, levels)[1:]])
    frac = 2.0 ** -np.arange(levels, 0, -1, dtype=float)
    length = b - a
    if left:
        inner = a + length * frac
    elif right:
        inner = b - length * frac[::-1]
    else:
        inner = np.array([a + 0.5 * length])
    return np.concatenate([[a], inner, [b]])


def joined_breaks(points: Sequence[float], singular: Sequence[bool], levels: int = GRADE_LEVELS) -> NDArray[np.float64]:
    """Graded breakpoints across consecutive points; flagged points attract panels."""
    out = [np.array([points[0]], dtype=float)]
    for i in range(len(points) - 1):
        out.append(graded_breaks(points[i], points[i + 1], singular[i], singular[i + 1], levels)[1:])
    return np.concatenate(out)


def composite_rule(breaks: NDArray[np.float64], order: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Gauss-Legendre nodes and weights on the panels of each row of sorted breakpoints."""
    x, w = gauss_legendre(order)
    a, b = breaks[..., :-1], breaks[..., 1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = mid[..., None] + half[..., None] * x
    weights = half[..., None] * w
    shape = (*breaks.shape[:-1], -1)
    return nodes.reshape(shape), weights.reshape(shape)


def piece_breaks(pieces: Sequence[Piece], pts: NDArray[np.float64]) -> NDArray[np.float64]:
    """
    Radii where the circle measure around each point is not smooth: distances
    to piece ends and tangency radii of lines and arcs.
    """
    cols: list[NDArray[np.float64]] = []
    for p in pieces:
        for end in (p.start, p.end):
            if end is not None:
                cols.append(np.hypot(pts[:, 0] - end[0], pts[:, 1] - end[1]))
        if isinstance(p, LinePiece):
            rel = pts - np.asarray(p.origin)
            cols.append(np.abs(rel[:, 0] * p.direction[1] - rel[:, 1] * p.direction[0]))
        elif isinstance(p, ArcPiece):
            dc = np.hypot(pts[:, 0] - p.center[0], pts[:, 1] - p.center[1])
            cols.extend([np.abs(dc - p.radius), dc + p.radius])
    if not cols:
        return np.empty((len(pts), 0))
    return np.column_stack(cols)


def radial_breaks(
    start: NDArray[np.float64], extra: NDArray[np.float64], r_far: float
) -> NDArray[np.float64]:
    """Per-point breakpoints of [start, r_far]: geometric, graded at the onset, plus extra radii."""
    ratio = (r_far / start) ** (1.0 / RADIAL_PANELS)
    geometric = start[:, None] * ratio[:, None] ** np.arange(RADIAL_PANELS + 1)[None, :]
    geometric[:, -1] = r_far
    onset = start[:, None] * (1.0 + (ratio[:, None] - 1.0) * 2.0 ** -np.arange(1, ONSET_LEVELS + 1)[None, :])
    clipped = np.clip(extra, start[:, None], r_far)
    return np.sort(np.concatenate([geometric, onset, clipped], axis=1), axis=1)


def kernel_potential(
    k: Kernel,
    measure: Measure,
    pts: NDArray[np.float64],
    start: NDArray[np.float64],
    extra: NDArray[np.float64],
    r_far: float,
    order: int,
) -> NDArray[np.float64]:
    """∫_start^r_far ρ K₀(ρ) m(x, ρ) dρ for every point x."""
    out = np.zeros(len(pts))
    kernel_cuts = np.array([b for b in k.breakpoints if b < r_far], dtype=float)
    for lo in range(0, len(pts), POINT_CHUNK):
        p = pts[lo : lo + POINT_CHUNK]
        s = np.minimum(start[lo : lo + POINT_CHUNK], r_far)
        cuts = np.concatenate([extra[lo : lo + POINT_CHUNK], np.broadcast_to(kernel_cuts, (len(p), kernel_cuts.size))], axis=1)
        nodes, weights = composite_rule(radial_breaks(s, cuts, r_far), order)
        m = nodes.shape[1]
        rows = np.repeat(np.arange(len(p)), m)
        rho = nodes.ravel()
        values = measure(p[rows], rho).reshape(len(p), m)
        out[lo : lo + POINT_CHUNK] = np.sum(weights * nodes * k.k0(nodes) * values, axis=1)
    return out


# ============ Polar rule on B_R ============


def _ray_hits(pieces: Sequence[Piece], e: NDArray[np.float64], reach: float) -> list[float]:
    """Radii t ∈ (0, reach] where the ray t·e meets a piece."""
    hits: list[float] = []
    floor = 1e-14 * reach
    for p in pieces:
        if isinstance(p, LinePiece):
            o, d = p.origin, p.direction
            det = e[1] * d[0] - e[0] * d[1]
            if abs(det) < 1e-14:
                continue
            t = (o[1] * d[0] - o[0] * d[1]) / det
            s = (e[0] * o[1] - e[1] * o[0]) / det
            if p.s0 - 1e-12 <= s <= p.s1 + 1e-12 and floor < t <= reach:
                hits.append(float(t))
            continue
        c = np.asarray(p.center)
        b = float(e @ c)
        disc = b * b - float(c @ c) + p.radius**2
        if disc < 0.0:
            continue
        for t in (b - math.sqrt(disc), b + math.sqrt(disc)):
            if not floor < t <= reach:
                continue
            q = t * e - c
            u = (math.copysign(1.0, p.sweep) * (math.atan2(q[1], q[0]) - p.theta0)) % TWO_PI
            if p.closed or u <= abs(p.sweep) + 1e-12 or u >= TWO_PI - 1e-12:
                hits.append(float(t))
    return sorted(hits)


def _singular_angles(pieces: Sequence[Piece], R: float) -> list[float]:
    """Directions where the radial profile of the integrand changes its structure."""
    out: list[float] = []
    for p in pieces:
        for v in (p.start, p.end):
            if v is not None and 1e-12 < math.hypot(*v) <= R:
                out.append(math.atan2(v[1], v[0]))
        if isinstance(p, LinePiece):
            o, d = p.origin, p.direction
            if abs(o[0] * d[1] - o[1] * d[0]) <= 1e-12:
                a = math.atan2(d[1], d[0])
                out.extend([a, a + math.pi])
        else:
            dc = math.hypot(*p.center)
            if dc > p.radius:
                beta = math.atan2(p.center[1], p.center[0])
                gamma = math.asin(p.radius / dc)
                out.extend([beta - gamma, beta + gamma])
    return [a % TWO_PI for a in out]


def polar_rule(shape: PlanarSet, R: float, order: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Points and weights on B_R, graded towards ∂E along every ray."""
    singular = sorted(_singular_angles(shape.pieces, R))
    wraps = any(a < 1e-12 or a > TWO_PI - 1e-12 for a in singular)
    base = [(float(a), False) for a in np.linspace(0.0, TWO_PI, THETA_PANELS + 1)]
    marks: list[tuple[float, bool]] = []
    for a, flag in sorted(base + [(a, True) for a in singular if 1e-12 <= a <= TWO_PI - 1e-12]):
        if marks and a - marks[-1][0] <= 1e-12:
            marks[-1] = (marks[-1][0], marks[-1][1] or flag)
        else:
            marks.append((a, flag))
    marks[0] = (0.0, marks[0][1] or wraps)
    marks[-1] = (TWO_PI, marks[-1][1] or wraps)
    theta_nodes, theta_weights = composite_rule(
        joined_breaks([a for a, _ in marks], [f for _, f in marks], GRADE_LEVELS // 2), order
    )

    origin_on_boundary = bool(shape.pieces) and float(shape.unsigned_distance(np.zeros(2))) <= 1e-12
    points, weights = [], []
    for theta, wt in zip(theta_nodes, theta_weights, strict=True):
        e = np.array([math.cos(theta), math.sin(theta)])
        hits = [t for t in _ray_hits(shape.pieces, e, R) if t < R * (1.0 - 1e-12)]
        at_edge = any(abs(t - R) <= 1e-12 * R for t in _ray_hits(shape.pieces, e, R * (1.0 + 1e-9)))
        radii = [0.0, *hits, R]
        flags = [origin_on_boundary, *([True] * len(hits)), at_edge]
        nodes, w = composite_rule(joined_breaks(radii, flags), order)
        points.append(nodes[:, None] * e[None, :])
        weights.append(wt * w * nodes)
    return np.concatenate(points), np.concatenate(weights)


def _inside_fraction(shape: PlanarSet) -> float:
    model = shape.asymptotic
    if model.kind == "vanishing":
        return 0.0
    if model.kind == "constant":
        return 1.0
    return model.inside_fraction


class PerimeterService:
    """Нелокальные периметры и сравнение возмущённого креста."""

    def __init__(self) -> None:
        self.logger = logger.bind(service="perimeter")

    # ============ Localized perimeter ============

    def per_local(self, E: PlanarSet, k: Kernel, R: float, tol: float | None = None) -> PerimeterValue:
        """
        Per_K(E, B_R).

        Args:
            E: set with line and arc boundary
            k: kernel
            R: localization radius
            tol: requested absolute bar; exceeding it only logs a warning

        Raises:
            ConfigurationError: R ≤ 0
            DivergenceError: kernel tail diverges
        """
        if R <= 0.0:
            raise ConfigurationError("localization radius must be positive", R=R)
        if not E.pieces or k.is_zero:
            return PerimeterValue(value=0.0, error=0.0, R=R)

        fine, tail_error = self._per_local(E, k, R, ORDER)
        coarse, _ = self._per_local(E, k, R, COARSE_ORDER)
        error = abs(fine - coarse) + tail_error
        if tol is not None and error > tol:
            self.logger.warning("perimeter_bar_oversized", shape=E.name, R=R, error=error, tol=tol)
        self.logger.info("per_local", shape=E.name, kernel=k.name, R=R, value=fine, error=error)
        return PerimeterValue(value=max(fine, 0.0), error=error, R=R)

    def _per_local(self, E: PlanarSet, k: Kernel, R: float, order: int) -> tuple[float, float]:
        pts, weights = polar_rule(E, R, order)
        inside = E.indicator(pts)
        center, radius = E.core
        reach = math.hypot(*center) + radius
        cone = E.asymptotic.kind == "cone"
        r_far = (FAR_FACTOR_CONE if cone else FAR_FACTOR) * (R + reach)
        tail = kernel_service.tail_mass(k, r_far)
        f_in = _inside_fraction(E)
        n_rays = len(E.asymptotic.rays)

        def tail_error(x: NDArray[np.float64]) -> NDArray[np.float64]:
            if not cone:
                return np.zeros(len(x))
            return n_rays * (np.hypot(x[:, 0], x[:, 1]) + reach) / (2.0 * r_far) * tail

        value = 0.0
        error = 0.0

        # x ∈ E ∩ B_R against Eᶜ
        x_in, w_in = pts[inside], weights[inside]
        if len(x_in):
            start = np.maximum(E.unsigned_distance(x_in), 1e-14 * R)
            potential = kernel_potential(
                k,
                lambda c, rho: TWO_PI - inside_measure(E, c, rho),
                x_in,
                start,
                piece_breaks(E.pieces, x_in),
                r_far,
                order,
            )
            value += float(np.sum(w_in * (potential + (1.0 - f_in) * tail)))
            error += float(np.sum(w_in * tail_error(x_in)))

        # x ∈ B_R ∖ E against E ∖ B_R
        far_part = geometry_service.difference(E, geometry_service.make_shape("ball", {"R": R}))
        x_out, w_out = pts[~inside], weights[~inside]
        if len(x_out) and (far_part.pieces or f_in > 0.0):
            norm = np.hypot(x_out[:, 0], x_out[:, 1])
            gap = far_part.unsigned_distance(x_out) if far_part.pieces else np.full(len(x_out), r_far)
            start = np.maximum(np.maximum(gap, R - norm), 1e-14 * R)
            extra = np.column_stack([piece_breaks(far_part.pieces, x_out), R - norm, R + norm])
            start = np.minimum(start, r_far)
            potential = kernel_potential(
                k,
                lambda c, rho: inside_measure(far_part, c, rho),
                x_out,
                start,
                extra,
                r_far,
                order,
            )
            value += float(np.sum(w_out * (potential + f_in * tail)))
            error += float(np.sum(w_out * tail_error(x_out)))
        return value, error

    # ============ Perturbed cross ============

    def _cross_pair(self, r: float, frame: str) -> tuple[PlanarSet, PlanarSet]:
        """The cross and W_r = C_r ∖ C in the requested frame."""
        cross = geometry_service.make_shape("cross")
        perturbed = geometry_service.make_shape("perturbed_cross", {"r": r})
        if frame == "rotated":
            cross = geometry_service.make_shape("rotated_cross")
            perturbed = geometry_service.rotate(perturbed, math.pi / 4.0)
        return cross, geometry_service.difference(perturbed, cross)

    def _cross_diff(self, k: Kernel, r: float, order: int, frame: str) -> tuple[float, float]:
        """
        4·∫_Q ∫ ρ K₀(ρ) [2π − 2 m_C − m_W](x, ρ) dρ dx over the quarter
        Q = {0 ≤ x₁ < x₂ < r}, with x = (τ·x₂, x₂).
        """
        cross, wedge = self._cross_pair(r, frame)
        x2_nodes, x2_weights = composite_rule(graded_breaks(0.0, r, True, True), order)
        tau_breaks = np.unique(np.concatenate([[0.0, 0.25, 0.5], graded_breaks(0.5, 1.0, False, True)]))
        tau_nodes, tau_weights = composite_rule(tau_breaks, order)
        x2, tau = np.meshgrid(x2_nodes, tau_nodes, indexing="ij")
        pts = np.column_stack([(tau * x2).ravel(), x2.ravel()])
        weights = (np.outer(x2_weights, tau_weights) * x2).ravel()
        if frame == "rotated":
            c, s = math.cos(math.pi / 4.0), math.sin(math.pi / 4.0)
            pts = pts @ np.array([[c, s], [-s, c]])

        r_far = CROSS_FAR_FACTOR * r
        start = np.maximum(wedge.unsigned_distance(pts), 1e-14 * r)
        extra = np.column_stack([piece_breaks(cross.pieces, pts), piece_breaks(wedge.pieces, pts)])

        def excess(c: NDArray[np.float64], rho: NDArray[np.float64]) -> NDArray[np.float64]:
            return TWO_PI - 2.0 * inside_measure(cross, c, rho) - inside_measure(wedge, c, rho)

        potential = kernel_potential(k, excess, pts, start, extra, r_far, order)
        tail = kernel_service.tail_mass(k, r_far)
        tail_bound = 4.0 * float(np.sum(weights * 2.0 * np.hypot(pts[:, 0], pts[:, 1]) / r_far)) * tail
        return 4.0 * float(np.sum(weights * potential)), tail_bound

    def cross_bound(self, k: Kernel, r: float, closed_form: bool = True) -> tuple[float, float]:
        """
        −2∫_{W_r} Ψ(|x₂|) dx = −8∫₀^r x₂ Ψ(x₂) dx₂, with its quadrature error.

        For an unmodified fractional kernel Ψ(ρ) = Ψ(1)ρ^-s and the bound is
        −8Ψ(1) r^(2−s)/(2−s).
        """
        s = k.fractional_order
        if closed_form and s is not None:
            return -8.0 * kernel_service.psi(k, 1.0) * r ** (2.0 - s) / (2.0 - s), 0.0

        def integrand(x2: NDArray[np.float64]) -> NDArray[np.float64]:
            return np.array([t * kernel_service.psi(k, float(t)) for t in np.ravel(x2)]).reshape(np.shape(x2))

        cuts = [r * 2.0**-j for j in range(1, 41)]
        cuts += [f * b for b in k.breakpoints for f in (0.5, 2.0 / 3.0) if 0.0 < f * b < r]
        res = adaptive_integrate(integrand, 0.0, r, rel_tol=1e-6, breakpoints=tuple(cuts))
        return -8.0 * res.value, 8.0 * res.error

    def per_diff_cross(
        self,
        k: Kernel,
        r: float,
        R: float,
        tol: float | None = None,
        frame: Literal["standard", "rotated"] = "standard",
    ) -> PerimeterDiffReport:
        """
        Per_K(C_r, B_R) − Per_K(C, B_R) from the W_r identity

            diff = ∫_{W_r} ∫_{ℝ²∖C_r} K − ∫_{W_r} ∫_C K,

        never as a difference of two perimeters. The value does not depend on
        R once C_r ∖ B_R = C ∖ B_R.

        Raises:
            ConfigurationError: r ≤ 0 or R ≤ √2·r
        """
        if r <= 0.0 or R <= SQRT2 * r:
            raise ConfigurationError("per_diff_cross needs r > 0 and R > √2·r", r=r, R=R)
        if frame not in ("standard", "rotated"):
            raise ConfigurationError(f"unknown frame {frame!r}")
        if k.is_zero:
            return PerimeterDiffReport(r=r, R=R, diff=0.0, bound=0.0, quadrature_error=0.0, bound_error=0.0, frame=frame)

        fine, tail_bound = self._cross_diff(k, r, ORDER, frame)
        coarse, _ = self._cross_diff(k, r, COARSE_ORDER, frame)
        bound, bound_error = self.cross_bound(k, r)
        report = PerimeterDiffReport(
            r=r,
            R=R,
            diff=fine,
            bound=bound,
            quadrature_error=abs(fine - coarse) + tail_bound,
            bound_error=bound_error,
            frame=frame,
        )
        if tol is not None and report.quadrature_error > tol:
            self.logger.warning("perimeter_bar_oversized", r=r, error=report.quadrature_error, tol=tol)
        if not report.within_bound:
            self.logger.warning("cross_bound_violated", r=r, diff=report.diff, bound=report.bound)
        self.logger.info(
            "per_diff_cross",
            kernel=k.name,
            r=r,
            R=R,
            diff=report.diff,
            bound=report.bound,
            error=report.quadrature_error,
        )
        return report

    # ============ Regularization and witnesses ============

    def delta_regularize(self, k: Kernel, delta: float) -> Kernel:
        """K_δ = K·(1 − χ_{B_δ})."""
        if delta <= 0.0:
            raise KernelError("regularization radius must be positive", delta=delta)
        spec = k.spec.model_copy(update={"cutoff": max(k.spec.cutoff, delta)})
        regularized = kernel_service.make_kernel(spec)
        if regularized.is_zero:
            self.logger.warning("regularized_kernel_vanishes", delta=delta, support_radius=k.spec.support_radius)
        return regularized

    def find_nonminimality_witness(
        self,
        k: Kernel,
        R: float,
        r_grid: Sequence[float],
        tol: float | None = None,
        frame: Literal["standard", "rotated"] = "standard",
    ) -> WitnessReport:
        """
        The r of the grid whose certified diff is most negative.

        Soft failure: found=False when no diff + bar is negative.
        """
        radii = sorted(float(r) for r in r_grid)
        if not radii:
            raise ConfigurationError("empty r grid")
        if R <= SQRT2 * radii[-1]:
            raise ConfigurationError("every r of the grid needs R > √2·r", R=R, r_max=radii[-1])

        scan = deterministic_map(lambda r: self.per_diff_cross(k, r, R, tol, frame), radii)
        certified = [rep for rep in scan if rep.certified_negative]
        if not certified:
            self.logger.warning("no_witness", kernel=k.name, R=R, grid=radii)
            return WitnessReport(found=False, best_r=None, margin=None, scan=scan)

        best = max(certified, key=lambda rep: -(rep.diff + rep.quadrature_error))
        margin = -(best.diff + best.quadrature_error)
        self.logger.info("witness_found", kernel=k.name, r=best.r, margin=margin)
        return WitnessReport(found=True, best_r=best.r, margin=margin, scan=scan)


# Глобальный экземпляр
perimeter_service = PerimeterService()
