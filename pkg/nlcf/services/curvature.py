"""
K-curvature of planar sets.

H^K_E(x) = PV ∫ (χ_{Eᶜ} − χ_E)(y) K(x − y) dy is evaluated on circles around
x. With A(ρ) the angular out-measure minus in-measure of ∂B_ρ(x),

    H = ∫₀^∞ ρ K₀(ρ) A(ρ) dρ.

Near field: A from the boundary arcs through x, exact up to the local feature
size ℓ, leading term on B_eps_pv in closed form. Mid field: A from the
exact cuts of each circle by the line and arc pieces (a certified bisection
against the signed distance is kept as the generic path). Tail: closed form
from the asymptotic model of the set.
"""

import math
from dataclasses import dataclass

import numpy as np
import structlog
from numpy.typing import ArrayLike, NDArray

from nlcf.config import get_settings
from nlcf.exceptions import CurvatureError
from nlcf.models.flow import GridField
from nlcf.models.kernel import Kernel
from nlcf.models.shape import TWO_PI, ArcPiece, BoundarySample, Indicator, LinePiece, PieceHit, PlanarSet
from nlcf.schemas.reports import CurvatureEstimate, ProfileEntry
from nlcf.services.grid_operator import grid_operator
from nlcf.services.kernels import kernel_service
from nlcf.services.quadrature import adaptive_integrate, dyadic_improper, geometric_panels
from nlcf.utils.parallel import deterministic_map

logger = structlog.get_logger(__name__)

DEFAULT_TOL = 1e-6
INITIAL_ARCS = 64
ANGLE_FLOOR = 1e-12
MAX_GENERATIONS = 48
ON_BOUNDARY_TOL = 1e-9
CUT_CHUNK = 1 << 18


@dataclass(frozen=True)
class LocalModel:
    """Curvatures on both sides of x and the radius ℓ up to which they describe ∂E."""

    kappa_left: float
    kappa_right: float
    feature: float
    normal_angle: float


def local_model(shape: PlanarSet, p: NDArray[np.float64], hits: list[PieceHit]) -> LocalModel:
    first = hits[0]
    piece = shape.pieces[first.index]
    local = {first.index}
    kappas = [piece.curvature, piece.curvature]
    at_start = not piece.closed and abs(first.param - piece.s0) <= ON_BOUNDARY_TOL
    at_end = not piece.closed and abs(first.param - piece.s1) <= ON_BOUNDARY_TOL

    far_points = []
    if at_start or at_end:
        joint = piece.start if at_start else piece.end
        far_points.append(piece.end if at_start else piece.start)
        for hit in hits[1:]:
            other = shape.pieces[hit.index]
            other_end = other.end if at_start else other.start
            if other_end is not None and joint is not None and math.dist(other_end, joint) <= ON_BOUNDARY_TOL:
                local.add(hit.index)
                kappas[1] = other.curvature
                far_points.append(other.start if at_start else other.end)
                break
    else:
        far_points.extend([piece.start, piece.end])

    point = (float(p[0]), float(p[1]))
    feature = min((math.dist(point, q) for q in far_points if q is not None), default=math.inf)
    for i, other in enumerate(shape.pieces):
        if i not in local:
            feature = min(feature, float(other.distance(p.reshape(1, 2))[0]))

    normal = piece.normal(np.array([first.param]))[0]
    return LocalModel(kappas[0], kappas[1], feature, math.atan2(normal[1], normal[0]))


def _line_cuts(
    lines: list[LinePiece], centers: NDArray[np.float64], rho: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Angles (seen from each centre) where ∂B_ρ meets the lines; nan where it does not."""
    origins = np.array([p.origin for p in lines], dtype=float)
    directions = np.array([p.direction for p in lines], dtype=float)
    s0 = np.array([p.s0 for p in lines], dtype=float)
    s1 = np.array([p.s1 for p in lines], dtype=float)
    w = origins[None, :, :] - centers[:, None, :]
    b = np.einsum("nmk,mk->nm", w, directions)
    c = np.einsum("nmk,nmk->nm", w, w)
    disc = b * b - c + rho[:, None] ** 2
    root = np.sqrt(np.maximum(disc, 0.0))
    angles = []
    for sign in (-1.0, 1.0):
        s = -b + sign * root
        ok = (disc >= 0.0) & (s >= s0[None, :]) & (s <= s1[None, :])
        hit = w + np.where(ok, s, 0.0)[..., None] * directions[None, :, :]
        angles.append(np.where(ok, np.arctan2(hit[..., 1], hit[..., 0]), np.nan))
    return np.concatenate(angles, axis=1)


def _arc_cuts(
    arcs: list[ArcPiece], centers: NDArray[np.float64], rho: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Circle-circle intersections restricted to the angular range of each arc."""
    arc_centers = np.array([a.center for a in arcs], dtype=float)
    radii = np.array([a.radius for a in arcs], dtype=float)
    theta0 = np.array([a.theta0 for a in arcs], dtype=float)
    sweep = np.array([a.sweep for a in arcs], dtype=float)
    rel = arc_centers[None, :, :] - centers[:, None, :]
    d = np.hypot(rel[..., 0], rel[..., 1])
    r = rho[:, None]
    meets = (d > 0.0) & (d <= r + radii[None, :]) & (d >= np.abs(r - radii[None, :]))
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_gamma = np.clip((r**2 + d**2 - radii[None, :] ** 2) / (2.0 * r * d), -1.0, 1.0)
    gamma = np.arccos(np.where(meets, cos_gamma, 1.0))
    beta = np.arctan2(rel[..., 1], rel[..., 0])
    angles = []
    for sign in (-1.0, 1.0):
        phi = beta + sign * gamma
        hit = centers[:, None, :] + r[..., None] * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        on_arc = hit - arc_centers[None, :, :]
        u = np.mod(np.sign(sweep) * (np.arctan2(on_arc[..., 1], on_arc[..., 0]) - theta0), TWO_PI)
        within = (np.abs(sweep) >= TWO_PI - 1e-12) | (u <= np.abs(sweep) + 1e-12) | (u >= TWO_PI - 1e-12)
        angles.append(np.where(meets & within, phi, np.nan))
    return np.concatenate(angles, axis=1)


def _sector_measure(
    inside: Indicator, angles: NDArray[np.float64], centers: NDArray[np.float64], rho: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Sum of the sectors between consecutive cuts whose midpoints lie inside."""
    a = np.sort(np.mod(angles, TWO_PI), axis=1)
    count = np.sum(np.isfinite(a), axis=1)
    idx = np.arange(a.shape[1])[None, :]
    valid = idx < count[:, None]
    wraps = idx + 1 >= count[:, None]
    following = np.take_along_axis(a, np.where(wraps, 0, idx + 1), axis=1) + np.where(wraps, TWO_PI, 0.0)
    lower = np.where(valid, a, 0.0)
    upper = np.where(valid, following, 0.0)
    mids = 0.5 * (lower + upper)
    probe = centers[:, None, :] + rho[:, None, None] * np.stack([np.cos(mids), np.sin(mids)], axis=-1)
    ins = np.asarray(inside(probe.reshape(-1, 2))).reshape(mids.shape)
    measure = np.sum(np.where(valid & ins, upper - lower, 0.0), axis=1)

    empty = count == 0
    if np.any(empty):
        probe = centers[empty] + rho[empty, None] * np.array([1.0, 0.0])
        measure[empty] = np.where(np.asarray(inside(probe)), TWO_PI, 0.0)
    return measure


def inside_measure(
    shape: PlanarSet, centers: ArrayLike, rho: ArrayLike, chunk: int = CUT_CHUNK
) -> NDArray[np.float64]:
    """
    Angular measure of ∂B_ρ(c) ∩ E, exact for line and arc boundaries.

    Every circle is cut at its intersections with the pieces and each sector
    is classified at its midpoint. centers is one point or one per radius.
    """
    rho = np.asarray(rho, dtype=float).ravel()
    n = rho.size
    centers = np.broadcast_to(np.asarray(centers, dtype=float), (n, 2))
    lines = [p for p in shape.pieces if isinstance(p, LinePiece)]
    arcs = [p for p in shape.pieces if isinstance(p, ArcPiece)]
    out = np.empty(n)
    step = max(1, chunk // max(1, len(shape.pieces)))
    for lo in range(0, n, step):
        c, r = centers[lo : lo + step], rho[lo : lo + step]
        parts = [np.empty((len(r), 0))]
        if lines:
            parts.append(_line_cuts(lines, c, r))
        if arcs:
            parts.append(_arc_cuts(arcs, c, r))
        out[lo : lo + step] = _sector_measure(shape.inside, np.concatenate(parts, axis=1), c, r)
    return out


def has_exact_cuts(shape: PlanarSet) -> bool:
    return all(isinstance(p, (LinePiece, ArcPiece)) for p in shape.pieces)


def _on_antisymmetry_line(shape: PlanarSet, p: NDArray[np.float64]) -> bool:
    for origin, direction in shape.antisymmetry_lines:
        rel = p - np.asarray(origin)
        if abs(rel[0] * direction[1] - rel[1] * direction[0]) <= ON_BOUNDARY_TOL:
            return True
    return False


class CurvatureService:
    """Вычисление K-кривизны в точках границы."""

    def __init__(self) -> None:
        self.logger = logger.bind(service="curvature")

    # ============ Angular measures ============

    def circle_excess(
        self,
        shape: PlanarSet,
        p: NDArray[np.float64],
        rho: NDArray[np.float64],
        phase: float = 0.0,
        exact: bool = True,
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """
        (out − in) angular measure of ∂B_ρ(p) for every ρ, with its error.

        p is one centre or one centre per radius. Line and arc boundaries are
        cut exactly (zero error) unless exact=False. The bisection path treats
        the shape through its signed distance only: an arc is settled once
        both end values share a sign and exceed half its length (the distance
        is 1-Lipschitz); other arcs are bisected down to ANGLE_FLOOR and split
        by linear interpolation.
        """
        rho = np.asarray(rho, dtype=float).ravel()
        n = rho.size
        centers = np.broadcast_to(np.asarray(p, dtype=float), (n, 2))
        if exact and has_exact_cuts(shape):
            return TWO_PI - 2.0 * inside_measure(shape, centers, rho), np.zeros(n)
        theta = phase + np.linspace(0.0, TWO_PI, INITIAL_ARCS + 1)

        def sd_on(ri: NDArray[np.intp], th: NDArray[np.float64]) -> NDArray[np.float64]:
            pts = centers[ri] + rho[ri, None] * np.column_stack([np.cos(th), np.sin(th)])
            return shape.signed_distance(pts)

        ri = np.repeat(np.arange(n), INITIAL_ARCS)
        nodes = sd_on(np.repeat(np.arange(n), INITIAL_ARCS + 1), np.tile(theta, n)).reshape(n, -1)
        lo, hi = np.tile(theta[:-1], n), np.tile(theta[1:], n)
        f_lo, f_hi = nodes[:, :-1].ravel(), nodes[:, 1:].ravel()

        inside = np.zeros(n)
        error = np.zeros(n)
        for generation in range(MAX_GENERATIONS + 1):
            width = hi - lo
            same = (f_lo >= 0.0) == (f_hi >= 0.0)
            settled = same & (np.minimum(np.abs(f_lo), np.abs(f_hi)) > 0.5 * rho[ri] * width)
            floor = (width <= ANGLE_FLOOR) | (generation == MAX_GENERATIONS)
            terminal = floor & ~settled

            np.add.at(inside, ri[settled & (f_lo >= 0.0)], width[settled & (f_lo >= 0.0)])
            if np.any(terminal):
                a, b = f_lo[terminal], f_hi[terminal]
                w = width[terminal]
                with np.errstate(invalid="ignore", divide="ignore"):
                    frac = np.where(a == b, 0.5, a / (a - b))
                part = np.where(
                    (a >= 0.0) == (b >= 0.0),
                    np.where(a >= 0.0, w, 0.0),
                    np.where(a >= 0.0, frac * w, (1.0 - frac) * w),
                )
                np.add.at(inside, ri[terminal], part)
                np.add.at(error, ri[terminal], w)

            keep = ~(settled | floor)
            if not np.any(keep):
                break
            ri, lo, hi, f_lo, f_hi = ri[keep], lo[keep], hi[keep], f_lo[keep], f_hi[keep]
            mid = 0.5 * (lo + hi)
            f_mid = sd_on(ri, mid)
            ri = np.concatenate([ri, ri])
            lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
            f_lo, f_hi = np.concatenate([f_lo, f_mid]), np.concatenate([f_mid, f_hi])

        return TWO_PI - 2.0 * inside, 2.0 * error

    def ray_excess(self, shape: PlanarSet, p: NDArray[np.float64], rho: NDArray[np.float64]) -> NDArray[np.float64]:
        """
        (out − in) measure on circles crossing only the asymptotic rays, each
        exactly once (ρ beyond every ray origin).
        """
        rho = np.asarray(rho, dtype=float).ravel()
        centers = np.broadcast_to(np.asarray(p, dtype=float), (rho.size, 2))
        rays = [LinePiece(o, d, 0.0, math.inf) for o, d in shape.asymptotic.rays]
        angles = _line_cuts(rays, centers, rho)
        return TWO_PI - 2.0 * _sector_measure(shape.inside, angles, centers, rho)

    # ============ PV curvature ============

    def truncation_radius(self, shape: PlanarSet, p: NDArray[np.float64]) -> float:
        """Radius beyond which the asymptotic model describes every circle around p."""
        center, radius = shape.core
        reach = math.dist((float(p[0]), float(p[1])), center) + radius
        return max(reach, 4.0 * shape.diameter)

    def curvature_pv(
        self,
        shape: PlanarSet,
        x: ArrayLike,
        k: Kernel,
        tol: float | None = None,
        symmetry: str | None = None,
    ) -> CurvatureEstimate:
        """
        PV K-curvature of shape at the boundary point x.

        Args:
            shape: the set
            x: point within 1e-9 of the boundary
            k: kernel
            tol: absolute target for the certified bar
            symmetry: "odd" asserts that x lies on a line across which the set
                is mapped onto its complement; required at corners

        Raises:
            CurvatureError: x off the boundary, corner without a verified
                symmetry assertion
        """
        tol = tol if tol is not None else DEFAULT_TOL
        settings = get_settings()
        p = np.asarray(x, dtype=float).reshape(2)
        hits = shape.locate(p, ON_BOUNDARY_TOL)
        if not hits:
            distance = float(shape.unsigned_distance(p))
            raise CurvatureError("point is not on the boundary", x=p.tolist(), distance=distance)

        odd = _on_antisymmetry_line(shape, p)
        if symmetry is not None and (symmetry != "odd" or not odd):
            raise CurvatureError("asserted symmetry does not hold at this point", x=p.tolist(), symmetry=symmetry)
        if shape.is_corner(p):
            if symmetry != "odd":
                raise CurvatureError("angular point without a symmetry assertion", x=p.tolist(), shape=shape.name)
            return CurvatureEstimate(
                value=0.0,
                near_field_bound=0.0,
                mid_field_error=0.0,
                tail_bound=0.0,
                eps_pv=ANGLE_FLOOR,
                truncation_radius=0.0,
                warning="value fixed by odd symmetry",
            )

        model = local_model(shape, p, hits)
        r_max = self.truncation_radius(shape, p)
        ell = min(model.feature, r_max)
        kl, kr = model.kappa_left, model.kappa_right
        kmax = max(abs(kl), abs(kr))
        feature = min(ell, 1.0 / kmax if kmax > 0 else math.inf, shape.window)
        eps = min(1e-3 * feature, ell / 16.0)

        # B_eps: the local arcs give A(ρ) = (κ_l + κ_r)ρ + O(ρ³)
        value = (kl + kr) * k.radial_moment(2.0, 0.0, eps)
        near_bound = (abs(kl) ** 3 + abs(kr) ** 3) / 15.0 * k.radial_moment(4.0, 0.0, eps)
        mid_error = 0.0
        unconverged = []

        if kl != 0.0 or kr != 0.0:

            def local(rho: NDArray[np.float64]) -> NDArray[np.float64]:
                a = np.arcsin(np.clip(0.5 * kl * rho, -1.0, 1.0)) + np.arcsin(np.clip(0.5 * kr * rho, -1.0, 1.0))
                return rho * k.k0(rho) * 2.0 * a

            cuts = [*geometric_panels(eps, ell)[1:-1], *k.breakpoints, *(2.0 / abs(c) for c in (kl, kr) if c != 0.0)]
            res = adaptive_integrate(
                local, eps, ell, rel_tol=settings.quad_rel_tol_1d, abs_tol=tol / 6.0, breakpoints=tuple(cuts)
            )
            value += res.value
            near_bound += res.error
            if not res.converged:
                unconverged.append("near")

        if ell < r_max:
            measure_error = [0.0]

            def mid(rho: NDArray[np.float64]) -> NDArray[np.float64]:
                excess, err = self.circle_excess(shape, p, rho, model.normal_angle)
                if err.size:
                    measure_error[0] = max(measure_error[0], float(np.max(err)))
                return rho * k.k0(rho) * excess

            cuts = [*geometric_panels(ell, r_max)[1:-1], *k.breakpoints]
            res = adaptive_integrate(
                mid, ell, r_max, rel_tol=settings.quad_rel_tol_2d, abs_tol=tol / 3.0,
                breakpoints=tuple(cuts), max_active=512,
            )
            value += res.value
            mid_error = res.error + measure_error[0] * k.radial_moment(1.0, ell, r_max)
            if not res.converged:
                unconverged.append("mid")

        tail_value, tail_bound = self._tail(shape, p, k, r_max, odd, tol)
        value += tail_value

        warning = None
        total_bar = near_bound + mid_error + tail_bound
        if unconverged or total_bar > max(tol, 1e-3 * abs(value)):
            warning = "tolerance not reached" + (f" ({', '.join(unconverged)})" if unconverged else "")
            self.logger.warning("curvature_bar_oversized", shape=shape.name, x=p.tolist(), bar=total_bar, tol=tol)

        return CurvatureEstimate(
            value=value,
            near_field_bound=near_bound,
            mid_field_error=mid_error,
            tail_bound=tail_bound,
            eps_pv=eps,
            truncation_radius=r_max,
            warning=warning,
        )

    def _tail(
        self, shape: PlanarSet, p: NDArray[np.float64], k: Kernel, r_max: float, odd: bool, tol: float
    ) -> tuple[float, float]:
        if odd:
            return 0.0, 0.0
        model = shape.asymptotic
        if model.kind == "vanishing":
            return kernel_service.tail_mass(k, r_max), 0.0
        if model.kind == "constant":
            return -kernel_service.tail_mass(k, r_max), 0.0
        res = dyadic_improper(
            lambda rho: rho * k.k0(rho) * self.ray_excess(shape, p, rho),
            r_max,
            "infinity",
            rel_tol=get_settings().quad_rel_tol_1d,
            abs_tol=tol / 30.0,
            known_status="converged",
            breakpoints=k.breakpoints,
        )
        return res.value, res.error

    def curvature_profile(
        self, shape: PlanarSet, k: Kernel, samples: list[BoundarySample], tol: float | None = None
    ) -> list[ProfileEntry]:
        """curvature_pv at every sample; Angular samples are skipped with a reason."""

        def evaluate(sample: BoundarySample) -> ProfileEntry:
            row = {
                "arclength": sample.arclength,
                "x": sample.point[0],
                "y": sample.point[1],
                "regularity": sample.regularity,
            }
            if sample.regularity == "Angular":
                return ProfileEntry(**row, skipped_reason="angular point")
            try:
                estimate = self.curvature_pv(shape, sample.point, k, tol)
            except CurvatureError as e:
                return ProfileEntry(**row, skipped_reason=e.message)
            return ProfileEntry(**row, estimate=estimate)

        entries = deterministic_map(evaluate, samples)
        skipped = sum(1 for e in entries if e.estimate is None)
        self.logger.info("curvature_profile", shape=shape.name, samples=len(entries), skipped=skipped)
        return entries

    def grid_curvature(self, u: GridField, node: tuple[int, int], k: Kernel) -> float:
        """Curvature of the grid superlevel set {u ≥ u(node)} at that node."""
        return grid_operator.node_curvature(u, node, k)


curvature_service = CurvatureService()
