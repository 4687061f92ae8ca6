"""
Post-processing of flow traces: fattening verdicts, power-law fits, named
curvature bounds and the discrete properties the evolution must keep.

Everything here reads immutable traces and shapes; nothing is evolved.
"""

import math
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
import structlog
from numpy.typing import NDArray
from scipy import ndimage
from scipy.spatial import cKDTree

from nlcf.exceptions import ConfigurationError
from nlcf.models.flow import FlowFrame, FlowTrace, GridField
from nlcf.models.kernel import Kernel
from nlcf.models.shape import PlanarSet
from nlcf.schemas.reports import BoundSample, ExponentFit, FatteningReport, NamedBoundsReport, PropertyCheck
from nlcf.services.curvature import curvature_service
from nlcf.services.flow import flow_service
from nlcf.services.geometry import geometry_service
from nlcf.services.kernels import kernel_service
from nlcf.utils.parallel import deterministic_map

logger = structlog.get_logger(__name__)

FATTENING_AREA_CELLS = 10.0
NOFATTENING_AREA_CELLS = 2.0
CONSECUTIVE_TIMES = 3
MONOTONE_TOL_CELLS = 2.0
MIN_LADDER_LEVELS = 3

MIN_FIT_POINTS = 5
RESOLVED_RADIUS_CELLS = 4.0
BOOTSTRAP_SAMPLES = 400

NESTING_TOL_CELLS = 2.0
LIPSCHITZ_SLACK = 0.5
VOLUME_RATE_FACTOR = 4.0
SYMMETRY_TOL = 1e-12

WAIST_RADII = (1.25e-4, 2.5e-4, 5e-4, 1e-3)
POWER_TOLERANCE = 0.15

BoundCase = Literal["box", "eroded_box", "droplet_waist", "droplet_global", "near_tangent"]


@dataclass(frozen=True)
class GapEstimate:
    """Gap between outer and inner ladder members at one recorded time."""

    t: float
    area: float
    gaps: dict[float, float]
    interior_area: float
    mask: NDArray[np.bool_]
    monotone: bool


def _time_index(trace: FlowTrace, t: float) -> int:
    times = np.asarray(trace.times)
    index = int(np.argmin(np.abs(times - t)))
    if abs(times[index] - t) > 1e-9 * max(1.0, abs(t)):
        raise ConfigurationError("time is not a recorded time of the trace", t=t, times=trace.times)
    return index


def _contour_length(frame: FlowFrame) -> float:
    return float(sum(np.sum(np.hypot(*np.diff(c, axis=0).T)) for c in frame.contours if len(c) > 1))


def _contour_points(frame: FlowFrame) -> NDArray[np.float64]:
    if not frame.contours:
        return np.empty((0, 2))
    return np.concatenate([np.asarray(c, dtype=float) for c in frame.contours])


def _fit_waist(radii: NDArray[np.float64], values: NDArray[np.float64]) -> dict[str, float]:
    """
    −a·r^p + b through values at geometrically spaced radii, from the
    successive differences a·rᵢ^p·(1 − q^p). Empty when no decaying fit exists.
    """
    if len(radii) < 3 or not np.all(np.isfinite(values)):
        return {}
    ratios = radii[1:] / radii[:-1]
    if ratios[0] <= 1.0 or not np.allclose(ratios, ratios[0], rtol=1e-9):
        return {}
    steps = np.diff(values)
    if not np.all(steps > 0.0):
        return {}
    power, log_scale = np.polyfit(np.log(radii[:-1]), np.log(steps), 1)
    if power >= 0.0:
        return {}
    a = math.exp(log_scale) / (1.0 - ratios[0] ** power)
    offset = float(np.mean(values + a * radii**power))
    return {"a": float(a), "power": float(power), "offset": offset}


class AnalysisService:
    """Вердикты о фаттенинге и проверка свойств потока."""

    def __init__(self) -> None:
        self.logger = logger.bind(service="analysis")

    # ============ Fattening ============

    def fattening_gap(self, trace: FlowTrace, t: float) -> GapEstimate:
        """
        Gap area extrapolated linearly to η = 0, and the interior of the
        finest-η gap.

        The interior keeps the cells deeper than √2·η + h inside the gap:
        the shifted members always differ by a band of half-width η, and
        two crossing bands reach √2·η at their intersection.

        Raises:
            ConfigurationError: fewer than three ladder levels, t not recorded
        """
        etas = trace.outer
        if len(etas) < MIN_LADDER_LEVELS:
            raise ConfigurationError("fattening needs at least three ladder levels", thresholds=trace.thresholds)
        index = _time_index(trace, t)
        cell = trace.h**2
        masks = {eta: flow_service.gap_mask(trace, index, eta) for eta in etas}
        gaps = {eta: float(np.count_nonzero(masks[eta])) * cell for eta in etas}
        values = np.array([gaps[e] for e in etas])
        monotone = bool(np.all(np.diff(values) >= -MONOTONE_TOL_CELLS * cell))
        slope, intercept = np.polyfit(np.asarray(etas), values, 1)

        finest = etas[0]
        depth = ndimage.distance_transform_edt(masks[finest]) * trace.h
        interior = depth > math.sqrt(2.0) * finest + trace.h
        return GapEstimate(
            t=trace.times[index],
            area=max(float(intercept), 0.0),
            gaps=gaps,
            interior_area=float(np.count_nonzero(interior)) * cell,
            mask=interior,
            monotone=monotone,
        )

    def fattening_report(self, trace: FlowTrace, seed: int = 0) -> FatteningReport:
        """
        Fattening: extrapolated gap > 10h² at three consecutive recorded
        times. NoFattening: extrapolated gap and interior of the finest gap
        both ≤ 2h² at every recorded time.
        Anything else, or a gap that is not monotone in η, is Inconclusive.
        """
        h = trace.h
        cell = h * h
        estimates = deterministic_map(lambda t: self.fattening_gap(trace, t), trace.times)
        rows = trace.diagnostics if len(trace.diagnostics) == len(trace.times) else [
            flow_service.ladder_diagnostics(trace, index) for index in range(len(trace.times))
        ]
        radii = [row["inscribed_radius"] for row in rows]
        flags: list[str] = []
        if not all(e.monotone for e in estimates):
            flags.append("non_monotone_gap")

        run = longest = 0
        for e in estimates:
            run = run + 1 if e.area > FATTENING_AREA_CELLS * cell else 0
            longest = max(longest, run)
        verdict: Literal["Fattening", "NoFattening", "Inconclusive"] = "Inconclusive"
        if longest >= CONSECUTIVE_TIMES:
            verdict = "Fattening"
        elif all(
            e.interior_area <= NOFATTENING_AREA_CELLS * cell and e.area <= NOFATTENING_AREA_CELLS * cell for e in estimates
        ):
            verdict = "NoFattening"
        if "non_monotone_gap" in flags:
            verdict = "Inconclusive"

        fit: ExponentFit | None = None
        try:
            fit = self.fit_exponent(trace.times, radii, h=h, seed=seed)
        except ConfigurationError:
            flags.append("exponent_unresolved")

        if verdict == "Inconclusive":
            self.logger.warning("fattening_inconclusive", shape=trace.shape_name, flags=flags, longest_run=longest)
        else:
            self.logger.info("fattening_verdict", shape=trace.shape_name, verdict=verdict)
        return FatteningReport(
            verdict=verdict,
            times=list(trace.times),
            gap_area=[e.area for e in estimates],
            finest_gap_area=[e.interior_area for e in estimates],
            inscribed_radius=radii,
            fitted_exponent=fit.p if fit else None,
            fitted_constant=fit.c if fit else None,
            exponent_band=fit.confidence if fit else None,
            thresholds=trace.thresholds,
            h=h,
            flags=flags,
        )

    def fit_exponent(
        self,
        times: list[float] | NDArray[np.float64],
        radii: list[float] | NDArray[np.float64],
        h: float = 0.0,
        seed: int = 0,
    ) -> ExponentFit:
        """
        Least-squares fit of log r = log c + p·log t over the points with
        t > 0 and r > 4h, with a 95% bootstrap band on p.

        Raises:
            ConfigurationError: fewer than five resolved points
        """
        t = np.asarray(times, dtype=float)
        r = np.asarray(radii, dtype=float)
        if t.shape != r.shape:
            raise ConfigurationError("times and radii differ in length", times=t.size, radii=r.size)
        keep = (t > 0.0) & (r > RESOLVED_RADIUS_CELLS * h) & (r > 0.0)
        if np.count_nonzero(keep) < MIN_FIT_POINTS:
            raise ConfigurationError(
                "too few resolved points for an exponent fit", resolved=int(np.count_nonzero(keep)), needed=MIN_FIT_POINTS
            )
        x, y = np.log(t[keep]), np.log(r[keep])
        p, log_c = np.polyfit(x, y, 1)

        rng = np.random.default_rng(seed)
        slopes = []
        for _ in range(BOOTSTRAP_SAMPLES):
            idx = rng.integers(0, x.size, x.size)
            if np.ptp(x[idx]) == 0.0:
                continue
            slopes.append(np.polyfit(x[idx], y[idx], 1)[0])
        low, high = (float(v) for v in np.percentile(slopes, [2.5, 97.5])) if slopes else (float(p), float(p))
        return ExponentFit(p=float(p), c=float(math.exp(log_c)), confidence=(low, high), n_points=int(x.size))

    # ============ Named curvature bounds ============

    def _bound_samples(
        self, shape: PlanarSet, k: Kernel, spacing: float, window: float, keep: Any, tol: float | None
    ) -> list[tuple[tuple[float, float], float, float]]:
        samples = [
            s
            for s in geometry_service.boundary_sample(shape, spacing, window)
            if s.regularity == "Smooth" and keep(np.asarray(s.point))
        ]
        profile = curvature_service.curvature_profile(shape, k, samples, tol)
        return [(s.point, e.estimate.value, e.estimate.bar) for s, e in zip(samples, profile, strict=True) if e.estimate]

    def check_named_curvature_bounds(
        self, k: Kernel, case: BoundCase, params: dict[str, Any] | None = None
    ) -> NamedBoundsReport:
        """
        Curvature over the canonical samples of one named case against its
        bound. Bounds whose constants are not known numerically are fitted
        and reported; only their sign and power are checked.

        Raises:
            ConfigurationError: unknown case
        """
        params = dict(params or {})
        tol = params.get("tol")
        if case in ("box", "eroded_box"):
            return self._box_bounds(k, case, params, tol)
        if case == "droplet_waist":
            return self._droplet_waist(k, params, tol)
        if case == "droplet_global":
            return self._droplet_global(k, params, tol)
        if case == "near_tangent":
            return self._near_tangent(k, params, tol)
        raise ConfigurationError("unknown curvature bound case", case=case)

    def _box_bounds(self, k: Kernel, case: str, params: dict[str, Any], tol: float | None) -> NamedBoundsReport:
        r = float(params.get("r", 0.5))
        shape = geometry_service.make_shape("box_pair", {"r": r})
        if case == "eroded_box":
            shape = geometry_service.dilate(shape, float(params.get("lam", 0.5 * r)))
        window = float(params.get("window", 4.0 * r + 1.0))
        bound = 2.0 * kernel_service.phi(k, 2.0 * r)
        rows = self._bound_samples(shape, k, float(params.get("spacing", r / 2.0)), window, lambda p: True, tol)
        samples = [
            BoundSample(x=p[0], y=p[1], value=v, bar=b, bound=bound, margin=bound - v) for p, v, b in rows
        ]
        passed = bool(samples) and all(s.value - s.bar <= s.bound for s in samples)
        self.logger.info("named_bounds", case=case, r=r, samples=len(samples), passed=passed)
        return NamedBoundsReport(case=case, samples=samples, passed=passed, fitted={"phi_2r": bound / 2.0})

    def _droplet_waist(self, k: Kernel, params: dict[str, Any], tol: float | None) -> NamedBoundsReport:
        """
        Waist values fitted to −a·r^p + b. The offset b is the r-independent
        pull of the two droplets far from the waist; a, p and the largest
        c♯ with H ≤ −c♯·r^(−s) on the sampled radii are reported.
        """
        radii = sorted(float(r) for r in params.get("radii", WAIST_RADII))
        delta_fraction = float(params.get("delta_fraction", 1e-3))
        samples: list[BoundSample] = []
        mids: list[float] = []
        for r in radii:
            shape = geometry_service.make_shape("pinched_droplet", {"delta": delta_fraction * r, "r": r})

            def on_waist(p: NDArray[np.float64], r: float = r) -> bool:
                return abs(abs(p[1]) - r) <= 1e-9 and abs(p[0]) < 2.0 * r

            rows = self._bound_samples(shape, k, r / 4.0, 2.5 * r, on_waist, tol)
            samples.extend(BoundSample(x=p[0], y=p[1], value=v, bar=b, bound=0.0, margin=-v) for p, v, b in rows)
            centre = min(rows, key=lambda row: abs(row[0][0]), default=None)
            mids.append(centre[1] if centre else math.nan)

        fitted = _fit_waist(np.asarray(radii), np.asarray(mids))
        s = k.fractional_order
        power_ok = True
        if s is not None and fitted:
            fitted["expected_power"] = -s
            fitted["c_sharp"] = float(min(-v * r**s for r, v in zip(radii, mids, strict=True)))
            power_ok = abs(fitted["power"] + s) <= POWER_TOLERANCE * s
        negative = bool(np.all(np.asarray(mids) < 0.0))
        passed = (
            bool(fitted) and negative and fitted["a"] > 0.0 and power_ok and all(x.value + x.bar < 0.0 for x in samples)
        )
        self.logger.info("named_bounds", case="droplet_waist", fitted=fitted, passed=passed)
        return NamedBoundsReport(case="droplet_waist", samples=samples, passed=passed, fitted=fitted)

    def _droplet_global(self, k: Kernel, params: dict[str, Any], tol: float | None) -> NamedBoundsReport:
        r = float(params.get("r", 0.1))
        delta = float(params.get("delta", 1e-3 * r))
        shape = geometry_service.make_shape("pinched_droplet", {"delta": delta, "r": r})
        rows = self._bound_samples(shape, k, float(params.get("spacing", 0.1)), 3.0, lambda p: True, tol)
        if not rows:
            return NamedBoundsReport(case="droplet_global", samples=[], passed=False)
        sup = max(v + b for _, v, b in rows)
        samples = [BoundSample(x=p[0], y=p[1], value=v, bar=b, bound=sup, margin=sup - v) for p, v, b in rows]
        # the bound 1/c is fitted from the sampled supremum
        fitted = {"sup": sup, "c_sharp": 1.0 / sup if sup > 0.0 else math.inf}
        passed = math.isfinite(sup)
        return NamedBoundsReport(case="droplet_global", samples=samples, passed=passed, fitted=fitted)

    def _near_tangent(self, k: Kernel, params: dict[str, Any], tol: float | None) -> NamedBoundsReport:
        delta = float(params.get("delta", 0.01))
        r = float(params.get("r", 1.0))
        c = float(params.get("c", 0.25))
        shape = geometry_service.make_shape("near_tangent", {"delta": delta, "r": r})
        rows = self._bound_samples(shape, k, float(params.get("spacing", c * r / 8.0)), 3.0 * r, lambda p: True, tol)
        near = [(p, v, b) for p, v, b in rows if math.hypot(*p) < c * r]
        samples = [BoundSample(x=p[0], y=p[1], value=v, bar=b, bound=0.0, margin=-v) for p, v, b in near]
        s = k.fractional_order or 0.0
        fitted = {
            "c": -max((v for _, v, _ in near), default=math.nan),
            "C": max(v for _, v, _ in rows) * r**s if rows else math.nan,
        }
        passed = bool(samples) and all(x.value + x.bar < 0.0 for x in samples)
        self.logger.info("named_bounds", case="near_tangent", delta=delta, samples=len(samples), passed=passed)
        return NamedBoundsReport(case="near_tangent", samples=samples, passed=passed, fitted=fitted)

    # ============ Flow properties ============

    def check_flow_properties(self, trace: FlowTrace) -> list[PropertyCheck]:
        """Ladder monotonicity, Lipschitz non-expansion, volume semicontinuity and cross diagonals."""
        checks: list[PropertyCheck] = []
        if len(trace.members) > 1:
            worst = max(flow_service.check_nesting(trace, i) for i in range(len(trace.times)))
            checks.append(
                PropertyCheck(name="ladder_monotonicity", value=worst, threshold=NESTING_TOL_CELLS, passed=worst <= NESTING_TOL_CELLS)
            )
        if trace.final_fields:
            lipschitz = max(f.lipschitz_constant() for f in trace.final_fields.values())
            limit = 1.0 + LIPSCHITZ_SLACK
            checks.append(
                PropertyCheck(name="lipschitz_nonexpansion", value=lipschitz, threshold=limit, passed=lipschitz <= limit)
            )
        checks.append(self._volume_semicontinuity(trace))
        if "cross" in trace.shape_name and len(trace.members) > 1:
            checks.append(self._diagonal_containment(trace))
        failed = [c.name for c in checks if not c.passed]
        if failed:
            self.logger.warning("flow_properties_failed", shape=trace.shape_name, failed=failed)
        return checks

    def _volume_semicontinuity(self, trace: FlowTrace) -> PropertyCheck:
        """
        Area at t_{i+1} against the one-cell interior at t_i. The allowed
        loss is a two-cell band along the contour plus four times the median
        loss rate of the run; intervals containing the extinction time are
        skipped.
        """
        eta = trace.outer[0] if trace.outer else min(trace.members, key=abs)
        frames = trace.members[eta]
        extinct = trace.extinction_time.get(eta)
        cell = trace.h**2
        rates, losses = [], []
        for a, b in zip(frames, frames[1:]):
            if extinct is not None and b.t >= extinct:
                break
            interior = float(np.count_nonzero(ndimage.binary_erosion(a.mask))) * cell
            length = max(_contour_length(a), trace.h)
            dt = b.t - a.t
            losses.append((interior - b.area, length, dt))
            rates.append(max(a.area - b.area, 0.0) / (length * dt) if dt > 0 else 0.0)
        if not losses:
            return PropertyCheck(name="outer_volume_lsc", value=0.0, threshold=0.0, passed=True)
        speed = VOLUME_RATE_FACTOR * float(np.median(rates))
        excess = max(loss - length * (2.0 * trace.h + speed * dt) for loss, length, dt in losses)
        return PropertyCheck(name="outer_volume_lsc", value=excess, threshold=0.0, passed=excess <= 0.0)

    def _diagonal_containment(self, trace: FlowTrace) -> PropertyCheck:
        """Every node of the cross boundary lines lies within one cell of the raw finest gap."""
        n = trace.members[trace.outer[0]][0].mask.shape[0]
        margin = max(int(trace.params.get("edge_margin", 2)), 1) + 1
        i = np.arange(margin, n - margin)
        if trace.shape_name.startswith("rotated"):
            middle = np.full_like(i, n // 2)
            lines = [(i, middle), (middle, i)]
        else:
            lines = [(i, i), (i, n - 1 - i)]
        worst = 0.0
        for index in range(len(trace.times)):
            gap = flow_service.gap_mask(trace, index, trace.outer[0])
            dilated = ndimage.binary_dilation(gap, structure=np.ones((3, 3), dtype=bool))
            covered = min(float(np.mean(dilated[rows, cols])) for rows, cols in lines)
            worst = max(worst, 1.0 - covered)
        return PropertyCheck(name="diagonal_containment", value=1.0 - worst, threshold=1.0, passed=worst == 0.0)

    def check_comparison(self, trace_inner: FlowTrace, trace_outer: FlowTrace, k0: float) -> list[PropertyCheck]:
        """
        Containment of the inner evolution in the outer one, and the contour
        distance never below k0 − 2h, at every common recorded time.
        """
        inner, outer = trace_inner.single(), trace_outer.single()
        h = max(trace_inner.h, trace_outer.h)
        stray_cells = 0
        closest = math.inf
        for a, b in zip(inner, outer):
            stray_cells = max(stray_cells, int(np.count_nonzero(a.mask & ~b.mask)))
            pa, pb = _contour_points(a), _contour_points(b)
            if pa.size and pb.size:
                closest = min(closest, float(np.min(cKDTree(pb).query(pa)[0])))
        floor = k0 - 2.0 * h
        checks = [
            PropertyCheck(name="comparison_containment", value=stray_cells, threshold=0.0, passed=stray_cells == 0),
            PropertyCheck(
                name="comparison_distance",
                value=closest if math.isfinite(closest) else None,
                threshold=floor,
                passed=not math.isfinite(closest) or closest >= floor,
            ),
        ]
        if not all(c.passed for c in checks):
            self.logger.warning("comparison_failed", stray_cells=stray_cells, distance=closest, floor=floor)
        return checks

    def check_odd_symmetry(self, field: GridField, partner: GridField | None = None) -> PropertyCheck:
        """
        u(y₁, y₂) = −u(−y₁, y₂) on the grid, up to rounding.

        With a partner the check is u_η(y₁, y₂) = −u_{−η}(−y₁, y₂) for a pair
        of ladder members.
        """
        mirror = field if partner is None else partner
        if mirror.values.shape != field.values.shape:
            raise ConfigurationError("fields differ in shape", a=field.values.shape, b=mirror.values.shape)
        defect = float(np.max(np.abs(field.values + mirror.values[::-1, :]), initial=0.0))
        limit = SYMMETRY_TOL * max(field.truncation, 1.0)
        return PropertyCheck(name="odd_symmetry", value=defect, threshold=limit, passed=defect <= limit)


# Глобальный экземпляр
analysis_service = AnalysisService()
