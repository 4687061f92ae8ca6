"""
Level-set evolution u_t + H^K_{{u ≥ u(x)}}(x)·|∇u| = 0.

Explicit upwind stepping on a narrow band |u| ≤ band_width·h, redistancing
every few steps, edge rows refreshed from the asymptotic model. The η-ladder
evolves the shifted data clamp(d_E + η) independently; positive shifts
approximate the outer flow, negative shifts the inner flow.
"""

import math
from dataclasses import replace

import numpy as np
import structlog
from numpy.typing import NDArray
from scipy import ndimage

from nlcf.config import get_settings
from nlcf.exceptions import ConfigurationError, NumericalAbort, ShapeError
from nlcf.models.flow import FlowFrame, FlowTrace, GridField, asymptotic_label
from nlcf.models.kernel import Kernel
from nlcf.models.shape import PlanarSet
from nlcf.schemas.flow import FlowParams
from nlcf.services.grid_operator import grid_operator
from nlcf.services.redistance import redistance, zero_contours
from nlcf.utils.parallel import deterministic_map

logger = structlog.get_logger(__name__)

NESTING_TOLERANCE_CELLS = 2.0
MIN_STEP_FRACTION = 1e-12


def upwind_speed_term(u: NDArray[np.float64], h: float, speed: NDArray[np.float64]) -> NDArray[np.float64]:
    """max(F, 0)·|∇⁺u| + min(F, 0)·|∇⁻u| (Osher-Sethian)."""
    padded = np.pad(u, 1, mode="edge")
    c = padded[1:-1, 1:-1]
    dmx = (c - padded[:-2, 1:-1]) / h
    dpx = (padded[2:, 1:-1] - c) / h
    dmy = (c - padded[1:-1, :-2]) / h
    dpy = (padded[1:-1, 2:] - c) / h
    grad_plus = np.sqrt(
        np.maximum(dmx, 0.0) ** 2 + np.minimum(dpx, 0.0) ** 2 + np.maximum(dmy, 0.0) ** 2 + np.minimum(dpy, 0.0) ** 2
    )
    grad_minus = np.sqrt(
        np.maximum(dpx, 0.0) ** 2 + np.minimum(dmx, 0.0) ** 2 + np.maximum(dpy, 0.0) ** 2 + np.minimum(dmy, 0.0) ** 2
    )
    return np.maximum(speed, 0.0) * grad_plus + np.minimum(speed, 0.0) * grad_minus


def superlevel_area(field: GridField) -> float:
    """Volume-fraction area of {u ≥ 0}."""
    scale = grid_operator.fraction_scale(field)
    phi = 0.5 * (1.0 - grid_operator.signed_fraction(field.values, 0.0, scale))
    return float(np.sum(phi)) * field.h**2


def edge_ring(n: int, margin: int) -> NDArray[np.bool_]:
    ring = np.zeros((n, n), dtype=bool)
    ring[:margin, :] = ring[-margin:, :] = True
    ring[:, :margin] = ring[:, -margin:] = True
    return ring


class FlowService:
    """Эволюция множеств уровня под действием нелокальной кривизны."""

    def __init__(self) -> None:
        self.logger = logger.bind(service="flow")

    # ============ Fields ============

    def init_field(
        self,
        shape: PlanarSet,
        window: float,
        h: float,
        M: float,
        shift: float = 0.0,
        edge_margin: int = 2,
        band_width: float = 4.0,
    ) -> GridField:
        """
        u = clamp(d_E + shift, ±M) on the nodes of [−W, W]².

        Raises:
            ShapeError: non-positive h or M, or the zero band of a bounded
                set (or of its complement) reaching the frozen edge rows
        """
        if h <= 0.0 or M <= 0.0 or window <= 0.0:
            raise ShapeError("h, M and window must be positive", h=h, M=M, window=window)
        n = int(round(2.0 * window / h)) + 1
        if n < 2 * edge_margin + 3:
            raise ShapeError("window holds too few nodes", n=n)
        half_width = 0.5 * h * (n - 1)
        axis = -half_width + h * np.arange(n)
        x, y = np.meshgrid(axis, axis, indexing="ij")
        sd = shape.signed_distance(np.stack([x, y], axis=-1))
        values = np.clip(sd + shift, -M, M)

        label = asymptotic_label(shape.asymptotic, shape.name)
        field = GridField(
            values=values,
            h=h,
            half_width=half_width,
            truncation=M,
            asymptotic=shape.asymptotic,
            label=label,
            edge_values=values.copy(),
            shape_name=shape.name,
        )
        if label in ("vanishing", "constant"):
            ring = edge_ring(n, edge_margin)
            if np.any(np.abs(values[ring]) <= band_width * h):
                raise ShapeError("window too small: zero level reaches the edge", shape=shape.name, window=half_width)
        self.logger.debug("field_initialized", shape=shape.name, n=n, h=h, M=M, shift=shift, label=label)
        return field

    def band(self, field: GridField, width: float = 4.0) -> NDArray[np.bool_]:
        return np.abs(field.values) <= width * field.h

    def curvature(
        self, field: GridField, k: Kernel, band: NDArray[np.bool_], engine: str = "fft", stencil: int = 8
    ) -> NDArray[np.float64]:
        if engine == "direct":
            return grid_operator.band_curvature_direct(field, band, k)
        return grid_operator.band_curvature(field, band, k, stencil)

    def _advance(
        self, field: GridField, H: NDArray[np.float64], band: NDArray[np.bool_], dt: float, margin: int
    ) -> GridField:
        u = field.values
        update = upwind_speed_term(u, field.h, H)
        values = np.where(band, u - dt * update, u)
        values = np.clip(values, -field.truncation, field.truncation)
        return field.with_values(self.refresh_far_field(field, values, edge_ring(field.n, margin)))

    def refresh_far_field(
        self, field: GridField, values: NDArray[np.float64], ring: NDArray[np.bool_]
    ) -> NDArray[np.float64]:
        """
        Edge rows set from the asymptotic model of the set. Every model
        (bounded, co-bounded, finite family of rays) is stationary, so the
        model values are the ones sampled at initialization.
        """
        if field.edge_values is not None:
            values[ring] = field.edge_values[ring]
        return values

    def stable_step(self, field: GridField, H: NDArray[np.float64], band: NDArray[np.bool_], cfl: float) -> float:
        peak = float(np.max(np.abs(H[band]), initial=0.0))
        return math.inf if peak == 0.0 else cfl * field.h / peak

    def step_direct(self, u: GridField, k: Kernel, dt: float, edge_margin: int = 2, band_width: float = 4.0) -> GridField:
        """
        One explicit step with the per-node curvature sum.

        Raises:
            ConfigurationError: grid larger than 96²
            NumericalAbort: dt above the CFL bound
        """
        band = self.band(u, band_width)
        H = grid_operator.band_curvature_direct(u, band, k)
        bound = self.stable_step(u, H, band, get_settings().cfl)
        if dt > bound * (1.0 + 1e-12):
            raise NumericalAbort("CFL violation", dt=dt, bound=bound)
        return self._advance(u, H, band, dt, edge_margin)

    # ============ Single member ============

    def _record(self, field: GridField, t: float) -> FlowFrame:
        mask = field.values >= 0.0
        contours = tuple(zero_contours(field)) if np.any(mask) else ()
        return FlowFrame(t=t, area=superlevel_area(field) if np.any(mask) else 0.0, contours=contours, mask=mask)

    def _evolve_member(
        self, field: GridField, k: Kernel, record_times: list[float], params: FlowParams
    ) -> tuple[list[FlowFrame], float | None, GridField, int]:
        settings = get_settings()
        cfl = params.cfl if params.cfl is not None else settings.cfl
        cadence = params.redistance_every if params.redistance_every is not None else settings.redistance_every
        ring = edge_ring(field.n, params.edge_margin)
        bounded = field.label in ("vanishing", "constant")
        horizon = record_times[-1]

        frames: list[FlowFrame] = []
        t = 0.0
        steps = 0
        extinct_at: float | None = None
        pending = list(record_times)
        while pending and pending[0] <= 0.0:
            frames.append(self._record(field, pending.pop(0)))

        if not np.any(field.values >= 0.0):
            extinct_at = 0.0
        while pending and extinct_at is None:
            band = self.band(field, params.band_width)
            if bounded and np.any(band & ring):
                raise NumericalAbort("band touches the window edge", shape=field.shape_name, t=t)
            H = self.curvature(field, k, band, params.engine, params.stencil)
            dt = min(self.stable_step(field, H, band, cfl), pending[0] - t)
            if dt <= MIN_STEP_FRACTION * max(horizon, 1.0) and pending[0] - t > MIN_STEP_FRACTION:
                raise NumericalAbort("time step collapsed", t=t, dt=dt, max_curvature=float(np.max(np.abs(H))))
            peak_before = float(field.values.max())
            field = self._advance(field, H, band, dt, params.edge_margin)
            t = t + dt
            steps += 1
            peak_after = float(field.values.max())
            if peak_after < 0.0:
                # max u interpolated linearly within the step
                extinct_at = t - dt + dt * peak_before / (peak_before - peak_after)
                break
            if steps >= params.max_steps:
                raise NumericalAbort("step budget exhausted", steps=steps, t=t)
            if steps % cadence == 0 and np.any(field.values >= 0.0) and np.any(field.values < 0.0):
                field = redistance(field)
                field = field.with_values(self.refresh_far_field(field, field.values.copy(), ring))
            while pending and t >= pending[0] - 1e-14 * max(horizon, 1.0):
                frames.append(self._record(field, pending.pop(0)))

        for tr in pending:
            frames.append(FlowFrame(t=tr, area=0.0, contours=(), mask=np.zeros_like(field.values, dtype=bool)))
        if extinct_at is not None:
            self.logger.info("set_extinct", shape=field.shape_name, t=extinct_at, steps=steps)
        return frames, extinct_at, field, steps

    def _record_times(self, T: float, params: FlowParams) -> list[float]:
        if params.record_times is not None:
            return [float(t) for t in params.record_times]
        if T <= 0.0:
            raise ConfigurationError("final time must be positive", T=T)
        return [float(t) for t in np.linspace(0.0, T, params.n_records + 1)]

    def _window(self, shape: PlanarSet, params: FlowParams) -> float:
        return params.window if params.window is not None else shape.window

    def evolve_set(self, shape: PlanarSet, k: Kernel, T: float, params: FlowParams) -> FlowTrace:
        """Evolve one set up to T (or extinction); frames at the recorded times."""
        times = self._record_times(T, params)
        M = params.resolved_truncation
        field = self.init_field(shape, self._window(shape, params), params.h, M, 0.0, params.edge_margin, params.band_width)
        frames, extinct_at, final, steps = self._evolve_member(field, k, times, params)
        self.logger.info("evolve_set_done", shape=shape.name, steps=steps, extinct=extinct_at, n=field.n)
        return FlowTrace(
            shape_name=shape.name,
            kernel=k.spec.model_dump(),
            h=params.h,
            half_width=field.half_width,
            truncation=M,
            times=times,
            members={0.0: frames},
            extinction_time={0.0: extinct_at},
            final_fields={0.0: final},
            params=params.model_dump(),
            steps=steps,
        )

    # ============ Ladder ============

    def evolve_ladder(
        self, shape: PlanarSet, k: Kernel, T: float, thresholds: list[float], params: FlowParams
    ) -> FlowTrace:
        """
        Evolve clamp(d_E + η) for every η and summarise outer/inner flows.

        Raises:
            ConfigurationError: thresholds not symmetric around 0
            NumericalAbort: members out of order by more than two cells
        """
        etas = sorted({float(e) for e in thresholds})
        positive = [e for e in etas if e > 0.0]
        if not positive or any(not any(abs(e + p) <= 1e-12 for e in etas) for p in positive) or 0.0 in etas:
            raise ConfigurationError("thresholds must be nonzero and symmetric around 0", thresholds=thresholds)
        times = self._record_times(T, params)
        M = params.resolved_truncation
        if M <= max(positive) + params.band_width * params.h:
            raise ConfigurationError("truncation must exceed the largest shift plus the band", M=M, eta=max(positive))
        window = self._window(shape, params)

        def run(eta: float) -> tuple[list[FlowFrame], float | None, GridField, int]:
            field = self.init_field(shape, window, params.h, M, eta, params.edge_margin, params.band_width)
            return self._evolve_member(field, k, times, params)

        results = deterministic_map(run, etas)
        members = {eta: res[0] for eta, res in zip(etas, results, strict=True)}
        first = results[0][2]
        trace = FlowTrace(
            shape_name=shape.name,
            kernel=k.spec.model_dump(),
            h=params.h,
            half_width=first.half_width,
            truncation=M,
            times=times,
            members=members,
            extinction_time={eta: res[1] for eta, res in zip(etas, results, strict=True)},
            final_fields={eta: res[2] for eta, res in zip(etas, results, strict=True)},
            params={**params.model_dump(), "thresholds": etas},
            steps=sum(res[3] for res in results),
        )
        for index in range(len(times)):
            self.check_nesting(trace, index)
            trace.diagnostics.append(self.ladder_diagnostics(trace, index))
        self.logger.info("evolve_ladder_done", shape=shape.name, members=len(etas), steps=trace.steps)
        return trace

    def check_nesting(self, trace: FlowTrace, index: int) -> float:
        """Largest distance (cells) of a smaller member outside a larger one."""
        frames = trace.frames_at(index)
        etas = sorted(frames)
        worst = 0.0
        for lo, hi in zip(etas, etas[1:]):
            small, large = frames[lo].mask, frames[hi].mask
            stray = small & ~large
            if not np.any(stray):
                continue
            if not np.any(large):
                depth = math.inf
            else:
                depth = float(np.max(ndimage.distance_transform_edt(~large)[stray]))
            worst = max(worst, depth)
            if depth > NESTING_TOLERANCE_CELLS:
                raise NumericalAbort(
                    "ladder nesting violated",
                    t=trace.times[index],
                    inner_eta=lo,
                    outer_eta=hi,
                    depth_cells=depth,
                )
        return worst

    def gap_mask(self, trace: FlowTrace, index: int, eta: float) -> NDArray[np.bool_]:
        frames = trace.frames_at(index)
        partner = min(frames, key=lambda e: abs(e + eta))
        return frames[eta].mask & ~frames[partner].mask

    def inscribed_radius(self, mask: NDArray[np.bool_], trace: FlowTrace) -> float:
        """Radius of the largest ball centred at the origin node inside the mask."""
        n = mask.shape[0]
        i = j = int(round(trace.half_width / trace.h))
        if not (0 <= i < n) or not mask[i, j]:
            return 0.0
        return float(ndimage.distance_transform_edt(mask)[i, j]) * trace.h

    def ladder_diagnostics(self, trace: FlowTrace, index: int) -> dict[str, float]:
        """Areas, gap area and inscribed radius, each extrapolated linearly to η = 0."""
        frames = trace.frames_at(index)
        etas = trace.outer
        cell = trace.h**2
        outer = [frames[e].area for e in etas]
        inner = [frames[min(frames, key=lambda x, e=e: abs(x + e))].area for e in etas]
        gaps = [float(np.count_nonzero(self.gap_mask(trace, index, e))) * cell for e in etas]
        radii = [self.inscribed_radius(self.gap_mask(trace, index, e), trace) for e in etas]

        def at_zero(values: list[float]) -> float:
            if len(etas) < 2:
                return values[0]
            slope, intercept = np.polyfit(np.asarray(etas), np.asarray(values), 1)
            return float(intercept)

        return {
            "t": trace.times[index],
            "outer_area": at_zero(outer),
            "inner_area": at_zero(inner),
            "gap_area": max(at_zero(gaps), 0.0),
            "finest_gap_area": gaps[0],
            "inscribed_radius": max(at_zero(radii), 0.0),
            "finest_inscribed_radius": radii[0],
        }

    # ============ Scaling ============

    def scale_trace(self, trace: FlowTrace, lam: float, s: float) -> FlowTrace:
        """Predicted trace of λE: x ↦ λx, t ↦ λ^{1+s}t."""
        if lam <= 0.0:
            raise ConfigurationError("scale factor must be positive", lam=lam)
        time_factor = lam ** (1.0 + s)
        members = {
            eta * lam: [
                replace(
                    f,
                    t=f.t * time_factor,
                    area=f.area * lam**2,
                    contours=tuple(c * lam for c in f.contours),
                )
                for f in frames
            ]
            for eta, frames in trace.members.items()
        }
        lengths = {"inscribed_radius", "finest_inscribed_radius"}
        areas = {"outer_area", "inner_area", "gap_area", "finest_gap_area"}
        diagnostics = [
            {
                key: value * time_factor if key == "t" else value * lam if key in lengths else value * lam**2 if key in areas else value
                for key, value in row.items()
            }
            for row in trace.diagnostics
        ]
        return replace(
            trace,
            shape_name=f"scale({trace.shape_name},{lam:g})",
            h=trace.h * lam,
            half_width=trace.half_width * lam,
            truncation=trace.truncation * lam,
            times=[t * time_factor for t in trace.times],
            members=members,
            extinction_time={
                eta * lam: (None if te is None else te * time_factor) for eta, te in trace.extinction_time.items()
            },
            diagnostics=diagnostics,
            final_fields={},
        )


# Глобальный экземпляр
flow_service = FlowService()
