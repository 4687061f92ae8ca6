"""
Barrier families and the check of their velocity inequalities.

A family is a time-dependent set C(t) with a closed-form outer normal
velocity V. Supersolutions need V ≥ −H^K + δ, subsolutions V ≤ −H^K − δ, at
every smooth boundary point; angular points are excluded and counted.

Built-in families:

- eroded_sublevel (a): C(t) = E^{ε−(δ̄−m)t} for a stadium E of positive
  curvature, V = −(δ̄ − m).
- perturbed_cross (b): C_{r*(t)} with ṙ* = Ψ(r*), plus the outer
  complements of its λ-dilations (zero velocity).
- shrinking_boxes (c): M_{r(t)} = N_r^{r/2} with ṙ = 6Φ(2r), V = −3Φ(2r),
  plus its λ-dilations.
- droplet (d): G_{δ, r(t)} with r = c⋆·t^{1/(1+s)}, δ a fixed fraction of r and
  hulls shrinking at δ̇ = 1/(c♯·ε·r).
- two_balls (e): F_{ε,μ}(t), two balls of radius 1 − ε − C₀t, checked where
  |ν₁| ≤ 1 − c₀; C₀ is fitted from the curvature there.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
import structlog
from scipy.integrate import solve_ivp

from nlcf.exceptions import ConfigurationError, CurvatureError, KernelError
from nlcf.models.kernel import Kernel
from nlcf.models.shape import BoundarySample, LinePiece, PlanarSet
from nlcf.schemas.reports import BarrierReport, BarrierSample
from nlcf.services.analysis import WAIST_RADII, analysis_service
from nlcf.services.curvature import curvature_service
from nlcf.services.geometry import geometry_service
from nlcf.services.kernels import kernel_service
from nlcf.utils.parallel import deterministic_map

logger = structlog.get_logger(__name__)

SQRT2 = math.sqrt(2.0)
SAMPLING_SAFETY = 0.1
SAMPLE_DENSITY = 64

FAMILY_ALIASES = {
    "a": "eroded_sublevel",
    "b": "perturbed_cross",
    "c": "shrinking_boxes",
    "d": "droplet",
    "e": "two_balls",
}

# (velocity, δ) at one boundary sample
Rule = Callable[[BoundarySample], tuple[float, float]]


def _everywhere(_sample: BoundarySample) -> bool:
    return True


def _constant(velocity: float, delta: float) -> Rule:
    return lambda _sample: (velocity, delta)


@dataclass(frozen=True)
class BarrierStage:
    """The family at one time, with the samples it is checked on."""

    t: float
    shape: PlanarSet
    window: float
    select: Callable[[BoundarySample], bool]
    rule: Rule
    # selected samples outside the domain are recorded as Excluded
    domain: Callable[[BoundarySample], bool] = _everywhere


def _pick(samples: list[BoundarySample], n: int) -> list[BoundarySample]:
    if len(samples) <= n:
        return samples
    index = np.unique(np.round(np.linspace(0, len(samples) - 1, n)).astype(int))
    return [samples[i] for i in index]




class BarrierService:
    """Проверка барьерных неравенств на выборке точек границы."""

    def __init__(self) -> None:
        self.logger = logger.bind(service="barriers")

    def verify_barrier(
        self,
        family: str,
        k: Kernel,
        params: dict[str, Any] | None = None,
        n_points: int = 16,
        n_times: int = 3,
        tol: float | None = None,
    ) -> BarrierReport:
        """
        Check the family's velocity inequality at n_points boundary samples
        for each of n_times times.

        Raises:
            ConfigurationError: unknown family or parameters outside the
                family's range
        """
        name = FAMILY_ALIASES.get(family, family)
        builders: dict[str, Callable[..., tuple[list[BarrierStage], Literal["le", "ge"], dict[str, float]]]] = {
            "eroded_sublevel": self._eroded_sublevel,
            "perturbed_cross": self._perturbed_cross,
            "shrinking_boxes": self._shrinking_boxes,
            "droplet": self._droplet,
            "two_balls": self._two_balls,
        }
        if name not in builders:
            raise ConfigurationError("unknown barrier family", family=family, known=sorted(builders))
        if n_points < 1 or n_times < 1:
            raise ConfigurationError("n_points and n_times must be positive", n_points=n_points, n_times=n_times)
        stages, inequality, parameters = builders[name](k, dict(params or {}), n_points, n_times, tol)

        jobs: list[tuple[BarrierStage, BoundarySample]] = []
        for stage in stages:
            spacing = stage.window / SAMPLE_DENSITY
            chosen = [s for s in geometry_service.boundary_sample(stage.shape, spacing, stage.window) if stage.select(s)]
            jobs.extend((stage, s) for s in _pick(chosen, n_points))

        def check(job: tuple[BarrierStage, BoundarySample]) -> BarrierSample:
            return self._check_sample(job[0], job[1], k, inequality, tol)

        samples = deterministic_map(check, jobs)
        smooth = [s for s in samples if s.regularity == "Smooth"]
        passed_count = sum(1 for s in smooth if s.passed)
        margins = [s.margin for s in smooth if s.margin is not None]
        report = BarrierReport(
            family=name,
            inequality=inequality,
            parameters=parameters,
            samples=samples,
            pass_fraction=passed_count / len(smooth) if smooth else 0.0,
            worst_margin=min(margins) if margins else math.nan,
            angular_excluded=sum(1 for s in samples if s.regularity == "Angular"),
            domain_excluded=sum(1 for s in samples if s.regularity == "Excluded"),
            passed=bool(smooth) and passed_count == len(smooth),
        )
        if report.passed:
            self.logger.info("barrier_verified", family=name, samples=len(smooth), worst_margin=report.worst_margin)
        else:
            self.logger.warning(
                "barrier_failed", family=name, pass_fraction=report.pass_fraction, worst_margin=report.worst_margin
            )
        return report

    def _check_sample(
        self, stage: BarrierStage, sample: BoundarySample, k: Kernel, inequality: str, tol: float | None
    ) -> BarrierSample:
        velocity, delta = stage.rule(sample)
        row = {"t": stage.t, "x": sample.point[0], "y": sample.point[1], "velocity": velocity}
        if sample.regularity == "Angular":
            return BarrierSample(
                **row, regularity="Angular", curvature=None, rhs=None, margin=None, bar=None, passed=None
            )
        if not stage.domain(sample):
            return BarrierSample(
                **row, regularity="Excluded", curvature=None, rhs=None, margin=None, bar=None, passed=None
            )
        try:
            estimate = curvature_service.curvature_pv(stage.shape, sample.point, k, tol)
        except CurvatureError as e:
            self.logger.warning("barrier_curvature_failed", t=stage.t, x=sample.point, reason=e.message)
            return BarrierSample(
                **row, regularity="Smooth", curvature=None, rhs=None, margin=None, bar=None, passed=False
            )
        if inequality == "le":
            rhs = -estimate.value - delta
            margin = rhs - velocity
        else:
            rhs = -estimate.value + delta
            margin = velocity - rhs
        return BarrierSample(
            **row,
            regularity="Smooth",
            curvature=estimate.value,
            rhs=rhs,
            margin=margin,
            bar=estimate.bar,
            passed=margin + estimate.bar >= 0.0,
        )

    # ============ Families ============

    def _eroded_sublevel(
        self, k: Kernel, params: dict[str, Any], n_points: int, n_times: int, tol: float | None
    ) -> tuple[list[BarrierStage], Literal["le", "ge"], dict[str, float]]:
        a = float(params.get("a", 1.0))
        R = float(params.get("R", 0.5))
        eps = float(params.get("eps", 0.2))
        margin_fraction = float(params.get("margin_fraction", 0.5))
        if eps <= 0.0 or not 0.0 < margin_fraction < 1.0:
            raise ConfigurationError("eroded_sublevel: eps > 0 and margin_fraction in (0, 1) required", eps=eps)
        base = geometry_service.make_shape("stadium", {"a": a, "R": R})
        window = a + R + eps + 0.5

        def grown(lam: float) -> PlanarSet:
            return geometry_service.dilate(base, lam) if lam > 1e-12 else base

        lowest = math.inf
        for lam in np.linspace(0.0, eps, 5):
            shape = grown(float(lam))
            samples = _pick(geometry_service.boundary_sample(shape, window / SAMPLE_DENSITY, window), n_points)
            profile = curvature_service.curvature_profile(shape, k, samples, tol)
            lowest = min([lowest, *(e.estimate.value - e.estimate.bar for e in profile if e.estimate)])
        if not lowest > 0.0:
            raise ConfigurationError("eroded_sublevel: the family does not have positive curvature", lowest=lowest)
        delta_bar = (1.0 - SAMPLING_SAFETY) * lowest
        margin = margin_fraction * delta_bar
        speed = delta_bar - margin
        horizon = eps / delta_bar
        stages = [
            BarrierStage(float(t), grown(eps - speed * float(t)), window, _everywhere, _constant(-speed, margin))
            for t in np.linspace(0.0, horizon, n_times)
        ]
        parameters = {"a": a, "R": R, "eps": eps, "delta_bar": delta_bar, "margin": margin, "horizon": horizon}
        return stages, "ge", parameters

    def _perturbed_cross(
        self, k: Kernel, params: dict[str, Any], n_points: int, n_times: int, tol: float | None
    ) -> tuple[list[BarrierStage], Literal["le", "ge"], dict[str, float]]:
        r = float(params.get("r", 0.25))
        lam_fraction = float(params.get("lam_fraction", 0.25))
        if r <= 0.0 or not 0.0 < lam_fraction < 0.5:
            raise ConfigurationError("perturbed_cross: r > 0 and lam_fraction in (0, 1/2) required", r=r)
        start = kernel_service.lambda_of(k, r)
        horizon = float(params.get("T", kernel_service.lambda_of(k, 1.5 * r) - start))
        times = [float(t) for t in np.linspace(0.0, horizon, n_times)]
        radii = [kernel_service.invert_lambda(k, t + start) if t > 0.0 else r for t in times]
        delta_1 = min(kernel_service.psi(k, rs) for rs in radii)
        delta_2 = min(kernel_service.positivity_infimum(k, rs) for rs in radii)
        delta = min(delta_1, delta_2)

        stages: list[BarrierStage] = []
        for t, rs in zip(times, radii, strict=True):
            reach = 3.0 * SQRT2 * rs
            shape = geometry_service.make_shape("perturbed_cross", {"r": rs})
            growth = kernel_service.psi(k, rs)

            def on_edges(s: BoundarySample, rs: float = rs) -> bool:
                return abs(abs(s.point[1]) - rs) <= 1e-9 and abs(s.point[0]) < rs

            def on_rays(s: BoundarySample, rs: float = rs, reach: float = reach) -> bool:
                return abs(s.point[1]) > rs and math.hypot(*s.point) <= reach

            def outside(s: BoundarySample, reach: float = reach) -> bool:
                return math.hypot(*s.point) > reach

            stages.append(BarrierStage(t, shape, 2.0 * rs, on_edges, _constant(growth, delta)))
            stages.append(BarrierStage(t, shape, reach, on_rays, _constant(0.0, delta)))
            lam = lam_fraction * r
            hole = geometry_service.complement(geometry_service.dilate(shape, lam))
            stages.append(BarrierStage(t, hole, 2.0 * reach, outside, _constant(0.0, 0.0)))
        parameters = {"r": r, "T": horizon, "delta_1": delta_1, "delta_2": delta_2, "delta": delta}
        return stages, "le", parameters

    def _shrinking_boxes(
        self, k: Kernel, params: dict[str, Any], n_points: int, n_times: int, tol: float | None
    ) -> tuple[list[BarrierStage], Literal["le", "ge"], dict[str, float]]:
        rho = float(params.get("rho", 0.5))
        lam_fraction = float(params.get("lam_fraction", 0.5))
        if not 0.0 < rho < 1.0 or not 0.0 < lam_fraction < 1.0:
            raise ConfigurationError("shrinking_boxes: rho and lam_fraction must lie in (0, 1)", rho=rho)
        phi_min = kernel_service.phi(k, 2.0 * rho)
        if not math.isfinite(phi_min) or phi_min <= 0.0:
            raise KernelError("shrinking_boxes needs a finite positive strip mass", phi=phi_min)

        def rhs(_t: float, y: np.ndarray) -> list[float]:
            return [6.0 * kernel_service.phi(k, 2.0 * float(y[0]))]

        horizon = float(params.get("T", 0.5 * rho / (6.0 * kernel_service.phi(k, 3.0 * rho))))
        times = np.linspace(0.0, horizon, n_times)
        sol = solve_ivp(rhs, (0.0, max(horizon, 1e-12)), [rho], t_eval=times, rtol=1e-8, atol=1e-12)
        lam = lam_fraction * rho

        stages: list[BarrierStage] = []
        for t, r in zip(times, sol.y[0], strict=True):
            shape = geometry_service.dilate(geometry_service.make_shape("box_pair", {"r": float(r)}), 0.5 * float(r))
            velocity = -3.0 * kernel_service.phi(k, 2.0 * float(r))
            window = 4.0 * float(r) + 1.0
            stages.append(BarrierStage(float(t), shape, window, _everywhere, _constant(velocity, phi_min)))
            wider = geometry_service.dilate(shape, lam)
            stages.append(BarrierStage(float(t), wider, window, _everywhere, _constant(velocity, 0.0)))
        parameters = {"rho": rho, "T": horizon, "delta": phi_min, "lam": lam, "r_end": float(sol.y[0][-1])}
        return stages, "le", parameters

    def _droplet(
        self, k: Kernel, params: dict[str, Any], n_points: int, n_times: int, tol: float | None
    ) -> tuple[list[BarrierStage], Literal["le", "ge"], dict[str, float]]:
        s = k.fractional_order
        if s is None:
            raise KernelError("the droplet family needs a fractional kernel")
        delta_fraction = float(params.get("delta_fraction", 1e-3))
        r_max = float(params.get("r_max", max(WAIST_RADII)))
        c_sharp = params.get("c_sharp")
        if c_sharp is None:
            waist = analysis_service.check_named_curvature_bounds(
                k, "droplet_waist", {"tol": tol, "delta_fraction": delta_fraction}
            )
            if not waist.passed or "c_sharp" not in waist.fitted:
                self.logger.warning("droplet_waist_unfitted", fitted=waist.fitted)
                return [], "le", {"c_sharp": math.nan, "r_max": r_max}
            spread = analysis_service.check_named_curvature_bounds(k, "droplet_global", {"tol": tol})
            c_sharp = min(
                waist.fitted["c_sharp"] * (1.0 - SAMPLING_SAFETY), spread.fitted.get("c_sharp", 1.0), 0.99
            )
        c_sharp = float(c_sharp)
        eps = float(params.get("eps_fraction", 0.25)) * c_sharp
        if not 0.0 < eps < 0.5 * c_sharp:
            raise ConfigurationError("droplet: eps must lie in (0, c_sharp/2)", eps=eps, c_sharp=c_sharp)
        speed = c_sharp - eps
        c_star = (speed * (1.0 + s)) ** (1.0 / (1.0 + s))

        # r(t) = c⋆·t^{1/(1+s)} stays inside the fitted radii
        t_max = (r_max / c_star) ** (1.0 + s)
        times = np.geomspace(t_max / 8.0, t_max, n_times)
        hull_margin = eps / (c_sharp * speed)

        stages: list[BarrierStage] = []
        for t in (float(x) for x in times):
            r = c_star * t ** (1.0 / (1.0 + s))
            delta = delta_fraction * r
            shrink = 1.0 / (c_sharp * eps * r)
            shape = geometry_service.make_shape("pinched_droplet", {"delta": delta, "r": r})
            tangent = math.sqrt(2.0 - (1.0 - delta) ** 2)

            def on_waist(sample: BoundarySample, r: float = r) -> bool:
                return abs(abs(sample.point[1]) - r) <= 1e-9 and abs(sample.point[0]) < 2.0 * r

            def off_waist(sample: BoundarySample, r: float = r) -> bool:
                return not on_waist(sample, r)

            def hull_rule(
                sample: BoundarySample, shape: PlanarSet = shape, shrink: float = shrink, tangent: float = tangent
            ) -> tuple[float, float]:
                # tangent lines turn about the origin, arcs move in at δ̇
                if isinstance(shape.pieces[sample.piece], LinePiece):
                    return -math.hypot(*sample.point) * shrink / tangent, hull_margin
                return -shrink, hull_margin

            stages.append(BarrierStage(t, shape, 2.5 * r, on_waist, _constant(speed * r**-s, eps * r**-s)))
            stages.append(BarrierStage(t, shape, 2.5, off_waist, hull_rule))
        parameters = {
            "c_sharp": c_sharp,
            "eps": eps,
            "c_star": c_star,
            "t_max": t_max,
            "r_max": r_max,
            "delta_fraction": delta_fraction,
        }
        return stages, "le", parameters

    def _two_balls(
        self, k: Kernel, params: dict[str, Any], n_points: int, n_times: int, tol: float | None
    ) -> tuple[list[BarrierStage], Literal["le", "ge"], dict[str, float]]:
        eps = float(params.get("eps", 0.05))
        mu = float(params.get("mu", 0.0))
        c0 = float(params.get("c0", 0.5))
        delta = float(params.get("delta", 0.0))
        shrink_fraction = float(params.get("shrink_fraction", 0.1))
        if not 0.0 < c0 < 1.0 or not 0.0 < shrink_fraction < 1.0:
            raise ConfigurationError("two_balls: c0 and shrink_fraction must lie in (0, 1)", c0=c0)

        def in_domain(sample: BoundarySample) -> bool:
            return abs(sample.normal[0]) <= 1.0 - c0

        C0 = params.get("C0")
        sup = math.nan
        if C0 is None:
            # C₀c₀/2 ≥ sup H + δ over the domain, from the first and the smallest pair
            sup = -math.inf
            for t_unit in (0.0, shrink_fraction * (1.0 - eps)):
                shape = geometry_service.make_shape("barrier_pair", {"eps": eps, "C0": 1.0, "t": t_unit})
                samples = [
                    s
                    for s in geometry_service.boundary_sample(shape, 2.5 / SAMPLE_DENSITY, 2.5)
                    if s.regularity == "Smooth" and in_domain(s)
                ]
                profile = curvature_service.curvature_profile(shape, k, _pick(samples, n_points), tol)
                sup = max([sup, *(e.estimate.value + e.estimate.bar for e in profile if e.estimate)])
            C0 = (1.0 + SAMPLING_SAFETY) * 2.0 * max(sup + delta, mu) / c0
        C0 = float(C0)
        if C0 <= 0.0:
            raise ConfigurationError("two_balls: no positive C0 for this kernel and domain", C0=C0, sup=sup)
        horizon = float(params.get("T", shrink_fraction * (1.0 - eps) / C0))
        if mu > 0.0:
            horizon = min(horizon, eps / mu)

        def rule(sample: BoundarySample) -> tuple[float, float]:
            # centres move along e₁ at ∓(C₀ + μ) while the radius shrinks at C₀
            side = 1.0 if sample.point[0] > 0.0 else -1.0
            nu1 = sample.normal[0]
            return -C0 * (1.0 + side * nu1) - side * mu * nu1, delta

        stages = [
            BarrierStage(
                float(t),
                geometry_service.make_shape("barrier_pair", {"eps": eps, "mu": mu, "C0": C0, "t": float(t)}),
                2.5,
                _everywhere,
                rule,
                domain=in_domain,
            )
            for t in np.linspace(0.0, horizon, n_times)
        ]
        parameters = {"eps": eps, "mu": mu, "C0": C0, "c0": c0, "sup_curvature": sup, "T": horizon, "delta": delta}
        return stages, "le", parameters


barrier_service = BarrierService()
