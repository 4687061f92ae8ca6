"""
Scenario runner: builds the kernel and shapes of one run, calls the
numerical services and writes the run directory.

Quantitative failures are recorded in summary.json (passed=false); only
configuration errors and numerical aborts raise.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import structlog

from nlcf.config import get_settings
from nlcf.exceptions import ConfigurationError, NlcfError, WeakRegimeError
from nlcf.models.flow import FlowTrace
from nlcf.models.kernel import Kernel
from nlcf.models.shape import PlanarSet
from nlcf.schemas.flow import FlowParams
from nlcf.schemas.reports import FatteningReport, PropertyCheck
from nlcf.schemas.scenario import (
    BallParams,
    BarriersParams,
    CrossParams,
    CurvatureProfileParams,
    DropletParams,
    KernelInfoParams,
    MinimalityParams,
    ScenarioConfig,
    TangentBallsParams,
)
from nlcf.services.analysis import NOFATTENING_AREA_CELLS, analysis_service
from nlcf.services.barriers import FAMILY_ALIASES, barrier_service
from nlcf.services.curvature import curvature_service
from nlcf.services.flow import flow_service
from nlcf.services.geometry import geometry_service
from nlcf.services.kernels import kernel_service
from nlcf.services.perimeter import perimeter_service
from nlcf.storage.trace_repository import TraceRepository

logger = structlog.get_logger(__name__)

BALL_WINDOW_FACTOR = 2.0
BALL_OVERSHOOT = 1.2
CROSS_WINDOW = 2.0
DROPLET_WINDOW = 3.0
TANGENT_WINDOW = 2.5
# scaled rerun: areas compared before this fraction of the extinction time
SCALING_HORIZON = 0.8

BARRIER_COLUMNS = ("t", "x", "y", "regularity", "velocity", "curvature", "rhs", "margin", "bar", "passed")
PROFILE_COLUMNS = ("arclength", "x", "y", "regularity", "value", "bar", "skipped_reason")
MINIMALITY_COLUMNS = ("r", "diff", "bound", "quadrature_error", "bound_error")


@dataclass
class ScenarioOutcome:
    """Result of one run: the summary checks and the run directory."""

    scenario: str
    output_dir: Path
    checks: list[PropertyCheck]
    results: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


def _relative_check(name: str, value: float | None, target: float, tolerance: float) -> PropertyCheck:
    if value is None or not math.isfinite(value) or target == 0.0:
        return PropertyCheck(name=name, value=value, threshold=tolerance, passed=False)
    error = abs(value - target) / abs(target)
    return PropertyCheck(name=name, value=error, threshold=tolerance, passed=error <= tolerance)


def _verdict_check(report: FatteningReport, expected: str) -> PropertyCheck:
    return PropertyCheck(name="verdict", value=report.verdict, threshold=expected, passed=report.verdict == expected)


def _thin_gap_check(report: FatteningReport, h: float) -> PropertyCheck:
    worst = max(report.gap_area, default=0.0)
    limit = NOFATTENING_AREA_CELLS * h * h
    return PropertyCheck(name="gap_within_2h2", value=worst, threshold=limit, passed=worst <= limit)


def _exponent_check(report: FatteningReport, s: float, tolerance: float) -> PropertyCheck:
    target = 1.0 / (1.0 + s)
    p = report.fitted_exponent
    if p is None:
        return PropertyCheck(name="fattening_exponent", value=None, threshold=target, passed=False)
    return PropertyCheck(
        name="fattening_exponent", value=p, threshold=target, passed=abs(p - target) <= tolerance * target
    )


class ScenarioService:
    """Запуск сценариев и запись каталога прогона."""

    def __init__(self) -> None:
        self.logger = logger.bind(service="scenarios")

    def output_dir(self, config: ScenarioConfig) -> Path:
        if config.output_dir is not None:
            return config.output_dir
        return Path(get_settings().output_dir) / config.scenario

    def run(self, config: ScenarioConfig) -> ScenarioOutcome:
        """
        Run one scenario and write meta.json, schema.json, the scenario's
        reports and summary.json.

        Raises:
            ConfigurationError: invalid kernel, shape or parameters
            NumericalAbort: the flow could not continue; summary.json
                records the error before it propagates
        """
        k = kernel_service.make_kernel(config.kernel)
        handlers: dict[str, Callable[[ScenarioConfig, Kernel, TraceRepository], tuple[list[PropertyCheck], dict[str, Any]]]] = {
            "ball": self._ball,
            "cross-strong": self._cross,
            "cross-weak": self._cross,
            "droplet": self._droplet,
            "tangent-balls": self._tangent_balls,
            "minimality": self._minimality,
            "barriers": self._barriers,
            "curvature-profile": self._curvature_profile,
            "kernel-info": self._kernel_info,
        }
        handler = handlers[config.scenario]
        repo = TraceRepository.create(self.output_dir(config))
        repo.write_meta(
            {
                "config": config.model_dump(mode="json"),
                "settings": get_settings().model_dump(mode="json", include={"cfl", "redistance_every", "quad_rel_tol_1d", "quad_rel_tol_2d", "max_threads"}),
            }
        )
        repo.write_schema()
        self.logger.info("scenario_started", scenario=config.scenario, kernel=k.name, output=str(repo.root))

        try:
            checks, results = handler(config, k, repo)
        except NlcfError as e:
            repo.write_summary({"scenario": config.scenario, "passed": False, "checks": [], "error": e.to_dict()})
            self.logger.error("scenario_aborted", scenario=config.scenario, **e.to_dict())
            raise

        outcome = ScenarioOutcome(config.scenario, repo.root, checks, results)
        repo.write_summary(
            {
                "scenario": config.scenario,
                "seed": config.seed,
                "passed": outcome.passed,
                "checks": [c.model_dump() for c in checks],
                "results": results,
            }
        )
        failed = [c.name for c in checks if not c.passed]
        if failed:
            self.logger.warning("scenario_failed", scenario=config.scenario, failed=failed)
        else:
            self.logger.info("scenario_passed", scenario=config.scenario, checks=len(checks))
        return outcome

    # ============ Helpers ============

    def _flow_params(self, config: ScenarioConfig, window: float, ladder: bool) -> FlowParams:
        params = config.grid.flow_params(ladder=ladder)
        return params.model_copy(update={"window": config.grid.window or window})

    def _run_ladder(self, config: ScenarioConfig, k: Kernel, shape: PlanarSet, T: float, window: float) -> FlowTrace:
        shifts = config.grid.shifts
        thresholds = sorted([-e for e in shifts] + shifts)
        return flow_service.evolve_ladder(shape, k, T, thresholds, self._flow_params(config, window, ladder=True))

    def _fattening(
        self, config: ScenarioConfig, k: Kernel, repo: TraceRepository, shape: PlanarSet, T: float, window: float
    ) -> tuple[FlowTrace, FatteningReport, list[PropertyCheck]]:
        trace = self._run_ladder(config, k, shape, T, window)
        repo.write_trace(trace)
        report = analysis_service.fattening_report(trace, seed=config.seed)
        repo.write_json("fattening.json", report)
        return trace, report, analysis_service.check_flow_properties(trace)

    # ============ Scenarios ============

    def _ball(
        self, config: ScenarioConfig, k: Kernel, repo: TraceRepository
    ) -> tuple[list[PropertyCheck], dict[str, Any]]:
        p: BallParams = config.typed_params()
        s = k.fractional_order
        trajectory = kernel_service.ball_evolution(k, p.R)
        oracle = kernel_service.ball_extinction_closed_form(k, p.R) if s is not None else trajectory.extinction_time
        if not math.isfinite(oracle):
            raise ConfigurationError("the ball does not shrink under this kernel", kernel=k.name)
        T = config.grid.T or BALL_OVERSHOOT * oracle
        window = BALL_WINDOW_FACTOR * p.R
        params = self._flow_params(config, window, ladder=False)

        trace = flow_service.evolve_set(geometry_service.make_shape("ball", {"R": p.R}), k, T, params)
        repo.write_trace(trace)
        measured = trace.extinction_time.get(0.0)
        checks = [_relative_check("extinction_time", measured, oracle, p.tolerance)]
        checks.extend(analysis_service.check_flow_properties(trace))
        results: dict[str, Any] = {
            "extinction_time": measured,
            "oracle_extinction_time": oracle,
            "ode_extinction_time": trajectory.extinction_time,
            "ball_curvature_one": kernel_service.ball_curvature(k, 1.0),
        }

        if p.scale is not None and s is not None:
            lam = p.scale
            predicted = flow_service.scale_trace(trace, lam, s)
            scaled_params = params.model_copy(
                update={
                    "h": params.h * lam,
                    "window": (params.window or window) * lam,
                    "truncation": params.resolved_truncation * lam,
                }
            )
            rerun = flow_service.evolve_set(
                geometry_service.make_shape("ball", {"R": lam * p.R}), k, T * lam ** (1.0 + s), scaled_params
            )
            expected = predicted.extinction_time.get(0.0)
            scaled = rerun.extinction_time.get(0.0)
            checks.append(_relative_check("scaled_extinction_time", scaled, expected or 0.0, p.tolerance))
            horizon = SCALING_HORIZON * (expected or math.inf)
            deviations = [
                abs(a.area - b.area) / b.area
                for a, b in zip(rerun.single(), predicted.single())
                if b.area > 0.0 and b.t <= horizon
            ]
            worst = max(deviations, default=0.0)
            checks.append(
                PropertyCheck(name="scaled_area", value=worst, threshold=p.tolerance, passed=worst <= p.tolerance)
            )
            results["scaled_extinction_time"] = scaled
            results["predicted_scaled_extinction_time"] = expected

        if p.nested is not None:
            small, large = sorted(p.nested)
            if small >= large:
                raise ConfigurationError("nested radii must differ", nested=p.nested)
            inner = flow_service.evolve_set(geometry_service.make_shape("ball", {"R": small}), k, T, params)
            outer = flow_service.evolve_set(geometry_service.make_shape("ball", {"R": large}), k, T, params)
            checks.extend(analysis_service.check_comparison(inner, outer, large - small))
        return checks, results

    def _cross(
        self, config: ScenarioConfig, k: Kernel, repo: TraceRepository
    ) -> tuple[list[PropertyCheck], dict[str, Any]]:
        p: CrossParams = config.typed_params()
        strong = config.scenario == "cross-strong"
        shape = geometry_service.make_shape("rotated_cross" if p.frame == "rotated" else "cross")
        T = config.grid.T
        if T is None:
            try:
                T = kernel_service.lambda_of(k, p.r_target)
            except WeakRegimeError:
                T = p.T_weak
        trace, report, checks = self._fattening(config, k, repo, shape, T, CROSS_WINDOW)
        checks = [_verdict_check(report, "Fattening" if strong else "NoFattening"), *checks]
        if not strong:
            checks.append(_thin_gap_check(report, trace.h))
        results: dict[str, Any] = {"T": T, "verdict": report.verdict, "fitted_exponent": report.fitted_exponent}

        s = k.fractional_order
        if strong and s is not None:
            checks.append(_exponent_check(report, s, p.exponent_tolerance))
            radius = kernel_service.invert_lambda(k, T)
            floor = math.pi * radius**2 * (1.0 - p.exponent_tolerance)
            checks.append(
                PropertyCheck(
                    name="gap_contains_ball",
                    value=report.gap_area[-1],
                    threshold=floor,
                    passed=report.gap_area[-1] >= floor,
                )
            )
            results["r_of_T"] = radius

        if shape.name == "rotated_cross":
            for eta in trace.outer:
                check = analysis_service.check_odd_symmetry(trace.final_fields[eta], trace.final_fields[-eta])
                checks.append(check.model_copy(update={"name": f"odd_symmetry[{eta:g}]"}))
        return checks, results

    def _droplet(
        self, config: ScenarioConfig, k: Kernel, repo: TraceRepository
    ) -> tuple[list[PropertyCheck], dict[str, Any]]:
        p: DropletParams = config.typed_params()
        T = config.grid.T or p.T
        _, report, checks = self._fattening(config, k, repo, geometry_service.make_shape("droplet"), T, DROPLET_WINDOW)
        checks = [_verdict_check(report, "Fattening"), *checks]
        if k.fractional_order is not None:
            checks.append(_exponent_check(report, k.fractional_order, p.exponent_tolerance))
        return checks, {"T": T, "verdict": report.verdict, "fitted_exponent": report.fitted_exponent}

    def _tangent_balls(
        self, config: ScenarioConfig, k: Kernel, repo: TraceRepository
    ) -> tuple[list[PropertyCheck], dict[str, Any]]:
        p: TangentBallsParams = config.typed_params()
        T = config.grid.T or p.T
        shape = geometry_service.make_shape("tangent_balls")
        trace, report, checks = self._fattening(config, k, repo, shape, T, TANGENT_WINDOW)
        checks = [_verdict_check(report, "NoFattening"), _thin_gap_check(report, trace.h), *checks]
        return checks, {"T": T, "verdict": report.verdict}

    def _minimality(
        self, config: ScenarioConfig, k: Kernel, repo: TraceRepository
    ) -> tuple[list[PropertyCheck], dict[str, Any]]:
        p: MinimalityParams = config.typed_params()
        report = perimeter_service.find_nonminimality_witness(k, p.R, p.r_grid, p.tol, p.frame)
        repo.write_table("minimality.csv", MINIMALITY_COLUMNS, [rep.model_dump() for rep in report.scan])
        repo.write_json("witness.json", report)
        excess = max(rep.diff - rep.bound - rep.quadrature_error - rep.bound_error for rep in report.scan)
        checks = [
            PropertyCheck(name="witness_found", value=report.margin, threshold=0.0, passed=report.found),
            PropertyCheck(name="cross_bound", value=excess, threshold=0.0, passed=excess <= 0.0),
        ]
        return checks, {"best_r": report.best_r, "margin": report.margin}

    def _barriers(
        self, config: ScenarioConfig, k: Kernel, repo: TraceRepository
    ) -> tuple[list[PropertyCheck], dict[str, Any]]:
        p: BarriersParams = config.typed_params()
        weak = kernel_service.make_kernel(p.weak_kernel)
        checks: list[PropertyCheck] = []
        results: dict[str, Any] = {}
        for family in p.families:
            name = FAMILY_ALIASES[family]
            kernel = weak if family == "c" else k
            report = barrier_service.verify_barrier(
                family, kernel, p.family_params.get(family, {}), p.n_points, p.n_times, p.tol
            )
            repo.write_table(f"barrier_{name}.csv", BARRIER_COLUMNS, [sample.model_dump() for sample in report.samples])
            repo.write_json(f"barrier_{name}.json", report)
            checks.append(
                PropertyCheck(name=f"barrier_{name}", value=report.pass_fraction, threshold=1.0, passed=report.passed)
            )
            results[name] = {
                "worst_margin": report.worst_margin,
                "angular_excluded": report.angular_excluded,
                "domain_excluded": report.domain_excluded,
            }
        return checks, results

    def _curvature_profile(
        self, config: ScenarioConfig, k: Kernel, repo: TraceRepository
    ) -> tuple[list[PropertyCheck], dict[str, Any]]:
        p: CurvatureProfileParams = config.typed_params()
        shape = geometry_service.from_spec(p.shape)
        samples = geometry_service.boundary_sample(shape, p.spacing, p.window)
        entries = curvature_service.curvature_profile(shape, k, samples, p.tol)
        rows = [
            {
                **entry.model_dump(exclude={"estimate"}),
                "value": entry.estimate.value if entry.estimate else None,
                "bar": entry.estimate.bar if entry.estimate else None,
            }
            for entry in entries
        ]
        repo.write_table("profile.csv", PROFILE_COLUMNS, rows)
        evaluated = [e.estimate for e in entries if e.estimate is not None]
        checks = [PropertyCheck(name="profile_evaluated", value=len(evaluated), threshold=1.0, passed=bool(evaluated))]
        if p.tol is not None:
            widest = max((e.bar for e in evaluated), default=0.0)
            checks.append(PropertyCheck(name="bar_within_tol", value=widest, threshold=p.tol, passed=widest <= p.tol))
        return checks, {"samples": len(entries), "evaluated": len(evaluated)}

    def _kernel_info(
        self, config: ScenarioConfig, k: Kernel, repo: TraceRepository
    ) -> tuple[list[PropertyCheck], dict[str, Any]]:
        p: KernelInfoParams = config.typed_params()
        k1 = kernel_service.make_kernel(p.dominating_kernel) if p.dominating_kernel is not None else None
        report = kernel_service.kernel_info(k, k1)
        repo.write_json("kernel_info.json", report.model_dump(by_alias=True))
        checks = [
            PropertyCheck(
                name="integrability",
                value=report.integrability.passed,
                threshold=None,
                passed=report.integrability.passed,
            )
        ]
        return checks, {"regime": report.regime.verdict}


# Глобальный экземпляр
scenario_service = ScenarioService()
