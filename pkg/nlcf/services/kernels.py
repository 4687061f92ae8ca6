"""
Kernel service: construction and every scalar functional of a kernel.

All 2D kernel integrals over disks, strips and circles are reduced to exact
1D radial integrals (polar coordinates around the origin of the kernel):

- disk B_a at distance c from the origin: angular in-measure at radius ρ is
  2·arccos((ρ² + c² − a²) / (2ρc));
- strip [−r, r] × ℝ: full circles for ρ ≤ r, measure 4·arcsin(r/ρ) beyond;
- ball B_R seen from a boundary point: (out − in) measure 4·arcsin(ρ/2R) for
  ρ ≤ 2R and 2π beyond.

Ψ(r) = ∫_{B_{r/4}(7r/4, 0)} K,  Λ(r) = ∫₀^r dρ/Ψ(ρ),  Φ(r) = ∫_{[−r,r]×ℝ} K₁,
c(R) = H^K of B_R at any boundary point.
"""

import math
from collections.abc import Callable
from typing import Any

import numpy as np
import structlog
from numpy.typing import NDArray
from pydantic import ValidationError
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from nlcf.config import get_settings
from nlcf.exceptions import DivergenceError, KernelError, WeakRegimeError
from nlcf.models.kernel import (
    BallTrajectory,
    Kernel,
    build_segments,
    monotonicity_flag,
    positive_radius,
)
from nlcf.schemas.kernel import (
    FractionalKernelSpec,
    KernelSpec,
    TableKernelSpec,
    kernel_spec_adapter,
)
from nlcf.schemas.reports import (
    IntegrabilityReport,
    KernelInfoReport,
    PositivitySample,
    RegimeReport,
)
from nlcf.services.quadrature import (
    ImproperResult,
    adaptive_integrate,
    dyadic_improper,
    integrate_power_singular,
)

logger = structlog.get_logger(__name__)

TWO_PI = 2.0 * math.pi

# log2 grids for memoized tables
PSI_GRID_LOG2 = np.arange(-40.0, 10.25, 0.25)
PHI_GRID_LOG2 = np.arange(-32.0, 0.25, 0.5)
POSITIVITY_RADII_LOG2 = np.arange(-1.0, -11.0, -1.0)
POSITIVITY_DISTANCES = 9
BALL_FLOOR_FACTOR = 1e-3


def _power_table_integral(
    grid: NDArray[np.float64], values: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """
    Per-interval power law f = A·ρ^β through consecutive (grid, values) nodes.

    Returns (A, β, ∫ over each interval); intervals touching a non-positive
    or infinite node integrate to +inf.
    """
    lo, hi = grid[:-1], grid[1:]
    f_lo, f_hi = values[:-1], values[1:]
    good = np.isfinite(f_lo) & np.isfinite(f_hi) & (f_lo > 0) & (f_hi > 0)
    beta = np.zeros_like(lo)
    with np.errstate(divide="ignore", invalid="ignore"):
        beta[good] = np.log(f_hi[good] / f_lo[good]) / np.log(hi[good] / lo[good])
    coeff = np.where(good, f_lo / np.where(good, lo, 1.0) ** beta, np.inf)
    integral = np.full_like(lo, np.inf)
    e = beta + 1.0
    log_case = good & (np.abs(e) < 1e-12)
    pow_case = good & ~log_case
    integral[log_case] = coeff[log_case] * np.log(hi[log_case] / lo[log_case])
    integral[pow_case] = (
        coeff[pow_case] * (hi[pow_case] ** e[pow_case] - lo[pow_case] ** e[pow_case]) / e[pow_case]
    )
    return coeff, beta, integral


class KernelService:
    """
    Сервис ядер: построение, проверка интегрируемости и все скалярные функционалы.
    """

    def __init__(self) -> None:
        self.logger = logger.bind(service="kernels")

    # ============ Construction ============

    def parse_spec(self, data: dict[str, Any] | KernelSpec) -> KernelSpec:
        """Validate a JSON kernel document."""
        if not isinstance(data, dict):
            return data
        try:
            return kernel_spec_adapter.validate_python(data)
        except ValidationError as e:
            raise KernelError("invalid kernel spec", details=e.errors(include_url=False)) from e

    def make_kernel(self, spec: dict[str, Any] | KernelSpec, check: bool = True) -> Kernel:
        """
        Build a kernel and verify its integrability.

        Args:
            spec: kernel JSON document or validated spec
            check: reject non-integrable profiles (False only for diagnostics)

        Raises:
            KernelError: s ∉ (0, 1), negative table values, failed integrability
        """
        spec = self.parse_spec(spec)
        if isinstance(spec, FractionalKernelSpec) and not 0.0 < spec.s < 1.0:
            raise KernelError("fractional order must lie in (0, 1)", s=spec.s)
        if isinstance(spec, TableKernelSpec) and min(spec.k0) < 0.0:
            raise KernelError("kernel profile must be nonnegative", min_value=min(spec.k0))

        segments = build_segments(spec)
        kernel = Kernel(
            spec=spec,
            segments=tuple(segments),
            nonincreasing_flag=monotonicity_flag(segments),
            strictly_positive_radius=positive_radius(segments),
        )

        if check:
            report = self.check_integrability(kernel)
            if not report.passed:
                raise KernelError(
                    "kernel fails the integrability condition",
                    failures=report.failures,
                    near_field=report.near_field,
                    tail=report.tail,
                )
        if kernel.is_zero:
            self.logger.warning("zero_kernel", spec=spec.model_dump())

        self.logger.debug(
            "kernel_created",
            type=kernel.name,
            segments=len(segments),
            nonincreasing=kernel.nonincreasing_flag,
        )
        return kernel

    def check_integrability(self, k: Kernel, tol: float | None = None) -> IntegrabilityReport:
        """
        ∫₀¹ ρ²K₀ dρ and ∫₁^∞ ρK₀ dρ by dyadic panel sums.

        The power-law segment structure decides convergence exactly; the panel
        sums supply the values.
        """
        rel_tol = tol or get_settings().quad_rel_tol_1d
        near_known = "diverged" if math.isinf(k.radial_moment(2.0, 0.0, 1.0)) else "converged"
        tail_known = "diverged" if math.isinf(k.radial_moment(1.0, 1.0, math.inf)) else "converged"

        near = dyadic_improper(
            lambda r: r**2 * k.k0(r), 1.0, "zero", rel_tol=rel_tol,
            known_status=near_known, breakpoints=k.breakpoints,
        )
        tail = dyadic_improper(
            lambda r: r * k.k0(r), 1.0, "infinity", rel_tol=rel_tol,
            known_status=tail_known, breakpoints=k.breakpoints,
        )

        failures = []
        if not near.converged:
            failures.append("near_field diverges")
        if not tail.converged:
            failures.append("tail diverges")
        return IntegrabilityReport(
            near_field=near.value,
            tail=tail.value,
            near_status=near.status,
            tail_status=tail.status,
            passed=not failures,
            failures=failures,
        )

    # ============ Masses ============

    def tail_mass(self, k: Kernel, R: float) -> float:
        """2π ∫_R^∞ ρK₀(ρ) dρ: kernel mass outside B_R."""
        if R <= 0:
            raise KernelError("tail radius must be positive", R=R)
        mass = TWO_PI * k.radial_moment(1.0, R, math.inf)
        if math.isinf(mass):
            raise DivergenceError("kernel tail diverges", where="tail", R=R)
        return mass

    def disk_mass(
        self, k: Kernel, center_distance: float, radius: float, tol: float | None = None
    ) -> float:
        """
        ∫ K over the disk of the given radius centered at distance
        center_distance from the origin (+inf when the disk holds a
        non-integrable singularity).
        """
        rel_tol = tol or get_settings().quad_rel_tol_1d
        c, a = abs(center_distance), radius
        if a <= 0.0:
            return 0.0
        if c <= 1e-15 * a:
            return TWO_PI * k.radial_moment(1.0, 0.0, a)

        inner = 0.0
        if c < a:
            inner = TWO_PI * k.radial_moment(1.0, 0.0, a - c)
            if math.isinf(inner):
                return math.inf
        m, w = max(a, c), min(a, c)
        if m - w <= 1e-15 * m and math.isinf(k.radial_moment(1.0, 0.0, w)):
            return math.inf

        def integrand(phi: NDArray[np.float64]) -> NDArray[np.float64]:
            rho = m - w * np.cos(phi)
            arg = np.clip((rho**2 + c**2 - a**2) / (2.0 * rho * c), -1.0, 1.0)
            return k.k0(rho) * rho * 2.0 * np.arccos(arg) * w * np.sin(phi)

        cuts = tuple(
            math.acos((m - b) / w) for b in k.breakpoints if m - w < b < m + w
        )
        ring = adaptive_integrate(integrand, 0.0, math.pi, rel_tol=rel_tol, breakpoints=cuts)
        return inner + ring.value

    def psi(self, k: Kernel, r: float) -> float:
        """Ψ(r): kernel mass of B_{r/4}(7r/4, 0)."""
        if r <= 0:
            raise KernelError("psi radius must be positive", r=r)
        return self.disk_mass(k, 1.75 * r, 0.25 * r)

    def positivity_infimum(self, k: Kernel, r: float) -> float:
        """
        Sampled inf over p ∈ B_{3√2 r} of the kernel mass of B_{r/4}(3r/4, 0) − p.

        The translated disk center ranges over distances [0, 3r/4 + 3√2 r].
        """
        distances = np.linspace(0.0, (0.75 + 3.0 * math.sqrt(2.0)) * r, POSITIVITY_DISTANCES)
        return min(self.disk_mass(k, float(d), 0.25 * r) for d in distances)

    # ============ Λ and r(t) ============

    def _psi_table(self, k: Kernel) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        def build() -> tuple[NDArray[np.float64], NDArray[np.float64]]:
            grid = 2.0**PSI_GRID_LOG2
            values = np.array([self.psi(k, float(r)) for r in grid])
            self.logger.debug("psi_table_built", kernel=k.name, points=grid.size)
            return grid, values

        return k.cached("psi_table", build)

    def _lambda_table(self, k: Kernel) -> dict[str, NDArray[np.float64]]:
        def build() -> dict[str, NDArray[np.float64]]:
            grid, psi_values = self._psi_table(k)
            with np.errstate(divide="ignore"):
                inv = np.where(psi_values > 0, 1.0 / psi_values, np.inf)
            coeff, beta, pieces = _power_table_integral(grid, inv)
            if np.isfinite(inv[0]) and beta[0] > -1.0:
                head = grid[0] * inv[0] / (beta[0] + 1.0)
            else:
                head = np.inf
            nodes = head + np.concatenate([[0.0], np.cumsum(pieces)])
            return {"grid": grid, "inv": inv, "coeff": coeff, "beta": beta, "lambda": nodes}

        return k.cached("lambda_table", build)

    def inverse_psi(self, k: Kernel, rho: NDArray[np.float64]) -> NDArray[np.float64]:
        """1/Ψ through the memoized table (power law between nodes and beyond the ends)."""
        table = self._lambda_table(k)
        grid, coeff, beta = table["grid"], table["coeff"], table["beta"]
        rho = np.asarray(rho, dtype=float)
        idx = np.clip(np.searchsorted(grid, rho) - 1, 0, grid.size - 2)
        return coeff[idx] * rho ** beta[idx]

    def kersi_integral(self, k: Kernel) -> ImproperResult:
        """∫₀¹ dρ/Ψ(ρ) by dyadic panels with the ratio test."""
        return dyadic_improper(lambda r: self.inverse_psi(k, r), 1.0, "zero")

    def lambda_of(self, k: Kernel, r: float) -> float:
        """
        Λ(r) = ∫₀^r dρ/Ψ(ρ).

        Raises:
            WeakRegimeError: the KERSI integral does not converge
        """
        if r <= 0:
            return 0.0
        status = k.cached("kersi_status", lambda: self.kersi_integral(k).status)
        if status != "converged":
            raise WeakRegimeError("KERSI integral does not converge", where="zero", status=status)
        table = self._lambda_table(k)
        grid, coeff, beta, nodes = table["grid"], table["coeff"], table["beta"], table["lambda"]
        if r <= grid[0]:
            i, base, lo = 0, 0.0, 0.0
        elif r >= grid[-1]:
            i, base, lo = grid.size - 2, nodes[-1], grid[-1]
        else:
            i = int(np.searchsorted(grid, r) - 1)
            base, lo = nodes[i], grid[i]
        e = beta[i] + 1.0
        if not np.isfinite(coeff[i]):
            return math.inf
        if abs(e) < 1e-12:
            return float(base + coeff[i] * math.log(r / lo))
        return float(base + coeff[i] * (r**e - lo**e) / e)

    def invert_lambda(self, k: Kernel, t: float) -> float:
        """r(t): the unique r with Λ(r) = t."""
        if t < 0:
            raise KernelError("time must be nonnegative", t=t)
        if t == 0:
            return 0.0
        table = self._lambda_table(k)
        grid, nodes = table["grid"], table["lambda"]
        if t <= nodes[0]:
            lo, hi = grid[0] * 1e-30, grid[0]
        else:
            reached = np.nonzero(nodes >= t)[0]
            if reached.size:
                j = int(reached[0])
                if not np.isfinite(nodes[j]):
                    # Ψ vanishes past grid[j-1]: Λ jumps to +inf there
                    return float(grid[j - 1])
                widen = j + 1 < nodes.size and np.isfinite(nodes[j + 1])
                lo, hi = 0.5 * grid[j - 1], (2.0 if widen else 1.0) * grid[j]
            else:
                lo, hi = grid[-1], grid[-1] * 2.0
                for _ in range(200):
                    if self.lambda_of(k, hi) >= t:
                        break
                    lo, hi = hi, hi * 2.0
                else:
                    raise DivergenceError("Λ stays below t", where="infinity", t=t)
        root = brentq(
            lambda x: self.lambda_of(k, math.exp(x)) - t,
            math.log(lo), math.log(hi), xtol=1e-14, rtol=1e-13,
        )
        return math.exp(root)

    # ============ Φ and the weak regime ============

    def _dominating(self, k: Kernel, k1: Kernel | None) -> Kernel:
        if k1 is not None:
            if not k1.nonincreasing_flag:
                raise KernelError("supplied K1 is not nonincreasing")
            return k1
        if k.nonincreasing_flag:
            return k
        raise KernelError("no nonincreasing K1: K0 is not monotone and none was supplied")

    def phi(self, k: Kernel, r: float, k1: Kernel | None = None) -> float:
        """
        Φ(r) = ∫_{[−r,r]×ℝ} K₁(|x|) dx, +inf when the strip integral diverges.

        Raises:
            KernelError: no admissible K₁
        """
        dominating = self._dominating(k, k1)
        if r <= 0:
            return 0.0
        near = TWO_PI * dominating.radial_moment(1.0, 0.0, r)
        if math.isinf(near):
            return math.inf
        far = dyadic_improper(
            lambda rho: 4.0 * rho * dominating.k0(rho) * np.arcsin(np.minimum(r / rho, 1.0)),
            r, "infinity", rel_tol=get_settings().quad_rel_tol_1d,
            known_status="converged", breakpoints=dominating.breakpoints,
        )
        return near + far.value

    def hig_integral(self, k: Kernel, k1: Kernel | None = None) -> ImproperResult:
        """∫₀¹ dτ/Φ(τ) by dyadic panels on a memoized log-log table of Φ."""

        def build() -> tuple[NDArray[np.float64], NDArray[np.float64]]:
            grid = 2.0**PHI_GRID_LOG2
            values = np.array([self.phi(k, float(t), k1) for t in grid])
            return grid, values

        grid, values = k.cached(f"phi_table:{id(k1)}", build)
        with np.errstate(divide="ignore"):
            inv = np.where(values > 0, 1.0 / values, np.inf)
        coeff, beta, _ = _power_table_integral(grid, inv)

        def inv_phi(tau: NDArray[np.float64]) -> NDArray[np.float64]:
            idx = np.clip(np.searchsorted(grid, tau) - 1, 0, grid.size - 2)
            return coeff[idx] * tau ** beta[idx]

        return dyadic_improper(inv_phi, 1.0, "zero")

    def classify_regime(self, k: Kernel, k1: Kernel | None = None) -> RegimeReport:
        """
        Strong: KERSI converges and the positivity infimum is > 0 at every
        sampled r. Weak: Φ finite, K₁ available, HIG diverges. Otherwise
        Undetermined. Both integral tests are dyadic ratio heuristics.
        """
        trail: list[str] = []
        kersi = self.kersi_integral(k)
        trail.append(f"KERSI {kersi.status}")
        positivity = [
            PositivitySample(r=float(r), infimum=self.positivity_infimum(k, float(r)))
            for r in 2.0**POSITIVITY_RADII_LOG2
        ]
        positive = all(sample.infimum > 0 for sample in positivity)
        trail.append("positivity holds at sampled radii" if positive else "positivity fails")

        common: dict[str, Any] = {
            "kersi_status": kersi.status,
            "kersi_value": kersi.value if kersi.converged else None,
            "kersi_panel_sums": list(kersi.panel_sums),
            "positivity": positivity,
        }
        if kersi.converged and positive:
            trail.append("verdict Strong")
            self.logger.info("regime_classified", kernel=k.name, verdict="Strong")
            return RegimeReport(verdict="Strong", trail=trail, **common)

        try:
            phi_one = self.phi(k, 1.0, k1)
        except KernelError as e:
            trail.append(e.message)
            trail.append("verdict Undetermined")
            return RegimeReport(verdict="Undetermined", trail=trail, **common)
        if math.isinf(phi_one):
            trail.append("Phi(1) infinite")
            trail.append("verdict Undetermined")
            return RegimeReport(verdict="Undetermined", phi_one=None, trail=trail, **common)

        hig = self.hig_integral(k, k1)
        trail.append(f"HIG {hig.status}")
        verdict = "Weak" if hig.status == "diverged" else "Undetermined"
        trail.append(f"verdict {verdict}")
        self.logger.info("regime_classified", kernel=k.name, verdict=verdict)
        return RegimeReport(
            verdict=verdict,
            phi_one=phi_one,
            hig_status=hig.status,
            hig_panel_sums=list(hig.panel_sums),
            trail=trail,
            **common,
        )

    # ============ Radial integrals and balls ============

    def radial_integral(
        self,
        k: Kernel,
        weight: Callable[[NDArray[np.float64]], NDArray[np.float64]],
        a: float,
        b: float,
        lead_power: float | None = None,
        tol: float | None = None,
    ) -> tuple[float, float]:
        """
        ∫_a^b K₀(ρ)·weight(ρ) dρ for finite b.

        When a = 0 and weight(ρ)/ρ^lead_power is smooth at 0, the first panel
        uses Gauss-Jacobi with the exact endpoint power; elsewhere adaptive
        Gauss-Legendre split at the kernel breakpoints.

        Returns:
            (value, error estimate)
        """
        rel_tol = tol or get_settings().quad_rel_tol_1d
        value, error = 0.0, 0.0
        start = a
        lead = k.leading_exponent("zero")
        if a == 0.0 and lead is not None and lead_power is not None:
            first_break = next((p for p in k.breakpoints if p > 0.0), math.inf)
            end = min(first_break, 0.5 * b)
            beta = lead_power - lead

            def smooth(rho: NDArray[np.float64]) -> NDArray[np.float64]:
                return k.k0(rho) * weight(rho) * rho ** (-beta)

            head = integrate_power_singular(smooth, 0.0, end, beta)
            value += head.value
            error += head.error
            start = end
        res = adaptive_integrate(
            lambda rho: k.k0(rho) * weight(rho), start, b, rel_tol=rel_tol,
            breakpoints=k.breakpoints,
        )
        return value + res.value, error + res.error

    def ball_curvature(self, k: Kernel, R: float, tol: float | None = None) -> float:
        """
        c(R) = H^K of B_R at any boundary point:
        ∫₀^{2R} ρK₀·4·arcsin(ρ/2R) dρ + 2π ∫_{2R}^∞ ρK₀ dρ.
        """
        if R <= 0:
            raise KernelError("ball radius must be positive", R=R)
        rel_tol = tol or get_settings().quad_rel_tol_1d
        lead = k.leading_exponent("zero")
        first_break = next((p for p in k.breakpoints if p > 0.0), math.inf)
        split = min(first_break, R) if lead is not None else 0.0

        head = 0.0
        if split > 0.0:
            head, _ = self.radial_integral(
                k, lambda rho: 4.0 * rho * np.arcsin(rho / (2.0 * R)), 0.0, split,
                lead_power=2.0, tol=rel_tol,
            )

        # ρ = 2R sin φ removes the square-root endpoint at ρ = 2R
        def body(phi: NDArray[np.float64]) -> NDArray[np.float64]:
            rho = 2.0 * R * np.sin(phi)
            return k.k0(rho) * rho * 4.0 * phi * 2.0 * R * np.cos(phi)

        cuts = tuple(math.asin(p / (2.0 * R)) for p in k.breakpoints if split < p < 2.0 * R)
        mid = adaptive_integrate(
            body, math.asin(split / (2.0 * R)), 0.5 * math.pi, rel_tol=rel_tol, breakpoints=cuts
        )
        outer = TWO_PI * k.radial_moment(1.0, 2.0 * R, math.inf)
        return head + mid.value + outer

    def ball_time_function(self, k: Kernel, R: float) -> float:
        """C(R) = ∫₁^R ds/c(s)."""
        value, _ = quad(lambda s: 1.0 / self.ball_curvature(k, s), 1.0, R, epsrel=1e-10, limit=200)
        return float(value)

    def ball_evolution(self, k: Kernel, R0: float, rtol: float = 1e-9) -> BallTrajectory:
        """
        Integrate Ṙ = −c(R) from R0 (RK45) down to the floor R0·1e-3, then
        extrapolate to extinction with the local power law of c.
        """
        if R0 <= 0:
            raise KernelError("initial radius must be positive", R0=R0)
        floor = BALL_FLOOR_FACTOR * R0
        grid = R0 * 2.0 ** np.arange(-12.0, 0.0625, 0.125)
        c_values = np.array([self.ball_curvature(k, float(R)) for R in grid])
        c_of_R = {float(R): float(c) for R, c in zip(grid, c_values)}
        if np.any(c_values <= 0):
            self.logger.warning("ball_does_not_shrink", R0=R0)
            return BallTrajectory(((0.0, R0),), math.inf, c_of_R, floor)
        log_grid, log_c = np.log(grid), np.log(c_values)

        def rhs(_t: float, y: NDArray[np.float64]) -> list[float]:
            radius = max(float(y[0]), grid[0])
            return [-math.exp(float(np.interp(math.log(radius), log_grid, log_c)))]

        def reached_floor(_t: float, y: NDArray[np.float64]) -> float:
            return float(y[0]) - floor

        reached_floor.terminal = True  # type: ignore[attr-defined]
        reached_floor.direction = -1  # type: ignore[attr-defined]

        t_max = 4.0 * R0 / c_values[-1] + 1.0
        sol = solve_ivp(
            rhs, (0.0, t_max), [R0], method="RK45", events=reached_floor,
            rtol=rtol, atol=floor * 1e-6, dense_output=True,
        )
        if not sol.t_events[0].size:
            raise DivergenceError("ball did not reach the floor radius", where="ode", R0=R0)
        t_floor = float(sol.t_events[0][0])

        c_floor = self.ball_curvature(k, floor)
        power = math.log(c_floor / self.ball_curvature(k, 2.0 * floor)) / math.log(2.0)
        extinction = t_floor + floor / ((1.0 + power) * c_floor)

        times = np.linspace(0.0, t_floor, 257)
        radii = sol.sol(times)[0]
        samples = tuple((float(t), float(r)) for t, r in zip(times, radii))
        self.logger.info("ball_extinction", R0=R0, t=extinction, local_power=power)
        return BallTrajectory(samples + ((extinction, 0.0),), extinction, c_of_R, floor)

    def ball_radius_at(self, trajectory: BallTrajectory, t: float) -> float:
        """R(t) by interpolation; 0 after extinction."""
        if t >= trajectory.extinction_time:
            return 0.0
        return float(np.interp(t, trajectory.times, trajectory.values))

    def ball_extinction_closed_form(self, k: Kernel, R: float) -> float:
        """T_R = R^{1+s} / (c(1)(1+s)) for an unmodified fractional kernel."""
        s = k.fractional_order
        if s is None:
            raise KernelError("closed-form extinction time needs a fractional kernel")
        return R ** (1.0 + s) / (self.ball_curvature(k, 1.0) * (1.0 + s))

    # ============ Reports ============

    def kernel_info(self, k: Kernel, k1: Kernel | None = None) -> KernelInfoReport:
        """Integrability, regime trail and the headline constants of a kernel."""
        c_one = self.ball_curvature(k, 1.0)
        extinction = None
        if c_one > 0:
            extinction = self.ball_evolution(k, 1.0).extinction_time
        return KernelInfoReport(
            kernel=k.spec.model_dump(),
            nonincreasing=k.nonincreasing_flag,
            strictly_positive_radius=(
                None if math.isinf(k.strictly_positive_radius) else k.strictly_positive_radius
            ),
            integrability=self.check_integrability(k),
            regime=self.classify_regime(k, k1),
            psi_one=self.psi(k, 1.0),
            ball_curvature_one=c_one,
            extinction_time_one=extinction,
        )


# Глобальный экземпляр
kernel_service = KernelService()
