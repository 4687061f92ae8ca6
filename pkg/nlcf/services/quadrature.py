"""
Quadrature backbone.

- Fixed-order Gauss-Legendre panels with a two-level (panel vs halves) error
  estimate, refined generation by generation so the integrand is always
  called on a whole batch of nodes.
- Dyadic panel sums towards a singular endpoint (0 or ∞) with a ratio test
  for divergence and geometric extrapolation of the remainder.
- Gauss-Jacobi rules for endpoint power singularities.
"""

from collections.abc import Callable
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np
import structlog
from numpy.typing import NDArray
from scipy.special import roots_jacobi

logger = structlog.get_logger(__name__)

Integrand = Callable[[NDArray[np.float64]], NDArray[np.float64]]

# Ratio-test thresholds for dyadic panel sums
DIVERGENCE_RATIO = 0.9
RATIO_STREAK = 5
GEOMETRIC_RATIO_AGREEMENT = 1e-6
MAX_DYADIC_PANELS = 64


@dataclass(frozen=True)
class QuadResult:
    """Value with an error estimate."""

    value: float
    error: float
    evaluations: int
    converged: bool = True


@dataclass(frozen=True)
class ImproperResult:
    """Outcome of a dyadic improper integral."""

    status: Literal["converged", "diverged", "undetermined"]
    value: float
    error: float
    panel_sums: tuple[float, ...] = field(default_factory=tuple)
    ratios: tuple[float, ...] = field(default_factory=tuple)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


@lru_cache(maxsize=32)
def gauss_legendre(n: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Nodes and weights on [-1, 1]."""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@lru_cache(maxsize=64)
def gauss_jacobi(
    n: int, alpha: float, beta: float
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Nodes and weights on [-1, 1] for the weight (1-x)^alpha (1+x)^beta."""
    nodes, weights = roots_jacobi(n, alpha, beta)
    nodes = np.asarray(nodes, dtype=float)
    weights = np.asarray(weights, dtype=float)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _panel_nodes(
    a: NDArray[np.float64], b: NDArray[np.float64], n: int
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Mapped nodes (panels × n) and weights for a batch of panels."""
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    return mid[:, None] + half[:, None] * x[None, :], half[:, None] * w[None, :]


def integrate_fixed(f: Integrand, a: float, b: float, n: int = 16) -> float:
    """Single Gauss-Legendre panel."""
    nodes, weights = _panel_nodes(np.array([a]), np.array([b]), n)
    return float(np.sum(weights * f(nodes.ravel()).reshape(nodes.shape)))


def adaptive_integrate(
    f: Integrand,
    a: float,
    b: float,
    rel_tol: float = 1e-6,
    abs_tol: float = 1e-14,
    order: int = 10,
    max_depth: int = 40,
    breakpoints: tuple[float, ...] = (),
    max_active: int = 4096,
) -> QuadResult:
    """
    Adaptive Gauss-Legendre quadrature of a vectorized integrand.

    Each generation evaluates every active panel with `order` nodes and with
    `order` nodes on each half; panels whose two estimates agree within their
    share of the tolerance are accepted.

    Args:
        f: vectorized integrand
        a, b: finite limits, a <= b
        rel_tol: relative tolerance on the total
        abs_tol: absolute tolerance floor
        order: nodes per panel
        max_depth: bisection generations before giving up
        breakpoints: interior points where f is known to be non-smooth
        max_active: cap on simultaneously refined panels

    Returns:
        QuadResult; converged=False when max_depth was hit
    """
    if b < a:
        res = adaptive_integrate(f, b, a, rel_tol, abs_tol, order, max_depth, breakpoints, max_active)
        return QuadResult(-res.value, res.error, res.evaluations, res.converged)
    if b == a:
        return QuadResult(0.0, 0.0, 0)

    cuts = sorted({a, b, *[p for p in breakpoints if a < p < b]})
    lo = np.array(cuts[:-1], dtype=float)
    hi = np.array(cuts[1:], dtype=float)
    total_length = b - a

    accepted_value = 0.0
    accepted_error = 0.0
    evaluations = 0
    converged = True
    scale = 0.0

    for depth in range(max_depth + 1):
        mid = 0.5 * (lo + hi)
        all_lo = np.concatenate([lo, lo, mid])
        all_hi = np.concatenate([hi, mid, hi])
        nodes, weights = _panel_nodes(all_lo, all_hi, order)
        values = f(nodes.ravel()).reshape(nodes.shape)
        evaluations += values.size
        if not np.all(np.isfinite(values)):
            logger.debug("quadrature_nonfinite", a=a, b=b)
            return QuadResult(float("inf"), float("inf"), evaluations, converged=False)
        sums = np.sum(weights * values, axis=1)
        n_active = lo.size
        whole = sums[:n_active]
        halves = sums[n_active : 2 * n_active] + sums[2 * n_active :]
        errors = np.abs(whole - halves)

        scale = max(scale, abs(accepted_value + float(np.sum(halves))))
        budget = max(abs_tol, rel_tol * scale) * (hi - lo) / total_length
        ok = errors <= budget
        if depth == max_depth or 2 * int(np.count_nonzero(~ok)) > max_active:
            ok[:] = True
            if np.any(errors > budget):
                converged = False

        accepted_value += float(np.sum(halves[ok]))
        accepted_error += float(np.sum(errors[ok]))
        if np.all(ok):
            break
        lo = np.concatenate([lo[~ok], mid[~ok]])
        hi = np.concatenate([mid[~ok], hi[~ok]])
        order_idx = np.argsort(lo, kind="stable")
        lo, hi = lo[order_idx], hi[order_idx]

    if not converged:
        logger.warning("quadrature_not_converged", a=a, b=b, error=accepted_error)
    return QuadResult(accepted_value, accepted_error, evaluations, converged)


def dyadic_improper(
    f: Integrand,
    anchor: float,
    towards: Literal["zero", "infinity"],
    rel_tol: float = 1e-6,
    abs_tol: float = 1e-15,
    max_panels: int = MAX_DYADIC_PANELS,
    known_status: Literal["converged", "diverged"] | None = None,
    breakpoints: tuple[float, ...] = (),
) -> ImproperResult:
    """
    ∫_0^anchor f or ∫_anchor^∞ f as a sum of dyadic panels.

    Panel k covers [anchor·2^-(k+1), anchor·2^-k] (towards zero) or
    [anchor·2^k, anchor·2^(k+1)] (towards infinity).

    Divergence: RATIO_STREAK consecutive ratios p_(k+1)/p_k ≥ DIVERGENCE_RATIO.
    Convergence: the remainder estimate p_k q/(1-q) drops below tolerance, or
    the ratios have settled to a constant q < 1 (exact geometric tail, as for
    every power-law end of the profile), in which case the remainder is added.
    known_status overrides the heuristic decision when the caller has an
    exact criterion (power-law ends of a kernel).
    """
    sums: list[float] = []
    ratios: list[float] = []
    total = 0.0
    error = 0.0
    high_streak = 0
    zero_streak = 0

    for k in range(max_panels):
        if towards == "zero":
            lo, hi = anchor * 2.0 ** -(k + 1), anchor * 2.0**-k
        else:
            lo, hi = anchor * 2.0**k, anchor * 2.0 ** (k + 1)
        panel = adaptive_integrate(
            f, lo, hi, rel_tol=rel_tol * 1e-2, abs_tol=abs_tol, breakpoints=breakpoints
        )
        p = abs(panel.value)
        if not np.isfinite(p):
            return ImproperResult("diverged", float("inf"), float("inf"), tuple(sums), tuple(ratios))
        sums.append(panel.value)
        total += panel.value
        error += panel.error

        if p == 0.0:
            zero_streak += 1
            if zero_streak >= RATIO_STREAK and known_status != "diverged":
                return ImproperResult("converged", total, error, tuple(sums), tuple(ratios))
            continue
        zero_streak = 0
        if len(sums) < 2 or sums[-2] == 0.0:
            continue

        q = p / abs(sums[-2])
        ratios.append(q)
        high_streak = high_streak + 1 if q >= DIVERGENCE_RATIO else 0
        if known_status != "converged" and (
            high_streak >= RATIO_STREAK or (known_status == "diverged" and q >= 1.0)
        ):
            return ImproperResult("diverged", float("inf"), float("inf"), tuple(sums), tuple(ratios))

        if q < 1.0 and known_status != "diverged":
            remainder = p * q / (1.0 - q)
            settled = len(ratios) >= RATIO_STREAK and all(
                abs(r - q) <= GEOMETRIC_RATIO_AGREEMENT * max(q, 1e-300)
                for r in ratios[-RATIO_STREAK:]
            )
            small = remainder <= max(abs_tol, rel_tol * abs(total)) and len(ratios) >= 3
            if settled or small:
                sign = 1.0 if sums[-1] >= 0 else -1.0
                total += sign * remainder
                error += remainder * GEOMETRIC_RATIO_AGREEMENT if settled else remainder
                return ImproperResult("converged", total, error, tuple(sums), tuple(ratios))

    if known_status == "converged":
        q = ratios[-1] if ratios else 0.0
        remainder = abs(sums[-1]) * q / (1.0 - q) if 0 < q < 1 else 0.0
        return ImproperResult("converged", total + remainder, error + remainder, tuple(sums), tuple(ratios))
    if known_status == "diverged":
        return ImproperResult("diverged", float("inf"), float("inf"), tuple(sums), tuple(ratios))
    return ImproperResult("undetermined", total, float("inf"), tuple(sums), tuple(ratios))


def geometric_panels(a: float, b: float, ratio: float = 2.0) -> NDArray[np.float64]:
    """Breakpoints a, a·ratio, a·ratio², ..., b (a > 0)."""
    if a <= 0 or b <= a:
        return np.array([a, b], dtype=float)
    n = max(1, int(np.ceil(np.log(b / a) / np.log(ratio))))
    return np.geomspace(a, b, n + 1)


def integrate_power_singular(
    g: Integrand,
    a: float,
    b: float,
    beta: float,
    order: int = 24,
) -> QuadResult:
    """
    ∫_a^b (x - a)^beta g(x) dx for smooth g and beta > -1 (Gauss-Jacobi).

    The error estimate compares `order` and `2·order` nodes.
    """
    if b <= a:
        return QuadResult(0.0, 0.0, 0)
    if beta <= -1.0:
        return QuadResult(float("inf"), float("inf"), 0, converged=False)
    half = 0.5 * (b - a)

    def rule(n: int) -> float:
        t, w = gauss_jacobi(n, 0.0, beta)
        x = a + half * (t + 1.0)
        return float(half ** (beta + 1.0) * np.sum(w * g(x)))

    coarse = rule(order)
    fine = rule(2 * order)
    return QuadResult(fine, abs(fine - coarse), 3 * order)
