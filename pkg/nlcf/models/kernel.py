"""
Radial interaction kernels K(x) = K₀(|x|) in the plane.

Every profile is stored as a sum of power-law segments c·ρ^-p on (start, end].
Fractional, piecewise-power and tabulated profiles (log-log or linear
interpolation) all have this form, so radial moments and integrability are
decided in closed form.
"""

import math
import threading
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from nlcf.schemas.kernel import (
    FractionalKernelSpec,
    KernelSpec,
    PiecewisePowerKernelSpec,
    TableKernelSpec,
    ZeroKernelSpec,
)

# Radii used to sample K₀ for the monotonicity and positivity flags
_FLAG_SAMPLES = np.geomspace(1e-6, 1e6, 1201)


@dataclass(frozen=True)
class PowerSegment:
    """coeff·ρ^-exponent on (start, end]."""

    start: float
    end: float
    coeff: float
    exponent: float

    def value(self, rho: NDArray[np.float64]) -> NDArray[np.float64]:
        out = np.zeros_like(rho)
        mask = (rho > self.start) & (rho <= self.end)
        if self.coeff != 0.0 and np.any(mask):
            out[mask] = self.coeff * rho[mask] ** (-self.exponent)
        return out

    def moment(self, m: float, a: float, b: float) -> float:
        """∫ ρ^m·coeff·ρ^-exponent over (a, b) ∩ (start, end]."""
        lo, hi = max(a, self.start), min(b, self.end)
        if hi <= lo or self.coeff == 0.0:
            return 0.0
        e = m - self.exponent + 1.0
        if abs(e) < 1e-14:
            if lo == 0.0 or math.isinf(hi):
                return math.copysign(math.inf, self.coeff)
            return self.coeff * math.log(hi / lo)
        if e > 0:
            if math.isinf(hi):
                return math.copysign(math.inf, self.coeff)
            return self.coeff * (hi**e - lo**e) / e
        if lo == 0.0:
            return math.copysign(math.inf, self.coeff)
        upper = 0.0 if math.isinf(hi) else hi**e
        return self.coeff * (upper - lo**e) / e

    def clipped(self, lo: float, hi: float) -> "PowerSegment | None":
        start, end = max(self.start, lo), min(self.end, hi)
        if end <= start:
            return None
        return PowerSegment(start, end, self.coeff, self.exponent)


@dataclass(frozen=True, eq=False)
class Kernel:
    """
    Immutable kernel. Lazily built tables (Ψ grid, Λ table, ball curvature
    table) live in `_tables` and are written once under `_lock`.
    """

    spec: Any
    segments: tuple[PowerSegment, ...]
    nonincreasing_flag: bool
    strictly_positive_radius: float
    _tables: dict[str, Any] = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def name(self) -> str:
        return str(self.spec.type)

    @property
    def is_zero(self) -> bool:
        return all(seg.coeff == 0.0 for seg in self.segments)

    @property
    def fractional_order(self) -> float | None:
        """s for an unmodified fractional kernel, None otherwise."""
        if isinstance(self.spec, FractionalKernelSpec) and self.spec.cutoff == 0.0 and self.spec.support_radius is None:
            return float(self.spec.s)
        return None

    @property
    def breakpoints(self) -> tuple[float, ...]:
        points = {seg.start for seg in self.segments} | {seg.end for seg in self.segments}
        return tuple(sorted(p for p in points if 0.0 < p < math.inf))

    def k0(self, rho: ArrayLike) -> NDArray[np.float64]:
        """Profile value K₀(ρ), vectorized."""
        r = np.asarray(rho, dtype=float)
        flat = r.ravel()
        out = np.zeros_like(flat)
        for seg in self.segments:
            out += seg.value(flat)
        return out.reshape(r.shape)

    def radial_moment(self, m: float, a: float, b: float) -> float:
        """∫_a^b ρ^m K₀(ρ) dρ, +inf when divergent."""
        if b <= a:
            return 0.0
        return float(sum(seg.moment(m, a, b) for seg in self.segments))

    def leading_exponent(self, at: str = "zero") -> float | None:
        """Largest exponent active at ρ→0 (or smallest at ρ→∞); None when K₀ vanishes there."""
        if at == "zero":
            active = [s.exponent for s in self.segments if s.start == 0.0 and s.coeff != 0.0]
            return max(active) if active else None
        active = [s.exponent for s in self.segments if math.isinf(s.end) and s.coeff != 0.0]
        return min(active) if active else None

    def cached(self, key: str, build: Any) -> Any:
        """Build-then-freeze memo shared by every thread."""
        table = self._tables.get(key)
        if table is not None:
            return table
        with self._lock:
            table = self._tables.get(key)
            if table is None:
                table = build()
                self._tables[key] = table
        return table


def _loglog_segments(spec: TableKernelSpec) -> list[PowerSegment]:
    rho = spec.rho
    k0 = spec.k0
    segments: list[PowerSegment] = []

    def pair_power(i: int) -> tuple[float, float]:
        if k0[i] <= 0.0 or k0[i + 1] <= 0.0:
            return 0.0, 0.0
        p = -math.log(k0[i + 1] / k0[i]) / math.log(rho[i + 1] / rho[i])
        return k0[i] * rho[i] ** p, p

    for i in range(len(rho) - 1):
        coeff, p = pair_power(i)
        segments.append(PowerSegment(rho[i], rho[i + 1], coeff, p))
    coeff, p = pair_power(0)
    segments.insert(0, PowerSegment(0.0, rho[0], coeff, p))
    coeff, p = pair_power(len(rho) - 2)
    segments.append(PowerSegment(rho[-1], math.inf, coeff, p))
    return segments


def _linear_segments(spec: TableKernelSpec) -> list[PowerSegment]:
    rho = spec.rho
    k0 = spec.k0
    segments = [PowerSegment(0.0, rho[0], k0[0], 0.0)]
    for i in range(len(rho) - 1):
        slope = (k0[i + 1] - k0[i]) / (rho[i + 1] - rho[i])
        segments.append(PowerSegment(rho[i], rho[i + 1], k0[i] - slope * rho[i], 0.0))
        if slope != 0.0:
            # c·ρ^-(-1) = c·ρ
            segments.append(PowerSegment(rho[i], rho[i + 1], slope, -1.0))
    return segments


def build_segments(spec: KernelSpec) -> list[PowerSegment]:
    """Power-law decomposition of a validated spec, cutoff and support applied."""
    if isinstance(spec, FractionalKernelSpec):
        segments = [PowerSegment(0.0, math.inf, 1.0, 2.0 + spec.s)]
    elif isinstance(spec, PiecewisePowerKernelSpec):
        segments = [
            PowerSegment(0.0, 1.0, 1.0, spec.alpha),
            PowerSegment(1.0, math.inf, 1.0, spec.tail_exponent),
        ]
    elif isinstance(spec, TableKernelSpec):
        segments = _loglog_segments(spec) if spec.interp == "loglog" else _linear_segments(spec)
    elif isinstance(spec, ZeroKernelSpec):
        segments = []
    else:  # pragma: no cover
        raise TypeError(f"unknown kernel spec {type(spec).__name__}")

    hi = spec.support_radius if spec.support_radius is not None else math.inf
    clipped = [seg.clipped(spec.cutoff, hi) for seg in segments]
    return [seg for seg in clipped if seg is not None and seg.coeff != 0.0]


def monotonicity_flag(segments: list[PowerSegment]) -> bool:
    """K₀ nonincreasing on the sample grid (plus both sides of every breakpoint)."""
    points = {seg.start for seg in segments} | {seg.end for seg in segments}
    extra = [p * f for p in points if 0.0 < p < math.inf for f in (1 - 1e-9, 1 + 1e-9)]
    rho = np.unique(np.concatenate([_FLAG_SAMPLES, np.asarray(extra, dtype=float)]))
    values = np.zeros_like(rho)
    for seg in segments:
        values += seg.value(rho)
    return bool(np.all(np.diff(values) <= 1e-12 * np.maximum(values[:-1], 1e-300)))


def positive_radius(segments: list[PowerSegment]) -> float:
    """Largest R with K₀ > 0 on (0, R], resolved on the sample grid."""
    points = {seg.start for seg in segments} | {seg.end for seg in segments}
    inner = [p for p in points if 0.0 < p < math.inf]
    rho = np.unique(np.concatenate([_FLAG_SAMPLES, np.asarray(inner, dtype=float)]))
    values = np.zeros_like(rho)
    for seg in segments:
        values += seg.value(rho)
    nonpositive = np.nonzero(values <= 0.0)[0]
    if nonpositive.size == 0:
        return math.inf
    first = int(nonpositive[0])
    return 0.0 if first == 0 else float(rho[first - 1])


@dataclass(frozen=True)
class BallTrajectory:
    """R(t) for Ṙ = −c(R), with the extrapolated extinction time."""

    radii: tuple[tuple[float, float], ...]
    extinction_time: float
    c_of_R: dict[float, float]
    floor_radius: float

    @property
    def times(self) -> NDArray[np.float64]:
        return np.array([t for t, _ in self.radii])

    @property
    def values(self) -> NDArray[np.float64]:
        return np.array([r for _, r in self.radii])
