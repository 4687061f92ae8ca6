"""
Discrete K-curvature of grid superlevel sets.

For a band node x with level c = u(x) the set {u ≥ c} is represented by
cell volume fractions

    φ_c(y) = clip(1/2 + (u(y) − c) / (h·(|∂₁u(y)| + |∂₂u(y)|)), 0, 1)

and H(x) = Σ_{y≠x} w(y − x)·(1 − 2φ_c(y)) + T(x), where w(o) is the mass of
K over the cell at offset o and T is the contribution of everything outside
the window (from the asymptotic model of the set).

Two evaluators share these ingredients:
  - node_curvature: the literal per-node sum (oracle, small grids);
  - band_curvature: far field by FFT convolution at the integer levels
    η_j = j·h, linearly interpolated in u(x), plus an exact correction on a
    (2m+1)² stencil around every node.
"""

import math

import numpy as np
import structlog
from numpy.typing import NDArray
from scipy import fft

from nlcf.cache.cache_keys import CacheKeys
from nlcf.cache.table_cache import table_cache
from nlcf.config import get_settings
from nlcf.exceptions import ConfigurationError, NumericalAbort
from nlcf.models.flow import GridField
from nlcf.models.kernel import Kernel
from nlcf.services.quadrature import adaptive_integrate, gauss_legendre

logger = structlog.get_logger(__name__)

NEAR_STENCIL = 8
DIRECT_MAX_NODES = 96 * 96
_RING_SUB, _RING_ORDER = 2, 16
_MID_REACH, _MID_ORDER = 16, 8
_FAR_ORDER = 4


def _cell_masses(k: Kernel, centers: NDArray[np.float64], side: float, order: int, sub: int = 1) -> NDArray[np.float64]:
    """∫ K over squares of the given side centred at centers (Gauss-Legendre, sub² subcells)."""
    x, w = gauss_legendre(order)
    piece = side / sub
    offsets = (np.arange(sub) - (sub - 1) / 2.0) * piece
    nodes = (offsets[:, None] + 0.5 * piece * x[None, :]).ravel()
    weights = np.tile(0.5 * piece * w, sub)
    qx, qy = np.meshgrid(nodes, nodes, indexing="ij")
    qw = np.outer(weights, weights).ravel()
    out = np.empty(len(centers))
    # chunks keep the temporary below ~8M doubles
    step = max(1, 8_000_000 // qw.size)
    for start in range(0, len(centers), step):
        c = centers[start : start + step]
        rho = np.hypot(c[:, 0:1] + qx.ravel()[None, :], c[:, 1:2] + qy.ravel()[None, :])
        out[start : start + step] = k.k0(rho) @ qw
    return out


def build_weight_quadrant(k: Kernel, h: float, n: int) -> NDArray[np.float64]:
    """w(a·h, b·h) for 0 ≤ a, b < n; w(0, 0) = 0."""
    a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    reach = np.maximum(a, b)
    table = np.zeros((n, n))
    for select, order, sub in (
        ((reach >= 1) & (reach <= 1), _RING_ORDER, _RING_SUB),
        ((reach > 1) & (reach <= _MID_REACH), _MID_ORDER, 1),
        (reach > _MID_REACH, _FAR_ORDER, 1),
    ):
        if not np.any(select):
            continue
        centers = h * np.column_stack([a[select], b[select]]).astype(float)
        table[select] = _cell_masses(k, centers, h, order, sub)
    return table


def square_tail(k: Kernel, a: float) -> float:
    """
    ∫ K outside the square [−a, a]².

    The ring a < ρ < a√2 leaves the square on 8·arccos(a/ρ) radians;
    ρ = a·sec θ makes that integrand smooth.
    """
    outer = 2.0 * math.pi * k.radial_moment(1.0, a * math.sqrt(2.0), math.inf)

    def ring(theta: NDArray[np.float64]) -> NDArray[np.float64]:
        sec = 1.0 / np.cos(theta)
        rho = a * sec
        return rho * k.k0(rho) * 8.0 * theta * a * sec * np.tan(theta)

    cuts = tuple(math.acos(a / b) for b in k.breakpoints if a < b < a * math.sqrt(2.0))
    res = adaptive_integrate(ring, 0.0, 0.25 * math.pi, rel_tol=1e-12, abs_tol=1e-300, breakpoints=cuts)
    return res.value + outer


class GridOperator:
    """Cell weights and the discrete curvature operator."""

    def __init__(self) -> None:
        self.logger = logger.bind(service="grid_operator")

    # ============ Tables ============

    def weight_table(self, k: Kernel, h: float, n: int) -> NDArray[np.float64]:
        """Full (2n−1)² table, offset o stored at index o + (n − 1)."""

        def build() -> NDArray[np.float64]:
            quadrant = build_weight_quadrant(k, h, n)
            full = np.concatenate([quadrant[:0:-1], quadrant], axis=0)
            full = np.concatenate([full[:, :0:-1], full], axis=1)
            self.logger.info("weight_table_built", kernel=k.name, h=h, n=n, total=float(full.sum()))
            return full

        return table_cache.get_or_build(CacheKeys.cell_weights(k.spec, h, n), build)

    def weight_spectrum(self, k: Kernel, h: float, n: int) -> tuple[NDArray[np.complex128], int]:
        length = fft.next_fast_len(3 * n - 2, real=True)

        def build() -> NDArray[np.complex128]:
            return fft.rfft2(self.weight_table(k, h, n), s=(length, length), workers=get_settings().max_threads)

        key = CacheKeys.weight_spectrum(k.spec, h, n, length)
        return table_cache.get_or_build(key, build), length

    def outside_mass(self, k: Kernel, h: float, n: int) -> NDArray[np.float64]:
        """Mass of K(· − x) outside the grid's cells, for every node x."""

        def build() -> NDArray[np.float64]:
            full = self.weight_table(k, h, n)
            prefix = np.zeros((2 * n, 2 * n))
            prefix[1:, 1:] = full.cumsum(axis=0).cumsum(axis=1)
            lo = n - 1 - np.arange(n)
            hi = lo + n
            inside = (
                prefix[hi[:, None], hi[None, :]]
                - prefix[lo[:, None], hi[None, :]]
                - prefix[hi[:, None], lo[None, :]]
                + prefix[lo[:, None], lo[None, :]]
            )
            tail = square_tail(k, 0.5 * h) - inside
            return np.maximum(tail, 0.0)

        key = CacheKeys.outside_mass(k.spec, h, n)
        return table_cache.get_or_build(key, build)

    def tail_field(self, field: GridField, k: Kernel) -> NDArray[np.float64]:
        """
        Contribution of the out-of-window region.

        Vanishing sets: all of it is outside E (+); complements of bounded
        sets: all inside (−); cones are symmetric under x ↦ −x about their
        centre, so the correction is zero to second order there.
        """
        if field.label == "vanishing":
            return self.outside_mass(k, field.h, field.n)
        if field.label == "constant":
            return -self.outside_mass(k, field.h, field.n)
        return np.zeros_like(field.values)

    # ============ Fractions ============

    @staticmethod
    def fraction_scale(field: GridField) -> NDArray[np.float64]:
        gx, gy = np.gradient(field.values, field.h)
        return np.maximum(field.h * (np.abs(gx) + np.abs(gy)), 1e-12)

    @staticmethod
    def signed_fraction(u: NDArray[np.float64], level: NDArray[np.float64] | float, scale: NDArray[np.float64]) -> NDArray[np.float64]:
        """1 − 2φ: +1 outside the superlevel set, −1 inside."""
        return 1.0 - 2.0 * np.clip(0.5 + (u - level) / scale, 0.0, 1.0)

    # ============ Evaluators ============

    def node_curvature(self, field: GridField, node: tuple[int, int], k: Kernel) -> float:
        """Literal weighted sum for the superlevel set through one node."""
        i, j = node
        n = field.n
        if i <= 0 or j <= 0 or i >= n - 1 or j >= n - 1:
            raise NumericalAbort("node on the window edge", node=node)
        full = self.weight_table(k, field.h, n)
        scale = self.fraction_scale(field)
        f = self.signed_fraction(field.values, field.values[i, j], scale)
        w = full[n - 1 - i : 2 * n - 1 - i, n - 1 - j : 2 * n - 1 - j]
        tail = self.tail_field(field, k)[i, j]
        return float(np.sum(w * f) + tail)

    def band_curvature_direct(self, field: GridField, band: NDArray[np.bool_], k: Kernel) -> NDArray[np.float64]:
        """node_curvature on every band node; grids up to 96² only."""
        if field.n * field.n > DIRECT_MAX_NODES:
            raise ConfigurationError("direct scheme is limited to 96² grids", n=field.n)
        n = field.n
        full = self.weight_table(k, field.h, n)
        scale = self.fraction_scale(field)
        tail = self.tail_field(field, k)
        out = np.zeros_like(field.values)
        for i, j in zip(*np.nonzero(band), strict=True):
            f = self.signed_fraction(field.values, field.values[i, j], scale)
            w = full[n - 1 - i : 2 * n - 1 - i, n - 1 - j : 2 * n - 1 - j]
            out[i, j] = np.sum(w * f) + tail[i, j]
        return out

    def band_curvature(
        self, field: GridField, band: NDArray[np.bool_], k: Kernel, stencil: int = NEAR_STENCIL
    ) -> NDArray[np.float64]:
        """FFT far field on level slices plus the exact near stencil; zero off the band."""
        out = np.zeros_like(field.values)
        if not np.any(band):
            return out
        u, h, n = field.values, field.h, field.n
        scale = self.fraction_scale(field)
        band_levels = u[band]
        j_lo = math.floor(float(band_levels.min()) / h)
        j_hi = math.floor(float(band_levels.max()) / h) + 1
        levels = h * np.arange(j_lo, j_hi + 1)

        slices = self.signed_fraction(u[None, :, :], levels[:, None, None], scale[None, :, :])
        spectrum, length = self.weight_spectrum(k, h, n)
        workers = get_settings().max_threads
        conv = fft.irfft2(
            fft.rfft2(slices, s=(length, length), axes=(-2, -1), workers=workers) * spectrum[None, :, :],
            s=(length, length),
            axes=(-2, -1),
            workers=workers,
        )[:, n - 1 : 2 * n - 1, n - 1 : 2 * n - 1]

        bi, bj = np.nonzero(band)
        ux = u[bi, bj]
        pos = np.clip(ux / h - j_lo, 0.0, len(levels) - 1.0 - 1e-12)
        lower = np.floor(pos).astype(int)
        theta = pos - lower
        upper = np.minimum(lower + 1, len(levels) - 1)
        value = (1.0 - theta) * conv[lower, bi, bj] + theta * conv[upper, bi, bj]

        full = self.weight_table(k, h, n)
        for a in range(-stencil, stencil + 1):
            for b in range(-stencil, stencil + 1):
                if a == 0 and b == 0:
                    continue
                yi, yj = bi + a, bj + b
                ok = (yi >= 0) & (yi < n) & (yj >= 0) & (yj < n)
                if not np.any(ok):
                    continue
                yi_, yj_ = yi[ok], yj[ok]
                exact = self.signed_fraction(u[yi_, yj_], ux[ok], scale[yi_, yj_])
                approx = (1.0 - theta[ok]) * slices[lower[ok], yi_, yj_] + theta[ok] * slices[upper[ok], yi_, yj_]
                value[ok] += full[n - 1 + a, n - 1 + b] * (exact - approx)

        out[bi, bj] = value + self.tail_field(field, k)[bi, bj]
        return out


grid_operator = GridOperator()
