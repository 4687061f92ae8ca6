"""
Brute-force oracle for the ball curvature c(1) of the fractional kernel.
Используется для проверки одномерной формулы c(R) в тестах.

Midpoint rule over a dense square window around the boundary point (1, 0)
of B₁, cells symmetric about the point so the principal value cancels
pairwise, an exact tail outside the window and Richardson extrapolation
in the cell size. Prints a JSON object; nothing from nlcf.services is used
for the value itself.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
import structlog
from scipy.integrate import quad

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from nlcf.schemas.kernel import FractionalKernelSpec  # noqa: E402
from nlcf.services.kernels import kernel_service  # noqa: E402

logger = structlog.get_logger()

HALF_WINDOW = 2.5
ROW_BLOCK = 256


def window_sum(s: float, cells: int) -> float:
    """Σ (χ_{Bᶜ} − χ_B)(x + z)·|z|^{-2-s}·h² over the cells of [−L, L]² around x = (1, 0)."""
    h = HALF_WINDOW / cells
    centers = (np.arange(-cells, cells) + 0.5) * h
    total = 0.0
    for start in range(0, centers.size, ROW_BLOCK):
        z1 = centers[start : start + ROW_BLOCK, None]
        z2 = centers[None, :]
        inside = (1.0 + z1) ** 2 + z2**2 < 1.0
        weight = (z1**2 + z2**2) ** (-(2.0 + s) / 2.0)
        total += float(np.sum(np.where(inside, -weight, weight)))
    return total * h * h


def outside_window(s: float) -> float:
    """∫ over the complement of [−L, L]²: the whole region lies outside B₁."""

    def radial(theta: float) -> float:
        reach = HALF_WINDOW / max(abs(math.cos(theta)), abs(math.sin(theta)))
        return reach ** (-s) / s

    value, _ = quad(radial, 0.0, 2.0 * math.pi, points=[k * math.pi / 4 for k in range(1, 8)], limit=200)
    return value


def oracle(s: float, cells: int) -> dict[str, float]:
    """Richardson over cell counts n, 2n, 4n; the midpoint error is first order at the curved boundary."""
    coarse, mid, fine = (window_sum(s, m) for m in (cells, 2 * cells, 4 * cells))
    tail = outside_window(s)
    first = 2.0 * fine - mid
    second = 2.0 * mid - coarse
    value = first + (first - second) / 3.0 + tail
    logger.info("oracle_computed", s=s, cells=cells, value=value, spread=abs(first - second))
    return {"s": s, "c_one": value, "spread": abs(first - second)}


def main() -> int:
    parser = argparse.ArgumentParser(description="Brute-force c(1) oracle for fractional kernels")
    parser.add_argument("--s", type=float, nargs="+", default=[0.3, 0.5, 0.7])
    parser.add_argument("--cells", type=int, default=512, help="Cells per half-window at the coarsest level")
    args = parser.parse_args()

    rows = []
    for s in args.s:
        row = oracle(s, args.cells)
        k = kernel_service.make_kernel(FractionalKernelSpec(s=s))
        row["quadrature"] = kernel_service.ball_curvature(k, 1.0)
        rows.append(row)
    print(json.dumps(rows, sort_keys=True, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
