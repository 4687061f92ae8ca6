"""
Centralized key patterns for in-process table caches.
"""

import hashlib
import json
from dataclasses import dataclass
from typing import Any


def _digest(payload: Any) -> str:
    content = json.dumps(payload, sort_keys=True, default=repr)
    return hashlib.sha256(content.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class CacheKeys:
    """Centralized cache key patterns."""

    # Grid operator
    CELL_WEIGHTS: str = "weights:{kernel}:{h!r}:{n}"
    WEIGHT_SPECTRUM: str = "spectrum:{kernel}:{h!r}:{n}:{length}"
    OUTSIDE_MASS: str = "outside:{kernel}:{h!r}:{n}"

    @staticmethod
    def kernel(spec: Any) -> str:
        """Stable hash of a kernel spec (pydantic model or dict)."""
        data = spec.model_dump() if hasattr(spec, "model_dump") else spec
        return _digest(data)

    @staticmethod
    def cell_weights(spec: Any, h: float, n: int) -> str:
        """Build cache key for a cell-weight table."""
        return CacheKeys.CELL_WEIGHTS.format(kernel=CacheKeys.kernel(spec), h=float(h), n=int(n))

    @staticmethod
    def weight_spectrum(spec: Any, h: float, n: int, length: int) -> str:
        """Build cache key for the padded FFT of a weight table."""
        return CacheKeys.WEIGHT_SPECTRUM.format(kernel=CacheKeys.kernel(spec), h=float(h), n=int(n), length=int(length))

    @staticmethod
    def outside_mass(spec: Any, h: float, n: int) -> str:
        """Build cache key for the per-node mass of K outside the grid."""
        return CacheKeys.OUTSIDE_MASS.format(kernel=CacheKeys.kernel(spec), h=float(h), n=int(n))
