"""
Pytest configuration and fixtures for testing.
"""

import os

import pytest

# Set environment variables before importing the package
os.environ["NLCF_ENVIRONMENT"] = "testing"
os.environ["NLCF_LOG_LEVEL"] = "WARNING"
os.environ["NLCF_MAX_THREADS"] = "2"

from nlcf.config import get_settings  # noqa: E402
from nlcf.models.kernel import Kernel  # noqa: E402
from nlcf.models.shape import PlanarSet  # noqa: E402
from nlcf.schemas.kernel import FractionalKernelSpec, PiecewisePowerKernelSpec, ZeroKernelSpec  # noqa: E402
from nlcf.services.geometry import geometry_service  # noqa: E402
from nlcf.services.kernels import kernel_service  # noqa: E402

get_settings.cache_clear()


@pytest.fixture(scope="session")
def frac_kernel() -> Kernel:
    """Fractional kernel of order s = 0.5."""
    return kernel_service.make_kernel(FractionalKernelSpec(s=0.5))


@pytest.fixture(scope="session")
def frac_kernels() -> dict[float, Kernel]:
    """Fractional kernels for s ∈ {0.3, 0.5, 0.7}."""
    return {s: kernel_service.make_kernel(FractionalKernelSpec(s=s)) for s in (0.3, 0.5, 0.7)}


@pytest.fixture(scope="session")
def weak_kernel() -> Kernel:
    """Piecewise kernel ρ^-1 near the origin, ρ^-3 in the tail."""
    return kernel_service.make_kernel(PiecewisePowerKernelSpec(alpha=1.0, tail_exponent=3.0))


@pytest.fixture(scope="session")
def zero_kernel() -> Kernel:
    return kernel_service.make_kernel(ZeroKernelSpec())


@pytest.fixture
def unit_ball() -> PlanarSet:
    return geometry_service.make_shape("ball", {"R": 1.0})


@pytest.fixture
def cross() -> PlanarSet:
    return geometry_service.make_shape("cross")


@pytest.fixture
def rotated_cross() -> PlanarSet:
    return geometry_service.make_shape("rotated_cross")
