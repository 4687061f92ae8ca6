"""
Tests for CurvatureService.
"""

import math

import numpy as np
import pytest

from nlcf.exceptions import CurvatureError
from nlcf.services.curvature import curvature_service, inside_measure
from nlcf.services.flow import flow_service
from nlcf.services.geometry import geometry_service
from nlcf.services.grid_operator import grid_operator
from nlcf.services.kernels import kernel_service


class TestCircleExcess:
    """Exact circle cuts against the signed-distance bisection."""

    def test_inside_measure_closed_form(self, unit_ball):
        """∂B₁(1, 0) spends 2π/3 inside B₁."""
        measure = inside_measure(unit_ball, np.array([1.0, 0.0]), np.array([1.0]))
        assert measure[0] == pytest.approx(2.0 * math.pi / 3.0, abs=1e-12)

    def test_exact_matches_bisection(self, unit_ball):
        p = np.array([1.0, 0.0])
        rho = np.array([0.25, 0.5, 1.0, 1.5, 2.5])
        exact, exact_err = curvature_service.circle_excess(unit_ball, p, rho)
        approx, approx_err = curvature_service.circle_excess(unit_ball, p, rho, exact=False)
        assert np.all(exact_err == 0.0)
        assert np.all(np.abs(exact - approx) <= approx_err + 1e-9)
        # entirely outside beyond the diameter
        assert exact[-1] == pytest.approx(2.0 * math.pi)

    def test_cross_excess_vanishes(self, cross):
        """Circles around the vertex of the cross split evenly."""
        excess, _ = curvature_service.circle_excess(cross, np.zeros(2), np.array([0.5, 1.0, 4.0]))
        assert np.allclose(excess, 0.0, atol=1e-12)


class TestCurvaturePV:
    """curvature_pv at boundary points."""

    def test_halfplane_is_flat(self, frac_kernel):
        plane = geometry_service.make_shape("halfplane")
        estimate = curvature_service.curvature_pv(plane, (0.3, 0.0), frac_kernel)
        assert estimate.value == pytest.approx(0.0, abs=1e-12)

    def test_ball_matches_radial_formula(self, unit_ball, frac_kernel):
        """H at any point of ∂B₁ equals c(1)."""
        estimate = curvature_service.curvature_pv(unit_ball, (0.0, 1.0), frac_kernel, tol=1e-6)
        expected = kernel_service.ball_curvature(frac_kernel, 1.0)
        assert estimate.value == pytest.approx(expected, abs=max(10 * estimate.bar, 1e-6))
        assert estimate.value > 0.0

    def test_ball_weak_kernel(self, weak_kernel):
        ball = geometry_service.make_shape("ball", {"R": 0.5})
        estimate = curvature_service.curvature_pv(ball, (0.5, 0.0), weak_kernel)
        assert estimate.value == pytest.approx(kernel_service.ball_curvature(weak_kernel, 0.5), rel=1e-5)

    def test_complement_flips_sign(self, unit_ball, weak_kernel):
        outside = geometry_service.complement(unit_ball)
        inner = curvature_service.curvature_pv(unit_ball, (1.0, 0.0), weak_kernel).value
        outer = curvature_service.curvature_pv(outside, (1.0, 0.0), weak_kernel).value
        assert outer == pytest.approx(-inner, rel=1e-5)

    def test_off_boundary_rejected(self, unit_ball, frac_kernel):
        with pytest.raises(CurvatureError):
            curvature_service.curvature_pv(unit_ball, (0.5, 0.0), frac_kernel)

    def test_corner_needs_symmetry(self, cross, frac_kernel):
        with pytest.raises(CurvatureError):
            curvature_service.curvature_pv(cross, (0.0, 0.0), frac_kernel)

    def test_corner_with_odd_symmetry(self, cross, frac_kernel):
        estimate = curvature_service.curvature_pv(cross, (0.0, 0.0), frac_kernel, symmetry="odd")
        assert estimate.value == 0.0
        assert estimate.warning == "value fixed by odd symmetry"

    def test_false_symmetry_rejected(self, unit_ball, frac_kernel):
        with pytest.raises(CurvatureError):
            curvature_service.curvature_pv(unit_ball, (1.0, 0.0), frac_kernel, symmetry="odd")


class TestCurvatureProfile:
    """curvature_profile over boundary samples."""

    def test_ball_profile_constant(self, unit_ball, weak_kernel):
        samples = geometry_service.boundary_sample(unit_ball, 1.0)
        entries = curvature_service.curvature_profile(unit_ball, weak_kernel, samples)
        values = [e.estimate.value for e in entries]
        assert len(values) == len(samples)
        assert np.allclose(values, values[0], rtol=1e-6)

    def test_corners_skipped(self, cross, frac_kernel):
        samples = geometry_service.boundary_sample(cross, 0.5, window=1.0)
        entries = curvature_service.curvature_profile(cross, frac_kernel, samples, tol=1e-4)
        skipped = [e for e in entries if e.estimate is None]
        assert [e.skipped_reason for e in skipped] == ["angular point"]
        # points on the diagonals lie on antisymmetry lines of the cross
        assert all(abs(e.estimate.value) < 1e-3 for e in entries if e.estimate is not None)


class TestGridCurvature:
    """Curvature of grid superlevel sets."""

    def test_matches_grid_operator(self, unit_ball, weak_kernel):
        field = flow_service.init_field(unit_ball, window=1.5, h=0.0625, M=0.5)
        node = field.node_of(0.0, 1.0)
        value = curvature_service.grid_curvature(field, node, weak_kernel)
        assert value == grid_operator.node_curvature(field, node, weak_kernel)
        assert value == pytest.approx(kernel_service.ball_curvature(weak_kernel, 1.0), rel=0.1)
