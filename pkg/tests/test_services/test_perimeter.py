"""
Tests for PerimeterService - localized perimeters and the perturbed cross.
"""

import math

import numpy as np
import pytest

from nlcf.exceptions import ConfigurationError, KernelError
from nlcf.schemas.kernel import FractionalKernelSpec
from nlcf.services.geometry import geometry_service
from nlcf.services.kernels import kernel_service
from nlcf.services.perimeter import perimeter_service


class TestPerLocal:
    """Per_K(E, B_R)."""

    def test_zero_kernel(self, unit_ball, zero_kernel):
        assert perimeter_service.per_local(unit_ball, zero_kernel, 2.0).value == 0.0

    def test_radius_must_be_positive(self, unit_ball, frac_kernel):
        with pytest.raises(ConfigurationError):
            perimeter_service.per_local(unit_ball, frac_kernel, 0.0)

    @pytest.mark.slow
    def test_ball_matches_first_variation(self, unit_ball, frac_kernel):
        """Per(B_ρ) = ρ^{2−s}P₁ and d/dρ Per = 2πρ·c(ρ) give P₁ = 2πc(1)/(2−s)."""
        expected = 2.0 * math.pi * kernel_service.ball_curvature(frac_kernel, 1.0) / 1.5
        result = perimeter_service.per_local(unit_ball, frac_kernel, 2.0)
        assert result.value == pytest.approx(expected, rel=1e-2)

    @pytest.mark.slow
    def test_scaling(self, frac_kernel):
        """Per(λE, B_λR) = λ^{2−s}·Per(E, B_R)."""
        small = geometry_service.make_shape("ball", {"R": 0.5})
        big = geometry_service.make_shape("ball", {"R": 1.0})
        a = perimeter_service.per_local(small, frac_kernel, 1.0)
        b = perimeter_service.per_local(big, frac_kernel, 2.0)
        assert b.value == pytest.approx(2.0**1.5 * a.value, rel=1e-2)

    @pytest.mark.slow
    def test_monotone_in_radius(self, weak_kernel):
        stadium = geometry_service.make_shape("stadium", {"a": 1.0, "R": 0.5})
        inner = perimeter_service.per_local(stadium, weak_kernel, 1.0)
        outer = perimeter_service.per_local(stadium, weak_kernel, 2.0)
        assert inner.value <= outer.value + inner.error + outer.error

    @pytest.mark.slow
    def test_far_ball_vanishes(self, weak_kernel):
        ball = geometry_service.make_shape("ball", {"R": 0.5})
        near = perimeter_service.per_local(geometry_service.translate(ball, (2.0, 0.0)), weak_kernel, 1.0)
        far = perimeter_service.per_local(geometry_service.translate(ball, (8.0, 0.0)), weak_kernel, 1.0)
        assert 0.0 <= far.value < near.value


class TestCrossBound:
    """−8∫₀^r x₂Ψ(x₂)dx₂."""

    def test_closed_form_matches_quadrature(self, frac_kernel):
        exact, _ = perimeter_service.cross_bound(frac_kernel, 0.5)
        numeric, error = perimeter_service.cross_bound(frac_kernel, 0.5, closed_form=False)
        assert exact < 0.0
        assert numeric == pytest.approx(exact, rel=1e-5)
        assert error >= 0.0

    def test_weak_kernel_uses_quadrature(self, weak_kernel):
        bound, error = perimeter_service.cross_bound(weak_kernel, 0.5)
        assert bound < 0.0
        assert error > 0.0


class TestPerDiffCross:
    """The W_r identity."""

    def test_precondition(self, frac_kernel):
        with pytest.raises(ConfigurationError):
            perimeter_service.per_diff_cross(frac_kernel, 0.5, 0.7)
        with pytest.raises(ConfigurationError):
            perimeter_service.per_diff_cross(frac_kernel, 0.0, 2.0)

    def test_unknown_frame(self, frac_kernel):
        with pytest.raises(ConfigurationError):
            perimeter_service.per_diff_cross(frac_kernel, 0.25, 2.0, frame="diagonal")

    def test_zero_kernel(self, zero_kernel):
        report = perimeter_service.per_diff_cross(zero_kernel, 0.25, 2.0)
        assert report.diff == report.bound == 0.0
        assert not report.certified_negative

    @pytest.mark.slow
    @pytest.mark.parametrize("r", [0.25, 0.5, 1.0])
    def test_diff_below_bound(self, frac_kernel, r):
        report = perimeter_service.per_diff_cross(frac_kernel, r, 2.0)
        assert report.within_bound
        assert report.certified_negative

    @pytest.mark.slow
    def test_frames_agree(self, frac_kernel):
        standard = perimeter_service.per_diff_cross(frac_kernel, 0.5, 2.0)
        rotated = perimeter_service.per_diff_cross(frac_kernel, 0.5, 2.0, frame="rotated")
        assert abs(standard.diff - rotated.diff) <= standard.quadrature_error + rotated.quadrature_error + 1e-6

    @pytest.mark.slow
    def test_small_square_vanishes(self, frac_kernel):
        small = perimeter_service.per_diff_cross(frac_kernel, 0.01, 2.0)
        large = perimeter_service.per_diff_cross(frac_kernel, 0.5, 2.0)
        assert abs(small.diff) < abs(large.diff)


class TestRegularization:
    """K_δ = K·(1 − χ_{B_δ})."""

    def test_near_field_removed(self, frac_kernel):
        regularized = perimeter_service.delta_regularize(frac_kernel, 0.1)
        assert regularized.k0(0.05) == 0.0
        assert regularized.k0(0.2) == pytest.approx(0.2**-2.5)
        assert regularized.fractional_order is None

    def test_tail_unchanged(self, frac_kernel):
        regularized = perimeter_service.delta_regularize(frac_kernel, 0.1)
        assert kernel_service.tail_mass(regularized, 1.0) == pytest.approx(kernel_service.tail_mass(frac_kernel, 1.0))

    def test_cutoff_beyond_support(self):
        k = kernel_service.make_kernel(FractionalKernelSpec(s=0.5, support_radius=0.5))
        assert perimeter_service.delta_regularize(k, 1.0).is_zero

    def test_nonpositive_delta(self, frac_kernel):
        with pytest.raises(KernelError):
            perimeter_service.delta_regularize(frac_kernel, 0.0)

    @pytest.mark.slow
    def test_ladder_approaches_singular_value(self, frac_kernel):
        target = perimeter_service.per_diff_cross(frac_kernel, 0.5, 2.0)
        gaps = []
        for delta in (0.1, 0.05, 0.025):
            report = perimeter_service.per_diff_cross(perimeter_service.delta_regularize(frac_kernel, delta), 0.5, 2.0)
            gaps.append(abs(report.diff - target.diff) - report.quadrature_error - target.quadrature_error)
        assert gaps[-1] <= gaps[0]


class TestWitness:
    """find_nonminimality_witness."""

    def test_zero_kernel_has_none(self, zero_kernel):
        report = perimeter_service.find_nonminimality_witness(zero_kernel, 2.0, [0.1, 0.5])
        assert not report.found
        assert report.best_r is None
        assert len(report.scan) == 2

    def test_grid_checks(self, frac_kernel):
        with pytest.raises(ConfigurationError):
            perimeter_service.find_nonminimality_witness(frac_kernel, 2.0, [])
        with pytest.raises(ConfigurationError):
            perimeter_service.find_nonminimality_witness(frac_kernel, 1.0, [0.1, 1.0])

    @pytest.mark.slow
    def test_fractional_witness(self, frac_kernel):
        report = perimeter_service.find_nonminimality_witness(frac_kernel, 2.0, np.linspace(0.1, 1.0, 10))
        assert report.found
        assert report.margin > 0.0
        assert [rep.r for rep in report.scan] == pytest.approx(list(np.linspace(0.1, 1.0, 10)))

    @pytest.mark.slow
    def test_weak_kernel_witness(self, weak_kernel):
        assert perimeter_service.find_nonminimality_witness(weak_kernel, 2.0, [0.25, 0.5]).found
