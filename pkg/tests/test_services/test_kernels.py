"""
Tests for KernelService - construction, masses, Ψ/Λ/Φ and ball curvature.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlcf.exceptions import KernelError, WeakRegimeError
from nlcf.schemas.kernel import FractionalKernelSpec, PiecewisePowerKernelSpec, TableKernelSpec
from nlcf.services.kernels import kernel_service


class TestKernelConstruction:
    """make_kernel and the integrability check."""

    def test_fractional_profile_value(self, frac_kernel):
        """K₀(2) = 2^-2.5 for s = 0.5."""
        assert float(frac_kernel.k0(2.0)) == pytest.approx(0.17678, rel=1e-4)

    def test_fractional_order_exposed(self, frac_kernel, weak_kernel):
        """Only unmodified fractional kernels report s."""
        assert frac_kernel.fractional_order == 0.5
        assert weak_kernel.fractional_order is None

    @pytest.mark.parametrize("s", [0.0, 1.0, 1.5, -0.2])
    def test_fractional_order_out_of_range(self, s):
        """s outside (0, 1) is rejected."""
        with pytest.raises(KernelError):
            kernel_service.make_kernel(FractionalKernelSpec(s=s))

    def test_non_integrable_near_field_rejected(self):
        """ρ^-3 near the origin fails ∫₀¹ ρ²K₀ < ∞."""
        with pytest.raises(KernelError):
            kernel_service.make_kernel(PiecewisePowerKernelSpec(alpha=3.0, tail_exponent=3.0))

    def test_non_integrable_tail_rejected(self):
        """ρ^-2 in the tail fails ∫₁^∞ ρK₀ < ∞."""
        with pytest.raises(KernelError):
            kernel_service.make_kernel(PiecewisePowerKernelSpec(alpha=1.0, tail_exponent=2.0))

    def test_unknown_key_rejected(self):
        """JSON kernel specs forbid extra keys."""
        with pytest.raises(KernelError):
            kernel_service.make_kernel({"type": "fractional", "s": 0.5, "sigma": 1.0})

    def test_negative_table_rejected(self):
        """Tabulated profiles must be nonnegative."""
        spec = TableKernelSpec(rho=[0.5, 1.0, 2.0], k0=[1.0, -0.5, 0.1], interp="linear")
        with pytest.raises(KernelError):
            kernel_service.make_kernel(spec)

    def test_integrability_report(self, frac_kernel):
        """Fractional kernels pass both integrability tests."""
        report = kernel_service.check_integrability(frac_kernel)
        assert report.passed
        assert report.near_status == "converged"
        assert report.tail_status == "converged"
        # ∫₀¹ ρ^-0.5 = 2, ∫₁^∞ ρ^-1.5 = 2
        assert report.near_field == pytest.approx(2.0, rel=1e-3)
        assert report.tail == pytest.approx(2.0, rel=1e-3)

    def test_zero_kernel(self, zero_kernel):
        """The zero kernel has no mass anywhere."""
        assert zero_kernel.is_zero
        assert kernel_service.psi(zero_kernel, 1.0) == 0.0


class TestMasses:
    """Disk masses and Ψ."""

    def test_psi_one_range(self, frac_kernel):
        """Ψ(1) for s = 0.5 lies between the disk mass bounds at ρ = 2 and ρ = 1.5."""
        value = kernel_service.psi(frac_kernel, 1.0)
        assert 0.0347 <= value <= 0.0713

    def test_psi_scaling(self, frac_kernels):
        """Ψ(r) = Ψ(1)·r^-s for fractional kernels."""
        for s, k in frac_kernels.items():
            one = kernel_service.psi(k, 1.0)
            assert kernel_service.psi(k, 0.25) == pytest.approx(one * 0.25 ** (-s), rel=1e-5)

    def test_disk_mass_centered(self, weak_kernel):
        """A disk centred at the origin carries 2π∫₀^a ρK₀."""
        # ∫₀^0.5 ρ·ρ^-1 dρ = 0.5
        assert kernel_service.disk_mass(weak_kernel, 0.0, 0.5) == pytest.approx(math.pi, rel=1e-8)

    def test_disk_mass_far_disk(self, frac_kernel):
        """A small far disk carries about its area times K₀ at its centre."""
        mass = kernel_service.disk_mass(frac_kernel, 10.0, 0.01)
        assert mass == pytest.approx(math.pi * 1e-4 * 10.0**-2.5, rel=1e-3)

    def test_tail_mass(self, frac_kernel):
        """2π∫_R^∞ ρ^-1.5 = 4π R^-0.5."""
        assert kernel_service.tail_mass(frac_kernel, 4.0) == pytest.approx(2.0 * math.pi, rel=1e-10)

    def test_positivity_infimum_positive(self, frac_kernel):
        """The fractional kernel is positive everywhere, so the infimum is too."""
        assert kernel_service.positivity_infimum(frac_kernel, 0.5) > 0.0


class TestLambda:
    """Λ(r) = ∫₀^r dρ/Ψ and its inverse."""

    def test_lambda_closed_form(self, frac_kernel):
        """Λ(r) = r^{1+s} / ((1+s)Ψ(1)) for fractional kernels."""
        psi_one = kernel_service.psi(frac_kernel, 1.0)
        expected = 0.3**1.5 / (1.5 * psi_one)
        assert kernel_service.lambda_of(frac_kernel, 0.3) == pytest.approx(expected, rel=1e-4)

    def test_invert_lambda_roundtrip(self, frac_kernel):
        """invert_lambda(Λ(r)) = r."""
        t = kernel_service.lambda_of(frac_kernel, 0.3)
        assert kernel_service.invert_lambda(frac_kernel, t) == pytest.approx(0.3, rel=1e-8)

    def test_weak_kernel_has_no_lambda(self, weak_kernel):
        """KERSI diverges for the α = 1 kernel."""
        with pytest.raises(WeakRegimeError):
            kernel_service.lambda_of(weak_kernel, 0.3)

    def test_negative_time_rejected(self, frac_kernel):
        """r(t) needs t ≥ 0."""
        with pytest.raises(KernelError):
            kernel_service.invert_lambda(frac_kernel, -1.0)


class TestRegimes:
    """Φ and classify_regime."""

    def test_fractional_is_strong(self, frac_kernel):
        """KERSI converges and positivity holds."""
        report = kernel_service.classify_regime(frac_kernel)
        assert report.verdict == "Strong"
        assert report.trail[-1] == "verdict Strong"

    def test_weak_kernel_is_weak(self, weak_kernel):
        """α = 1: Φ finite, HIG diverges."""
        report = kernel_service.classify_regime(weak_kernel)
        assert report.verdict == "Weak"
        assert report.phi_one is not None and math.isfinite(report.phi_one)

    def test_phi_infinite_for_fractional(self, frac_kernel):
        """The strip integral of ρ^-2.5 diverges at the origin."""
        assert math.isinf(kernel_service.phi(frac_kernel, 0.5))

    def test_phi_monotone(self, weak_kernel):
        """Φ grows with the strip width."""
        assert kernel_service.phi(weak_kernel, 0.25) < kernel_service.phi(weak_kernel, 0.5)


class TestBallCurvature:
    """c(R) and the ball ODE."""

    def test_ball_scaling(self, frac_kernels):
        """c(2R)/c(R) = 2^-s."""
        for s, k in frac_kernels.items():
            ratio = kernel_service.ball_curvature(k, 2.0) / kernel_service.ball_curvature(k, 1.0)
            assert ratio == pytest.approx(2.0 ** (-s), rel=1e-5)

    def test_ball_curvature_positive_nonincreasing(self, weak_kernel):
        """c(R) > 0 and nonincreasing."""
        values = [kernel_service.ball_curvature(weak_kernel, R) for R in (0.5, 1.0, 2.0, 4.0)]
        assert all(v > 0 for v in values)
        assert all(b <= a for a, b in zip(values, values[1:]))

    def test_extinction_matches_closed_form(self, frac_kernel):
        """The ODE extinction time agrees with R^{1+s}/(c(1)(1+s))."""
        trajectory = kernel_service.ball_evolution(frac_kernel, 1.0)
        closed = kernel_service.ball_extinction_closed_form(frac_kernel, 1.0)
        assert trajectory.extinction_time == pytest.approx(closed, rel=1e-3)

    def test_ball_radius_at(self, frac_kernel):
        """R(0) = R₀ and R = 0 after extinction."""
        trajectory = kernel_service.ball_evolution(frac_kernel, 1.0)
        assert kernel_service.ball_radius_at(trajectory, 0.0) == pytest.approx(1.0)
        assert kernel_service.ball_radius_at(trajectory, 2.0 * trajectory.extinction_time) == 0.0

    def test_ball_time_function(self, frac_kernel):
        """C(R) = (R^{1+s} − 1)/((1+s)c(1)) for the fractional kernel."""
        c1 = kernel_service.ball_curvature(frac_kernel, 1.0)
        assert kernel_service.ball_time_function(frac_kernel, 1.0) == 0.0
        assert kernel_service.ball_time_function(frac_kernel, 2.0) == pytest.approx((2.0**1.5 - 1.0) / (1.5 * c1), rel=1e-6)

    def test_closed_form_needs_fractional(self, weak_kernel):
        """T_R has no closed form for the weak kernel."""
        with pytest.raises(KernelError):
            kernel_service.ball_extinction_closed_form(weak_kernel, 1.0)

    def test_kernel_info(self, frac_kernel):
        """kernel_info carries Ψ(1), c(1) and T₁."""
        info = kernel_service.kernel_info(frac_kernel)
        assert info.regime.verdict == "Strong"
        assert info.psi_one == pytest.approx(kernel_service.psi(frac_kernel, 1.0))
        assert info.extinction_time_one == pytest.approx(
            kernel_service.ball_extinction_closed_form(frac_kernel, 1.0), rel=1e-3
        )


@pytest.mark.property
class TestKernelProperties:
    """Scaling laws over random parameters."""

    @settings(max_examples=20, deadline=None)
    @given(s=st.floats(min_value=0.1, max_value=0.9), R=st.floats(min_value=0.25, max_value=4.0))
    def test_ball_curvature_power_law(self, s, R):
        """c(R) = c(1)·R^-s."""
        k = kernel_service.make_kernel(FractionalKernelSpec(s=s))
        one = kernel_service.ball_curvature(k, 1.0)
        assert kernel_service.ball_curvature(k, R) == pytest.approx(one * R ** (-s), rel=1e-3)

    @settings(max_examples=20, deadline=None)
    @given(rho=st.lists(st.floats(min_value=1e-3, max_value=1e3), min_size=1, max_size=10))
    def test_piecewise_profile_positive(self, rho):
        """Piecewise power profiles stay positive."""
        k = kernel_service.make_kernel(PiecewisePowerKernelSpec(alpha=1.0, tail_exponent=3.0))
        assert np.all(k.k0(np.array(rho)) > 0.0)
