"""
Tests for BarrierService - velocity inequalities of the barrier families.
"""

import pytest

from nlcf.exceptions import ConfigurationError, KernelError
from nlcf.schemas.reports import NamedBoundsReport
from nlcf.services.analysis import analysis_service
from nlcf.services.barriers import barrier_service


class TestArguments:
    """Family lookup and parameter ranges."""

    def test_unknown_family(self, frac_kernel):
        with pytest.raises(ConfigurationError):
            barrier_service.verify_barrier("spiral", frac_kernel)

    def test_sample_counts(self, frac_kernel):
        with pytest.raises(ConfigurationError):
            barrier_service.verify_barrier("two_balls", frac_kernel, n_points=0)

    def test_perturbed_cross_range(self, frac_kernel):
        with pytest.raises(ConfigurationError):
            barrier_service.verify_barrier("b", frac_kernel, {"lam_fraction": 0.75})

    def test_shrinking_boxes_range(self, weak_kernel):
        with pytest.raises(ConfigurationError):
            barrier_service.verify_barrier("c", weak_kernel, {"rho": 1.5})

    def test_shrinking_boxes_needs_finite_strip_mass(self, frac_kernel):
        """Φ is infinite for a fractional kernel."""
        with pytest.raises(KernelError):
            barrier_service.verify_barrier("shrinking_boxes", frac_kernel)

    def test_droplet_needs_fractional_kernel(self, weak_kernel):
        with pytest.raises(KernelError):
            barrier_service.verify_barrier("droplet", weak_kernel)

    def test_droplet_eps_range(self, frac_kernel):
        with pytest.raises(ConfigurationError):
            barrier_service.verify_barrier("d", frac_kernel, {"c_sharp": 0.5, "eps_fraction": 0.75})

    def test_two_balls_domain_range(self, frac_kernel):
        with pytest.raises(ConfigurationError):
            barrier_service.verify_barrier("e", frac_kernel, {"c0": 1.5})

    def test_droplet_without_waist_fit_fails_soft(self, frac_kernel, monkeypatch):
        """No fitted waist constant gives a failed report, not an error."""
        monkeypatch.setattr(
            analysis_service,
            "check_named_curvature_bounds",
            lambda *args, **kwargs: NamedBoundsReport(case="droplet_waist", samples=[], passed=False),
        )
        report = barrier_service.verify_barrier("droplet", frac_kernel)
        assert not report.passed
        assert report.samples == []
        assert report.pass_fraction == 0.0


@pytest.mark.slow
class TestFamilies:
    """Every non-Angular sample satisfies its inequality."""

    def test_eroded_sublevel(self, weak_kernel):
        report = barrier_service.verify_barrier("eroded_sublevel", weak_kernel, n_points=8, n_times=2)
        assert report.inequality == "ge"
        assert report.passed
        assert report.parameters["margin"] > 0.0

    def test_perturbed_cross(self, frac_kernel):
        report = barrier_service.verify_barrier("perturbed_cross", frac_kernel, {"r": 0.25}, n_points=16, n_times=2)
        assert report.passed
        assert report.pass_fraction == 1.0
        assert report.parameters["delta"] > 0.0

    def test_shrinking_boxes(self, weak_kernel):
        report = barrier_service.verify_barrier("shrinking_boxes", weak_kernel, {"rho": 0.5}, n_points=8, n_times=2)
        assert report.passed
        assert report.parameters["r_end"] > 0.5

    def test_droplet(self, frac_kernel):
        report = barrier_service.verify_barrier("droplet", frac_kernel, n_points=8, n_times=2)
        assert report.passed
        assert 0.0 < report.parameters["c_sharp"] < 1.0
        assert report.parameters["r_max"] == pytest.approx(1e-3)
        # the waist grows, the hulls shrink
        assert any(s.velocity > 0.0 for s in report.samples)
        assert any(s.velocity < 0.0 for s in report.samples)

    def test_two_balls(self, frac_kernel):
        """Checked where |ν₁| ≤ 1 − c₀ with a fitted C₀; the rest is counted as excluded."""
        report = barrier_service.verify_barrier("e", frac_kernel, n_points=24, n_times=3)
        assert report.family == "two_balls"
        assert report.passed
        assert report.domain_excluded > 0
        c0, C0 = report.parameters["c0"], report.parameters["C0"]
        assert C0 * c0 / 2.0 >= report.parameters["sup_curvature"]
        assert all(abs(s.velocity) >= C0 * c0 - 1e-9 for s in report.samples if s.regularity == "Smooth")
        assert {s.t for s in report.samples} == pytest.approx({0.0, report.parameters["T"] / 2, report.parameters["T"]})
