"""
Tests for AnalysisService - verdicts, exponent fits and flow properties.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlcf.exceptions import ConfigurationError
from nlcf.models.flow import FlowFrame, FlowTrace
from nlcf.services.analysis import _fit_waist, analysis_service
from nlcf.services.flow import flow_service
from nlcf.services.geometry import geometry_service
from nlcf.services.kernels import kernel_service

N, H = 41, 0.05
TIMES = [0.0, 0.1, 0.2, 0.3]


def square(half_cells: int) -> np.ndarray:
    """Square mask of (2·half_cells + 1)² nodes around the centre node."""
    mask = np.zeros((N, N), dtype=bool)
    c = N // 2
    if half_cells >= 0:
        mask[c - half_cells : c + half_cells + 1, c - half_cells : c + half_cells + 1] = True
    return mask


def circle(radius: float, points: int = 200) -> np.ndarray:
    theta = np.linspace(0.0, 2.0 * np.pi, points)
    return radius * np.column_stack([np.cos(theta), np.sin(theta)])


def ladder_trace(outer: dict[int, int], inner: dict[int, int], name: str = "synthetic", stray: int = 0) -> FlowTrace:
    """
    Members ±k·h with square masks of the given half sizes, constant in time.
    Outer members also get a one-node-thick segment of `stray` nodes.
    """
    members = {}
    for k, half in outer.items():
        mask = square(half)
        mask[2, 2 : 2 + stray] = True
        members[k * H] = [FlowFrame(t=t, area=float(mask.sum()) * H * H, contours=(), mask=mask.copy()) for t in TIMES]
    for k, half in inner.items():
        members[-k * H] = [FlowFrame(t=t, area=float(square(half).sum()) * H * H, contours=(), mask=square(half)) for t in TIMES]
    return FlowTrace(
        shape_name=name,
        kernel={"type": "fractional", "s": 0.5},
        h=H,
        half_width=0.5 * H * (N - 1),
        truncation=0.5,
        times=list(TIMES),
        members=members,
        extinction_time={eta: None for eta in members},
    )


def disk_trace(radius: float) -> FlowTrace:
    axis = -0.5 * H * (N - 1) + H * np.arange(N)
    x, y = np.meshgrid(axis, axis, indexing="ij")
    mask = np.hypot(x, y) <= radius
    frames = [FlowFrame(t=t, area=np.pi * radius**2, contours=(circle(radius),), mask=mask) for t in TIMES]
    return FlowTrace(
        shape_name="ball",
        kernel={"type": "fractional", "s": 0.5},
        h=H,
        half_width=0.5 * H * (N - 1),
        truncation=0.5,
        times=list(TIMES),
        members={0.0: frames},
    )


class TestFatteningVerdict:
    """fattening_report on synthetic ladders."""

    def test_fattening(self):
        """A persistent gap far above 10h² is Fattening."""
        trace = ladder_trace({1: 9, 2: 10, 3: 11}, {1: -1, 2: -1, 3: -1})
        report = analysis_service.fattening_report(trace)
        assert report.verdict == "Fattening"
        assert all(area > 10 * H * H for area in report.gap_area)

    def test_no_fattening(self):
        """Members η apart by exactly 2η: the gap is a thin ring with no interior."""
        trace = ladder_trace({1: 9, 2: 10, 3: 11}, {1: 7, 2: 6, 3: 5})
        report = analysis_service.fattening_report(trace)
        assert report.verdict == "NoFattening"
        assert report.gap_area == pytest.approx([0.0] * len(TIMES), abs=1e-12)
        assert all(area == 0.0 for area in report.finest_gap_area)

    def test_thin_residual_gap_inconclusive(self):
        """A gap extrapolating to 5h² without interior is not NoFattening."""
        trace = ladder_trace({1: 9, 2: 10, 3: 11}, {1: 7, 2: 6, 3: 5}, stray=5)
        report = analysis_service.fattening_report(trace)
        assert report.gap_area == pytest.approx([5 * H * H] * len(TIMES))
        assert all(area == 0.0 for area in report.finest_gap_area)
        assert report.verdict == "Inconclusive"

    def test_non_monotone_gap_inconclusive(self):
        trace = ladder_trace({1: 12, 2: 12, 3: 12}, {1: 2, 2: 6, 3: 10})
        report = analysis_service.fattening_report(trace)
        assert report.verdict == "Inconclusive"
        assert "non_monotone_gap" in report.flags

    def test_needs_three_levels(self):
        trace = ladder_trace({1: 9, 2: 10}, {1: 7, 2: 6})
        with pytest.raises(ConfigurationError):
            analysis_service.fattening_gap(trace, 0.1)

    def test_unrecorded_time(self):
        trace = ladder_trace({1: 9, 2: 10, 3: 11}, {1: 7, 2: 6, 3: 5})
        with pytest.raises(ConfigurationError):
            analysis_service.fattening_gap(trace, 0.15)

    def test_unresolved_exponent_flagged(self):
        """Four recorded times leave fewer than five fit points."""
        trace = ladder_trace({1: 9, 2: 10, 3: 11}, {1: -1, 2: -1, 3: -1})
        report = analysis_service.fattening_report(trace)
        assert "exponent_unresolved" in report.flags
        assert report.fitted_exponent is None


class TestExponentFit:
    """Power-law fit of the inscribed radius."""

    def test_two_thirds(self):
        t = np.linspace(0.1, 1.0, 10)
        fit = analysis_service.fit_exponent(t, 2.0 * t ** (2.0 / 3.0))
        assert fit.p == pytest.approx(2.0 / 3.0, abs=1e-10)
        assert fit.c == pytest.approx(2.0, rel=1e-10)
        assert fit.confidence == pytest.approx((2.0 / 3.0, 2.0 / 3.0), abs=1e-9)
        assert fit.n_points == 10

    def test_unresolved_points_dropped(self):
        """t = 0 and radii below 4h are left out of the fit."""
        t = np.array([0.0, 0.01, 0.1, 0.2, 0.3, 0.4, 0.5])
        r = np.array([0.0, 0.01, 0.3, 0.4, 0.5, 0.6, 0.7])
        fit = analysis_service.fit_exponent(t, r, h=0.05)
        assert fit.n_points == 5

    def test_too_few_points(self):
        with pytest.raises(ConfigurationError):
            analysis_service.fit_exponent([0.1, 0.2, 0.3], [0.1, 0.2, 0.3])

    def test_length_mismatch(self):
        with pytest.raises(ConfigurationError):
            analysis_service.fit_exponent([0.1, 0.2], [0.1])

    @pytest.mark.property
    @settings(max_examples=25, deadline=None)
    @given(p=st.floats(min_value=0.2, max_value=1.5), c=st.floats(min_value=0.1, max_value=10.0))
    def test_recovers_exact_power_law(self, p, c):
        t = np.geomspace(0.01, 1.0, 8)
        fit = analysis_service.fit_exponent(t, c * t**p)
        assert fit.p == pytest.approx(p, abs=1e-8)


class TestFlowProperties:
    """Nesting, volume semicontinuity and comparison on synthetic traces."""

    def test_properties_pass_for_static_ladder(self):
        trace = ladder_trace({1: 9, 2: 10, 3: 11}, {1: 7, 2: 6, 3: 5})
        checks = {c.name: c for c in analysis_service.check_flow_properties(trace)}
        assert checks["ladder_monotonicity"].passed
        assert checks["outer_volume_lsc"].passed
        assert "diagonal_containment" not in checks

    def test_comparison_pass(self):
        inner, outer = disk_trace(0.3), disk_trace(0.6)
        checks = analysis_service.check_comparison(inner, outer, k0=0.3)
        assert [c.passed for c in checks] == [True, True]
        assert checks[1].value == pytest.approx(0.3, abs=1e-9)

    def test_comparison_fail(self):
        checks = analysis_service.check_comparison(disk_trace(0.6), disk_trace(0.3), k0=0.3)
        assert not checks[0].passed

    def test_unknown_bound_case(self, frac_kernel):
        with pytest.raises(ConfigurationError):
            analysis_service.check_named_curvature_bounds(frac_kernel, "torus")


class TestOddSymmetry:
    """u(y₁, y₂) = −u(−y₁, y₂) for the rotated cross."""

    def test_rotated_cross_field(self, rotated_cross):
        field = flow_service.init_field(rotated_cross, window=1.0, h=0.0625, M=0.5)
        assert analysis_service.check_odd_symmetry(field).passed

    def test_ladder_partner(self, rotated_cross):
        plus = flow_service.init_field(rotated_cross, window=1.0, h=0.0625, M=0.5, shift=0.125)
        minus = flow_service.init_field(rotated_cross, window=1.0, h=0.0625, M=0.5, shift=-0.125)
        assert analysis_service.check_odd_symmetry(plus, minus).passed
        assert not analysis_service.check_odd_symmetry(plus).passed

    def test_ball_is_not_odd(self):
        ball = geometry_service.make_shape("ball", {"R": 0.5})
        field = flow_service.init_field(ball, window=1.0, h=0.0625, M=0.5)
        assert not analysis_service.check_odd_symmetry(field).passed

    def test_shape_mismatch(self, rotated_cross):
        a = flow_service.init_field(rotated_cross, window=1.0, h=0.0625, M=0.5)
        b = flow_service.init_field(rotated_cross, window=1.0, h=0.125, M=0.5)
        with pytest.raises(ConfigurationError):
            analysis_service.check_odd_symmetry(a, b)


class TestWaistFit:
    """Power law with offset through geometric radii."""

    def test_recovers_offset_power_law(self):
        radii = np.array([1.25e-4, 2.5e-4, 5e-4, 1e-3])
        fitted = _fit_waist(radii, -0.6 * radii**-0.5 + 7.0)
        assert fitted["a"] == pytest.approx(0.6)
        assert fitted["power"] == pytest.approx(-0.5)
        assert fitted["offset"] == pytest.approx(7.0)

    def test_positive_values_still_fit(self):
        """A large offset does not hide the r^-s part."""
        radii = np.array([0.05, 0.1, 0.2])
        fitted = _fit_waist(radii, -0.6 * radii**-0.5 + 9.0)
        assert fitted["power"] == pytest.approx(-0.5)

    def test_no_decay(self):
        radii = np.array([1e-3, 2e-3, 4e-3])
        assert _fit_waist(radii, np.array([-1.0, -2.0, -3.0])) == {}

    def test_needs_geometric_radii(self):
        assert _fit_waist(np.array([1e-3, 2e-3, 5e-3]), np.array([-3.0, -2.0, -1.0])) == {}


@pytest.mark.slow
class TestNamedBounds:
    """Curvature bounds of the named configurations."""

    def test_box_pair_below_strip_mass(self, weak_kernel):
        report = analysis_service.check_named_curvature_bounds(weak_kernel, "box", {"r": 0.5})
        assert report.passed
        assert report.fitted["phi_2r"] == pytest.approx(kernel_service.phi(weak_kernel, 1.0))

    def test_droplet_waist_scaling(self, frac_kernel):
        """Waist values are negative and scale like r^-s."""
        report = analysis_service.check_named_curvature_bounds(frac_kernel, "droplet_waist")
        assert report.passed
        assert report.fitted["a"] > 0.0
        assert report.fitted["power"] == pytest.approx(-0.5, rel=0.15)
        assert report.fitted["c_sharp"] > 0.0
        assert all(s.value < 0.0 for s in report.samples)

    def test_near_tangent_negative(self, frac_kernel):
        report = analysis_service.check_named_curvature_bounds(frac_kernel, "near_tangent", {"delta": 0.01})
        assert report.passed
        assert report.fitted["c"] > 0.0
