"""
Tests for contour extraction and redistancing.
"""

import numpy as np
import pytest

from nlcf.exceptions import NumericalAbort
from nlcf.services.flow import flow_service
from nlcf.services.redistance import polyline_distance, redistance, zero_contours


class TestContours:
    """zero_contours in world coordinates."""

    def test_ball_contour_on_circle(self, unit_ball):
        field = flow_service.init_field(unit_ball, window=1.5, h=0.0625, M=0.5)
        contours = zero_contours(field)
        assert len(contours) == 1
        radii = np.hypot(*contours[0].T)
        assert np.allclose(radii, 1.0, atol=0.01)

    def test_no_contour_when_empty(self, unit_ball):
        field = flow_service.init_field(unit_ball, window=1.5, h=0.0625, M=0.5)
        assert zero_contours(field.with_values(-np.ones_like(field.values))) == []


class TestPolylineDistance:
    """Capped distance to polylines."""

    def test_square_outline(self):
        outline = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]])
        pts = np.array([[0.5, 0.5], [2.0, 0.5], [0.5, -0.25], [5.0, 5.0]])
        d = polyline_distance(pts, [outline], cap=1.5)
        assert d == pytest.approx([0.5, 1.0, 0.25, 1.5])


class TestRedistance:
    """Signed distance rebuilt from the zero contour."""

    def test_restores_distance(self, unit_ball):
        field = flow_service.init_field(unit_ball, window=1.5, h=0.0625, M=0.5)
        steep = field.with_values(np.clip(3.0 * field.values, -0.5, 0.5))
        rebuilt = redistance(steep)
        near = np.abs(field.values) < 0.4
        assert np.max(np.abs(rebuilt.values[near] - field.values[near])) < 0.01

    def test_keeps_superlevel_set(self, unit_ball):
        field = flow_service.init_field(unit_ball, window=1.5, h=0.0625, M=0.5)
        steep = field.with_values(np.clip(3.0 * field.values, -0.5, 0.5))
        assert np.array_equal(redistance(steep).superlevel, steep.superlevel)

    def test_empty_contour_aborts(self, unit_ball):
        field = flow_service.init_field(unit_ball, window=1.5, h=0.0625, M=0.5)
        with pytest.raises(NumericalAbort):
            redistance(field.with_values(np.full_like(field.values, -0.5)))
