"""
Tests for GeometryService - shapes, signed distance and boundary sampling.
"""

import math

import numpy as np
import pytest

from nlcf.exceptions import ConfigurationError, ShapeError
from nlcf.services.geometry import geometry_service


class TestSignedDistance:
    """Sign convention: positive inside."""

    def test_ball(self, unit_ball):
        d = unit_ball.signed_distance([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
        assert d == pytest.approx([1.0, -1.0, 0.0], abs=1e-12)

    def test_cross(self, cross):
        """The cross keeps the x-axis and loses the y-axis."""
        d = cross.signed_distance([[1.0, 0.0], [0.0, 1.0]])
        assert d == pytest.approx([1.0 / math.sqrt(2.0), -1.0 / math.sqrt(2.0)], abs=1e-12)

    def test_cross_odd_under_swap(self, cross):
        """d(x₂, x₁) = −d(x₁, x₂) away from the diagonals."""
        rng = np.random.default_rng(7)
        pts = rng.uniform(-3.0, 3.0, size=(200, 2))
        pts = pts[np.abs(np.abs(pts[:, 0]) - np.abs(pts[:, 1])) > 1e-6]
        assert np.allclose(cross.signed_distance(pts[:, ::-1]), -cross.signed_distance(pts), atol=1e-12)

    def test_rotated_cross(self, rotated_cross):
        """{x₁x₂ ≥ 0}: boundary is the pair of axes."""
        d = rotated_cross.signed_distance([[1.0, 2.0], [1.0, -2.0], [-3.0, -0.5]])
        assert d == pytest.approx([1.0, -1.0, 0.5], abs=1e-12)

    def test_halfplane(self):
        plane = geometry_service.make_shape("halfplane")
        assert plane.signed_distance([[5.0, -2.0], [0.0, 3.0]]) == pytest.approx([2.0, -3.0])

    def test_stadium(self):
        stadium = geometry_service.make_shape("stadium", {"a": 1.0, "R": 0.5})
        d = stadium.signed_distance([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
        assert d == pytest.approx([0.5, -0.5, -0.5], abs=1e-12)


class TestSetOperations:
    """Morphology and boolean operations."""

    def test_dilate_ball(self, unit_ball):
        grown = geometry_service.dilate(unit_ball, 0.5)
        assert grown.signed_distance([[1.5, 0.0], [0.0, 0.0]]) == pytest.approx([0.0, 1.5], abs=1e-9)

    def test_erode_ball(self, unit_ball):
        shrunk = geometry_service.erode(unit_ball, 0.25)
        assert shrunk.indicator([[0.7, 0.0]]).tolist() == [True]
        assert shrunk.indicator([[0.8, 0.0]]).tolist() == [False]

    def test_dilate_negative_rejected(self, unit_ball):
        with pytest.raises(ShapeError):
            geometry_service.dilate(unit_ball, -0.1)

    def test_complement_flips_sign(self, unit_ball):
        outside = geometry_service.complement(unit_ball)
        pts = [[0.2, 0.1], [3.0, 0.0]]
        assert outside.signed_distance(pts) == pytest.approx(-unit_ball.signed_distance(pts))

    def test_union_and_difference(self, unit_ball):
        shifted = geometry_service.translate(unit_ball, (1.5, 0.0))
        both = geometry_service.union(unit_ball, shifted)
        assert both.indicator([[2.2, 0.0], [-0.9, 0.0]]).all()
        lens = geometry_service.difference(unit_ball, shifted)
        assert not lens.indicator([[0.75, 0.0]])[0]
        assert lens.indicator([[-0.5, 0.0]])[0]

    def test_rotate_quarter_turn(self, cross):
        """The cross rotated by π/2 is its complement."""
        turned = geometry_service.rotate(cross, math.pi / 2)
        assert turned.indicator([[0.0, 1.0]])[0]
        assert not turned.indicator([[1.0, 0.1]])[0]


class TestShapeCatalogue:
    """make_shape, from_spec and parameter checks."""

    def test_unknown_shape(self):
        with pytest.raises(ShapeError):
            geometry_service.make_shape("torus")

    def test_bad_parameters(self):
        with pytest.raises(ShapeError):
            geometry_service.make_shape("ball", {"radius": 1.0})

    def test_near_tangent_delta_range(self):
        with pytest.raises(ShapeError):
            geometry_service.make_shape("near_tangent", {"delta": 0.2, "r": 1.0})

    def test_barrier_pair_lifetime(self):
        """F_{ε,μ}(t) ends when the radius or the gap vanishes."""
        with pytest.raises(ShapeError):
            geometry_service.make_shape("barrier_pair", {"eps": 0.25, "mu": 0.5, "t": 1.0})

    def test_from_spec_with_modifiers(self):
        shape = geometry_service.from_spec(
            {"shape": "ball", "R": 1.0, "modifiers": [{"op": "scale", "factor": 2.0}, {"op": "translate", "v": [1.0, 0.0]}]}
        )
        assert shape.signed_distance([[1.0, 0.0]]) == pytest.approx([2.0])
        assert len(shape.modifiers) == 2

    def test_from_spec_extra_key(self):
        with pytest.raises(ConfigurationError):
            geometry_service.from_spec({"shape": "ball", "R": 1.0, "colour": "red"})

    def test_tangent_balls_singular_point(self):
        """The tangency point is recorded as a corner."""
        balls = geometry_service.make_shape("tangent_balls")
        assert balls.is_corner([0.0, 0.0])
        assert balls.bounded


class TestBoundarySampling:
    """boundary_sample and set_distance."""

    def test_circle_samples(self, unit_ball):
        samples = geometry_service.boundary_sample(unit_ball, 0.1)
        assert len(samples) == math.ceil(2.0 * math.pi / 0.1)
        pts = np.array([s.point for s in samples])
        normals = np.array([s.normal for s in samples])
        assert np.allclose(np.hypot(*pts.T), 1.0)
        assert np.allclose(normals, pts, atol=1e-12)
        assert all(s.regularity == "Smooth" and not s.partial for s in samples)

    def test_cross_corner_flagged(self, cross):
        samples = geometry_service.boundary_sample(cross, 0.25, window=2.0)
        corners = [s for s in samples if s.regularity == "Angular"]
        assert len(corners) == 1
        assert corners[0].point == pytest.approx((0.0, 0.0), abs=1e-12)
        assert all(s.partial for s in samples)

    def test_nonpositive_spacing(self, unit_ball):
        with pytest.raises(ShapeError):
            geometry_service.boundary_sample(unit_ball, 0.0)

    def test_near_tangent_distance(self):
        """Z_{δ,r}: the two disks are 2δr apart."""
        shape = geometry_service.make_shape("near_tangent", {"delta": 0.1, "r": 1.0})
        left = geometry_service.make_shape("ball", {"center": (-1.1, 0.0), "R": 1.0})
        right = geometry_service.make_shape("ball", {"center": (1.1, 0.0), "R": 1.0})
        dist = geometry_service.set_distance(left, right, window=3.0)
        assert dist.value == pytest.approx(0.2, abs=1e-8)
        assert dist.lower_bound <= dist.value
        assert shape.indicator([[1.1, 0.0], [-1.1, 0.0]]).all()
