"""
Redistancing of grid level-set functions.
"""

import numpy as np
import structlog
from numpy.typing import NDArray
from scipy.spatial import cKDTree
from skimage import measure

from nlcf.exceptions import NumericalAbort
from nlcf.models.flow import GridField

logger = structlog.get_logger(__name__)

NEAREST_VERTICES = 8


def zero_contours(field: GridField, level: float = 0.0) -> list[NDArray[np.float64]]:
    """Level curves of u as polylines in world coordinates (x, y)."""
    u = field.values
    if u.min() > level or u.max() < level:
        return []
    raw = measure.find_contours(u, level)
    return [-field.half_width + field.h * c for c in raw if len(c) >= 2]


def polyline_distance(points: NDArray[np.float64], contours: list[NDArray[np.float64]], cap: float) -> NDArray[np.float64]:
    """
    Distance from points to the union of polylines, capped at cap.

    Candidates are the segments adjacent to the nearest vertices; segments are
    shorter than a grid diagonal, so the nearest segment is among them.
    """
    starts = np.concatenate([c[:-1] for c in contours])
    ends = np.concatenate([c[1:] for c in contours])
    vertices = np.concatenate([starts, ends])
    owner = np.concatenate([np.arange(len(starts)), np.arange(len(starts))])

    k = min(NEAREST_VERTICES, len(vertices))
    dist, idx = cKDTree(vertices).query(points, k=k, distance_upper_bound=cap + 1e-12)
    dist = dist.reshape(len(points), k)
    idx = idx.reshape(len(points), k)
    out = np.full(len(points), cap)
    near = np.isfinite(dist[:, 0])
    if not np.any(near):
        return out
    p = points[near]
    cand = np.where(idx[near] < len(vertices), idx[near], 0)
    seg = owner[cand]
    a, b = starts[seg], ends[seg]
    ab = b - a
    length2 = np.maximum(np.sum(ab * ab, axis=-1), 1e-300)
    t = np.clip(np.sum((p[:, None, :] - a) * ab, axis=-1) / length2, 0.0, 1.0)
    foot = a + t[..., None] * ab
    d = np.hypot(*(p[:, None, :] - foot).transpose(2, 0, 1))
    d = np.where(idx[near] < len(vertices), d, np.inf)
    out[near] = np.minimum(d.min(axis=1), cap)
    return out


def redistance(field: GridField) -> GridField:
    """
    Rebuild u as the signed distance to its zero contour, clamped at ±M.

    The sign is kept from u, so the superlevel set {u ≥ 0} is unchanged node
    by node.

    Raises:
        NumericalAbort: no zero contour in the window
    """
    contours = zero_contours(field)
    if not contours:
        raise NumericalAbort("empty zero contour", shape=field.shape_name)
    x, y = field.coordinates()
    pts = np.column_stack([x.ravel(), y.ravel()])
    dist = polyline_distance(pts, contours, field.truncation).reshape(field.values.shape)
    sign = np.where(field.values >= 0.0, 1.0, -1.0)
    values = np.clip(sign * dist, -field.truncation, field.truncation)
    logger.debug("redistanced", shape=field.shape_name, contours=len(contours))
    return field.with_values(values)
