from typing import Iterable, Sequence, Union

import numpy as np

from kac_lab.exceptions import GeometryError

PointLike = Union[float, Sequence[float], np.ndarray]

"""
Coerce user-supplied coordinates into float arrays of a fixed dimension.
"""


def as_point(x: PointLike, dimension: int = None) -> np.ndarray:
    point = np.atleast_1d(np.asarray(x, dtype=float))
    if point.ndim != 1:
        raise GeometryError("A point must be a flat coordinate vector, got shape {}".format(point.shape))
    if dimension is not None and point.shape[0] != dimension:
        raise GeometryError(
            "Expected a point in R^{}, got {} coordinates".format(dimension, point.shape[0])
        )
    if not np.all(np.isfinite(point)):
        raise GeometryError("Point coordinates must be finite: {}".format(point))
    return point


def as_points(xs: Iterable[PointLike], dimension: int) -> np.ndarray:
    """Stack points into an (n, dimension) array."""
    stacked = np.asarray(xs, dtype=float)
    if dimension == 1 and stacked.ndim == 1:
        stacked = stacked[:, None]
    if stacked.ndim != 2 or stacked.shape[1] != dimension:
        raise GeometryError(
            "Expected points in R^{}, got array of shape {}".format(dimension, stacked.shape)
        )
    return stacked


def unit_vector(v: PointLike) -> np.ndarray:
    vector = as_point(v)
    length = np.linalg.norm(vector)
    if length == 0.0:
        raise GeometryError("A normal vector must be nonzero")
    return vector / length


def point_label(x: PointLike) -> str:
    """Render a point the way CSV rows and report lines show it."""
    return "(" + ",".join("{:.6g}".format(c) for c in np.atleast_1d(x)) + ")"
