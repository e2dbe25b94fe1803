"""Independent oracles shared across the test suite.

These deliberately avoid the library's own code paths: gradients come from
central finite differences, and boundary geometry is checked with shapely.
"""

from __future__ import annotations

import numpy as np
from shapely.geometry import LinearRing, Point

from crossgeom import cross_iou_batch


def finite_difference_ciou(pred: np.ndarray, target: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of the cross-IoU in each pred component."""
    grad = np.zeros_like(pred)
    for i in range(pred.shape[-1]):
        hi = pred.copy()
        lo = pred.copy()
        hi[..., i] += step
        lo[..., i] -= step
        grad[..., i] = (cross_iou_batch(hi, target) - cross_iou_batch(lo, target)) / (2 * step)
    return grad


def finite_difference_scalar(fn, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of a flat vector."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[i] += step
        lo[i] -= step
        grad[i] = (fn(hi) - fn(lo)) / (2 * step)
    return grad


def boundary_ring(vertices: np.ndarray) -> LinearRing:
    return LinearRing([tuple(v) for v in vertices])


def distance_to_boundary(vertices: np.ndarray, points: np.ndarray) -> np.ndarray:
    ring = boundary_ring(vertices)
    return np.array([ring.distance(Point(*p)) for p in points])


def arc_positions(vertices: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Arc-length position of each point along the ring, via shapely."""
    ring = boundary_ring(vertices)
    return np.array([ring.project(Point(*p)) for p in points])


def random_hard_offsets(rng: np.random.Generator, count: int, scale: float = 10.0) -> np.ndarray:
    """Random (count, 2) signed offsets with both axes bounded away from zero."""
    magnitude = rng.uniform(1e-3, scale, size=(count, 2))
    sign = rng.choice([-1.0, 1.0], size=(count, 2))
    return magnitude * sign


def random_components(rng: np.random.Generator, count: int, zero_prob: float = 0.0) -> np.ndarray:
    """Random (count, 4) non-negative component rows, optionally with zeros."""
    comps = rng.uniform(0.0, 10.0, size=(count, 4))
    if zero_prob > 0.0:
        comps[rng.uniform(size=comps.shape) < zero_prob] = 0.0
    return comps
