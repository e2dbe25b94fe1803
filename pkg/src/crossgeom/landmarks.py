"""Planar landmark geometry: extreme points, contour resampling, keypoint
boxes, polygon rasterization, and mask IoU.

Conventions: image coordinates with y increasing downward, so "top" means
minimal y and a boundary traversed clockwise on screen has positive shoelace
area. Polygons are simple, single-part, and stored without a repeated
closing vertex; multi-part instances are plain sequences of parts and holes
are not represented.

Everything is a pure function; corpora may be rasterized concurrently per
instance since nothing here shares mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cross_coord import (
    CONTOUR_LANDMARKS_DEFAULT,
    KEYPOINT_COUNT,
    AnchorPoint,
    LandmarkRole,
    LandmarkSet,
)
from .loss import BoundingBox

__all__ = [
    "PolygonContour",
    "ExtremeSet",
    "RasterMask",
    "KeypointInstance",
    "tight_box",
    "extreme_points",
    "extreme_box",
    "resample_contour",
    "kps_box",
    "rasterize",
    "mask_iou",
    "anchor_from_polygon",
]


def _signed_area(vertices: np.ndarray) -> float:
    x = vertices[:, 0]
    y = vertices[:, 1]
    x2 = np.roll(x, -1)
    y2 = np.roll(y, -1)
    return 0.5 * float(np.sum(x * y2 - x2 * y))


@dataclass(frozen=True, eq=False)
class PolygonContour:
    """A closed simple polygon over one connected part, stored as (V, 2) floats."""

    vertices: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError(f"vertices must be an (V, 2) array, got shape {v.shape}")
        if len(v) < 3:
            raise ValueError(f"a polygon needs at least 3 vertices, got {len(v)}")
        if not np.all(np.isfinite(v)):
            raise ValueError("polygon coordinates must be finite")
        if _signed_area(v) == 0.0:
            raise ValueError("degenerate polygon: zero signed area")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def signed_area(self) -> float:
        """Shoelace area; positive for clockwise-on-screen traversal (y down)."""
        return _signed_area(self.vertices)

    @property
    def area(self) -> float:
        return abs(self.signed_area)

    @property
    def perimeter(self) -> float:
        return float(_edge_lengths(self.vertices).sum())

    def oriented_clockwise(self) -> "PolygonContour":
        """This contour traversed clockwise on screen (positive shoelace)."""
        if self.signed_area > 0.0:
            return self
        return PolygonContour(self.vertices[::-1])


@dataclass(frozen=True)
class ExtremeSet:
    """The top/left/bottom/right boundary points of a contour."""

    top: tuple[float, float]
    left: tuple[float, float]
    bottom: tuple[float, float]
    right: tuple[float, float]

    def __post_init__(self) -> None:
        for name in ("top", "left", "bottom", "right"):
            x, y = getattr(self, name)
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"ExtremeSet.{name} must be finite")
        if self.top[1] > self.bottom[1] or self.left[0] > self.right[0]:
            raise ValueError("extreme points are not ordered (top above bottom, left of right)")


@dataclass(frozen=True, eq=False)
class RasterMask:
    """Boolean occupancy grid: ``bits[row, col]`` covers a ``cell_size`` square
    whose corner (0, 0) sits at ``origin``."""

    width: int
    height: int
    origin: tuple[float, float]
    cell_size: float
    bits: np.ndarray

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("mask dimensions must be positive")
        if not (math.isfinite(self.cell_size) and self.cell_size > 0.0):
            raise ValueError(f"cell_size must be > 0, got {self.cell_size!r}")
        b = np.array(self.bits, dtype=bool)
        if b.shape != (self.height, self.width):
            raise ValueError(f"bits shape {b.shape} does not match (height, width)")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def filled_cells(self) -> int:
        return int(self.bits.sum())

    @property
    def filled_area(self) -> float:
        """Occupied area in squared pixels."""
        return self.filled_cells * self.cell_size * self.cell_size

    def same_grid(self, other: "RasterMask") -> bool:
        return (
            self.width == other.width
            and self.height == other.height
            and math.isclose(self.origin[0], other.origin[0], rel_tol=0.0, abs_tol=1e-9)
            and math.isclose(self.origin[1], other.origin[1], rel_tol=0.0, abs_tol=1e-9)
            and math.isclose(self.cell_size, other.cell_size, rel_tol=1e-12, abs_tol=0.0)
        )


@dataclass(frozen=True, eq=False)
class KeypointInstance:
    """17 keypoints as (x, y, visibility) rows plus an instance scale.

    Visibility uses the annotation convention 0 = unlabeled, 1 = labeled but
    occluded, 2 = labeled and visible; the scale is an object-size proxy
    (square root of the box area) used to normalize distances.
    """

    points: np.ndarray
    scale: float

    def __post_init__(self) -> None:
        p = np.array(self.points, dtype=np.float64)
        if p.shape != (KEYPOINT_COUNT, 3):
            raise ValueError(f"points must have shape ({KEYPOINT_COUNT}, 3), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("keypoint values must be finite")
        if not np.all(np.isin(p[:, 2], (0.0, 1.0, 2.0))):
            raise ValueError("visibility flags must be 0, 1, or 2")
        if not (math.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError(f"scale must be > 0, got {self.scale!r}")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @property
    def xy(self) -> np.ndarray:
        return self.points[:, :2]

    @property
    def visibility(self) -> np.ndarray:
        return self.points[:, 2]


def _edge_lengths(vertices: np.ndarray) -> np.ndarray:
    return np.hypot(*(np.roll(vertices, -1, axis=0) - vertices).T)


def _as_parts(parts) -> list[PolygonContour]:
    if isinstance(parts, PolygonContour):
        return [parts]
    out = list(parts)
    if not out:
        raise ValueError("at least one polygon part is required")
    if not all(isinstance(p, PolygonContour) for p in out):
        raise ValueError("parts must be PolygonContour instances")
    return out


def tight_box(parts) -> BoundingBox:
    """Tight axis-aligned bounding box of one part or a sequence of parts."""
    stacked = np.vstack([p.vertices for p in _as_parts(parts)])
    return BoundingBox(
        float(stacked[:, 0].min()),
        float(stacked[:, 1].min()),
        float(stacked[:, 0].max()),
        float(stacked[:, 1].max()),
    )


def _extremal_run(vertices: np.ndarray, keys: np.ndarray) -> tuple[np.ndarray, float]:
    """Midpoint of the longest boundary run attaining ``min(keys)``.

    A run is a maximal chain of consecutive vertices (cyclically) at the
    extremal key value; because keys are linear in the coordinates, the edges
    inside the chain lie entirely at that value. Equal-length runs resolve to
    the one starting earliest along the boundary from vertex 0. Returns the
    midpoint and its arc-length position.
    """
    n = len(vertices)
    at = keys == keys.min()
    edge_len = _edge_lengths(vertices)
    cum = np.concatenate([[0.0], np.cumsum(edge_len)])

    starts = [i for i in range(n) if at[i] and not at[(i - 1) % n]]
    best: tuple[float, float, list[int]] | None = None  # (-run_len, start_arc, members)
    for s in starts:
        members = [s]
        k = (s + 1) % n
        while at[k] and k != s:
            members.append(k)
            k = (k + 1) % n
        run_len = sum(edge_len[m] for m in members[:-1])
        key = (-run_len, cum[s])
        if best is None or key < (best[0], best[1]):
            best = (key[0], key[1], members)
    assert best is not None, "a nondegenerate polygon always has an extremal vertex"

    _, start_arc, members = best
    run_len = -best[0]
    if run_len == 0.0:
        return vertices[members[0]].copy(), float(start_arc)
    half = 0.5 * run_len
    walked = 0.0
    for m in members[:-1]:
        step = edge_len[m]
        if walked + step >= half:
            t = (half - walked) / step
            a = vertices[m]
            b = vertices[(m + 1) % n]
            return a + t * (b - a), float(cum[m] + (half - walked))
        walked += step
    # Numerical fallthrough: half landed on the run's final vertex.
    last = members[-1]
    return vertices[last].copy(), float(cum[last])


def extreme_points(poly: PolygonContour) -> ExtremeSet:
    """Top, left, bottom, and right boundary points of a contour.

    Each extreme is the arc-length midpoint of the longest boundary run
    attaining the extremal coordinate, with ties between runs broken by the
    smallest arc-length start from vertex 0.
    """
    v = poly.vertices
    top, _ = _extremal_run(v, v[:, 1])
    bottom, _ = _extremal_run(v, -v[:, 1])
    left, _ = _extremal_run(v, v[:, 0])
    right, _ = _extremal_run(v, -v[:, 0])
    return ExtremeSet(
        top=(float(top[0]), float(top[1])),
        left=(float(left[0]), float(left[1])),
        bottom=(float(bottom[0]), float(bottom[1])),
        right=(float(right[0]), float(right[1])),
    )


def extreme_box(extremes: ExtremeSet) -> BoundingBox:
    """The rectangle spanned by the four extreme points."""
    return BoundingBox(extremes.left[0], extremes.top[1], extremes.right[0], extremes.bottom[1])


def _points_at_arcs(vertices: np.ndarray, arcs: np.ndarray) -> np.ndarray:
    edge_len = _edge_lengths(vertices)
    cum = np.concatenate([[0.0], np.cumsum(edge_len)])
    idx = np.searchsorted(cum, arcs, side="right") - 1
    idx = np.clip(idx, 0, len(edge_len) - 1)
    denom = np.where(edge_len[idx] > 0.0, edge_len[idx], 1.0)
    t = (arcs - cum[idx]) / denom
    starts = vertices[idx]
    deltas = vertices[(idx + 1) % len(vertices)] - starts
    return starts + t[:, None] * deltas


def resample_contour(poly: PolygonContour, n: int = CONTOUR_LANDMARKS_DEFAULT) -> LandmarkSet:
    """Resample a contour into ``n`` landmarks at equal arc-length spacing.

    Sampling starts at the top extreme point of the clockwise-on-screen
    traversal and proceeds in that direction; the anchor is the center of
    the contour's tight bounding box.
    """
    if n < 3:
        raise ValueError(f"need at least 3 landmarks, got {n}")
    v = poly.oriented_clockwise().vertices
    perimeter = float(_edge_lengths(v).sum())
    if perimeter <= 0.0:
        raise ValueError("degenerate polygon: zero perimeter")
    _, start_arc = _extremal_run(v, v[:, 1])
    arcs = np.mod(start_arc + np.arange(n) * (perimeter / n), perimeter)
    points = _points_at_arcs(v, arcs)
    box = tight_box(poly)
    cx, cy = box.center
    return LandmarkSet(anchor=AnchorPoint(cx, cy), landmarks=points, role=LandmarkRole.CONTOUR)


def kps_box(instance: KeypointInstance) -> BoundingBox:
    """Tight bounding box of the visible keypoints (visibility > 0)."""
    vis = instance.visibility > 0.0
    if not vis.any():
        raise ValueError("kps_box requires at least one visible keypoint")
    xy = instance.xy[vis]
    return BoundingBox(
        float(xy[:, 0].min()), float(xy[:, 1].min()), float(xy[:, 0].max()), float(xy[:, 1].max())
    )


def _fill_part(vertices: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Even-odd scanline fill of one polygon over the given cell centers.

    Horizontal edges never cross a scanline, so a center exactly on one
    belongs to the region below it; in x the fill is left-closed/right-open.
    """
    x1 = vertices[:, 0]
    y1 = vertices[:, 1]
    x2 = np.roll(x1, -1)
    y2 = np.roll(y1, -1)
    keep = y1 != y2
    x1, y1, x2, y2 = x1[keep], y1[keep], x2[keep], y2[keep]
    out = np.zeros((len(ys), len(xs)), dtype=bool)
    if len(x1) == 0:
        return out
    ylo = np.minimum(y1, y2)
    yhi = np.maximum(y1, y2)
    slope = (x2 - x1) / (y2 - y1)
    for j, yc in enumerate(ys):
        active = (ylo <= yc) & (yc < yhi)
        if not active.any():
            continue
        crossings = x1[active] + (yc - y1[active]) * slope[active]
        crossings.sort()
        # A center is inside iff an odd number of crossings lies strictly right of it.
        pos = np.searchsorted(crossings, xs, side="right")
        out[j] = (len(crossings) - pos) % 2 == 1
    return out


def rasterize(parts, max_dim: int = 512, bounds: BoundingBox | None = None) -> RasterMask:
    """Rasterize one or more polygon parts onto a shared square-cell grid.

    The grid covers ``bounds`` (the parts' joint tight box by default) with
    ``max_dim`` cells along the longer side. A cell is set iff its center is
    inside any part by the even-odd rule.
    """
    part_list = _as_parts(parts)
    if max_dim < 8:
        raise ValueError(f"max_dim must be >= 8, got {max_dim}")
    if bounds is None:
        bounds = tight_box(part_list)
    w, h = bounds.width, bounds.height
    if w <= 0.0 or h <= 0.0:
        raise ValueError("bounds must span both axes")
    cell = max(w, h) / max_dim
    nx = max_dim if w >= h else max(1, math.ceil(w / cell - 1e-9))
    ny = max_dim if h >= w else max(1, math.ceil(h / cell - 1e-9))
    xs = bounds.x_min + (np.arange(nx) + 0.5) * cell
    ys = bounds.y_min + (np.arange(ny) + 0.5) * cell
    bits = np.zeros((ny, nx), dtype=bool)
    for part in part_list:
        bits |= _fill_part(part.vertices, xs, ys)
    return RasterMask(
        width=nx, height=ny, origin=(bounds.x_min, bounds.y_min), cell_size=cell, bits=bits
    )


def mask_iou(a: RasterMask, b: RasterMask) -> float:
    """Intersection over union of two masks on the same grid; 1 if both empty."""
    if not a.same_grid(b):
        raise ValueError("mask grids do not match (width/height/origin/cell size)")
    inter = int((a.bits & b.bits).sum())
    union = int((a.bits | b.bits).sum())
    if union == 0:
        return 1.0
    return inter / union


def anchor_from_polygon(parts) -> AnchorPoint:
    """Anchor for an instance: the center of the joint tight box of its parts."""
    cx, cy = tight_box(parts).center
    return AnchorPoint(cx, cy)
