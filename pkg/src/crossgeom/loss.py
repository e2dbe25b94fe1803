"""Similarity losses over cross-coordinate encodings and axis-aligned boxes.

The cross-IoU of two four-component encodings is the ratio of the l1 norms
of their componentwise minimum and maximum: 1 at equality, 0 for disjoint
supports, and invariant under joint positive rescaling. The per-landmark
loss is one minus the mean cross-IoU. Smooth-l1 and (G)IoU baselines on
rectangles are provided for comparison studies, together with analytic
(sub)gradients for gradient-descent fitting.

All functions are pure and thread-safe. Batch variants operate on plain
``(..., 4)`` float arrays and back the typed single-pair API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cross_coord import CrossOffset

__all__ = [
    "DENOMINATOR_EPSILON",
    "BoundingBox",
    "LossValue",
    "cross_iou",
    "cross_iou_batch",
    "cross_iou_grad",
    "cross_iou_grad_batch",
    "cross_iou_loss",
    "smooth_l1_loss",
    "box_iou",
    "giou",
    "giou_loss",
    "giou_grad",
]

DENOMINATOR_EPSILON = 1e-12


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel corner coordinates, possibly zero-area."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        for name in ("x_min", "y_min", "x_max", "y_max"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"BoundingBox.{name} must be finite, got {v!r}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(
                f"invalid box: ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))


@dataclass(frozen=True)
class LossValue:
    """Scalar loss with an optional per-landmark breakdown."""

    value: float
    per_landmark: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.value) or self.value < 0.0:
            raise ValueError(f"loss value must be finite and >= 0, got {self.value!r}")


def _as_components(values, name: str) -> np.ndarray:
    q = np.asarray(values, dtype=np.float64)
    if q.shape[-1] != 4:
        raise ValueError(f"{name} must have trailing dimension 4, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError(f"{name} components must be finite")
    if np.any(q < 0.0):
        raise ValueError(f"{name} components must be >= 0")
    return q


def cross_iou_batch(pred, target) -> np.ndarray:
    """Row-wise cross-IoU of two (..., 4) non-negative component arrays.

    Rows where both sides are entirely zero score 1.0 (a coincident
    anchor/landmark pair is a perfect match); otherwise the denominator is
    floored at :data:`DENOMINATOR_EPSILON`.
    """
    p = _as_components(pred, "pred")
    t = _as_components(target, "target")
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    s_min = np.minimum(p, t).sum(axis=-1)
    s_max = np.maximum(p, t).sum(axis=-1)
    ratio = s_min / np.maximum(s_max, DENOMINATOR_EPSILON)
    return np.where(s_max == 0.0, 1.0, ratio)


def cross_iou(pred: CrossOffset, target: CrossOffset) -> float:
    """Cross-IoU of a single encoding pair, in [0, 1].

    Equals 1 exactly iff the encodings are componentwise equal or both
    all-zero; equals 0 when their supports are disjoint.
    """
    return float(cross_iou_batch(pred.as_array(), target.as_array()))


def cross_iou_grad_batch(pred, target) -> np.ndarray:
    """Row-wise subgradient of :func:`cross_iou_batch` with respect to ``pred``.

    A component below its target contributes to the min-sum and gets
    ``1 / s_max``; a component above contributes to the max-sum and gets
    ``-s_min / s_max**2``; at a tie the midpoint of the two one-sided values
    is used. The denominator is floored at :data:`DENOMINATOR_EPSILON`.
    """
    p = _as_components(pred, "pred")
    t = _as_components(target, "target")
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    s_min = np.minimum(p, t).sum(axis=-1)
    s_max = np.maximum(np.maximum(p, t).sum(axis=-1), DENOMINATOR_EPSILON)
    below = 1.0 / s_max
    above = -s_min / (s_max * s_max)
    mid = 0.5 * (below + above)
    below, above, mid = (np.broadcast_to(g[..., None], p.shape) for g in (below, above, mid))
    return np.where(p < t, below, np.where(p > t, above, mid))


def cross_iou_grad(pred: CrossOffset, target: CrossOffset) -> np.ndarray:
    """Subgradient of :func:`cross_iou` with respect to ``pred``, shape (4,)."""
    return cross_iou_grad_batch(pred.as_array(), target.as_array())


def cross_iou_loss(pred, target) -> LossValue:
    """One minus the mean per-landmark cross-IoU over two encoding sequences.

    Returns the scalar loss along with the individual cross-IoU values so
    that callers can inspect the per-landmark breakdown.
    """
    pred = list(pred)
    target = list(target)
    if len(pred) != len(target):
        raise ValueError(f"length mismatch: {len(pred)} vs {len(target)}")
    if not pred:
        raise ValueError("cross_iou_loss requires at least one landmark pair")
    p = np.stack([q.as_array() for q in pred])
    t = np.stack([q.as_array() for q in target])
    values = cross_iou_batch(p, t)
    return LossValue(float(1.0 - values.mean()), tuple(float(v) for v in values))


def smooth_l1_loss(pred, target, beta: float = 1.0) -> float:
    """Mean elementwise smooth-l1: quadratic within ``beta``, linear outside."""
    if not (math.isfinite(beta) and beta > 0.0):
        raise ValueError(f"beta must be > 0, got {beta!r}")
    p = np.asarray(pred, dtype=np.float64).ravel()
    t = np.asarray(target, dtype=np.float64).ravel()
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.size} vs {t.size}")
    if p.size == 0:
        raise ValueError("smooth_l1_loss requires at least one element")
    d = p - t
    a = np.abs(d)
    vals = np.where(a < beta, 0.5 * d * d / beta, a - 0.5 * beta)
    return float(vals.sum() / d.size)


def box_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0 when the union is empty."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = iw * ih if (iw > 0.0 and ih > 0.0) else 0.0
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def giou(a: BoundingBox, b: BoundingBox) -> float:
    """Generalized IoU: IoU penalized by the empty share of the enclosing box."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = iw * ih if (iw > 0.0 and ih > 0.0) else 0.0
    union = a.area + b.area - inter
    iou = inter / union if union > 0.0 else 0.0
    cw = max(a.x_max, b.x_max) - min(a.x_min, b.x_min)
    ch = max(a.y_max, b.y_max) - min(a.y_min, b.y_min)
    enclosing = cw * ch
    if enclosing <= 0.0:
        return iou
    return iou - (enclosing - union) / enclosing


def giou_loss(a: BoundingBox, b: BoundingBox) -> float:
    """One minus :func:`giou`, in [0, 2]."""
    return 1.0 - giou(a, b)


def giou_grad(pred: BoundingBox, target: BoundingBox) -> np.ndarray:
    """Subgradient of ``giou(pred, target)`` in pred's (x_min, y_min, x_max, y_max).

    When a pred edge ties the matching target edge the pred branch is kept,
    which picks one valid one-sided derivative; in particular the gradient is
    exactly zero when the boxes coincide.
    """
    axm, aym, axM, ayM = pred.x_min, pred.y_min, pred.x_max, pred.y_max
    bxm, bym, bxM, byM = target.x_min, target.y_min, target.x_max, target.y_max

    iw = min(axM, bxM) - max(axm, bxm)
    ih = min(ayM, byM) - max(aym, bym)
    has_inter = iw > 0.0 and ih > 0.0
    inter = iw * ih if has_inter else 0.0
    union = max(pred.area + target.area - inter, DENOMINATOR_EPSILON)
    cw = max(axM, bxM) - min(axm, bxm)
    ch = max(ayM, byM) - min(aym, bym)
    c_area = max(cw * ch, DENOMINATOR_EPSILON)

    d_inter = np.zeros(4)
    if has_inter:
        if axm >= bxm:
            d_inter[0] = -ih
        if aym >= bym:
            d_inter[1] = -iw
        if axM <= bxM:
            d_inter[2] = ih
        if ayM <= byM:
            d_inter[3] = iw
    d_area = np.array([-pred.height, -pred.width, pred.height, pred.width])
    d_union = d_area - d_inter
    d_c = np.zeros(4)
    if axm <= bxm:
        d_c[0] = -ch
    if aym <= bym:
        d_c[1] = -cw
    if axM >= bxM:
        d_c[2] = ch
    if ayM >= byM:
        d_c[3] = cw

    d_iou = (d_inter * union - inter * d_union) / (union * union)
    d_penalty = (d_union * c_area - union * d_c) / (c_area * c_area)
    return d_iou + d_penalty
