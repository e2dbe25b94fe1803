"""Cross-coordinate encoding of anchor-to-landmark offsets.

A planar offset ``(dx, dy)`` in image coordinates (y grows downward) is held
as four non-negative components ``[x_neg, x_pos, y_neg, y_pos]``: the
negative and positive parts of each axis. A hard encoding keeps at most one
side per axis nonzero. Softening lifts the zero side of each axis to a
fraction of the opposing side so that optimizers see gradient signal on all
four components; decoding takes the larger side per axis, so a softened
encoding still decodes to the exact original offset.

Everything here is a pure function over frozen values and safe to call from
any number of threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "OffsetVector",
    "AnchorPoint",
    "CrossOffset",
    "LandmarkRole",
    "LandmarkSet",
    "CONTOUR_LANDMARKS_DEFAULT",
    "KEYPOINT_COUNT",
    "encode_offset",
    "soften_target",
    "decode_offset",
    "landmarks_to_cross",
    "encode_offsets",
    "soften_targets",
    "decode_offsets",
]

CONTOUR_LANDMARKS_DEFAULT = 36
KEYPOINT_COUNT = 17


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} requires finite coordinates, got {v!r}")


@dataclass(frozen=True)
class OffsetVector:
    """Signed planar offset in pixels, y increasing downward."""

    dx: float
    dy: float

    def __post_init__(self) -> None:
        _require_finite("OffsetVector", self.dx, self.dy)


@dataclass(frozen=True)
class AnchorPoint:
    """Reference point inside an object from which landmark offsets are measured."""

    x: float
    y: float

    def __post_init__(self) -> None:
        _require_finite("AnchorPoint", self.x, self.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=np.float64)


@dataclass(frozen=True)
class CrossOffset:
    """Four-component non-negative encoding of a planar offset.

    Component order is ``[x_neg, x_pos, y_neg, y_pos]``; with y growing
    downward these are the leftward, rightward, upward, and downward reaches
    of the offset. Hard encodings have at most one nonzero side per axis;
    softened or freely predicted encodings may carry all four.
    """

    x_neg: float
    x_pos: float
    y_neg: float
    y_pos: float

    def __post_init__(self) -> None:
        for name in ("x_neg", "x_pos", "y_neg", "y_pos"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"CrossOffset.{name} must be finite and >= 0, got {v!r}")

    @property
    def components(self) -> tuple[float, float, float, float]:
        return (self.x_neg, self.x_pos, self.y_neg, self.y_pos)

    def as_array(self) -> np.ndarray:
        return np.array(self.components, dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "CrossOffset":
        values = [float(v) for v in values]
        if len(values) != 4:
            raise ValueError(f"CrossOffset needs 4 components, got {len(values)}")
        return cls(*values)

    def is_hard(self) -> bool:
        """True when at most one side per axis is nonzero."""
        return (self.x_neg == 0.0 or self.x_pos == 0.0) and (
            self.y_neg == 0.0 or self.y_pos == 0.0
        )


class LandmarkRole(Enum):
    """What the landmarks of a set describe; fixes the expected count."""

    EXTREME = "extreme"  # exactly 4, ordered top, left, bottom, right
    CONTOUR = "contour"  # >= 3 boundary samples, 36 by convention
    KEYPOINTS = "keypoints"  # exactly 17 pose keypoints


_FIXED_ROLE_COUNTS = {LandmarkRole.EXTREME: 4, LandmarkRole.KEYPOINTS: KEYPOINT_COUNT}


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    """An anchor point plus N role-tagged landmark points.

    ``landmarks`` is stored as a read-only float64 array of shape (N, 2).
    For the extreme role the order is fixed: top, left, bottom, right.
    """

    anchor: AnchorPoint
    landmarks: np.ndarray
    role: LandmarkRole

    def __post_init__(self) -> None:
        pts = np.array(self.landmarks, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"landmarks must be an (N, 2) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("landmark coordinates must be finite")
        expected = _FIXED_ROLE_COUNTS.get(self.role)
        if expected is not None and len(pts) != expected:
            raise ValueError(
                f"role {self.role.value!r} requires exactly {expected} landmarks, got {len(pts)}"
            )
        if self.role is LandmarkRole.CONTOUR and len(pts) < 3:
            raise ValueError(f"role 'contour' requires at least 3 landmarks, got {len(pts)}")
        pts.setflags(write=False)
        object.__setattr__(self, "landmarks", pts)

    def __len__(self) -> int:
        return len(self.landmarks)

    def offsets(self) -> np.ndarray:
        """Signed landmark offsets relative to the anchor, shape (N, 2)."""
        return self.landmarks - self.anchor.as_array()


def encode_offset(delta: OffsetVector) -> CrossOffset:
    """Split a signed offset into its four non-negative side components."""
    return CrossOffset(
        max(-delta.dx, 0.0),
        max(delta.dx, 0.0),
        max(-delta.dy, 0.0),
        max(delta.dy, 0.0),
    )


def _soften_axis(neg: float, pos: float, alpha: float) -> tuple[float, float]:
    if neg == 0.0 and pos == 0.0:
        return 0.0, 0.0
    if neg == 0.0:
        return alpha * pos, pos
    return neg, alpha * neg


def soften_target(hard: CrossOffset, alpha: float) -> CrossOffset:
    """Replace the zero side of each axis by ``alpha`` times the opposing side.

    The nonzero side is untouched and an all-zero axis stays zero, so a
    softened encoding decodes to exactly the same offset as the hard one.

    Args:
        hard: a hard encoding (one side per axis at most).
        alpha: softening fraction in the open interval (0, 1).
    """
    if not (math.isfinite(alpha) and 0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not hard.is_hard():
        raise ValueError("soften_target requires a hard encoding (one nonzero side per axis)")
    x_neg, x_pos = _soften_axis(hard.x_neg, hard.x_pos, alpha)
    y_neg, y_pos = _soften_axis(hard.y_neg, hard.y_pos, alpha)
    return CrossOffset(x_neg, x_pos, y_neg, y_pos)


def decode_offset(pred: CrossOffset) -> OffsetVector:
    """Collapse four components to a signed offset: larger side wins, ties positive."""
    dx = pred.x_pos if pred.x_pos >= pred.x_neg else -pred.x_neg
    dy = pred.y_pos if pred.y_pos >= pred.y_neg else -pred.y_neg
    return OffsetVector(dx, dy)


def landmarks_to_cross(landmark_set: LandmarkSet) -> list[CrossOffset]:
    """Encode every anchor-to-landmark offset of a set, in landmark order."""
    return [CrossOffset.from_array(row) for row in encode_offsets(landmark_set.offsets())]


def encode_offsets(deltas) -> np.ndarray:
    """Vectorized encoder mapping (..., 2) signed offsets to (..., 4) components."""
    d = np.asarray(deltas, dtype=np.float64)
    if d.shape[-1] != 2:
        raise ValueError(f"expected trailing dimension 2, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise ValueError("offsets must be finite")
    out = np.empty(d.shape[:-1] + (4,), dtype=np.float64)
    out[..., 0] = np.maximum(-d[..., 0], 0.0)
    out[..., 1] = np.maximum(d[..., 0], 0.0)
    out[..., 2] = np.maximum(-d[..., 1], 0.0)
    out[..., 3] = np.maximum(d[..., 1], 0.0)
    return out


def soften_targets(hard, alpha: float) -> np.ndarray:
    """Vectorized :func:`soften_target` over an (..., 4) component array."""
    if not (math.isfinite(alpha) and 0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    q = np.asarray(hard, dtype=np.float64)
    if q.shape[-1] != 4:
        raise ValueError(f"expected trailing dimension 4, got shape {q.shape}")
    if not np.all(np.isfinite(q)) or np.any(q < 0.0):
        raise ValueError("components must be finite and >= 0")
    x_hard = (q[..., 0] == 0.0) | (q[..., 1] == 0.0)
    y_hard = (q[..., 2] == 0.0) | (q[..., 3] == 0.0)
    if not (np.all(x_hard) and np.all(y_hard)):
        raise ValueError("soften_targets requires hard encodings (one nonzero side per axis)")
    out = q.copy()
    out[..., 0] = np.where(q[..., 0] == 0.0, alpha * q[..., 1], q[..., 0])
    out[..., 1] = np.where((q[..., 1] == 0.0) & (q[..., 0] != 0.0), alpha * q[..., 0], q[..., 1])
    out[..., 2] = np.where(q[..., 2] == 0.0, alpha * q[..., 3], q[..., 2])
    out[..., 3] = np.where((q[..., 3] == 0.0) & (q[..., 2] != 0.0), alpha * q[..., 2], q[..., 3])
    return out


def decode_offsets(components) -> np.ndarray:
    """Vectorized decoder mapping (..., 4) components to (..., 2) signed offsets."""
    q = np.asarray(components, dtype=np.float64)
    if q.shape[-1] != 4:
        raise ValueError(f"expected trailing dimension 4, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("components must be finite")
    if np.any(q < 0.0):
        raise ValueError("components must be >= 0")
    dx = np.where(q[..., 1] >= q[..., 0], q[..., 1], -q[..., 0])
    dy = np.where(q[..., 3] >= q[..., 2], q[..., 3], -q[..., 2])
    return np.stack([dx, dy], axis=-1)
