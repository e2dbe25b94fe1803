"""Evaluation measures: keypoint similarity, multi-threshold recall, and the
landmark-count fidelity report.

The threshold sweep scores a list of matched-pair IoUs against the ten
standard thresholds 0.50 to 0.95 in steps of 0.05; its mean recall plays the
role of AP in the matched-pair setting (each quantized polygon is scored only
against its own source mask, so there is no detection matching). Instances
are processed in input order and reductions are order-stable, so reports are
reproducible regardless of how callers schedule the per-instance work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .landmarks import (
    KeypointInstance,
    PolygonContour,
    mask_iou,
    rasterize,
    resample_contour,
    tight_box,
)

__all__ = [
    "KEYPOINT_SIGMAS",
    "KEYPOINT_KAPPAS",
    "IOU_THRESHOLDS",
    "ThresholdSweep",
    "QuantizationRow",
    "oks",
    "ap_over_thresholds",
    "quantized_instance_iou",
    "quantization_report",
]

# Per-keypoint tolerance constants of the standard 17-keypoint evaluation
# protocol: nose, eyes, ears, shoulders, elbows, wrists, hips, knees, ankles.
KEYPOINT_SIGMAS = np.array(
    [0.026, 0.025, 0.025, 0.035, 0.035, 0.079, 0.079, 0.072, 0.072,
     0.062, 0.062, 0.107, 0.107, 0.087, 0.087, 0.089, 0.089]
)
KEYPOINT_SIGMAS.setflags(write=False)
KEYPOINT_KAPPAS = 2.0 * KEYPOINT_SIGMAS
KEYPOINT_KAPPAS.setflags(write=False)

IOU_THRESHOLDS = (0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95)


@dataclass(frozen=True)
class ThresholdSweep:
    """Recall at each of the ten IoU thresholds plus their mean."""

    thresholds: tuple[float, ...]
    per_threshold_recall: tuple[float, ...]
    ap: float


@dataclass(frozen=True)
class QuantizationRow:
    """One landmark budget's fidelity over a corpus."""

    n: int
    ap: float
    mean_iou: float
    instances: int
    skipped: int


def oks(pred: KeypointInstance, gt: KeypointInstance) -> float:
    """Object keypoint similarity between a predicted and a reference instance.

    Averages ``exp(-d**2 / (2 * s**2 * kappa**2))`` over the keypoints the
    reference marks visible, where ``d`` is the Euclidean displacement,
    ``s`` the reference scale, and ``kappa`` the standard per-keypoint
    constants.
    """
    vis = gt.visibility > 0.0
    if not vis.any():
        raise ValueError("oks requires at least one visible reference keypoint")
    d2 = ((pred.xy[vis] - gt.xy[vis]) ** 2).sum(axis=-1)
    k2 = KEYPOINT_KAPPAS[vis] ** 2
    e = d2 / (2.0 * gt.scale * gt.scale * k2)
    return float(np.exp(-e).mean())


def ap_over_thresholds(ious: Sequence[float]) -> ThresholdSweep:
    """Fraction of matched-pair IoUs clearing each threshold, and the mean."""
    arr = np.asarray(ious, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("ap_over_thresholds requires at least one IoU value")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("IoU values must lie in [0, 1]")
    recalls = tuple(float((arr >= t).mean()) for t in IOU_THRESHOLDS)
    return ThresholdSweep(
        thresholds=IOU_THRESHOLDS,
        per_threshold_recall=recalls,
        ap=float(np.mean(recalls)),
    )


def _split_landmark_budget(perimeters: Sequence[float], n: int) -> list[int]:
    """Split ``n`` landmarks across parts in proportion to perimeter.

    Every part keeps at least 3 landmarks, so instances with many parts may
    use slightly more than ``n`` in total. Largest-remainder rounding keeps
    the split deterministic.
    """
    total = sum(perimeters)
    if total <= 0.0:
        raise ValueError("parts have zero total perimeter")
    raw = [n * p / total for p in perimeters]
    counts = [max(3, math.floor(r)) for r in raw]
    remainders = sorted(
        range(len(raw)), key=lambda i: (raw[i] - math.floor(raw[i]), -i), reverse=True
    )
    deficit = n - sum(counts)
    for i in remainders:
        if deficit <= 0:
            break
        counts[i] += 1
        deficit -= 1
    return counts


def quantized_instance_iou(parts, n: int, max_dim: int = 512) -> float:
    """Mask IoU between an instance and its n-landmark polygon approximation.

    Both the original parts and the resampled polygons are rasterized on the
    instance's own grid so the comparison is resolution-consistent.
    """
    part_list = [parts] if isinstance(parts, PolygonContour) else list(parts)
    if not part_list:
        raise ValueError("instance has no polygon parts")
    if n < 3:
        raise ValueError(f"need at least 3 landmarks, got {n}")
    budgets = _split_landmark_budget([p.perimeter for p in part_list], n)
    approx = [
        PolygonContour(resample_contour(p, b).landmarks) for p, b in zip(part_list, budgets)
    ]
    bounds = tight_box(part_list)
    original = rasterize(part_list, max_dim, bounds=bounds)
    quantized = rasterize(approx, max_dim, bounds=bounds)
    return mask_iou(original, quantized)


def quantization_report(
    instances, n_values: Sequence[int], max_dim: int = 512
) -> list[QuantizationRow]:
    """Landmark-count fidelity study over a corpus of polygon instances.

    For each landmark budget, every instance is resampled, rasterized against
    its source, and scored by mask IoU; the per-budget row carries the
    threshold-sweep mean and the mean IoU. Instances whose geometry fails are
    skipped and counted per budget rather than aborting the study.
    """
    instance_list = [
        [parts] if isinstance(parts, PolygonContour) else list(parts) for parts in instances
    ]
    if not instance_list:
        raise ValueError("quantization_report requires a non-empty corpus")
    budgets = list(n_values)
    if not budgets:
        raise ValueError("quantization_report requires at least one landmark count")
    for n in budgets:
        if n < 3:
            raise ValueError(f"landmark counts must be >= 3, got {n}")

    ious_per_n: dict[int, list[float]] = {n: [] for n in budgets}
    skipped_per_n: dict[int, int] = {n: 0 for n in budgets}
    for parts in instance_list:
        # The source mask is shared by every budget of this instance.
        try:
            bounds = tight_box(parts)
            original = rasterize(parts, max_dim, bounds=bounds)
            perimeters = [p.perimeter for p in parts]
        except ValueError:
            for n in budgets:
                skipped_per_n[n] += 1
            continue
        for n in budgets:
            try:
                counts = _split_landmark_budget(perimeters, n)
                approx = [
                    PolygonContour(resample_contour(p, b).landmarks)
                    for p, b in zip(parts, counts)
                ]
                quantized = rasterize(approx, max_dim, bounds=bounds)
                iou = mask_iou(original, quantized)
            except ValueError:
                skipped_per_n[n] += 1
                continue
            ious_per_n[n].append(iou)

    rows = []
    for n in budgets:
        ious = ious_per_n[n]
        if not ious:
            raise ValueError(f"every instance failed at n={n}")
        sweep = ap_over_thresholds(ious)
        rows.append(
            QuantizationRow(
                n=n,
                ap=sweep.ap,
                mean_iou=float(np.mean(ious)),
                instances=len(ious),
                skipped=skipped_per_n[n],
            )
        )
    return rows
