"""Annotation ingest and seeded synthetic corpora.

Reads COCO-layout annotation files (top-level images/annotations/categories
arrays; bbox as ``[x, y, w, h]``, segmentation as polygon coordinate lists,
keypoints as 51 numbers) into the library's geometric types, and writes
datasets back out so corpora round-trip through files. Run-length-encoded
segmentations and crowd regions are not parsed; they are counted in the
dataset's ``skipped`` tally.

The synthetic generator produces three deterministic shape families: convex
hulls, radial stars with deep concavities (shapes where a ray from the
anchor can cross the boundary several times), and multi-part instances.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial import ConvexHull

from .cross_coord import KEYPOINT_COUNT, AnchorPoint
from .landmarks import KeypointInstance, PolygonContour, tight_box
from .loss import BoundingBox

__all__ = [
    "CocoParseError",
    "AnnotationRecord",
    "Dataset",
    "ShapeFamily",
    "parse_coco",
    "write_dataset",
    "synth_shapes",
    "max_ray_crossings",
]


class CocoParseError(ValueError):
    """Structured parse failure; ``offset`` is the byte position when known."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True, eq=False)
class AnnotationRecord:
    """One instance: at least one of box, polygon parts, or keypoints."""

    instance_id: int
    category: int
    bbox: BoundingBox | None
    parts: tuple[PolygonContour, ...]
    keypoints: KeypointInstance | None

    def __post_init__(self) -> None:
        if self.bbox is None and not self.parts and self.keypoints is None:
            raise ValueError(f"record {self.instance_id} carries no target at all")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Parsed records plus a provenance string and the skipped-annotation tally."""

    records: tuple[AnnotationRecord, ...]
    source: str
    skipped: int

    def __post_init__(self) -> None:
        ids = [r.instance_id for r in self.records]
        if len(ids) != len(set(ids)):
            raise ValueError("instance ids must be unique")

    def __len__(self) -> int:
        return len(self.records)


def _parse_bbox(raw) -> BoundingBox | None:
    if raw is None:
        return None
    x, y, w, h = (float(v) for v in raw)
    if w < 0.0 or h < 0.0:
        raise ValueError(f"negative box size: {raw!r}")
    return BoundingBox(x, y, x + w, y + h)


def _parse_parts(segmentation) -> tuple[list[PolygonContour], bool]:
    """Polygon parts plus a flag for unsupported/degenerate components."""
    if segmentation is None or segmentation == []:
        return [], False
    if isinstance(segmentation, dict):
        return [], True  # run-length masks are not parsed
    parts: list[PolygonContour] = []
    flawed = False
    for ring in segmentation:
        coords = np.asarray(ring, dtype=np.float64)
        if coords.ndim != 1 or coords.size < 6 or coords.size % 2 != 0:
            flawed = True
            continue
        try:
            parts.append(PolygonContour(coords.reshape(-1, 2)))
        except ValueError:
            flawed = True
    return parts, flawed


def _parse_keypoints(raw, bbox: BoundingBox | None) -> tuple[KeypointInstance | None, bool]:
    if raw is None:
        return None, False
    values = [float(v) for v in raw]
    if len(values) != 3 * KEYPOINT_COUNT:
        return None, True
    if bbox is None or bbox.area <= 0.0:
        return None, True  # the scale proxy needs a positive box area
    points = np.asarray(values, dtype=np.float64).reshape(KEYPOINT_COUNT, 3)
    try:
        instance = KeypointInstance(points=points, scale=math.sqrt(bbox.area))
    except ValueError:
        return None, True
    return instance, False


def parse_coco(data: bytes | str, source: str = "coco") -> Dataset:
    """Parse a COCO-layout annotation file into a :class:`Dataset`.

    Unknown fields are ignored. ``skipped`` counts annotations that were
    dropped entirely (crowd regions, missing id, no usable target) plus
    annotations kept with an unsupported or degenerate component (RLE
    segmentation, malformed polygon ring or keypoint list).
    """
    try:
        payload = json.loads(data)
    except json.JSONDecodeError as exc:
        raise CocoParseError(f"invalid JSON at byte {exc.pos}: {exc.msg}", offset=exc.pos)
    if not isinstance(payload, dict) or not isinstance(payload.get("annotations"), list):
        raise CocoParseError("missing top-level 'annotations' array")

    records: list[AnnotationRecord] = []
    seen: set[int] = set()
    skipped = 0
    for ann in payload["annotations"]:
        if not isinstance(ann, dict):
            skipped += 1
            continue
        if ann.get("iscrowd"):
            skipped += 1
            continue
        instance_id = ann.get("id")
        if not isinstance(instance_id, int) or isinstance(instance_id, bool):
            skipped += 1
            continue
        if instance_id in seen:
            raise CocoParseError(f"duplicate instance id {instance_id}")
        flawed = False
        try:
            bbox = _parse_bbox(ann.get("bbox"))
        except (TypeError, ValueError):
            bbox = None
            flawed = True
        parts, parts_flawed = _parse_parts(ann.get("segmentation"))
        keypoints, kp_flawed = _parse_keypoints(ann.get("keypoints"), bbox)
        flawed = flawed or parts_flawed or kp_flawed
        if bbox is None and not parts and keypoints is None:
            skipped += 1
            continue
        if flawed:
            skipped += 1
        seen.add(instance_id)
        records.append(
            AnnotationRecord(
                instance_id=instance_id,
                category=int(ann.get("category_id", 0)),
                bbox=bbox,
                parts=tuple(parts),
                keypoints=keypoints,
            )
        )
    return Dataset(records=tuple(records), source=source, skipped=skipped)


def _record_bbox(record: AnnotationRecord) -> BoundingBox:
    if record.bbox is not None:
        return record.bbox
    if record.parts:
        return tight_box(record.parts)
    # Keypoint-only record: a square of area scale**2 around the keypoint
    # centroid makes the scale proxy survive a write/parse round trip.
    kp = record.keypoints
    assert kp is not None
    cx, cy = kp.xy.mean(axis=0)
    half = kp.scale / 2.0
    return BoundingBox(cx - half, cy - half, cx + half, cy + half)


def write_dataset(dataset: Dataset) -> bytes:
    """Serialize a dataset into the COCO annotation layout.

    Floats are emitted at full shortest-round-trip precision, so parsing the
    output reproduces ids, part structure, geometry, and keypoint
    visibilities exactly.
    """
    annotations = []
    categories: set[int] = set()
    max_x = 1.0
    max_y = 1.0
    for record in dataset.records:
        categories.add(record.category)
        box = _record_bbox(record)
        max_x = max(max_x, box.x_max)
        max_y = max(max_y, box.y_max)
        ann = {
            "id": record.instance_id,
            "image_id": 1,
            "category_id": record.category,
            "bbox": [box.x_min, box.y_min, box.width, box.height],
            "area": box.area,
            "iscrowd": 0,
        }
        if record.parts:
            ann["segmentation"] = [
                [float(v) for v in part.vertices.ravel()] for part in record.parts
            ]
        if record.keypoints is not None:
            flat: list[float] = []
            for x, y, v in record.keypoints.points:
                flat.extend([float(x), float(y), int(v)])
            ann["keypoints"] = flat
            ann["num_keypoints"] = int((record.keypoints.visibility > 0).sum())
        annotations.append(ann)
    doc = {
        "images": [
            {
                "id": 1,
                "file_name": "synthetic.png",
                "width": int(math.ceil(max_x)) + 1,
                "height": int(math.ceil(max_y)) + 1,
            }
        ],
        "annotations": annotations,
        "categories": [{"id": c, "name": f"category-{c}"} for c in sorted(categories)],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


class ShapeFamily(Enum):
    CONVEX = "convex"
    STAR = "star"
    MULTI_PART = "multi_part"


def _convex_vertices(rng: np.random.Generator) -> np.ndarray:
    """Hull of a random point cloud with 8 to 32 vertices, roughly unit-sized."""
    while True:
        cloud = rng.uniform(-1.0, 1.0, size=(int(rng.integers(60, 140)), 2))
        hull = ConvexHull(cloud)
        if 8 <= len(hull.vertices) <= 32:
            return cloud[hull.vertices]


def _place(rng: np.random.Generator, unit: np.ndarray) -> np.ndarray:
    scale = 10.0 ** rng.uniform(0.8, 2.5)
    aspect = rng.uniform(0.6, 1.6)
    center = rng.uniform(100.0, 900.0, size=2)
    return unit * np.array([scale * aspect, scale]) + center


def _synth_convex(rng: np.random.Generator) -> list[PolygonContour]:
    return [PolygonContour(_place(rng, _convex_vertices(rng)))]


def _star_vertices(rng: np.random.Generator) -> np.ndarray:
    """Radial polygon with deep pockets and one heavy lobe.

    The lobe drags the tight-box center away from the radial origin, so rays
    cast from the anchor cut obliquely across the spikes and can cross the
    boundary several times.
    """
    spikes = int(rng.integers(8, 17))
    count = 2 * spikes
    angles = (np.arange(count) + rng.uniform(-0.3, 0.3, size=count)) * (2.0 * np.pi / count)
    radii = np.where(
        np.arange(count) % 2 == 0,
        rng.uniform(0.75, 1.0, size=count),
        rng.uniform(0.06, 0.18, size=count),
    )
    lobe_phase = rng.uniform(0.0, 2.0 * np.pi)
    radii = radii * (0.35 + 0.4 * (1.0 + np.cos(angles - lobe_phase)))
    stretch = rng.uniform(1.8, 3.2)
    verts = np.column_stack([radii * np.cos(angles) * stretch, radii * np.sin(angles)])
    return verts


def _synth_star(rng: np.random.Generator) -> list[PolygonContour]:
    return [PolygonContour(_place(rng, _star_vertices(rng)))]


def _synth_multi_part(rng: np.random.Generator) -> list[PolygonContour]:
    n_parts = int(rng.integers(2, 4))
    parts = []
    cursor = rng.uniform(100.0, 300.0)
    base_y = rng.uniform(100.0, 900.0)
    for _ in range(n_parts):
        unit = _convex_vertices(rng)
        scale = 10.0 ** rng.uniform(0.8, 1.8)
        verts = unit * scale + np.array([cursor + 1.5 * scale, base_y])
        parts.append(PolygonContour(verts))
        cursor += 4.0 * scale  # unit shapes fit in [-1, 1]^2, so boxes stay disjoint
    return parts


_FAMILY_BUILDERS = {
    ShapeFamily.CONVEX: _synth_convex,
    ShapeFamily.STAR: _synth_star,
    ShapeFamily.MULTI_PART: _synth_multi_part,
}


def synth_shapes(count: int, seed: int, family: ShapeFamily | str) -> Dataset:
    """Seeded synthetic polygon corpus; identical for identical arguments."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    family = ShapeFamily(family)
    rng = np.random.default_rng(np.uint64(seed))
    build = _FAMILY_BUILDERS[family]
    records = []
    for i in range(count):
        parts = build(rng)
        records.append(
            AnnotationRecord(
                instance_id=i + 1,
                category=1,
                bbox=tight_box(parts),
                parts=tuple(parts),
                keypoints=None,
            )
        )
    return Dataset(
        records=tuple(records),
        source=f"synthetic:{family.value}:count={count}:seed={seed}",
        skipped=0,
    )


def max_ray_crossings(parts, anchor: AnchorPoint, n_directions: int = 256) -> int:
    """Largest boundary-crossing count over rays cast from the anchor.

    Directions are offset from the axes to dodge vertex-grazing degeneracies;
    each edge counts once when the ray passes strictly through its half-open
    extent.
    """
    part_list = [parts] if isinstance(parts, PolygonContour) else list(parts)
    v1 = np.vstack([p.vertices for p in part_list])
    v2 = np.vstack([np.roll(p.vertices, -1, axis=0) for p in part_list])
    edge = v2 - v1
    rel = v1 - np.array([anchor.x, anchor.y])
    best = 0
    for theta in (np.arange(n_directions) + 0.5) * (2.0 * np.pi / n_directions):
        d = np.array([np.cos(theta), np.sin(theta)])
        denom = d[0] * edge[:, 1] - d[1] * edge[:, 0]
        ok = np.abs(denom) > 1e-12
        t = (rel[:, 0] * edge[:, 1] - rel[:, 1] * edge[:, 0])[ok] / denom[ok]
        u = (rel[:, 0] * d[1] - rel[:, 1] * d[0])[ok] / denom[ok]
        crossings = int(np.count_nonzero((t > 1e-9) & (u >= 0.0) & (u < 1.0)))
        best = max(best, crossings)
    return best
