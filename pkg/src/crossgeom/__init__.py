"""Cross-coordinate landmark geometry toolkit.

Four-component offset encodings with softened targets and max-decoding, the
cross-IoU loss with analytic subgradients, landmark geometry (extreme
points, contour resampling, keypoint boxes, rasterized mask IoU), evaluation
metrics, a deterministic gradient-descent fitting harness, and COCO-layout
annotation ingest with synthetic corpora.
"""

from .cross_coord import (
    CONTOUR_LANDMARKS_DEFAULT,
    KEYPOINT_COUNT,
    AnchorPoint,
    CrossOffset,
    LandmarkRole,
    LandmarkSet,
    OffsetVector,
    decode_offset,
    decode_offsets,
    encode_offset,
    encode_offsets,
    landmarks_to_cross,
    soften_target,
    soften_targets,
)
from .ingest import (
    AnnotationRecord,
    CocoParseError,
    Dataset,
    ShapeFamily,
    max_ray_crossings,
    parse_coco,
    synth_shapes,
    write_dataset,
)
from .landmarks import (
    ExtremeSet,
    KeypointInstance,
    PolygonContour,
    RasterMask,
    anchor_from_polygon,
    extreme_box,
    extreme_points,
    kps_box,
    mask_iou,
    rasterize,
    resample_contour,
    tight_box,
)
from .loss import (
    BoundingBox,
    LossValue,
    box_iou,
    cross_iou,
    cross_iou_batch,
    cross_iou_grad,
    cross_iou_grad_batch,
    cross_iou_loss,
    giou,
    giou_grad,
    giou_loss,
    smooth_l1_loss,
)
from .metrics import (
    IOU_THRESHOLDS,
    KEYPOINT_KAPPAS,
    KEYPOINT_SIGMAS,
    QuantizationRow,
    ThresholdSweep,
    ap_over_thresholds,
    oks,
    quantization_report,
    quantized_instance_iou,
)
from .optimize import (
    BoxStyle,
    FitConfig,
    FitReport,
    LossComparison,
    LossKind,
    OptimizerKind,
    ScalePoint,
    compare_losses,
    default_comparison_configs,
    fit_offsets,
    make_extreme_target,
    scale_sweep,
)

__version__ = "0.1.0"
