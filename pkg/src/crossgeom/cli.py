"""Command-line front-end for loss evaluation, fitting experiments,
quantization studies, keypoint similarity, and synthetic corpora.

Every command emits one JSON report (stdout by default, ``--json PATH`` to a
file) that echoes its full effective configuration, seed included, and may
write a CSV sidecar of the rows. Configuration comes from flags only; there
is no environment-variable configuration, so a report is reproducible from
its command line alone. Exit codes: 0 success, 1 runtime or data failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .cross_coord import CrossOffset, soften_target
from .ingest import (
    CocoParseError,
    Dataset,
    ShapeFamily,
    max_ray_crossings,
    parse_coco,
    synth_shapes,
    write_dataset,
)
from .landmarks import anchor_from_polygon
from .loss import BoundingBox, box_iou, cross_iou_loss, giou, smooth_l1_loss
from .metrics import oks, quantization_report
from .optimize import (
    BoxStyle,
    FitConfig,
    LossKind,
    OptimizerKind,
    fit_offsets,
    make_extreme_target,
    scale_sweep,
)

__all__ = ["main", "build_parser", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

_CSV_HEADERS = {
    "loss": ["landmark", "value"],
    "fit": ["step", "loss"],
    "fit-sweep": ["scale", "initial_loss", "final_loss", "final_decoded_iou", "converged", "steps_taken"],
    "quantize": ["n", "ap", "mean_iou", "instances", "skipped"],
    "oks": ["instance_id", "oks"],
    "synth": ["instance_id", "parts", "max_ray_crossings"],
}


class UsageError(ValueError):
    """Malformed flag values; maps to exit code 2."""


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text!r}")
    return value


def _parse_groups(text: str, flag: str) -> list[list[float]]:
    groups = []
    try:
        for chunk in text.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            groups.append([float(v) for v in chunk.split(",")])
    except ValueError:
        raise UsageError(f"{flag} expects ';'-separated groups of ','-separated numbers")
    if not groups:
        raise UsageError(f"{flag} is empty")
    return groups


def _parse_number_list(text: str, flag: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{flag} expects a comma-separated list of numbers")
    if not values:
        raise UsageError(f"{flag} is empty")
    return values


def _report(command: str, config: dict, rows: list[dict], summary: dict | None = None) -> dict:
    config.setdefault("seed", None)
    report = {
        "command": command,
        "schema_version": SCHEMA_VERSION,
        "config_echo": config,
        "rows": rows,
    }
    if summary is not None:
        report["summary"] = summary
    return report


def _cross_offsets(groups: list[list[float]], flag: str) -> list[CrossOffset]:
    offsets = []
    for g in groups:
        if len(g) != 4:
            raise UsageError(f"{flag}: each cross-offset needs 4 components, got {len(g)}")
        offsets.append(CrossOffset.from_array(g))
    return offsets


def _single_box(groups: list[list[float]], flag: str) -> BoundingBox:
    if len(groups) != 1 or len(groups[0]) != 4:
        raise UsageError(
            f"{flag}: giou supports axis-aligned rectangles only; "
            "pass exactly one x_min,y_min,x_max,y_max group"
        )
    return BoundingBox(*groups[0])


def _cmd_loss(args) -> dict:
    pred_groups = _parse_groups(args.pred, "--pred")
    target_groups = _parse_groups(args.target, "--target")
    config = {
        "loss": args.loss,
        "pred": pred_groups,
        "target": target_groups,
        "alpha": args.alpha,
        "beta": args.beta,
        "seed": None,
    }
    if args.loss == "cross-iou":
        pred = _cross_offsets(pred_groups, "--pred")
        target = _cross_offsets(target_groups, "--target")
        if args.alpha is not None:
            target = [soften_target(t, args.alpha) for t in target]
        result = cross_iou_loss(pred, target)
        rows = [
            {"landmark": i, "value": v} for i, v in enumerate(result.per_landmark or ())
        ]
        return _report("loss", config, rows, {"value": result.value})
    if args.loss == "smooth-l1":
        if len(pred_groups) != len(target_groups):
            raise UsageError("--pred and --target need the same number of groups")
        rows = []
        for i, (p, t) in enumerate(zip(pred_groups, target_groups)):
            rows.append({"landmark": i, "value": smooth_l1_loss(p, t, args.beta)})
        flat_p = [v for g in pred_groups for v in g]
        flat_t = [v for g in target_groups for v in g]
        value = smooth_l1_loss(flat_p, flat_t, args.beta)
        return _report("loss", config, rows, {"value": value})
    pred_box = _single_box(pred_groups, "--pred")
    target_box = _single_box(target_groups, "--target")
    g = giou(pred_box, target_box)
    rows = [{"landmark": 0, "value": g}]
    return _report(
        "loss", config, rows, {"value": 1.0 - g, "giou": g, "iou": box_iou(pred_box, target_box)}
    )


def _fit_config(args) -> FitConfig:
    return FitConfig(
        loss_kind=LossKind(args.loss.replace("-", "_")),
        box_style=None if args.box_style is None else BoxStyle(args.box_style),
        optimizer=OptimizerKind(args.optimizer.replace("-", "_")),
        step_size=args.step_size,
        max_steps=args.max_steps,
        alpha=args.alpha,
        seed=args.seed,
        convergence_iou=args.convergence_iou,
    )


def _cmd_fit(args) -> dict:
    config = _fit_config(args)
    echo = {
        "loss": config.loss_kind.value,
        "box_style": config.box_style.value,
        "optimizer": config.optimizer.value,
        "step_size": config.step_size,
        "max_steps": config.max_steps,
        "alpha": config.alpha,
        "seed": config.seed,
        "convergence_iou": config.convergence_iou,
        "target_scale": args.target_scale,
        "scales": args.scales,
    }
    if args.scales is not None:
        scales = _parse_number_list(args.scales, "--scales")
        points = scale_sweep(config.loss_kind, scales, config)
        rows = [
            {
                "scale": p.scale,
                "initial_loss": p.initial_loss,
                "final_loss": p.report.loss_trajectory[-1],
                "final_decoded_iou": p.report.final_decoded_iou,
                "converged": p.report.converged,
                "steps_taken": p.report.steps_taken,
            }
            for p in points
        ]
        first = points[0].initial_loss
        last = points[-1].initial_loss
        ratio = last / first if first != 0.0 else None
        return _report("fit", echo, rows, {"initial_loss_ratio": ratio})
    target = make_extreme_target(config.seed, args.target_scale)
    report = fit_offsets(target, config)
    rows = [{"step": i, "loss": v} for i, v in enumerate(report.loss_trajectory)]
    summary = {
        "final_decoded_iou": report.final_decoded_iou,
        "converged": report.converged,
        "steps_taken": report.steps_taken,
        "target_scale": report.target_scale,
    }
    return _report("fit", echo, rows, summary)


def _load_dataset(path: str) -> Dataset:
    return parse_coco(Path(path).read_bytes(), source=path)


def _cmd_quantize(args) -> dict:
    if (args.annotations is None) == (args.synth_family is None):
        raise UsageError("pass exactly one of --annotations or --synth-family")
    n_values = [int(v) for v in _parse_number_list(args.n, "--n")]
    if args.annotations is not None:
        dataset = _load_dataset(args.annotations)
        source = args.annotations
    else:
        dataset = synth_shapes(args.synth_count, args.seed, ShapeFamily(args.synth_family))
        source = dataset.source
    instances = [record.parts for record in dataset.records if record.parts]
    if not instances:
        raise ValueError(f"no polygon instances found in {source}")
    rows_data = quantization_report(instances, n_values, max_dim=args.max_dim)
    config = {
        "annotations": args.annotations,
        "synth_family": args.synth_family,
        "synth_count": args.synth_count,
        "n": n_values,
        "max_dim": args.max_dim,
        "seed": args.seed,
        "source": source,
    }
    rows = [
        {
            "n": r.n,
            "ap": r.ap,
            "mean_iou": r.mean_iou,
            "instances": r.instances,
            "skipped": r.skipped,
        }
        for r in rows_data
    ]
    summary = {
        "records": len(dataset.records),
        "instances_with_parts": len(instances),
        "parse_skipped": dataset.skipped,
    }
    return _report("quantize", config, rows, summary)


def _cmd_oks(args) -> dict:
    pred_set = _load_dataset(args.pred)
    gt_set = _load_dataset(args.gt)
    pred_by_id = {r.instance_id: r for r in pred_set.records}
    gt_by_id = {r.instance_id: r for r in gt_set.records}
    unmatched = sorted(set(pred_by_id) ^ set(gt_by_id))
    if unmatched:
        raise ValueError(f"instance ids do not match; unmatched: {unmatched}")
    missing = sorted(
        i
        for i in gt_by_id
        if gt_by_id[i].keypoints is None or pred_by_id[i].keypoints is None
    )
    if missing:
        raise ValueError(f"records without keypoints: {missing}")
    rows = []
    total = 0.0
    for instance_id in sorted(gt_by_id):
        value = oks(pred_by_id[instance_id].keypoints, gt_by_id[instance_id].keypoints)
        rows.append({"instance_id": instance_id, "oks": value})
        total += value
    config = {"pred": args.pred, "gt": args.gt, "seed": None}
    return _report("oks", config, rows, {"mean_oks": total / len(rows), "instances": len(rows)})


def _cmd_synth(args) -> dict:
    family = ShapeFamily(args.family)
    dataset = synth_shapes(args.count, args.seed, family)
    payload = write_dataset(dataset)
    Path(args.out).write_bytes(payload)
    rows = []
    multi_crossing = 0
    for record in dataset.records:
        crossings = max_ray_crossings(record.parts, anchor_from_polygon(record.parts))
        multi_crossing += int(crossings >= 3)
        rows.append(
            {
                "instance_id": record.instance_id,
                "parts": len(record.parts),
                "max_ray_crossings": crossings,
            }
        )
    config = {"count": args.count, "seed": args.seed, "family": family.value, "out": args.out}
    summary = {
        "instances": len(dataset.records),
        "multi_crossing_instances": multi_crossing,
        "bytes_written": len(payload),
    }
    return _report("synth", config, rows, summary)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossgeom",
        description="Cross-coordinate landmark geometry experiments and reports.",
    )
    parser.add_argument("--json", help="write the JSON report to this path instead of stdout")
    parser.add_argument("--csv", help="also write the report rows as CSV to this path")
    sub = parser.add_subparsers(dest="command", required=True)

    p_loss = sub.add_parser("loss", help="evaluate a loss on explicit offsets or boxes")
    p_loss.add_argument("--pred", required=True, help="';'-separated groups of ','-separated numbers")
    p_loss.add_argument("--target", required=True)
    p_loss.add_argument("--loss", choices=["cross-iou", "smooth-l1", "giou"], default="cross-iou")
    p_loss.add_argument("--alpha", type=float, default=None, help="soften cross-iou targets")
    p_loss.add_argument("--beta", type=float, default=1.0, help="smooth-l1 quadratic width")
    p_loss.set_defaults(handler=_cmd_loss)

    p_fit = sub.add_parser("fit", help="fit seeded predictions to a generated extreme target")
    p_fit.add_argument("--loss", choices=["cross-iou", "smooth-l1", "giou"], default="cross-iou")
    p_fit.add_argument("--box-style", choices=["extreme", "rectangle"], default=None)
    p_fit.add_argument("--optimizer", choices=["adaptive", "fixed-step"], default="adaptive")
    p_fit.add_argument("--step-size", type=float, default=0.05)
    p_fit.add_argument("--max-steps", type=_positive_int, default=1000)
    p_fit.add_argument("--alpha", type=float, default=0.2)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--convergence-iou", type=float, default=0.99)
    p_fit.add_argument("--target-scale", type=float, default=10.0)
    p_fit.add_argument("--scales", default=None, help="run a scale sweep over these scales")
    p_fit.set_defaults(handler=_cmd_fit)

    p_quant = sub.add_parser("quantize", help="landmark-count fidelity study")
    p_quant.add_argument("--annotations", help="COCO-layout annotation file")
    p_quant.add_argument("--synth-family", choices=[f.value for f in ShapeFamily])
    p_quant.add_argument("--synth-count", type=_positive_int, default=100)
    p_quant.add_argument("--seed", type=int, default=0)
    p_quant.add_argument("--n", default="18,36,72", help="comma-separated landmark counts")
    p_quant.add_argument("--max-dim", type=_positive_int, default=512)
    p_quant.set_defaults(handler=_cmd_quantize)

    p_oks = sub.add_parser("oks", help="keypoint similarity between two annotation files")
    p_oks.add_argument("--pred", required=True)
    p_oks.add_argument("--gt", required=True)
    p_oks.set_defaults(handler=_cmd_oks)

    p_synth = sub.add_parser("synth", help="write a seeded synthetic corpus")
    p_synth.add_argument("--count", type=_positive_int, required=True)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--family", choices=[f.value for f in ShapeFamily], default="convex")
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(handler=_cmd_synth)

    return parser


def _csv_name(report: dict) -> str:
    if report["command"] == "fit" and report["config_echo"].get("scales") is not None:
        return "fit-sweep"
    return report["command"]


def _write_csv(report: dict, path: str) -> None:
    headers = _CSV_HEADERS[_csv_name(report)]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(headers)
    for row in report["rows"]:
        writer.writerow([repr(row[h]) if isinstance(row[h], float) else row[h] for h in headers])
    Path(path).write_text(buffer.getvalue(), encoding="utf-8")


def _emit(report: dict, args) -> None:
    text = json.dumps(report, sort_keys=True, indent=2)
    if args.json:
        Path(args.json).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")
    if args.csv:
        _write_csv(report, args.csv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        report = args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, CocoParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    _emit(report, args)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
