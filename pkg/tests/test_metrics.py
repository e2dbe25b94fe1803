"""Keypoint similarity, threshold sweeps, and the quantization study."""

import math

import numpy as np
import pytest

from crossgeom import (
    IOU_THRESHOLDS,
    KEYPOINT_KAPPAS,
    KeypointInstance,
    PolygonContour,
    ap_over_thresholds,
    oks,
    quantization_report,
    quantized_instance_iou,
    synth_shapes,
)


def _instance(xy, visibility=None, scale=1.0) -> KeypointInstance:
    xy = np.asarray(xy, dtype=float)
    if visibility is None:
        visibility = np.full(len(xy), 2.0)
    points = np.column_stack([xy, visibility])
    return KeypointInstance(points=points, scale=scale)


def _random_instance(rng, scale=2.0) -> KeypointInstance:
    xy = rng.uniform(0, 50, size=(17, 2))
    vis = rng.choice([0.0, 1.0, 2.0], size=17, p=[0.2, 0.3, 0.5])
    if not (vis > 0).any():
        vis[0] = 2.0
    return _instance(xy, vis, scale=scale)


class TestOks:
    def test_exact_prediction(self):
        rng = np.random.default_rng(0)
        gt = _random_instance(rng)
        assert oks(gt, gt) == 1.0

    def test_distant_prediction_vanishes(self):
        gt = _instance(np.zeros((17, 2)), scale=1.0)
        pred = _instance(np.full((17, 2), 1e6), scale=1.0)
        assert oks(pred, gt) < 1e-12

    def test_one_kappa_displacement(self):
        scale = 3.0
        vis = np.zeros(17)
        vis[0] = 2.0
        gt = _instance(np.zeros((17, 2)), vis, scale=scale)
        xy = np.zeros((17, 2))
        xy[0, 0] = scale * KEYPOINT_KAPPAS[0]
        pred = _instance(xy, vis, scale=scale)
        assert oks(pred, gt) == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_requires_visible_reference(self):
        gt = _instance(np.zeros((17, 2)), np.zeros(17))
        pred = _instance(np.zeros((17, 2)))
        with pytest.raises(ValueError):
            oks(pred, gt)

    def test_translation_invariance(self):
        rng = np.random.default_rng(42)
        gt = _random_instance(rng)
        pred = _random_instance(rng)
        base = oks(pred, gt)
        for _ in range(25):
            shift = rng.uniform(-100, 100, size=2)
            moved = oks(
                _instance(pred.xy + shift, pred.visibility, pred.scale),
                _instance(gt.xy + shift, gt.visibility, gt.scale),
            )
            assert moved == pytest.approx(base, abs=1e-12)

    def test_strictly_decreases_with_distance(self):
        vis = np.zeros(17)
        vis[3] = 2.0
        gt = _instance(np.zeros((17, 2)), vis, scale=2.0)
        last = 1.0
        for d in (0.5, 1.0, 2.0, 4.0):
            xy = np.zeros((17, 2))
            xy[3, 1] = d
            value = oks(_instance(xy, vis, scale=2.0), gt)
            assert value < last
            last = value


class TestApOverThresholds:
    def test_all_perfect(self):
        sweep = ap_over_thresholds([1.0, 1.0, 1.0])
        assert sweep.ap == 1.0
        assert sweep.thresholds == IOU_THRESHOLDS

    def test_mixed_values(self):
        sweep = ap_over_thresholds([1.0, 0.6])
        assert sweep.ap == pytest.approx(0.65)
        assert sweep.per_threshold_recall[:3] == (1.0, 1.0, 1.0)
        assert sweep.per_threshold_recall[3:] == (0.5,) * 7

    def test_below_lowest_threshold(self):
        assert ap_over_thresholds([0.49, 0.2]).ap == 0.0

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            ap_over_thresholds([])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            ap_over_thresholds([1.2])

    def test_monotone_in_each_iou(self):
        rng = np.random.default_rng(9)
        ious = rng.uniform(0, 1, size=20)
        base = ap_over_thresholds(ious).ap
        for i in range(len(ious)):
            raised = ious.copy()
            raised[i] = min(1.0, raised[i] + 0.3)
            assert ap_over_thresholds(raised).ap >= base


class TestQuantization:
    def test_regular_polygon_reconstructs_exactly(self):
        # a regular n-gon with a unique top vertex resamples onto itself
        corpus = []
        for k in (5, 7, 9):
            angles = -np.pi / 2 + 2 * np.pi * np.arange(k) / k
            corpus.append([PolygonContour(10 * np.column_stack([np.cos(angles), np.sin(angles)]))])
        rows = quantization_report(corpus[:1], [5], max_dim=256)
        assert rows[0].ap == 1.0
        assert rows[0].mean_iou > 0.999

    def test_mean_iou_non_decreasing_in_n(self):
        ds = synth_shapes(50, 77, "convex")
        rows = quantization_report([r.parts for r in ds.records], [6, 12, 24, 48], max_dim=256)
        ious = [r.mean_iou for r in rows]
        assert ious == sorted(ious)
        aps = [r.ap for r in rows]
        assert aps == sorted(aps)

    def test_multi_part_instances(self):
        ds = synth_shapes(10, 5, "multi_part")
        rows = quantization_report([r.parts for r in ds.records], [36], max_dim=256)
        assert rows[0].instances == 10
        assert rows[0].mean_iou > 0.9

    def test_skip_and_count_policy(self):
        ds = synth_shapes(3, 1, "convex")
        corpus = [r.parts for r in ds.records] + [[]]  # one empty instance
        rows = quantization_report(corpus, [12], max_dim=128)
        assert rows[0].instances == 3
        assert rows[0].skipped == 1

    def test_single_instance_helper_matches_report(self):
        parts = synth_shapes(1, 2, "convex").records[0].parts
        direct = quantized_instance_iou(parts, 24, max_dim=256)
        row = quantization_report([parts], [24], max_dim=256)[0]
        assert direct == row.mean_iou

    def test_rejects_empty_corpus(self):
        with pytest.raises(ValueError):
            quantization_report([], [12])

    def test_rejects_tiny_n(self):
        parts = synth_shapes(1, 2, "convex").records[0].parts
        with pytest.raises(ValueError):
            quantization_report([parts], [2])
