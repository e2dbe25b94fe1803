"""Cross-IoU, its gradients, and the box-loss baselines."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from crossgeom import (
    BoundingBox,
    CrossOffset,
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
from helpers import finite_difference_ciou, finite_difference_scalar

components = st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False)
offset_strategy = st.tuples(components, components, components, components)


def _cross(values) -> CrossOffset:
    return CrossOffset(*values)


class TestCrossIou:
    def test_equal_inputs_give_one(self):
        q = CrossOffset(0.8, 4, 2, 0.4)
        assert cross_iou(q, q) == 1.0

    def test_elementwise_ratio(self):
        assert cross_iou(CrossOffset(0, 2, 0, 2), CrossOffset(0, 1, 0, 1)) == 0.5

    def test_disjoint_supports(self):
        assert cross_iou(CrossOffset(1, 0, 0, 0), CrossOffset(0, 1, 0, 0)) == 0.0

    def test_both_zero_is_perfect_match(self):
        assert cross_iou(CrossOffset(0, 0, 0, 0), CrossOffset(0, 0, 0, 0)) == 1.0

    def test_rejects_negative_components(self):
        with pytest.raises(ValueError):
            cross_iou_batch(np.array([[-1.0, 0, 0, 0]]), np.array([[0.0, 0, 0, 0]]))

    @given(a=offset_strategy, b=offset_strategy)
    def test_symmetry(self, a, b):
        assert cross_iou(_cross(a), _cross(b)) == cross_iou(_cross(b), _cross(a))

    @given(a=offset_strategy, b=offset_strategy)
    def test_range(self, a, b):
        value = cross_iou(_cross(a), _cross(b))
        assert 0.0 <= value <= 1.0

    @given(a=offset_strategy, b=offset_strategy, s=st.floats(min_value=1e-2, max_value=1e3))
    def test_scale_invariance(self, a, b, s):
        base = cross_iou(_cross(a), _cross(b))
        scaled = cross_iou(
            _cross(tuple(v * s for v in a)), _cross(tuple(v * s for v in b))
        )
        assert scaled == pytest.approx(base, rel=1e-9, abs=1e-12)


class TestCrossIouLoss:
    def test_zero_at_equality(self):
        offsets = [CrossOffset(0, 3, 1, 0), CrossOffset(2, 0, 0, 5)]
        result = cross_iou_loss(offsets, offsets)
        assert result.value == 0.0
        assert result.per_landmark == (1.0, 1.0)

    def test_mean_of_per_pair_values(self):
        pred = [CrossOffset(0, 2, 0, 2), CrossOffset(1, 0, 0, 0)]
        target = [CrossOffset(0, 1, 0, 1), CrossOffset(1, 0, 0, 0)]
        result = cross_iou_loss(pred, target)
        assert result.value == pytest.approx(0.25)
        assert result.per_landmark == (0.5, 1.0)

    def test_single_disjoint_pair(self):
        result = cross_iou_loss([CrossOffset(1, 0, 0, 0)], [CrossOffset(0, 1, 0, 0)])
        assert result.value == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            cross_iou_loss([CrossOffset(0, 1, 0, 1)], [])


class TestCrossIouGrad:
    def test_component_above_target(self):
        grad = cross_iou_grad(CrossOffset(0, 2, 0, 2), CrossOffset(0, 1, 0, 1))
        assert grad[1] == pytest.approx(-2 / 16)

    def test_tie_uses_midpoint(self):
        q = CrossOffset(1, 0, 2, 0)
        grad = cross_iou_grad(q, q)
        s = 3.0
        expected = 0.5 * (1 / s - s / s**2)
        assert np.allclose(grad, expected)

    def test_component_below_target(self):
        grad = cross_iou_grad(CrossOffset(0.5, 0, 0, 0), CrossOffset(1, 0, 0, 0))
        assert grad[0] == pytest.approx(1.0, rel=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(99)
        pred = rng.uniform(0.05, 10.0, size=(500, 4))
        target = rng.uniform(0.05, 10.0, size=(500, 4))
        # keep components clear of ties so the finite difference is two-sided
        tied = np.abs(pred - target) < 1e-3
        pred[tied] += 2e-3
        analytic = cross_iou_grad_batch(pred, target)
        numeric = finite_difference_ciou(pred, target)
        assert np.allclose(analytic, numeric, rtol=1e-5, atol=1e-9)


class TestSmoothL1:
    def test_zero_residual(self):
        assert smooth_l1_loss([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_linear_branch(self):
        assert smooth_l1_loss([2.0], [0.0], beta=1.0) == 1.5

    def test_quadratic_branch(self):
        assert smooth_l1_loss([0.5], [0.0], beta=1.0) == 0.125

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            smooth_l1_loss([1.0], [1.0, 2.0])

    def test_rejects_bad_beta(self):
        with pytest.raises(ValueError):
            smooth_l1_loss([1.0], [0.0], beta=0.0)

    @given(s=st.floats(min_value=10.0, max_value=1e4))
    def test_grows_with_scale(self, s):
        base = smooth_l1_loss([2.0, -3.0], [0.0, 0.0])
        scaled = smooth_l1_loss([2.0 * s, -3.0 * s], [0.0, 0.0])
        assert scaled > base


class TestBoxIou:
    def test_identical(self):
        box = BoundingBox(0, 0, 1, 1)
        assert box_iou(box, box) == 1.0

    def test_partial_overlap(self):
        assert box_iou(BoundingBox(0, 0, 2, 2), BoundingBox(1, 1, 3, 3)) == pytest.approx(1 / 7)

    def test_disjoint(self):
        assert box_iou(BoundingBox(0, 0, 1, 1), BoundingBox(5, 5, 6, 6)) == 0.0

    def test_empty_union(self):
        a = BoundingBox(1, 1, 1, 1)
        assert box_iou(a, a) == 0.0

    def test_rejects_inverted_box(self):
        with pytest.raises(ValueError):
            BoundingBox(2, 0, 1, 1)


class TestGiou:
    def test_identical(self):
        box = BoundingBox(0, 0, 2, 2)
        assert giou(box, box) == 1.0
        assert giou_loss(box, box) == 0.0

    def test_partial_overlap(self):
        value = giou(BoundingBox(0, 0, 2, 2), BoundingBox(1, 1, 3, 3))
        assert value == pytest.approx(1 / 7 - 2 / 9)

    def test_far_separation_approaches_minus_one(self):
        value = giou(BoundingBox(0, 0, 0.1, 0.1), BoundingBox(1000, 1000, 1000.1, 1000.1))
        assert -1.0 <= value < -0.99

    def test_never_exceeds_iou(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            a = _random_box(rng)
            b = _random_box(rng)
            assert giou(a, b) <= box_iou(a, b) + 1e-12

    def test_grad_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = _random_box(rng)
            b = _random_box(rng)
            analytic = giou_grad(a, b)

            def value(corners):
                return giou(BoundingBox(*corners), b)

            numeric = finite_difference_scalar(
                value, np.array([a.x_min, a.y_min, a.x_max, a.y_max])
            )
            assert np.allclose(analytic, numeric, rtol=1e-5, atol=1e-7)

    def test_grad_zero_at_perfect_match(self):
        box = BoundingBox(0, 0, 3, 2)
        assert np.allclose(giou_grad(box, box), 0.0)


def _random_box(rng: np.random.Generator) -> BoundingBox:
    x1, y1 = rng.uniform(-10, 10, size=2)
    w, h = rng.uniform(0.5, 8, size=2)
    return BoundingBox(x1, y1, x1 + w, y1 + h)
