"""Encoding, softening, and decoding of cross-coordinate offsets."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from crossgeom import (
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

# subnormals excluded: alpha * subnormal can underflow to exact zero, which
# is double-precision pathology rather than a property of the encoding
finite_offsets = st.floats(
    min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False, allow_subnormal=False
)
nonzero_offsets = finite_offsets.filter(lambda v: abs(v) > 1e-6)
alphas = st.floats(min_value=0.01, max_value=0.99)


class TestEncode:
    def test_mixed_signs(self):
        assert encode_offset(OffsetVector(3, -2)) == CrossOffset(0, 3, 2, 0)

    def test_zero(self):
        assert encode_offset(OffsetVector(0, 0)) == CrossOffset(0, 0, 0, 0)

    def test_negative_x(self):
        assert encode_offset(OffsetVector(-1.5, 4)) == CrossOffset(1.5, 0, 0, 4)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            OffsetVector(float("nan"), 0)
        with pytest.raises(ValueError):
            OffsetVector(0, float("inf"))

    @given(dx=finite_offsets, dy=finite_offsets)
    def test_hard_invariant(self, dx, dy):
        q = encode_offset(OffsetVector(dx, dy))
        assert q.is_hard()
        assert q.x_neg * q.x_pos == 0.0 and q.y_neg * q.y_pos == 0.0

    @given(dx=finite_offsets, dy=finite_offsets, s=st.floats(min_value=1e-3, max_value=1e3))
    def test_positively_homogeneous(self, dx, dy, s):
        scaled = encode_offset(OffsetVector(dx * s, dy * s)).as_array()
        base = encode_offset(OffsetVector(dx, dy)).as_array() * s
        assert np.allclose(scaled, base, rtol=1e-12, atol=0.0)


class TestSoften:
    def test_paper_default_alpha(self):
        softened = soften_target(CrossOffset(0, 4, 2, 0), 0.2)
        assert softened == CrossOffset(0.8, 4, 2, 0.4)

    def test_zero_stays_zero(self):
        assert soften_target(CrossOffset(0, 0, 0, 0), 0.2) == CrossOffset(0, 0, 0, 0)

    def test_half_alpha(self):
        assert soften_target(CrossOffset(5, 0, 0, 1), 0.5) == CrossOffset(5, 2.5, 0.5, 1)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5, float("nan")])
    def test_rejects_bad_alpha(self, alpha):
        with pytest.raises(ValueError):
            soften_target(CrossOffset(0, 1, 0, 1), alpha)

    def test_rejects_soft_input(self):
        with pytest.raises(ValueError):
            soften_target(CrossOffset(0.5, 1, 0, 1), 0.2)

    @given(dx=finite_offsets, dy=finite_offsets, alpha=alphas)
    def test_destroys_hardness_exactly_on_nonzero_axes(self, dx, dy, alpha):
        hard = encode_offset(OffsetVector(dx, dy))
        soft = soften_target(hard, alpha)
        x_still_hard = soft.x_neg == 0.0 or soft.x_pos == 0.0
        y_still_hard = soft.y_neg == 0.0 or soft.y_pos == 0.0
        assert x_still_hard == (dx == 0.0)
        assert y_still_hard == (dy == 0.0)


class TestDecode:
    def test_softened_example(self):
        assert decode_offset(CrossOffset(0.8, 4, 2, 0.4)) == OffsetVector(4, -2)

    def test_zero(self):
        assert decode_offset(CrossOffset(0, 0, 0, 0)) == OffsetVector(0, 0)

    def test_tie_decodes_positive(self):
        assert decode_offset(CrossOffset(3, 3, 0, 1)) == OffsetVector(3, 1)

    def test_array_decoder_rejects_negative(self):
        with pytest.raises(ValueError):
            decode_offsets(np.array([[-0.1, 0, 0, 0]]))

    @given(dx=finite_offsets, dy=finite_offsets)
    def test_round_trip_without_softening(self, dx, dy):
        assert decode_offset(encode_offset(OffsetVector(dx, dy))) == OffsetVector(dx, dy)

    @given(dx=nonzero_offsets, dy=nonzero_offsets, alpha=alphas)
    def test_round_trip_through_softening_is_exact(self, dx, dy, alpha):
        decoded = decode_offset(soften_target(encode_offset(OffsetVector(dx, dy)), alpha))
        assert decoded == OffsetVector(dx, dy)


class TestLandmarksToCross:
    def test_unit_offsets(self):
        lm = LandmarkSet(AnchorPoint(0, 0), [(1, 0), (0, 1), (2, 2)], LandmarkRole.CONTOUR)
        assert landmarks_to_cross(lm) == [
            CrossOffset(0, 1, 0, 0),
            CrossOffset(0, 0, 0, 1),
            CrossOffset(0, 2, 0, 2),
        ]

    def test_coincident_point(self):
        lm = LandmarkSet(AnchorPoint(2, 2), [(2, 2), (2, 2), (2, 2)], LandmarkRole.CONTOUR)
        assert landmarks_to_cross(lm)[0] == CrossOffset(0, 0, 0, 0)

    def test_mixed_quadrants(self):
        lm = LandmarkSet(AnchorPoint(1, 1), [(0, 3), (4, 0), (1, 1)], LandmarkRole.CONTOUR)
        assert landmarks_to_cross(lm)[:2] == [CrossOffset(1, 0, 0, 2), CrossOffset(0, 3, 1, 0)]


class TestLandmarkSet:
    def test_extreme_role_needs_four(self):
        with pytest.raises(ValueError):
            LandmarkSet(AnchorPoint(0, 0), [(0, 0), (1, 1)], LandmarkRole.EXTREME)

    def test_keypoints_role_needs_seventeen(self):
        with pytest.raises(ValueError):
            LandmarkSet(AnchorPoint(0, 0), [(0, 0)] * 5, LandmarkRole.KEYPOINTS)

    def test_contour_role_needs_three(self):
        with pytest.raises(ValueError):
            LandmarkSet(AnchorPoint(0, 0), [(0, 0), (1, 1)], LandmarkRole.CONTOUR)

    def test_landmarks_are_read_only(self):
        lm = LandmarkSet(AnchorPoint(0, 0), [(1, 0), (0, 1), (1, 1)], LandmarkRole.CONTOUR)
        with pytest.raises(ValueError):
            lm.landmarks[0, 0] = 5.0

    def test_offsets(self):
        lm = LandmarkSet(AnchorPoint(1, 2), [(2, 2), (0, 0), (1, 5)], LandmarkRole.CONTOUR)
        assert np.array_equal(lm.offsets(), [[1, 0], [-1, -2], [0, 3]])


class TestArrayApi:
    def test_matches_scalar_path(self):
        rng = np.random.default_rng(5)
        deltas = rng.normal(size=(50, 2)) * 10
        batch = encode_offsets(deltas)
        for row, (dx, dy) in zip(batch, deltas):
            assert CrossOffset.from_array(row) == encode_offset(OffsetVector(dx, dy))
        decoded = decode_offsets(soften_targets(batch, 0.2))
        assert np.array_equal(decoded, deltas)

    def test_soften_targets_rejects_soft_rows(self):
        with pytest.raises(ValueError):
            soften_targets(np.array([[1.0, 1.0, 0.0, 0.0]]), 0.2)
