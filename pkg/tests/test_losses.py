import numpy as np
import pytest

from dctmask.geometry import Box
from dctmask.losses import (
    EmptyOverlapWarning,
    dice_loss,
    giou_loss,
    mask_vector_loss,
    smooth_l1,
    total_loss,
)


class TestDice:
    def test_perfect_overlap(self):
        g = np.array([[1, 0], [1, 1]], dtype=float)
        assert dice_loss(g, g) == 0.0

    def test_disjoint(self):
        a = np.array([[1, 0], [0, 0]], dtype=float)
        b = np.array([[0, 0], [0, 1]], dtype=float)
        assert dice_loss(a, b) == 1.0

    def test_half_extra_coverage(self):
        # pred covers gt plus an equal-area extra region: 1 - 2n/(3n) = 1/3
        gt = np.zeros((4, 4))
        gt[:2, :2] = 1
        pred = gt.copy()
        pred[2:, :2] = 1
        assert dice_loss(pred, gt) == pytest.approx(1 / 3)

    def test_empty_empty_flagged_zero(self):
        with pytest.warns(EmptyOverlapWarning):
            assert dice_loss(np.zeros((3, 3)), np.zeros((3, 3))) == 0.0

    def test_symmetry_binary(self):
        rng = np.random.default_rng(0)
        a = (rng.random((8, 8)) > 0.5).astype(float)
        b = (rng.random((8, 8)) > 0.5).astype(float)
        assert dice_loss(a, b) == pytest.approx(dice_loss(b, a))

    def test_monotone_on_nested_supports(self):
        gt = np.zeros((8, 8))
        gt[2:6, 2:6] = 1
        losses = []
        for extent in (2, 3, 4):
            pred = np.zeros((8, 8))
            pred[2 : 2 + extent, 2:6] = 1
            losses.append(dice_loss(pred, gt))
        assert losses[0] > losses[1] > losses[2] == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            dice_loss(np.zeros((2, 2)), np.zeros((3, 3)))


class TestGiou:
    def test_identical(self):
        b = Box(1, 2, 5, 9)
        assert giou_loss(b, b) == 0.0

    def test_far_disjoint_unit_squares(self):
        # C = (0,0)-(11,11): loss = 1 + 119/121
        loss = giou_loss(Box(0, 0, 1, 1), Box(10, 10, 11, 11))
        assert loss == pytest.approx(1 + 119 / 121, abs=1e-9)

    def test_half_shift(self):
        # IoU = 1/3, C = A∪B extent, no penalty
        loss = giou_loss(Box(0, 0, 2, 2), Box(1, 0, 3, 2))
        assert loss == pytest.approx(2 / 3, abs=1e-12)

    def test_equals_plain_iou_when_enclosing_box_is_union(self):
        outer = Box(0, 0, 10, 10)
        inner = Box(2, 2, 8, 8)
        assert giou_loss(outer, inner) == pytest.approx(1 - inner.area / outer.area)

    def test_translation_and_scale_invariance(self):
        a, b = Box(0, 0, 4, 2), Box(1, 1, 6, 5)
        base = giou_loss(a, b)
        shift = giou_loss(Box(7, -3, 11, -1), Box(8, -2, 13, 2))
        scaled = giou_loss(Box(0, 0, 8, 4), Box(2, 2, 12, 10))
        assert shift == pytest.approx(base, abs=1e-12)
        assert scaled == pytest.approx(base, abs=1e-12)

    def test_range(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            x0, y0, x1, y1 = rng.uniform(0, 50, 4)
            u0, v0, u1, v1 = rng.uniform(0, 50, 4)
            a = Box(min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))
            b = Box(min(u0, u1), min(v0, v1), max(u0, u1), max(v0, v1))
            assert 0.0 <= giou_loss(a, b) <= 2.0

    def test_zero_area_flagged(self):
        with pytest.warns(EmptyOverlapWarning):
            giou_loss(Box(0, 0, 0, 0), Box(1, 1, 1, 1))


class TestSmoothL1:
    def test_piecewise_values(self):
        assert smooth_l1(2.0) == pytest.approx(1.5)
        assert smooth_l1(0.5) == pytest.approx(0.125)
        assert smooth_l1(-2.0) == pytest.approx(1.5)
        assert smooth_l1(1.0) == pytest.approx(0.5)

    def test_finite_difference_derivative(self):
        # analytic slope: x inside the quadratic zone, sign(x) outside
        rng = np.random.default_rng(2)
        pts = rng.uniform(-3, 3, 40)
        pts = pts[np.abs(np.abs(pts) - 1.0) > 0.01][:20]
        h = 1e-4
        for x in pts:
            fd = (smooth_l1(x + h) - smooth_l1(x - h)) / (2 * h)
            analytic = x if abs(x) < 1.0 else np.sign(x)
            assert abs(fd - analytic) < 1e-6

    def test_continuity_at_beta(self):
        eps = 1e-9
        assert abs(smooth_l1(1.0 + eps) - smooth_l1(1.0 - eps)) < 1e-8


class TestMaskVectorLoss:
    def test_perfect(self):
        v = np.arange(5, dtype=float)
        assert mask_vector_loss(v, v) == 0.0

    def test_indicator_gates_to_zero(self):
        assert mask_vector_loss(np.ones(4), np.zeros(4), is_text=False) == 0.0

    def test_single_element_values(self):
        assert mask_vector_loss(np.array([2.0]), np.array([0.0])) == pytest.approx(1.5)
        assert mask_vector_loss(np.array([0.5]), np.array([0.0])) == pytest.approx(0.125)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mask_vector_loss(np.ones(3), np.ones(4))


class TestTotal:
    def test_all_zero(self):
        assert total_loss(0, 0, 0).total == 0.0

    def test_weighted_sum(self):
        assert total_loss(0.2, 0.3, 0.5).total == pytest.approx(1.0)

    def test_lambda_scales_mask_term(self):
        base = total_loss(0.2, 0.3, 0.5)
        doubled = total_loss(0.2, 0.3, 0.5, lambda_mask=2.0)
        assert doubled.total - base.total == pytest.approx(0.5)

    def test_breakdown_invariant(self):
        b = total_loss(0.1, 0.2, 0.3, lambda_box=2.0, lambda_mask=0.5)
        assert b.total == pytest.approx(b.l_cls + 2.0 * b.l_box + 0.5 * b.l_mask)
