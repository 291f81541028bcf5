import json
import math

import numpy as np
import pytest

from oracles import brute_hausdorff, count_dice, count_precision_recall
from tubegen import BinaryMask, Image
from tubegen.core.morphology import connected_components, dilate
from tubegen.errors import InvalidParameterError, UndefinedMetricError
from tubegen.metrics import (
    ClassTargets,
    MetricsReport,
    bce_loss,
    cl_dice,
    cycle_loss,
    dice,
    dice_loss,
    evaluate_pair,
    hausdorff,
    lsgan_losses,
    minimax_value,
    precision_recall,
    skeletonize,
    soft_dice,
)


def random_pair(gen, shape=(32, 32), density=0.2):
    a = (gen.random(shape) < density).astype(np.uint8)
    b = (gen.random(shape) < density).astype(np.uint8)
    return a, b


def tube_with_gap(radius=2, gap=(30, 33)):
    center = np.zeros((64, 64), dtype=np.uint8)
    center[32, 8:56] = 1
    gt = dilate(BinaryMask(center), radius)
    pred = gt.data.copy()
    pred[:, gap[0] : gap[1]] = 0
    return BinaryMask(pred), gt


class TestOverlapCounts:
    def test_dice_matches_count_oracle(self, rng):
        for _ in range(20):
            a, b = random_pair(rng)
            assert dice(a, b) == count_dice(a, b)

    def test_precision_recall_match_count_oracle(self, rng):
        for _ in range(20):
            a, b = random_pair(rng)
            assert precision_recall(a, b) == count_precision_recall(a, b)

    def test_perfect_and_disjoint(self):
        a = np.zeros((8, 8), dtype=np.uint8)
        a[2:5, 2:5] = 1
        b = np.zeros((8, 8), dtype=np.uint8)
        b[6:8, 6:8] = 1
        assert dice(a, a) == 1.0
        assert dice(a, b) == 0.0
        assert precision_recall(a, a) == (1.0, 1.0)
        assert precision_recall(a, b) == (0.0, 0.0)

    def test_empty_conventions(self):
        empty = np.zeros((8, 8), dtype=np.uint8)
        some = empty.copy()
        some[3, 3] = 1
        assert dice(empty, empty) == 1.0
        assert dice(some, empty) == 0.0
        assert precision_recall(empty, some) == (1.0, 0.0)
        assert precision_recall(some, empty) == (0.0, 1.0)
        assert precision_recall(empty, empty) == (1.0, 1.0)

    def test_accepts_binarymask_and_bool(self):
        a = np.zeros((8, 8), dtype=np.uint8)
        a[2:4, 2:4] = 1
        assert dice(BinaryMask(a), a.astype(bool)) == 1.0

    def test_rejects_non_binary_and_mismatch(self):
        a = np.zeros((8, 8), dtype=np.uint8)
        with pytest.raises(InvalidParameterError):
            dice(a + 2, a)
        with pytest.raises(InvalidParameterError):
            dice(a, np.zeros((8, 9), dtype=np.uint8))


class TestSoftDice:
    def test_equals_hard_dice_on_binary_input(self, rng):
        a, b = random_pair(rng)
        hard = dice(a, b)
        soft = soft_dice(a.astype(np.float64), b)
        assert soft == pytest.approx(hard, abs=1e-6)

    def test_smoothing_keeps_empty_pair_perfect(self):
        empty = np.zeros((8, 8))
        assert soft_dice(empty, empty.astype(np.uint8)) == 1.0

    def test_probabilistic_prediction(self):
        gt = np.zeros((4, 4), dtype=np.uint8)
        gt[1:3, 1:3] = 1
        pred = gt * 0.5
        expected = (2 * 2.0 + 1e-6) / (2.0 + 4.0 + 1e-6)
        assert soft_dice(pred, gt) == pytest.approx(expected, rel=1e-12)

    def test_dice_loss_complement(self, rng):
        a, b = random_pair(rng)
        assert dice_loss(a.astype(float), b) == pytest.approx(1.0 - soft_dice(a.astype(float), b))

    def test_rejects_out_of_range_probabilities(self):
        gt = np.zeros((4, 4), dtype=np.uint8)
        with pytest.raises(InvalidParameterError):
            soft_dice(np.full((4, 4), 1.5), gt)


class TestBce:
    def test_uniform_half_prediction_gives_log2(self, rng):
        gt = (rng.random((16, 16)) < 0.5).astype(np.uint8)
        pred = np.full((16, 16), 0.5)
        assert bce_loss(pred, gt) == pytest.approx(math.log(2.0), abs=1e-9)

    def test_matches_elementwise_oracle(self, rng):
        gt = (rng.random((8, 8)) < 0.4).astype(np.uint8)
        pred = rng.uniform(0.05, 0.95, size=(8, 8))
        total = 0.0
        for i in range(8):
            for j in range(8):
                p = pred[i, j]
                total += -(gt[i, j] * math.log(p) + (1 - gt[i, j]) * math.log(1 - p))
        assert bce_loss(pred, gt) == pytest.approx(total / 64, rel=1e-12)

    def test_hard_outputs_stay_finite(self):
        gt = np.ones((4, 4), dtype=np.uint8)
        assert np.isfinite(bce_loss(np.zeros((4, 4)), gt))
        assert np.isfinite(bce_loss(np.ones((4, 4)), gt))

    def test_pos_weight_scales_positive_term(self, rng):
        gt = np.ones((4, 4), dtype=np.uint8)
        pred = np.full((4, 4), 0.3)
        assert bce_loss(pred, gt, pos_weight=2.0) == pytest.approx(2.0 * bce_loss(pred, gt))

    def test_rejects_bad_pos_weight(self):
        gt = np.zeros((4, 4), dtype=np.uint8)
        with pytest.raises(InvalidParameterError):
            bce_loss(np.full((4, 4), 0.5), gt, pos_weight=0.0)


class TestHausdorff:
    def test_matches_brute_oracle_exactly(self, rng):
        checked = 0
        for _ in range(30):
            h, w = rng.integers(8, 48, size=2)
            a = (rng.random((h, w)) < 0.08).astype(np.uint8)
            b = (rng.random((h, w)) < 0.08).astype(np.uint8)
            if not a.any() or not b.any():
                continue
            assert hausdorff(a, b, 100.0) == brute_hausdorff(a, b, 100.0)
            assert hausdorff(a, b, 95.0) == brute_hausdorff(a, b, 95.0)
            checked += 1
        assert checked >= 20

    def test_identity_and_symmetry(self, rng):
        a, b = random_pair(rng, density=0.1)
        a[0, 0] = 1
        b[0, 0] = 1
        assert hausdorff(a, a) == 0.0
        assert hausdorff(a, b) == hausdorff(b, a)

    def test_triangle_inequality(self, rng):
        masks = []
        while len(masks) < 3:
            m = (rng.random((24, 24)) < 0.1).astype(np.uint8)
            if m.any():
                masks.append(m)
        a, b, c = masks
        assert hausdorff(a, c) <= hausdorff(a, b) + hausdorff(b, c) + 1e-12

    def test_known_two_point_distance(self):
        a = np.zeros((10, 10), dtype=np.uint8)
        b = np.zeros((10, 10), dtype=np.uint8)
        a[2, 2] = 1
        b[5, 6] = 1
        assert hausdorff(a, b) == pytest.approx(5.0)

    def test_percentile_below_max(self):
        a = np.zeros((16, 16), dtype=np.uint8)
        b = np.zeros((16, 16), dtype=np.uint8)
        a[8, 0:8] = 1
        b[8, 0:7] = 1
        b[0, 15] = 1
        assert hausdorff(a, b, 50.0) < hausdorff(a, b, 100.0)

    def test_empty_mask_undefined(self):
        empty = np.zeros((8, 8), dtype=np.uint8)
        some = empty.copy()
        some[4, 4] = 1
        with pytest.raises(UndefinedMetricError):
            hausdorff(empty, some)
        with pytest.raises(UndefinedMetricError):
            hausdorff(some, empty)

    def test_rejects_bad_percentile(self):
        a = np.ones((4, 4), dtype=np.uint8)
        with pytest.raises(InvalidParameterError):
            hausdorff(a, a, 0.0)
        with pytest.raises(InvalidParameterError):
            hausdorff(a, a, 101.0)


class TestSkeletonAndClDice:
    def test_skeletonize_idempotent_and_subset(self):
        pred, gt = tube_with_gap()
        s = skeletonize(gt)
        assert np.array_equal(skeletonize(s).data, s.data)
        assert np.all(gt.data[s.as_bool()] == 1)

    def test_skeletonize_preserves_components(self):
        pred, _ = tube_with_gap()
        s = skeletonize(pred)
        assert connected_components(s)[1] == connected_components(pred)[1]

    def test_identity_is_perfect(self):
        _, gt = tube_with_gap()
        assert cl_dice(gt, gt) == 1.0

    def test_bounded_above_by_one(self, rng):
        for _ in range(5):
            a, b = random_pair(rng, density=0.15)
            if a.any() and b.any():
                assert cl_dice(a, b) <= 1.0

    def test_gap_fixture_scores_below_dice(self):
        pred, gt = tube_with_gap()
        c = cl_dice(pred, gt)
        d = dice(pred, gt)
        assert c < d

    def test_empty_conventions(self):
        empty = np.zeros((8, 8), dtype=np.uint8)
        some = empty.copy()
        some[3, 2:6] = 1
        assert cl_dice(empty, empty) == 1.0
        assert cl_dice(empty, some) == 0.0
        assert cl_dice(some, empty) == 0.0


class TestAdversarialLosses:
    def test_uniform_outputs_fixture(self):
        third = np.full((4, 3), 1.0 / 3.0)
        loss_d, loss_g = lsgan_losses(third, third, third)
        assert loss_d == pytest.approx(2.0 / 9.0, abs=1e-12)
        assert loss_g == pytest.approx(2.0 / 27.0, abs=1e-12)

    def test_perfect_discriminator_zeroes_loss_d(self):
        t = ClassTargets()
        a = np.tile(t.a, (3, 1))
        b = np.tile(t.b, (3, 1))
        c = np.tile(t.c, (3, 1))
        loss_d, loss_g = lsgan_losses(a, b, c)
        assert loss_d == 0.0
        assert loss_g > 0.0

    def test_perfect_generator_zeroes_loss_g(self):
        t = ClassTargets()
        a = np.tile(t.a, (2, 1))
        loss_d, loss_g = lsgan_losses(a, np.tile(t.b, (2, 1)), a)
        assert loss_g == 0.0
        assert loss_d > 0.0

    def test_single_vector_accepted(self):
        loss_d, loss_g = lsgan_losses([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0])
        assert loss_d == 0.0

    def test_custom_targets_validated(self):
        with pytest.raises(InvalidParameterError):
            ClassTargets(a=(0.5, 0.5, 0.0))
        with pytest.raises(InvalidParameterError):
            ClassTargets(a=(1.0, 0.0, 0.0), b=(1.0, 0.0, 0.0))

    def test_rejects_bad_batches(self):
        good = np.full((2, 3), 1.0 / 3.0)
        with pytest.raises(InvalidParameterError):
            lsgan_losses(np.zeros((2, 4)), good, good)
        with pytest.raises(InvalidParameterError):
            lsgan_losses(np.full((2, 3), np.nan), good, good)

    def test_minimax_equilibrium_value(self):
        half = np.full(8, 0.5)
        assert minimax_value(half, half) == pytest.approx(-2.0 * math.log(2.0), abs=1e-12)

    def test_minimax_exponential_fixture(self):
        r = np.full(4, math.exp(-1.0))
        f = np.full(4, 1.0 - math.exp(-1.0))
        assert minimax_value(r, f) == pytest.approx(-2.0, abs=1e-12)

    def test_minimax_rejects_boundary_probabilities(self):
        with pytest.raises(InvalidParameterError):
            minimax_value([1.0], [0.5])
        with pytest.raises(InvalidParameterError):
            minimax_value([0.5], [0.0])
        with pytest.raises(InvalidParameterError):
            minimax_value([], [0.5])


class TestCycleLoss:
    def test_perfect_reconstruction_leaves_seg_term(self, rng):
        img = rng.random((16, 16))
        gt = (rng.random((16, 16)) < 0.3).astype(np.uint8)
        pred = gt.astype(np.float64)
        for mode in ("bce", "dice", "bce+dice"):
            value = cycle_loss(img, img, pred, gt, seg_loss=mode)
            if mode == "bce":
                assert value == pytest.approx(bce_loss(pred, gt))
            elif mode == "dice":
                assert value == pytest.approx(dice_loss(pred, gt))
            else:
                assert value == pytest.approx(bce_loss(pred, gt) + dice_loss(pred, gt))

    def test_l1_term_isolated(self):
        a = np.full((8, 8), 0.25)
        b = np.full((8, 8), 0.75)
        gt = np.zeros((8, 8), dtype=np.uint8)
        pred = np.zeros((8, 8))
        value = cycle_loss(a, b, pred, gt, seg_loss="dice")
        assert value == pytest.approx(0.5 + dice_loss(pred, gt))

    def test_rejects_unknown_mode(self):
        a = np.zeros((4, 4))
        gt = np.zeros((4, 4), dtype=np.uint8)
        with pytest.raises(InvalidParameterError):
            cycle_loss(a, a, a, gt, seg_loss="focal")


class TestReportAndPairEvaluation:
    def test_report_round_trip(self):
        r = MetricsReport(dice=0.9, soft_dice=0.85, cl_dice=0.8,
                          precision=1.0, recall=0.75, hausdorff=2.0, hausdorff95=1.0)
        d = r.to_dict()
        assert tuple(d.keys()) == MetricsReport.field_names()
        back = json.loads(r.to_json())
        assert back["cl-dice"] == 0.8
        assert back["hausdorff95"] == 1.0

    def test_table_marks_undefined(self):
        r = MetricsReport(dice=1.0, soft_dice=1.0, cl_dice=1.0,
                          precision=1.0, recall=1.0)
        table = r.format_table()
        assert "undefined" in table
        assert "1.000000" in table

    def test_evaluate_pair_thresholds_prediction(self):
        gt = np.zeros((16, 16), dtype=np.uint8)
        gt[6:10, 4:12] = 1
        prob = gt * 0.8 + (1 - gt) * 0.2
        report = evaluate_pair(Image(prob), gt, threshold=0.5)
        assert report.dice == 1.0
        assert report.precision == 1.0 and report.recall == 1.0
        assert report.hausdorff == 0.0

    def test_evaluate_pair_empty_prediction_undefined_hausdorff(self):
        gt = np.zeros((8, 8), dtype=np.uint8)
        gt[4, 4] = 1
        report = evaluate_pair(np.zeros((8, 8)), gt, threshold=0.5)
        assert report.hausdorff is None
        assert report.hausdorff95 is None
        assert report.dice == 0.0

    def test_evaluate_pair_threshold_changes_hard_mask(self):
        gt = np.zeros((8, 8), dtype=np.uint8)
        gt[2:6, 2:6] = 1
        prob = gt * 0.4
        low = evaluate_pair(prob, gt, threshold=0.3)
        high = evaluate_pair(prob, gt, threshold=0.5)
        assert low.dice == 1.0
        assert high.dice == 0.0

    def test_evaluate_pair_rejects_bad_threshold(self):
        gt = np.zeros((8, 8), dtype=np.uint8)
        with pytest.raises(InvalidParameterError):
            evaluate_pair(np.zeros((8, 8)), gt, threshold=0.0)
