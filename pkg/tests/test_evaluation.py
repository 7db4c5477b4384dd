import math

import numpy as np
import pytest

from camfault.evaluation import (
    DIFFICULTIES,
    EASY,
    MODERATE,
    EvaluationError,
    ap40,
    evaluate_dataset,
    evaluate_matches,
    filter_difficulty,
    iou,
    match_detections,
    pr_curve,
)
from camfault.kitti import Bbox2D, Detection, GroundTruthObject, write_detections

from oracle import oracle_ap40


def gt(box, class_name="Car", truncation=0.0, occlusion=0):
    return GroundTruthObject(
        class_name=class_name,
        truncation=truncation,
        occlusion=occlusion,
        alpha=0.0,
        bbox=Bbox2D(*box),
        height=1.5,
        width=1.6,
        length=3.5,
        x=0.0,
        y=0.0,
        z=10.0,
        rotation_y=0.0,
    )


def det(box, score, class_name="Car"):
    return Detection(class_name=class_name, bbox=Bbox2D(*box), score=score)


# -- iou -------------------------------------------------------------------


def test_iou_identical_boxes():
    b = Bbox2D(3.0, 4.0, 10.0, 12.0)
    assert iou(b, b) == 1.0


def test_iou_disjoint_boxes():
    assert iou(Bbox2D(0, 0, 5, 5), Bbox2D(6, 6, 9, 9)) == 0.0
    assert iou(Bbox2D(0, 0, 5, 5), Bbox2D(5, 0, 9, 5)) == 0.0  # touching edge


def test_iou_one_third():
    # 50 overlap / 150 union
    assert iou(Bbox2D(0, 0, 10, 10), Bbox2D(5, 0, 15, 10)) == pytest.approx(1 / 3, abs=1e-15)


def test_iou_random_pairs_match_oracle(rng):
    from oracle import box_iou

    for _ in range(300):
        a = sorted(rng.uniform(0, 100, 2))
        b = sorted(rng.uniform(0, 100, 2))
        c = sorted(rng.uniform(0, 100, 2))
        d = sorted(rng.uniform(0, 100, 2))
        box1 = (a[0], b[0], a[1] + 1, b[1] + 1)
        box2 = (c[0], d[0], c[1] + 1, d[1] + 1)
        assert iou(Bbox2D(*box1), Bbox2D(*box2)) == pytest.approx(
            box_iou(box1, box2), abs=1e-12
        )


# -- difficulty filtering -----------------------------------------------------


def test_moderate_admits_30px_box():
    g = gt((0, 0, 20, 30))
    eligible, ignored = filter_difficulty([g], "Car", MODERATE)
    assert eligible == [g] and ignored == []


def test_easy_rejects_30px_box():
    g = gt((0, 0, 20, 30))
    eligible, ignored = filter_difficulty([g], "Car", EASY)
    assert eligible == [] and ignored == [g]


def test_dontcare_always_ignored():
    g = gt((0, 0, 200, 200), class_name="DontCare")
    for difficulty in DIFFICULTIES.values():
        eligible, ignored = filter_difficulty([g], "Car", difficulty)
        assert eligible == [] and ignored == [g]


def test_other_classes_dropped():
    g = gt((0, 0, 100, 100), class_name="Pedestrian")
    eligible, ignored = filter_difficulty([g], "Car", MODERATE)
    assert eligible == [] and ignored == []


# -- matching ----------------------------------------------------------------


def test_iou_gate_inclusive_at_070():
    # det box (0,0,10,7) vs gt (0,0,10,10): inter 70, union 100 -> exactly 0.70
    g = [gt((0, 0, 10, 10))]
    d = [det((0, 0, 10, 7), 0.9)]
    result = match_detections(d, g, [], 0.7)
    assert (result.tp, result.fp, result.fn) == (1, 0, 0)


def test_iou_gate_excludes_0699():
    g = [gt((0, 0, 10, 10))]
    d = [det((0, 0, 10, 6.99), 0.9)]
    assert iou(d[0].bbox, g[0].bbox) < 0.7
    result = match_detections(d, g, [], 0.7)
    assert (result.tp, result.fp, result.fn) == (0, 1, 1)


def test_single_match_rule_two_dets_one_gt():
    g = [gt((0, 0, 10, 10))]
    d = [det((0, 0, 10, 10), 0.9), det((0, 0.5, 10, 10.5), 0.8)]
    result = match_detections(d, g, [], 0.7)
    assert (result.tp, result.fp, result.fn) == (1, 1, 0)
    # the higher-scored detection got the match
    assert result.outcomes[0] == (0.9, True)


def test_ignored_gt_absorbs_detection():
    ignored = [gt((0, 0, 10, 10), truncation=0.9)]
    d = [det((0, 0, 10, 10), 0.9)]
    result = match_detections(d, [], ignored, 0.7)
    assert (result.tp, result.fp) == (0, 0)
    assert result.outcomes == []


def test_raising_gate_never_adds_tp(rng):
    for _ in range(50):
        gts = [gt(_rand_box(rng)) for _ in range(4)]
        dets = [det(_rand_box(rng), rng.uniform()) for _ in range(6)]
        tps = [
            match_detections(dets, gts, [], thr).tp
            for thr in (0.3, 0.5, 0.7, 0.9)
        ]
        assert tps == sorted(tps, reverse=True)


def _rand_box(rng, lo=0, hi=60):
    x = rng.uniform(lo, hi)
    y = rng.uniform(lo, hi)
    w = rng.uniform(26, 40)
    return (x, y, x + w, y + w)


# -- pr curve and ap ----------------------------------------------------------


def _worked_instance():
    """2 GTs; detections TP(0.9), FP(0.8), TP(0.7)."""
    gts = [gt((0, 0, 30, 30)), gt((100, 100, 130, 130))]
    dets = [
        det((0, 0, 30, 30), 0.9),
        det((200, 200, 230, 230), 0.8),
        det((100, 100, 130, 130), 0.7),
    ]
    return gts, dets


def test_pr_curve_worked_points():
    gts, dets = _worked_instance()
    curve = pr_curve([match_detections(dets, gts, [])])
    assert curve.precisions == (1.0, 0.5, 2 / 3)
    assert curve.recalls == (0.5, 0.5, 1.0)
    assert curve.tps == (1, 1, 2)
    assert curve.fps == (0, 1, 1)


def test_ap40_worked_example():
    # mean of: p_interp = 1 for r <= 0.5 (20 levels), 2/3 above (20 levels)
    gts, dets = _worked_instance()
    result = evaluate_matches([match_detections(dets, gts, [])])
    expected = (20 * 1.0 + 20 * (2 / 3)) / 40
    assert result.ap == pytest.approx(expected, abs=1e-9)
    assert result.ap == pytest.approx(0.8333333333, abs=1e-9)


def test_perfect_detector_ap_is_one():
    gts = [gt((i * 50, 0, i * 50 + 30, 30)) for i in range(4)]
    dets = [det((i * 50, 0, i * 50 + 30, 30), 1.0 - i * 0.1) for i in range(4)]
    result = evaluate_matches([match_detections(dets, gts, [])])
    assert result.ap == 1.0


def test_no_detections_ap_zero():
    gts = [gt((0, 0, 30, 30))]
    result = evaluate_matches([match_detections([], gts, [])])
    assert result.ap == 0.0
    assert result.n_det == 0


def test_all_tp_precision_constant_one():
    gts = [gt((0, 0, 30, 30)), gt((50, 50, 80, 80))]
    dets = [det((0, 0, 30, 30), 0.9), det((50, 50, 80, 80), 0.8)]
    curve = pr_curve([match_detections(dets, gts, [])])
    assert all(p == 1.0 for p in curve.precisions)


def test_zero_eligible_gt_is_error():
    with pytest.raises(EvaluationError):
        pr_curve([match_detections([], [], [])])


def test_interpolated_precision_non_increasing(rng):
    for _ in range(50):
        instances = _random_micro_instance(rng)
        matches = [
            match_detections(
                [det(b, s) for s, b in dets],
                [gt(b) for b in eligible],
                [gt(b, class_name="DontCare") for b in ignored],
            )
            for eligible, ignored, dets in instances
        ]
        try:
            result = evaluate_matches(matches)
        except EvaluationError:
            continue
        interp = result.interpolated_precision
        assert all(interp[i] >= interp[i + 1] for i in range(len(interp) - 1))
        assert result.ap == pytest.approx(sum(interp) / 40, abs=1e-15)


def test_score_scale_invariance(rng):
    for transform in (lambda s: s * 10, lambda s: s**3 + 1, math.exp):
        instances = _random_micro_instance(rng)
        results = []
        for fn in (lambda s: s, transform):
            matches = [
                match_detections(
                    [det(b, fn(s)) for s, b in dets],
                    [gt(b) for b in eligible],
                    [],
                )
                for eligible, ignored, dets in instances
            ]
            try:
                results.append(evaluate_matches(matches).ap)
            except EvaluationError:
                results.append(None)
        assert results[0] == results[1]


def _random_micro_instance(rng, n_images=3):
    instances = []
    for _ in range(n_images):
        n_gt = int(rng.integers(0, 6))
        n_ig = int(rng.integers(0, 2))
        n_det = int(rng.integers(0, 9))
        eligible = [_rand_box(rng) for _ in range(n_gt)]
        ignored = [_rand_box(rng) for _ in range(n_ig)]
        dets = []
        for _ in range(n_det):
            if eligible and rng.uniform() < 0.6:
                base = eligible[int(rng.integers(0, len(eligible)))]
                dx, dy = rng.uniform(-6, 6, 2)
                box = (base[0] + dx, base[1] + dy, base[2] + dx, base[3] + dy)
            else:
                box = _rand_box(rng)
            dets.append((float(rng.uniform()), box))
        instances.append((eligible, ignored, dets))
    return instances


def test_pipeline_matches_oracle_on_200_micro_instances(rng):
    checked = 0
    while checked < 200:
        instances = _random_micro_instance(rng)
        if sum(len(e) for e, _, _ in instances) == 0:
            continue
        matches = [
            match_detections(
                [det(b, s) for s, b in dets],
                [gt(b) for b in eligible],
                [gt(b, class_name="DontCare") for b in ignored],
            )
            for eligible, ignored, dets in instances
        ]
        pipeline_ap = evaluate_matches(matches).ap
        expected = oracle_ap40(
            [
                (eligible, ignored, [(s, b) for s, b in dets])
                for eligible, ignored, dets in instances
            ]
        )
        assert pipeline_ap == pytest.approx(expected, abs=1e-12)
        checked += 1


# -- dataset evaluation --------------------------------------------------------


def _write_corpus(tmp_path, n_images=5, rng=None):
    rng = rng or np.random.default_rng(3)
    gt_dir = tmp_path / "gt"
    det_dir = tmp_path / "det"
    gt_dir.mkdir()
    det_dir.mkdir()
    instances = []
    for i in range(n_images):
        boxes = [_rand_box(rng) for _ in range(int(rng.integers(1, 5)))]
        lines = []
        for b in boxes:
            lines.append(
                f"Car 0.00 0 -1.58 {b[0]:.2f} {b[1]:.2f} {b[2]:.2f} {b[3]:.2f} "
                "1.65 1.67 3.64 -0.65 1.71 46.70 -1.59"
            )
        (gt_dir / f"{i:06d}.txt").write_text("\n".join(lines) + "\n")
        instances.append(boxes)
    return gt_dir, det_dir, instances


def test_self_match_gives_ap_one(tmp_path):
    gt_dir, det_dir, instances = _write_corpus(tmp_path)
    for i, boxes in enumerate(instances):
        write_detections([det(b, 1.0) for b in boxes], det_dir / f"{i:06d}.txt")
    result = evaluate_dataset(gt_dir, det_dir)
    assert result.ap == 1.0


def test_empty_det_dir_gives_ap_zero(tmp_path):
    gt_dir, det_dir, _ = _write_corpus(tmp_path)
    result = evaluate_dataset(gt_dir, det_dir)
    assert result.ap == 0.0


def test_dataset_equals_direct_pipeline(tmp_path, rng):
    gt_dir, det_dir, instances = _write_corpus(tmp_path, rng=rng)
    jitter_instances = []
    for i, boxes in enumerate(instances):
        dets = []
        for b in boxes:
            dx = float(rng.uniform(-4, 4))
            shifted = (b[0] + dx, b[1], b[2] + dx, b[3])
            dets.append((float(rng.uniform(0.1, 1.0)), shifted))
        write_detections(
            [det(b, round(s, 6)) for s, b in dets], det_dir / f"{i:06d}.txt"
        )
        jitter_instances.append((boxes, [], [(round(s, 6), b) for s, b in dets]))
    result = evaluate_dataset(gt_dir, det_dir)
    # write_detections quantizes boxes to 2 decimals; mirror that in the oracle
    quantized = [
        (
            [tuple(round(v, 2) for v in b) for b in eligible],
            [],
            [(s, tuple(round(v, 2) for v in b)) for s, b in dets],
        )
        for eligible, _, dets in jitter_instances
    ]
    assert result.ap == pytest.approx(oracle_ap40(quantized), abs=1e-12)


def test_missing_gt_dir_is_error(tmp_path):
    with pytest.raises(EvaluationError):
        evaluate_dataset(tmp_path / "nope", tmp_path)
