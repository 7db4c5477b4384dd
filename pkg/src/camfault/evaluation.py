"""2D detection evaluation: IoU gating, greedy matching, and AP at 40 recall levels.

The pipeline pools matches over all images of a corpus, sweeps the pooled
detections by descending score, and averages interpolated precision at the
40 recall thresholds 1/40 .. 40/40, where the interpolated precision at a
level is the maximum precision among sweep points whose recall reaches it.
A detection counts as a true positive when its IoU with an unmatched
eligible ground-truth box is at least the gate (0.70 by default, inclusive).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .kitti import DONT_CARE, Bbox2D, Detection, GroundTruthObject, parse_detections, parse_labels

N_RECALL_LEVELS = 40
DEFAULT_IOU_GATE = 0.7


class EvaluationError(Exception):
    """Raised when evaluation is undefined (e.g. no eligible ground truth)."""


@dataclass(frozen=True)
class DifficultyFilter:
    """Ground-truth eligibility thresholds (KITTI-style difficulty regime)."""

    name: str
    min_bbox_height: float
    max_occlusion: int
    max_truncation: float

    def __post_init__(self):
        if self.min_bbox_height < 0 or self.max_occlusion < 0 or self.max_truncation < 0:
            raise ValueError("difficulty thresholds must be non-negative")

    def admits(self, gt: GroundTruthObject) -> bool:
        return (
            gt.bbox.height >= self.min_bbox_height
            and gt.occlusion <= self.max_occlusion
            and gt.truncation <= self.max_truncation
        )


EASY = DifficultyFilter("easy", 40.0, 0, 0.15)
MODERATE = DifficultyFilter("moderate", 25.0, 1, 0.30)
HARD = DifficultyFilter("hard", 25.0, 2, 0.50)
DIFFICULTIES = {f.name: f for f in (EASY, MODERATE, HARD)}


def iou(a: Bbox2D, b: Bbox2D) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    iw = min(a.right, b.right) - max(a.left, b.left)
    ih = min(a.bottom, b.bottom) - max(a.top, b.top)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def filter_difficulty(
    gts: list[GroundTruthObject], class_name: str, difficulty: DifficultyFilter
) -> tuple[list[GroundTruthObject], list[GroundTruthObject]]:
    """Split ground truth into (eligible, ignored) for one target class.

    Eligible objects must be counted; ignored objects (class matches but
    fails the thresholds, or DontCare regions) absorb detections without
    scoring them.  Objects of other classes are dropped outright.
    """
    eligible, ignored = [], []
    for gt in gts:
        if gt.class_name == class_name:
            (eligible if difficulty.admits(gt) else ignored).append(gt)
        elif gt.class_name == DONT_CARE:
            ignored.append(gt)
    return eligible, ignored


@dataclass
class MatchResult:
    """Per-image matching outcome: scored detections plus GT bookkeeping."""

    # (score, is_tp) for every counted detection; discarded ones are absent.
    outcomes: list[tuple[float, bool]] = field(default_factory=list)
    n_eligible_gt: int = 0

    @property
    def tp(self) -> int:
        return sum(1 for _, hit in self.outcomes if hit)

    @property
    def fp(self) -> int:
        return sum(1 for _, hit in self.outcomes if not hit)

    @property
    def fn(self) -> int:
        return self.n_eligible_gt - self.tp


def match_detections(
    detections: list[Detection],
    eligible: list[GroundTruthObject],
    ignored: list[GroundTruthObject],
    iou_threshold: float = DEFAULT_IOU_GATE,
) -> MatchResult:
    """Greedy score-ordered matching for one image.

    Detections are processed in descending score (ties keep input order).
    A detection is a TP when its best unmatched eligible GT reaches the
    (inclusive) IoU gate; otherwise, if it overlaps an ignored GT at the
    gate it is discarded; otherwise it is an FP.  Each eligible GT matches
    at most once.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou threshold must be in (0, 1], got {iou_threshold}")
    order = sorted(range(len(detections)), key=lambda i: (-detections[i].score, i))
    taken = [False] * len(eligible)
    result = MatchResult(n_eligible_gt=len(eligible))
    for idx in order:
        det = detections[idx]
        best_iou, best_gt = 0.0, -1
        for g, gt in enumerate(eligible):
            if taken[g]:
                continue
            overlap = iou(det.bbox, gt.bbox)
            if overlap > best_iou:
                best_iou, best_gt = overlap, g
        if best_gt >= 0 and best_iou >= iou_threshold:
            taken[best_gt] = True
            result.outcomes.append((det.score, True))
            continue
        if any(iou(det.bbox, ig.bbox) >= iou_threshold for ig in ignored):
            continue  # absorbed, neither TP nor FP
        result.outcomes.append((det.score, False))
    return result


@dataclass(frozen=True)
class PrCurve:
    """Precision/recall samples along the pooled score sweep."""

    precisions: tuple[float, ...]
    recalls: tuple[float, ...]
    tps: tuple[int, ...]
    fps: tuple[int, ...]
    n_gt: int
    n_det: int


def pr_curve(matches: list[MatchResult]) -> PrCurve:
    """Pool per-image outcomes into one descending-score PR sweep."""
    n_gt = sum(m.n_eligible_gt for m in matches)
    if n_gt == 0:
        raise EvaluationError("no eligible ground truth: AP undefined")
    pooled = []
    for m_idx, m in enumerate(matches):
        pooled.extend((score, m_idx, i, hit) for i, (score, hit) in enumerate(m.outcomes))
    pooled.sort(key=lambda t: (-t[0], t[1], t[2]))
    precisions, recalls, tps, fps = [], [], [], []
    tp = fp = 0
    for _, _, _, hit in pooled:
        if hit:
            tp += 1
        else:
            fp += 1
        precisions.append(tp / (tp + fp))
        recalls.append(tp / n_gt)
        tps.append(tp)
        fps.append(fp)
    return PrCurve(
        tuple(precisions), tuple(recalls), tuple(tps), tuple(fps), n_gt, len(pooled)
    )


@dataclass(frozen=True)
class ApResult:
    ap: float
    recall_levels: tuple[float, ...]
    interpolated_precision: tuple[float, ...]
    n_gt: int
    n_det: int


def ap40(curve: PrCurve) -> ApResult:
    """Average precision over the 40 recall levels 1/40 .. 1.

    The precision at each level is the maximum precision among sweep samples
    whose recall reaches the level (0 when none does); AP is the arithmetic
    mean of the 40 values.
    """
    levels = tuple(i / N_RECALL_LEVELS for i in range(1, N_RECALL_LEVELS + 1))
    interp = []
    for r in levels:
        best = 0.0
        for precision, recall in zip(curve.precisions, curve.recalls):
            if recall >= r and precision > best:
                best = precision
        interp.append(best)
    ap = sum(interp) / N_RECALL_LEVELS
    return ApResult(ap, levels, tuple(interp), curve.n_gt, curve.n_det)


def evaluate_matches(matches: list[MatchResult]) -> ApResult:
    return ap40(pr_curve(matches))


def evaluate_dataset(
    gt_dir,
    det_dir,
    class_name: str = "Car",
    difficulty: DifficultyFilter = MODERATE,
    iou_threshold: float = DEFAULT_IOU_GATE,
) -> ApResult:
    """Evaluate a detection directory against a ground-truth directory.

    Files pair by stem (``<image-id>.txt``).  A missing detection file means
    zero detections for that image; a missing ground-truth directory or an
    unparsable file is an error.
    """
    gt_dir, det_dir = Path(gt_dir), Path(det_dir)
    if not gt_dir.is_dir():
        raise EvaluationError(f"ground-truth directory missing: {gt_dir}")
    gt_files = sorted(gt_dir.glob("*.txt"))
    if not gt_files:
        raise EvaluationError(f"no label files in {gt_dir}")
    matches = []
    for gt_file in gt_files:
        gts = parse_labels(gt_file)
        det_file = det_dir / gt_file.name
        dets = parse_detections(det_file) if det_file.exists() else []
        dets = [d for d in dets if d.class_name == class_name]
        eligible, ignored = filter_difficulty(gts, class_name, difficulty)
        matches.append(match_detections(dets, eligible, ignored, iou_threshold))
    return evaluate_matches(matches)
