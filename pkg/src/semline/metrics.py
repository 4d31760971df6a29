"""Line-level matching metrics (mIoU, EA-score), P/R/F curves with AUC, and HIoU."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooSmall
from .geometry import ImageFrame, Line, iou_matrix, partition, side_mask, to_endpoints

DEFAULT_TAU_GRID = np.round(np.arange(1, 50) * 0.02, 10)


def line_miou(a: Line, b: Line, frame: ImageFrame) -> float:
    """Mean IoU of the two half-frames of ``a`` and ``b`` under the better pairing."""
    to_endpoints(a, frame)
    to_endpoints(b, frame)
    pa, pb = side_mask(a, frame), side_mask(b, frame)
    na, nb = ~pa, ~pb

    def iou(x, y):
        union = np.count_nonzero(x | y)
        return np.count_nonzero(x & y) / union if union else 0.0

    straight = (iou(pa, pb) + iou(na, nb)) / 2.0
    crossed = (iou(pa, nb) + iou(na, pb)) / 2.0
    return max(straight, crossed)


def ea_score(a: Line, b: Line, frame: ImageFrame) -> float:
    """Product of a midpoint-distance factor and an angle factor, both linear falloffs."""
    (a1, a2), (b1, b2) = to_endpoints(a, frame), to_endpoints(b, frame)
    ma = ((a1[0] + a2[0]) / 2.0, (a1[1] + a2[1]) / 2.0)
    mb = ((b1[0] + b2[0]) / 2.0, (b1[1] + b2[1]) / 2.0)
    s_d = max(0.0, 1.0 - math.hypot(ma[0] - mb[0], ma[1] - mb[1]) / frame.diagonal)
    dtheta = abs(a.phi - b.phi)
    dtheta = min(dtheta, math.pi - dtheta)
    s_theta = max(0.0, 1.0 - dtheta / (math.pi / 2.0))
    return s_d * s_theta


LINE_METRICS = {"miou": line_miou, "ea": ea_score}


@dataclass(frozen=True)
class MatchResult:
    n_correct: int
    n_false_pos: int
    n_false_neg: int
    assignment: list[tuple[int, int]] = field(default_factory=list)


def score_matrix(detected, ground_truth, frame: ImageFrame, metric: str = "miou") -> np.ndarray:
    fn = LINE_METRICS[metric]
    s = np.zeros((len(detected), len(ground_truth)))
    for i, d in enumerate(detected):
        for j, g in enumerate(ground_truth):
            s[i, j] = fn(d, g, frame)
    return s


def match_scores(scores: np.ndarray, tau: float) -> MatchResult:
    """Greedy one-to-one matching by descending score among pairs scoring above ``tau``."""
    n_det, n_gt = scores.shape
    pairs = [(-scores[i, j], i, j) for i in range(n_det) for j in range(n_gt) if scores[i, j] > tau]
    pairs.sort()
    used_d, used_g, assignment = set(), set(), []
    for _, i, j in pairs:
        if i in used_d or j in used_g:
            continue
        used_d.add(i)
        used_g.add(j)
        assignment.append((i, j))
    n = len(assignment)
    return MatchResult(n, n_det - n, n_gt - n, assignment)


def match_lines(detected, ground_truth, frame: ImageFrame, metric: str = "miou",
                tau: float = 0.5) -> MatchResult:
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    return match_scores(score_matrix(detected, ground_truth, frame, metric), tau)


def precision_recall_f(n_correct: int, n_false_pos: int, n_false_neg: int) -> tuple[float, float, float]:
    """Precision, recall and their harmonic mean; empty denominators give 0."""
    p = n_correct / (n_correct + n_false_pos) if n_correct + n_false_pos else 0.0
    r = n_correct / (n_correct + n_false_neg) if n_correct + n_false_neg else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def auc(curve, tau_grid=DEFAULT_TAU_GRID) -> float:
    """Trapezoidal area under ``curve`` over ``tau_grid``, divided by the grid span.

    ``curve`` is either a callable of tau or a sequence of values on the grid.
    """
    taus = np.asarray(tau_grid, dtype=float)
    if len(taus) < 2:
        raise GridTooSmall("AUC needs at least two thresholds")
    if np.any(np.diff(taus) <= 0) or taus[0] < 0 or taus[-1] > 1:
        raise ValueError("tau grid must be strictly increasing within [0, 1]")
    values = np.asarray([curve(t) for t in taus] if callable(curve) else curve, dtype=float)
    if values.shape != taus.shape:
        raise ValueError("curve values do not match the tau grid")
    area = np.sum((values[1:] + values[:-1]) * np.diff(taus)) / 2.0
    return float(area / (taus[-1] - taus[0]))


def hiou(detected, ground_truth, frame: ImageFrame) -> float:
    """Bidirectional best-match region IoU between the two line-induced partitions."""
    s = partition(detected, frame)
    t = partition(ground_truth, frame)
    iou = iou_matrix(s, t)
    total = iou.max(axis=1).sum() + iou.max(axis=0).sum()
    return float(total / (s.region_count + t.region_count))


def rescale_lines(lines, frame: ImageFrame, scale: float) -> tuple[list[Line], ImageFrame]:
    """Map lines into a frame shrunk by ``scale`` (used to speed up raster metrics)."""
    if scale == 1.0:
        return list(lines), frame
    if not 0.0 < scale <= 1.0:
        raise ValueError("metric scale must lie in (0, 1]")
    small = ImageFrame(max(2, round(frame.width * scale)), max(2, round(frame.height * scale)))
    sx = (small.width - 1) / (frame.width - 1)
    sy = (small.height - 1) / (frame.height - 1)
    out = []
    for line in lines:
        (x1, y1), (x2, y2) = to_endpoints(line, frame)
        out.append(Line.from_endpoints((x1 * sx, y1 * sy), (x2 * sx, y2 * sy), small))
    return out, small


@dataclass
class EvalReport:
    metric: str
    tau: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f_measure: np.ndarray
    auc_p: float
    auc_r: float
    auc_f: float
    hiou: dict[str, float]

    @property
    def hiou_mean(self) -> float:
        return float(np.mean(list(self.hiou.values()))) if self.hiou else 0.0

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "n_images": len(self.hiou),
            "auc_p": self.auc_p,
            "auc_r": self.auc_r,
            "auc_f": self.auc_f,
            "hiou_mean": self.hiou_mean,
            "hiou": {k: self.hiou[k] for k in sorted(self.hiou)},
        }


def evaluate(items, metric: str = "miou", tau_grid=DEFAULT_TAU_GRID, metric_scale: float = 1.0,
             map_fn=map) -> EvalReport:
    """Aggregate P/R/F curves and HIoU over ``(image_id, frame, detected, ground_truth)`` items.

    Counts are pooled over all images at each threshold before computing
    precision and recall. ``map_fn`` lets callers fan out per-image work.
    """
    taus = np.asarray(tau_grid, dtype=float)
    items = sorted(items, key=lambda it: it[0])

    def per_image(item):
        image_id, frame, det, gt = item
        scores = score_matrix(det, gt, frame, metric)
        counts = [match_scores(scores, t) for t in taus]
        det_s, small = rescale_lines(det, frame, metric_scale)
        gt_s, _ = rescale_lines(gt, frame, metric_scale)
        return image_id, counts, hiou(det_s, gt_s, small)

    results = list(map_fn(per_image, items))
    tot = np.zeros((len(taus), 3), dtype=np.int64)
    per_hiou = {}
    for image_id, counts, h in results:
        tot += np.array([[c.n_correct, c.n_false_pos, c.n_false_neg] for c in counts],
                        dtype=np.int64).reshape(len(taus), 3)
        per_hiou[image_id] = h
    prf = np.array([precision_recall_f(*row) for row in tot]).reshape(len(taus), 3)
    p, r, f = prf[:, 0], prf[:, 1], prf[:, 2]
    return EvalReport(metric, taus, p, r, f, auc(p, taus), auc(r, taus), auc(f, taus), per_hiou)
