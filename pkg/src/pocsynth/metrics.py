"""Pixel-level anomaly segmentation metrics and closed-set mIoU.

OOD pixels are the positive class. Scores are "higher = more anomalous";
a pixel is predicted positive at threshold ``t`` when ``score >= t``.
Pixels labelled ``ignore_id`` never enter any count.
"""
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import DegenerateLabels, ShapeError
from .types import LabelConvention

TPR_TARGET = 0.95


@dataclass(frozen=True)
class ConfusionSweep:
    """Cumulative confusion counts, one row per distinct threshold (descending)."""

    thresholds: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    tn: np.ndarray

    @property
    def n_pos(self) -> int:
        return int(self.tp[-1] + self.fn[-1])

    @property
    def n_neg(self) -> int:
        return int(self.fp[-1] + self.tn[-1])

    def precision(self) -> np.ndarray:
        return self.tp / (self.tp + self.fp)

    def recall(self) -> np.ndarray:
        return self.tp / self.n_pos

    def fpr(self) -> np.ndarray:
        return self.fp / self.n_neg


def _effective(scores, labels, ignore_id: int) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ShapeError(f"{scores.size} scores vs {labels.size} labels")
    keep = labels != ignore_id
    scores, labels = scores[keep], labels[keep]
    bad = (labels != 0) & (labels != 1)
    if bad.any():
        raise ValueError(f"labels must be 0, 1 or {ignore_id}; found {np.unique(labels[bad])[:5]}")
    return scores, labels.astype(bool)


def from_cumulative(thresholds, tp, fp) -> ConfusionSweep:
    tp = np.asarray(tp, dtype=np.int64)
    fp = np.asarray(fp, dtype=np.int64)
    n_pos, n_neg = int(tp[-1]), int(fp[-1])
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels(f"need positives and negatives, got {n_pos} and {n_neg}")
    return ConfusionSweep(np.asarray(thresholds, dtype=np.float64), tp, fp, n_pos - tp, n_neg - fp)


def sweep(scores, labels, ignore_id: int = 255) -> ConfusionSweep:
    scores, positive = _effective(scores, labels, ignore_id)
    if positive.sum() == 0 or (~positive).sum() == 0:
        raise DegenerateLabels("need at least one positive and one negative pixel")
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    pos = positive[order]
    tp = np.cumsum(pos)
    fp = np.cumsum(~pos)
    # last index of every run of equal scores
    ends = np.r_[np.flatnonzero(s[1:] != s[:-1]), s.size - 1]
    return from_cumulative(s[ends], tp[ends], fp[ends])


def auprc(sw: ConfusionSweep) -> float:
    """Step-wise average precision, sum of (R_n - R_{n-1}) * P_n."""
    recall = sw.recall()
    steps = np.diff(np.r_[0.0, recall])
    return float(np.sum(steps * sw.precision()))


def fpr_at_95tpr(sw: ConfusionSweep, target: float = TPR_TARGET) -> float:
    hit = np.flatnonzero(sw.recall() >= target)
    # the last threshold always has recall 1
    return float(sw.fpr()[hit[0]])


def max_f1(sw: ConfusionSweep) -> float:
    p = sw.precision()
    r = sw.recall()
    denom = p + r
    f1 = np.divide(2 * p * r, denom, out=np.zeros_like(denom), where=denom > 0)
    return float(f1.max())


class HistogramAccumulator:
    """Fixed-bin score histograms for streaming evaluation.

    Scores are clipped into ``[score_min, score_max]`` and binned uniformly.
    Accumulators with identical binning merge by adding counts, so per-image
    accumulation can be reduced in any order.
    """

    def __init__(self, n_bins: int = 4096, score_min: float = 0.0, score_max: float = 1.0,
                 ignore_id: int = 255):
        if n_bins < 1:
            raise ValueError("n_bins must be >= 1")
        if not score_max > score_min:
            raise ValueError("score_max must exceed score_min")
        self.n_bins = int(n_bins)
        self.score_min = float(score_min)
        self.score_max = float(score_max)
        self.ignore_id = ignore_id
        self.pos_counts = np.zeros(self.n_bins, dtype=np.int64)
        self.neg_counts = np.zeros(self.n_bins, dtype=np.int64)
        self.n_ignored = 0

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.score_min, self.score_max, self.n_bins + 1)

    def bin_index(self, scores: np.ndarray) -> np.ndarray:
        scale = self.n_bins / (self.score_max - self.score_min)
        idx = np.floor((np.asarray(scores, dtype=np.float64) - self.score_min) * scale)
        return np.clip(idx, 0, self.n_bins - 1).astype(np.int64)

    def update(self, scores, labels) -> "HistogramAccumulator":
        labels_arr = np.asarray(labels).ravel()
        self.n_ignored += int((labels_arr == self.ignore_id).sum())
        s, positive = _effective(scores, labels_arr, self.ignore_id)
        idx = self.bin_index(s)
        self.pos_counts += np.bincount(idx[positive], minlength=self.n_bins)
        self.neg_counts += np.bincount(idx[~positive], minlength=self.n_bins)
        return self

    def _check_compatible(self, other: "HistogramAccumulator") -> None:
        if (self.n_bins, self.score_min, self.score_max) != (other.n_bins, other.score_min, other.score_max):
            raise ValueError("cannot merge accumulators with different binning")

    def merge(self, other: "HistogramAccumulator") -> "HistogramAccumulator":
        self._check_compatible(other)
        out = HistogramAccumulator(self.n_bins, self.score_min, self.score_max, self.ignore_id)
        out.pos_counts = self.pos_counts + other.pos_counts
        out.neg_counts = self.neg_counts + other.neg_counts
        out.n_ignored = self.n_ignored + other.n_ignored
        return out

    __add__ = merge

    def to_sweep(self) -> ConfusionSweep:
        # thresholds are bin lower edges, highest first; empty bins add no point
        pos = self.pos_counts[::-1]
        neg = self.neg_counts[::-1]
        occupied = (pos + neg) > 0
        lower = self.edges[:-1][::-1]
        tp = np.cumsum(pos)[occupied]
        fp = np.cumsum(neg)[occupied]
        if tp.size == 0:
            raise DegenerateLabels("histogram is empty")
        return from_cumulative(lower[occupied], tp, fp)

    def five_number(self, positive: bool) -> "FiveNumber":
        """Approximate five-number summary from bin centres."""
        counts = self.pos_counts if positive else self.neg_counts
        if counts.sum() == 0:
            raise DegenerateLabels("empty population")
        edges = self.edges
        centers = (edges[:-1] + edges[1:]) / 2
        cdf = np.cumsum(counts)
        n = int(cdf[-1])

        def quantile(q):
            # rank of the linear-interpolation quantile, mapped to its bin
            rank = int(np.floor(q * (n - 1)))
            return float(centers[np.searchsorted(cdf, rank + 1)])

        occupied = np.flatnonzero(counts)
        return FiveNumber(float(centers[occupied[0]]), quantile(0.25), quantile(0.5),
                          quantile(0.75), float(centers[occupied[-1]]))


def histogram_metrics(acc: HistogramAccumulator) -> Dict[str, float]:
    sw = acc.to_sweep()
    return {"max_f1": max_f1(sw), "auprc": auprc(sw), "fpr_at_95tpr": fpr_at_95tpr(sw)}


@dataclass(frozen=True)
class FiveNumber:
    min: float
    q1: float
    median: float
    q3: float
    max: float

    def as_tuple(self) -> Tuple[float, ...]:
        return (self.min, self.q1, self.median, self.q3, self.max)


def five_number(values) -> FiveNumber:
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise DegenerateLabels("empty population")
    q = np.percentile(values, [0, 25, 50, 75, 100], method="linear")
    return FiveNumber(*(float(v) for v in q))


def score_boxplots(scores, labels, ignore_id: int = 255) -> Tuple[FiveNumber, FiveNumber]:
    """Five-number summaries of (ID, OOD) pixel scores."""
    s, positive = _effective(scores, labels, ignore_id)
    return five_number(s[~positive]), five_number(s[positive])


@dataclass
class AnomalyReport:
    max_f1: float
    auprc: float
    fpr_at_95tpr: float
    n_ood_pixels: int
    n_id_pixels: int
    n_ignored: int
    boxplot_id: FiveNumber
    boxplot_ood: FiveNumber
    dataset: str = ""
    method: str = ""
    pr_curve: Optional[Dict[str, list]] = None
    header: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["boxplot_id"] = list(self.boxplot_id.as_tuple())
        d["boxplot_ood"] = list(self.boxplot_ood.as_tuple())
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AnomalyReport":
        d = dict(d)
        d["boxplot_id"] = FiveNumber(*d["boxplot_id"])
        d["boxplot_ood"] = FiveNumber(*d["boxplot_ood"])
        return cls(**d)


def pr_curve_points(sw: ConfusionSweep, max_points: int = 512) -> Dict[str, list]:
    """Precision/recall pairs, thinned evenly for storage and plotting."""
    idx = np.arange(sw.thresholds.size)
    if idx.size > max_points:
        idx = np.unique(np.linspace(0, idx.size - 1, max_points).round().astype(int))
    return {
        "threshold": sw.thresholds[idx].tolist(),
        "precision": sw.precision()[idx].tolist(),
        "recall": sw.recall()[idx].tolist(),
    }


def anomaly_report(scores, labels, ignore_id: int = 255, dataset: str = "", method: str = "") -> AnomalyReport:
    labels_arr = np.asarray(labels).ravel()
    sw = sweep(scores, labels_arr, ignore_id)
    box_id, box_ood = score_boxplots(scores, labels_arr, ignore_id)
    return AnomalyReport(
        max_f1=max_f1(sw), auprc=auprc(sw), fpr_at_95tpr=fpr_at_95tpr(sw),
        n_ood_pixels=sw.n_pos, n_id_pixels=sw.n_neg,
        n_ignored=int((labels_arr == ignore_id).sum()),
        boxplot_id=box_id, boxplot_ood=box_ood,
        dataset=dataset, method=method, pr_curve=pr_curve_points(sw),
    )


def histogram_report(acc: HistogramAccumulator, dataset: str = "", method: str = "") -> AnomalyReport:
    sw = acc.to_sweep()
    return AnomalyReport(
        max_f1=max_f1(sw), auprc=auprc(sw), fpr_at_95tpr=fpr_at_95tpr(sw),
        n_ood_pixels=sw.n_pos, n_id_pixels=sw.n_neg, n_ignored=acc.n_ignored,
        boxplot_id=acc.five_number(False), boxplot_ood=acc.five_number(True),
        dataset=dataset, method=method, pr_curve=pr_curve_points(sw),
    )


def confusion_matrix(pred, gt, n_classes: int, ignore_id: int) -> np.ndarray:
    pred = np.asarray(pred).ravel().astype(np.int64)
    gt = np.asarray(gt).ravel().astype(np.int64)
    keep = gt != ignore_id
    pred, gt = pred[keep], gt[keep]
    # predictions of ignore_id or out-of-range ids count as misses
    pred = np.where((pred >= 0) & (pred < n_classes), pred, n_classes)
    cm = np.bincount(gt * (n_classes + 1) + pred, minlength=n_classes * (n_classes + 1))
    return cm.reshape(n_classes, n_classes + 1)


def miou(pred_labels, gt_labels, convention: Optional[LabelConvention] = None,
         ignore_id: Optional[int] = None) -> Tuple[Dict[int, float], float]:
    """Per-class IoU over classes present in the ground truth, and their mean."""
    pred_labels = np.asarray(pred_labels)
    gt_labels = np.asarray(gt_labels)
    if pred_labels.shape != gt_labels.shape:
        raise ShapeError(f"prediction {pred_labels.shape} vs ground truth {gt_labels.shape}")
    if ignore_id is None:
        ignore_id = convention.ignore_id if convention is not None else 255
    gt_valid = gt_labels[gt_labels != ignore_id]
    if gt_valid.size == 0:
        raise DegenerateLabels("ground truth has no non-ignored pixels")
    n = int(max(gt_valid.max(), 0)) + 1
    cm = confusion_matrix(pred_labels, gt_labels, n, ignore_id)
    tp = np.diag(cm[:, :n])
    gt_count = cm.sum(axis=1)
    pred_count = cm[:, :n].sum(axis=0)
    ious = {}
    for c in np.flatnonzero(gt_count):
        ious[int(c)] = float(tp[c] / (gt_count[c] + pred_count[c] - tp[c]))
    return ious, float(np.mean(list(ious.values())))
