"""Slow, direct reference computations used as test oracles.

Nothing here calls into pocsynth's metric or filtering code.
"""
import math


def brute_force_metrics(scores, labels, ignore_id=255, target=0.95):
    """AP, FPR at target recall and max F1 by thresholding at every distinct score."""
    pairs = [(float(s), int(l)) for s, l in zip(scores, labels) if int(l) != ignore_id]
    n_pos = sum(1 for _, l in pairs if l == 1)
    n_neg = len(pairs) - n_pos
    thresholds = sorted({s for s, _ in pairs}, reverse=True)
    ap, prev_recall = 0.0, 0.0
    fpr95 = None
    best_f1 = 0.0
    for t in thresholds:
        tp = sum(1 for s, l in pairs if s >= t and l == 1)
        fp = sum(1 for s, l in pairs if s >= t and l == 0)
        precision = tp / (tp + fp)
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
        if fpr95 is None and recall >= target:
            fpr95 = fp / n_neg
        if precision + recall > 0:
            best_f1 = max(best_f1, 2 * precision * recall / (precision + recall))
    return ap, fpr95, best_f1


def gaussian_point_response(sigma, truncate):
    """Feathered response of a single interior pixel, evaluated pointwise.

    Returns a dict mapping (dy, dx) offsets to weights.
    """
    radius = int(truncate * sigma + 0.5)
    raw = {}
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            raw[(dy, dx)] = math.exp(-(dx * dx + dy * dy) / (2 * sigma * sigma))
    total = sum(raw.values())
    return {k: v / total for k, v in raw.items()}


def direct_miou(pred, gt, ignore_id=255):
    pred = [int(v) for v in pred]
    gt = [int(v) for v in gt]
    classes = sorted({g for g in gt if g != ignore_id})
    ious = {}
    for c in classes:
        tp = fp = fn = 0
        for p, g in zip(pred, gt):
            if g == ignore_id:
                continue
            if p == c and g == c:
                tp += 1
            elif p == c:
                fp += 1
            elif g == c:
                fn += 1
        ious[c] = tp / (tp + fp + fn)
    return ious, sum(ious.values()) / len(ious)


def hsv_to_rgb_255(hue_degrees, s, v):
    """Textbook HSV to RGB conversion, rounded to 8 bits."""
    c = v * s
    h = hue_degrees / 60.0
    x = c * (1 - abs(h % 2 - 1))
    sector = int(h) % 6
    r, g, b = [(c, x, 0), (x, c, 0), (0, c, x), (0, x, c), (x, 0, c), (c, 0, x)][sector]
    m = v - c
    return tuple(int(round((ch + m) * 255)) for ch in (r, g, b))
