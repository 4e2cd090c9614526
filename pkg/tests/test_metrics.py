import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_metrics, direct_miou
from pocsynth.catalog import anomaly_test_convention
from pocsynth.errors import DegenerateLabels
from pocsynth.metrics import (
    HistogramAccumulator,
    anomaly_report,
    auprc,
    five_number,
    fpr_at_95tpr,
    histogram_metrics,
    max_f1,
    miou,
    score_boxplots,
    sweep,
)

FOUR = ([0.9, 0.8, 0.2, 0.1], [1, 0, 0, 1])


def test_sweep_perfect_separation():
    sw = sweep([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0])
    i = list(sw.thresholds).index(0.8)
    assert sw.tp[i] == 2 and sw.fp[i] == 0
    assert auprc(sw) == 1.0
    assert fpr_at_95tpr(sw) == 0.0
    assert max_f1(sw) == 1.0


def test_sweep_groups_ties():
    sw = sweep([0.5, 0.5], [1, 0])
    assert sw.thresholds.tolist() == [0.5]
    assert sw.tp.tolist() == [1] and sw.fp.tolist() == [1]


def test_sweep_counts_are_consistent():
    rng = np.random.default_rng(0)
    s = rng.integers(0, 10, 300) / 10
    l = rng.integers(0, 2, 300)
    sw = sweep(s, l)
    assert np.all(np.diff(sw.thresholds) < 0)
    assert np.all(sw.tp + sw.fn == l.sum())
    assert np.all(np.diff(sw.tp) >= 0) and np.all(np.diff(sw.fp) >= 0)


@pytest.mark.parametrize("labels", [[255, 255], [1, 1], [0, 0, 255]])
def test_sweep_degenerate(labels):
    with pytest.raises(DegenerateLabels):
        sweep([0.1] * len(labels), labels)


def test_ignore_pixels_are_dropped():
    sw = sweep([0.9, 0.8, 0.99, 0.2, 0.1], [1, 0, 255, 0, 1])
    assert sw.n_pos == 2 and sw.n_neg == 2
    assert auprc(sw) == pytest.approx(0.75)


def test_four_pixel_example():
    # hand-enumerated: thresholds 0.9, 0.8, 0.2, 0.1 give (P, R) = (1, .5), (.5, .5), (1/3, .5), (.5, 1)
    sw = sweep(*FOUR)
    assert auprc(sw) == pytest.approx(0.75, abs=1e-15)
    assert fpr_at_95tpr(sw) == 1.0
    assert max_f1(sw) == pytest.approx(2 / 3, abs=1e-15)
    assert brute_force_metrics(*FOUR) == pytest.approx((0.75, 1.0, 2 / 3))


def test_single_positive_fpr():
    scores = [0.3, 0.9, 0.5, 0.1, 0.4]
    labels = [1, 0, 0, 0, 0]
    # threshold sits at the positive's score; negatives at or above 0.3 are 0.9, 0.5, 0.4
    assert fpr_at_95tpr(sweep(scores, labels)) == 3 / 4


@pytest.mark.parametrize("prevalence", [0.1, 0.25, 0.5])
def test_constant_scores_f1_closed_form(prevalence):
    n = 1000
    labels = np.zeros(n, dtype=int)
    labels[: int(prevalence * n)] = 1
    f1 = max_f1(sweep(np.full(n, 0.42), labels))
    assert f1 == pytest.approx(2 * prevalence / (prevalence + 1), abs=1e-12)


def test_random_ranking_ap_tends_to_prevalence():
    rng = np.random.default_rng(1)
    n, pi = 200_000, 0.2
    labels = (rng.random(n) < pi).astype(int)
    ap = auprc(sweep(rng.random(n), labels))
    assert ap == pytest.approx(labels.mean(), abs=0.01)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 1)), min_size=2, max_size=40))
def test_exact_sweep_matches_brute_force(data):
    scores = [s / 6 for s, _ in data]
    labels = [l for _, l in data]
    if len(set(labels)) < 2:
        return
    sw = sweep(scores, labels)
    ap, fpr, f1 = brute_force_metrics(scores, labels)
    assert abs(auprc(sw) - ap) <= 1e-12
    assert fpr_at_95tpr(sw) == fpr
    assert abs(max_f1(sw) - f1) <= 1e-12


def test_rank_invariance_under_cube():
    rng = np.random.default_rng(2)
    s = rng.uniform(-1, 1, 500)
    l = rng.integers(0, 2, 500)
    a, b = sweep(s, l), sweep(s**3, l)
    for metric in (auprc, fpr_at_95tpr, max_f1):
        assert metric(a) == metric(b)


def test_histogram_lossless_at_bin_centres():
    n_bins = 16
    centres = (np.arange(n_bins) + 0.5) / n_bins
    rng = np.random.default_rng(3)
    scores = centres[rng.integers(0, n_bins, 400)]
    labels = rng.integers(0, 2, 400)
    acc = HistogramAccumulator(n_bins).update(scores, labels)
    sw = sweep(scores, labels)
    assert histogram_metrics(acc) == {"max_f1": max_f1(sw), "auprc": auprc(sw), "fpr_at_95tpr": fpr_at_95tpr(sw)}


def test_histogram_merge_is_order_free():
    rng = np.random.default_rng(4)
    parts = [(rng.random(100), rng.integers(0, 2, 100)) for _ in range(5)]
    accs = [HistogramAccumulator(64).update(s, l) for s, l in parts]
    forward = accs[0]
    for a in accs[1:]:
        forward = forward + a
    backward = accs[-1]
    for a in reversed(accs[:-1]):
        backward = a + backward
    whole = HistogramAccumulator(64).update(np.concatenate([p[0] for p in parts]),
                                             np.concatenate([p[1] for p in parts]))
    for acc in (forward, backward):
        assert np.array_equal(acc.pos_counts, whole.pos_counts)
        assert np.array_equal(acc.neg_counts, whole.neg_counts)
    assert histogram_metrics(forward) == histogram_metrics(whole)


def test_histogram_merge_rejects_mismatched_bins():
    with pytest.raises(ValueError):
        HistogramAccumulator(8) + HistogramAccumulator(16)


def test_histogram_without_positives():
    acc = HistogramAccumulator(8).update([0.1, 0.2], [0, 0])
    with pytest.raises(DegenerateLabels):
        histogram_metrics(acc)


def test_histogram_counts_ignored():
    acc = HistogramAccumulator(8).update([0.1, 0.2, 0.3], [0, 255, 1])
    assert acc.n_ignored == 1
    assert acc.pos_counts.sum() + acc.neg_counts.sum() == 2


def test_miou_identity():
    gt = np.random.default_rng(5).integers(0, 5, (8, 8))
    ious, mean = miou(gt, gt)
    assert mean == 1.0 and all(v == 1.0 for v in ious.values())


def test_miou_two_by_two():
    ious, mean = miou(np.array([[0, 1], [1, 1]]), np.array([[0, 0], [1, 1]]))
    assert ious == {0: 0.5, 1: pytest.approx(2 / 3)}
    assert mean == pytest.approx(7 / 12)


def test_miou_skips_classes_missing_from_gt():
    gt = np.array([0, 0, 3, 3])
    pred = np.array([0, 0, 3, 3])
    ious, mean = miou(pred, gt)
    assert set(ious) == {0, 3} and mean == 1.0


def test_miou_ignores_ignore_pixels():
    gt = np.array([0, 1, 255, 255])
    pred = np.array([0, 1, 1, 0])
    assert miou(pred, gt, anomaly_test_convention())[1] == 1.0


def test_miou_all_ignore():
    with pytest.raises(DegenerateLabels):
        miou(np.zeros(4), np.full(4, 255))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=64),
       st.permutations(range(5)))
def test_miou_matches_direct_and_is_permutation_invariant(pairs, perm):
    pred = np.array([p for p, _ in pairs])
    gt = np.array([g for _, g in pairs])
    ious, mean = miou(pred, gt)
    ref_ious, ref_mean = direct_miou(pred, gt)
    assert ious == pytest.approx(ref_ious, abs=1e-12)
    assert abs(mean - ref_mean) <= 1e-12
    table = np.array(perm)
    assert miou(table[pred], table[gt])[1] == pytest.approx(mean, abs=1e-12)


def test_five_number_odd_count():
    assert five_number([1, 2, 3, 4, 5]).as_tuple() == (1, 2, 3, 4, 5)
    assert five_number([7, 7, 7]).as_tuple() == (7, 7, 7, 7, 7)


def test_boxplot_gaussian_quartiles():
    rng = np.random.default_rng(6)
    n = 200_000
    scores = np.r_[rng.normal(0, 1, n), rng.normal(5, 2, n)]
    labels = np.r_[np.zeros(n), np.ones(n)].astype(int)
    box_id, box_ood = score_boxplots(scores, labels)
    assert box_id.q1 == pytest.approx(-0.674, abs=0.02)
    assert box_id.q3 == pytest.approx(0.674, abs=0.02)
    assert box_ood.median == pytest.approx(5, abs=0.03)
    assert box_ood.q3 - box_ood.q1 == pytest.approx(2 * 2 * 0.6745, abs=0.05)


def test_boxplot_needs_both_populations():
    with pytest.raises(DegenerateLabels):
        score_boxplots([0.1, 0.2], [0, 0])


def test_report_fields():
    rep = anomaly_report([0.9, 0.8, 0.2, 0.1, 0.5], [1, 0, 0, 1, 255])
    assert rep.n_ood_pixels == 2 and rep.n_id_pixels == 2 and rep.n_ignored == 1
    assert rep.auprc == pytest.approx(0.75)
    d = rep.to_dict()
    assert type(rep).from_dict(d).to_dict() == d
