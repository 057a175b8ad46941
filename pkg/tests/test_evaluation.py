import random

import numpy as np
import pytest

from emochat.core import CATEGORIES, EmotionAnnotation
from emochat.evaluation import (
    EmptyInput,
    IdMismatch,
    InsufficientData,
    LengthMismatch,
    TooFewRows,
    aggregate_annotations,
    agreement_summary,
    compute_metrics,
    cross_validate,
    kfold_indices,
    krippendorff_alpha,
)
from emochat.fusion import FUSED_DIM, FusedRow, LabeledRow, SuiteParams
from emochat.classifier import ForestParams


# -- independent oracles -----------------------------------------------------


def oracle_metrics(y_true, y_pred):
    """Brute-force confusion metrics, written independently of the library."""
    classes = sorted(set(y_true) | set(y_pred))
    n = len(y_true)
    out = {"accuracy": sum(1 for t, p in zip(y_true, y_pred) if t == p) / n, "per_class": {}}
    wp = wr = wf = 0.0
    for c in classes:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == c and p != c)
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out["per_class"][c] = (precision, recall, f1, support)
        wp += support * precision
        wr += support * recall
        wf += support * f1
    out["weighted"] = (wp / n, wr / n, wf / n)
    return out


def oracle_alpha(units, metric):
    """Pairwise-disagreement alpha, no coincidence matrix."""
    units = [[v for v in u if v is not None] for u in units]
    units = [u for u in units if len(u) >= 2]
    dist = (lambda a, b: float(a != b)) if metric == "nominal" else (lambda a, b: (a - b) ** 2)
    n = sum(len(u) for u in units)
    d_obs = 0.0
    for u in units:
        m = len(u)
        d_obs += sum(dist(a, b) for i, a in enumerate(u) for j, b in enumerate(u) if i != j) / (
            m - 1
        )
    d_obs /= n
    flat = [v for u in units for v in u]
    d_exp = sum(dist(a, b) for a in flat for b in flat) / (n * (n - 1))
    return 1.0 if d_exp == 0 else 1.0 - d_obs / d_exp


# -- compute_metrics ---------------------------------------------------------


class TestComputeMetrics:
    def test_hand_example_one(self):
        rep = compute_metrics([1, 1, 0, 0], [1, 0, 0, 0])
        assert rep.accuracy == 0.75
        assert rep.per_class[1].precision == 1.0
        assert rep.per_class[1].recall == 0.5
        assert rep.per_class[1].f1 == pytest.approx(2 / 3)

    def test_hand_example_two_weighted_f1(self):
        rep = compute_metrics([0, 0, 0, 1], [0, 0, 1, 1])
        assert rep.weighted_f1 == pytest.approx((3 * 0.8 + 1 * (2 / 3)) / 4)

    def test_perfect_prediction(self):
        rep = compute_metrics([0, 1, 2, 1], [0, 1, 2, 1])
        assert rep.accuracy == 1.0
        assert all(m.f1 == 1.0 for m in rep.per_class.values())

    def test_class_absent_from_truth_gets_zero_precision(self):
        rep = compute_metrics([0, 0], [1, 0])
        assert rep.per_class[1].precision == 0.0
        assert rep.per_class[1].support == 0

    def test_errors(self):
        with pytest.raises(EmptyInput):
            compute_metrics([], [])
        with pytest.raises(LengthMismatch):
            compute_metrics([0], [0, 1])

    def test_matches_bruteforce_oracle(self):
        rng = random.Random(99)
        for _ in range(300):
            n = rng.randrange(1, 200)
            c = rng.randrange(1, 7)
            y_true = [rng.randrange(c) for _ in range(n)]
            y_pred = [rng.randrange(c) for _ in range(n)]
            rep = compute_metrics(y_true, y_pred)
            oracle = oracle_metrics(y_true, y_pred)
            assert rep.accuracy == oracle["accuracy"]
            for cls, (p, r, f1, support) in oracle["per_class"].items():
                m = rep.per_class[cls]
                assert (m.precision, m.recall, m.f1, m.support) == (p, r, f1, support)
            assert (rep.weighted_precision, rep.weighted_recall, rep.weighted_f1) == oracle[
                "weighted"
            ]

    def test_weighted_recall_equals_accuracy(self):
        rng = random.Random(5)
        for _ in range(100):
            n = rng.randrange(1, 120)
            c = rng.randrange(1, 6)
            y_true = [rng.randrange(c) for _ in range(n)]
            y_pred = [rng.randrange(c) for _ in range(n)]
            rep = compute_metrics(y_true, y_pred)
            assert rep.weighted_recall == pytest.approx(rep.accuracy, abs=1e-12)

    def test_confusion_rows_sum_to_support(self):
        rep = compute_metrics([0, 0, 1, 2, 2], [0, 1, 1, 2, 0])
        for i, c in enumerate(rep.classes):
            assert sum(rep.confusion[i]) == rep.per_class[c].support


# -- cross-validation --------------------------------------------------------


def handcrafted_rows(per_category=10):
    """Exactly separable rows: one scalar feature encodes the category."""
    rows = []
    for ci, cat in enumerate(CATEGORIES):
        valence = [-1, 0, 1][ci % 3]
        arousal = [-1, 0, 1][(ci + 1) % 3]
        for i in range(per_category):
            # every dim encodes the cluster, so any feature subsample separates
            values = np.full(FUSED_DIM, ci * 10.0 + (i % 3))
            values[33] = valence
            values[34] = arousal
            rows.append(
                LabeledRow(
                    fused=FusedRow(f"m-{cat}-{i}", values),
                    gold=EmotionAnnotation(f"m-{cat}-{i}", valence, arousal, (cat,), "gold"),
                )
            )
    return rows


class TestCrossValidate:
    def test_fold_sizes(self):
        folds = kfold_indices(100, 5, seed=0)
        assert [len(f) for f in folds] == [20] * 5
        covered = sorted(i for f in folds for i in f)
        assert covered == list(range(100))

    def test_fold_determinism(self):
        a = kfold_indices(50, 5, seed=3)
        b = kfold_indices(50, 5, seed=3)
        assert all((x == y).all() for x, y in zip(a, b))

    def test_two_fold_separable_is_perfect(self):
        rows = handcrafted_rows()
        result = cross_validate(
            rows, k=2, mode="fusion",
            params=SuiteParams(forest=ForestParams(n_trees=15, max_depth=10, min_leaf=1)),
            seed=1,
        )
        for fold in result.folds:
            for target in fold:
                assert fold[target].accuracy == 1.0

    def test_too_few_rows(self):
        with pytest.raises(TooFewRows):
            cross_validate(handcrafted_rows(per_category=1)[:4], k=5)


# -- Krippendorff's alpha ----------------------------------------------------


class TestKrippendorffAlpha:
    def test_perfect_agreement_is_exactly_one(self):
        report = krippendorff_alpha([[1, 1], [0, 0], [1, 1]], metric="nominal")
        assert report.alpha == 1.0

    def test_three_unit_nominal_example(self):
        units = [["a", "a"], ["a", "b"], ["b", "b"]]
        report = krippendorff_alpha(units, metric="nominal")
        expected = 1 - (1 / 3) / 0.6
        assert report.alpha == pytest.approx(expected, abs=1e-9)
        assert report.alpha == pytest.approx(oracle_alpha(units, "nominal"), abs=1e-12)

    def test_matches_oracle_on_random_instances(self):
        rng = random.Random(17)
        for _ in range(60):
            n_units = rng.randrange(2, 30)
            n_annotators = rng.randrange(2, 5)
            units = []
            for _ in range(n_units):
                unit = [
                    rng.choice([0, 1, 2, None]) if rng.random() < 0.9 else None
                    for _ in range(n_annotators)
                ]
                units.append(unit)
            pairable = [u for u in units if sum(v is not None for v in u) >= 2]
            distinct = {v for u in pairable for v in u if v is not None}
            if len(pairable) < 2:
                continue
            for metric in ("nominal", "interval"):
                report = krippendorff_alpha(units, metric=metric)
                assert report.alpha == pytest.approx(oracle_alpha(units, metric), abs=1e-10)

    def test_independent_uniform_is_near_zero(self):
        rng = random.Random(23)
        units = [[rng.randrange(2), rng.randrange(2)] for _ in range(10_000)]
        report = krippendorff_alpha(units, metric="nominal")
        assert abs(report.alpha) <= 0.05

    def test_nominal_invariant_under_relabeling(self):
        rng = random.Random(3)
        units = [[rng.choice("xyz"), rng.choice("xyz")] for _ in range(50)]
        relabel = {"x": "q", "y": "r", "z": "s"}
        swapped = [[relabel[a], relabel[b]] for a, b in units]
        assert krippendorff_alpha(units, "nominal").alpha == pytest.approx(
            krippendorff_alpha(swapped, "nominal").alpha, abs=1e-12
        )

    def test_interval_invariant_under_affine_rescale(self):
        rng = random.Random(4)
        units = [[rng.randrange(-1, 2), rng.randrange(-1, 2)] for _ in range(60)]
        scaled = [[3.0 * a + 7.0, 3.0 * b + 7.0] for a, b in units]
        assert krippendorff_alpha(units, "interval").alpha == pytest.approx(
            krippendorff_alpha(scaled, "interval").alpha, abs=1e-9
        )

    def test_insufficient_data(self):
        with pytest.raises(InsufficientData):
            krippendorff_alpha([[1, 1]], metric="nominal")
        with pytest.raises(InsufficientData):
            krippendorff_alpha([[1, None], [None, 0]], metric="nominal")


# -- aggregation -------------------------------------------------------------


def anno(mid, valence, arousal, labels, who):
    return EmotionAnnotation(mid, valence, arousal, labels, who)


class TestAggregateAnnotations:
    def test_identical_annotations_pass_through(self):
        a = [anno("m1", 1, 0, ("happiness",), "a1"), anno("m2", -1, 1, ("anger",), "a1")]
        b = [anno("m1", 1, 0, ("happiness",), "a2"), anno("m2", -1, 1, ("anger",), "a2")]
        gold = aggregate_annotations(a, b, seed=0)
        assert [g.valence for g in gold] == [1, -1]
        assert [g.labels for g in gold] == [("happiness",), ("anger",)]
        assert all(g.annotator_id == "gold" for g in gold)

    def test_disagreement_picks_one_side_stably(self):
        a = [anno("m1", -1, 0, ("anger",), "a1")]
        b = [anno("m1", 1, 0, ("fear",), "a2")]
        first = aggregate_annotations(a, b, seed=5)[0]
        again = aggregate_annotations(a, b, seed=5)[0]
        assert first.valence in (-1, 1)
        assert first.labels in (("anger",), ("fear",))
        assert (first.valence, first.labels) == (again.valence, again.labels)

    def test_label_sets_selected_whole(self):
        a = [anno("m1", 0, 0, ("anger", "fear"), "a1")]
        b = [anno("m1", 0, 0, ("sadness",), "a2")]
        for seed in range(10):
            gold = aggregate_annotations(a, b, seed=seed)[0]
            assert gold.labels in (("anger", "fear"), ("sadness",))

    def test_id_mismatch(self):
        with pytest.raises(IdMismatch):
            aggregate_annotations(
                [anno("m1", 0, 0, ("neutral",), "a1")],
                [anno("m2", 0, 0, ("neutral",), "a2")],
                seed=0,
            )


class TestAgreementSummary:
    def test_identical_files_all_alpha_one(self):
        a = [
            anno("m1", 1, 0, ("happiness",), "a1"),
            anno("m2", -1, 1, ("anger", "fear"), "a1"),
            anno("m3", 0, 0, ("neutral",), "a1"),
        ]
        b = [anno(x.message_id, x.valence, x.arousal, x.labels, "a2") for x in a]
        summary = agreement_summary(a, b)
        for target, report in summary.items():
            assert report.alpha == 1.0, target
        assert summary["valence"].metric == "interval"
        assert summary["anger"].metric == "nominal"
