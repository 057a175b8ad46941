"""Metrics, cross-validation, inter-annotator agreement, gold aggregation."""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .core import CATEGORIES, EmochatError, EmotionAnnotation
from .fusion import (
    LabeledRow,
    ModelSuite,
    SuiteParams,
    TARGETS,
    mode_slice,
    predict_proba,
    train_suite,
)


class LengthMismatch(EmochatError):
    pass


class EmptyInput(EmochatError):
    pass


class TooFewRows(EmochatError):
    pass


class InsufficientData(EmochatError):
    pass


class IdMismatch(EmochatError):
    pass


@dataclass(frozen=True, slots=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True, slots=True)
class MetricsReport:
    """Confusion-matrix metrics; weighted averages use true-class support."""

    classes: tuple[int, ...]
    confusion: tuple[tuple[int, ...], ...]  # rows = true class, cols = predicted
    accuracy: float
    per_class: dict[int, ClassMetrics]
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float

    def balanced_accuracy(self) -> float:
        """Mean recall over classes with support; 0.5 is chance for any binary."""
        recalls = [m.recall for m in self.per_class.values() if m.support > 0]
        return sum(recalls) / len(recalls) if recalls else 0.0


def compute_metrics(y_true, y_pred) -> MetricsReport:
    y_true = list(y_true)
    y_pred = list(y_pred)
    if not y_true:
        raise EmptyInput("need at least one labeled point")
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} true vs {len(y_pred)} predicted")

    classes = tuple(sorted(set(y_true) | set(y_pred)))
    index = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    confusion = [[0] * k for _ in range(k)]
    for t, p in zip(y_true, y_pred):
        confusion[index[t]][index[p]] += 1

    n = len(y_true)
    correct = sum(confusion[i][i] for i in range(k))
    accuracy = correct / n

    per_class: dict[int, ClassMetrics] = {}
    w_precision = 0.0
    w_recall = 0.0
    w_f1 = 0.0
    for i, c in enumerate(classes):
        tp = confusion[i][i]
        predicted = sum(confusion[r][i] for r in range(k))
        support = sum(confusion[i])
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[c] = ClassMetrics(precision=precision, recall=recall, f1=f1, support=support)
        w_precision += support * precision
        w_recall += support * recall
        w_f1 += support * f1

    return MetricsReport(
        classes=classes,
        confusion=tuple(tuple(row) for row in confusion),
        accuracy=accuracy,
        per_class=per_class,
        weighted_precision=w_precision / n,
        weighted_recall=w_recall / n,
        weighted_f1=w_f1 / n,
    )


# ---------------------------------------------------------------------------
# Cross-validation over the 9-target suite


def target_truths(rows: list[LabeledRow], target: str) -> list[int]:
    if target == "valence":
        return [r.gold.valence for r in rows]
    if target == "arousal":
        return [r.gold.arousal for r in rows]
    return [1 if target in r.gold.labels else 0 for r in rows]


def predict_target_batch(suite: ModelSuite, X: np.ndarray, target: str) -> list[int]:
    proba = predict_proba(suite.member(target), X)
    cls = np.argmax(proba, axis=1)
    if target in ("valence", "arousal"):
        return [int(c) - 1 for c in cls]
    return [int(c) for c in cls]


def evaluate_suite(suite: ModelSuite, rows: list[LabeledRow]) -> dict[str, MetricsReport]:
    """Metrics per target for a trained suite on labeled rows."""
    sl = mode_slice(suite.mode)
    X = np.stack([r.fused.values[sl] for r in rows])
    return {
        target: compute_metrics(target_truths(rows, target), predict_target_batch(suite, X, target))
        for target in TARGETS
    }


@dataclass(frozen=True, slots=True)
class CrossValidationResult:
    folds: tuple[dict[str, MetricsReport], ...]
    pooled: dict[str, MetricsReport]  # all out-of-fold predictions together
    fold_sizes: tuple[int, ...]

    def mean_std(self, target: str, metric: str) -> tuple[float, float]:
        vals = np.array([getattr(f[target], metric) for f in self.folds], dtype=np.float64)
        return float(vals.mean()), float(vals.std())


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffled k-fold: disjoint folds covering range(n)."""
    order = np.random.default_rng(seed).permutation(n)
    return [np.asarray(f) for f in np.array_split(order, k)]


def cross_validate(
    rows: list[LabeledRow],
    k: int,
    mode: str = "fusion",
    params: SuiteParams = SuiteParams(),
    seed: int = 0,
) -> CrossValidationResult:
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(rows) < k:
        raise TooFewRows(f"need at least {k} rows for {k}-fold CV, got {len(rows)}")
    folds = kfold_indices(len(rows), k, seed)

    fold_reports: list[dict[str, MetricsReport]] = []
    pooled_true: dict[str, list[int]] = {t: [] for t in TARGETS}
    pooled_pred: dict[str, list[int]] = {t: [] for t in TARGETS}
    for fold_idx, test_idx in enumerate(folds):
        test_set = set(test_idx.tolist())
        train_rows = [r for i, r in enumerate(rows) if i not in test_set]
        test_rows = [rows[i] for i in test_idx]
        suite = train_suite(train_rows, mode=mode, params=params, seed=seed + fold_idx)
        sl = mode_slice(mode)
        X_test = np.stack([r.fused.values[sl] for r in test_rows])
        report: dict[str, MetricsReport] = {}
        for target in TARGETS:
            truths = target_truths(test_rows, target)
            preds = predict_target_batch(suite, X_test, target)
            report[target] = compute_metrics(truths, preds)
            pooled_true[target].extend(truths)
            pooled_pred[target].extend(preds)
        fold_reports.append(report)

    pooled = {t: compute_metrics(pooled_true[t], pooled_pred[t]) for t in TARGETS}
    return CrossValidationResult(
        folds=tuple(fold_reports),
        pooled=pooled,
        fold_sizes=tuple(len(f) for f in folds),
    )


# ---------------------------------------------------------------------------
# Krippendorff's alpha (coincidence-matrix formulation)


@dataclass(frozen=True, slots=True)
class AgreementReport:
    alpha: float
    metric: str
    unit_count: int
    annotator_count: int


def krippendorff_alpha(ratings, metric: str = "nominal") -> AgreementReport:
    """Alpha over a units x annotators matrix; None marks a missing rating.

    Nominal distance is 0/1 on equality; interval distance is the squared
    value difference. Zero expected disagreement (everyone identical
    everywhere) is defined as alpha = 1.0.
    """
    if metric not in ("nominal", "interval"):
        raise ValueError(f"metric must be nominal|interval, got {metric!r}")
    units = [list(unit) for unit in ratings]
    annotator_count = max((len(unit) for unit in units), default=0)
    rows = [[v for v in unit if v is not None] for unit in units]
    pairable = [unit for unit in rows if len(unit) >= 2]
    if len(pairable) < 2:
        raise InsufficientData("need at least 2 units with at least 2 ratings each")

    values = sorted({v for unit in pairable for v in unit})
    vindex = {v: i for i, v in enumerate(values)}
    k = len(values)
    coincidence = np.zeros((k, k))
    for unit in pairable:
        m = len(unit)
        for i, a in enumerate(unit):
            for j, b in enumerate(unit):
                if i != j:
                    coincidence[vindex[a], vindex[b]] += 1.0 / (m - 1)

    if metric == "nominal":
        delta = 1.0 - np.eye(k)
    else:
        arr = np.asarray(values, dtype=np.float64)
        delta = (arr[:, None] - arr[None, :]) ** 2

    n_c = coincidence.sum(axis=1)
    n = coincidence.sum()
    d_observed = float((coincidence * delta).sum()) / n
    d_expected = float((np.outer(n_c, n_c) * delta).sum()) / (n * (n - 1))
    alpha = 1.0 if d_expected == 0 else 1.0 - d_observed / d_expected
    return AgreementReport(
        alpha=alpha, metric=metric, unit_count=len(pairable), annotator_count=annotator_count
    )


def agreement_summary(
    a1: list[EmotionAnnotation], a2: list[EmotionAnnotation]
) -> dict[str, AgreementReport]:
    """Alpha per target for two annotators: interval for the scales,
    nominal on each category's 0/1 indicator, plus the category average."""
    by_id_1 = {a.message_id: a for a in a1}
    by_id_2 = {a.message_id: a for a in a2}
    if set(by_id_1) != set(by_id_2):
        raise IdMismatch("annotation files cover different message ids")
    ids = sorted(by_id_1)

    out: dict[str, AgreementReport] = {}
    out["valence"] = krippendorff_alpha(
        [[by_id_1[i].valence, by_id_2[i].valence] for i in ids], metric="interval"
    )
    out["arousal"] = krippendorff_alpha(
        [[by_id_1[i].arousal, by_id_2[i].arousal] for i in ids], metric="interval"
    )
    for cat in CATEGORIES:
        out[cat] = krippendorff_alpha(
            [
                [int(cat in by_id_1[i].labels), int(cat in by_id_2[i].labels)]
                for i in ids
            ],
            metric="nominal",
        )
    mean_alpha = sum(out[c].alpha for c in CATEGORIES) / len(CATEGORIES)
    out["categories_mean"] = AgreementReport(
        alpha=mean_alpha,
        metric="nominal",
        unit_count=len(ids),
        annotator_count=2,
    )
    return out


def aggregate_annotations(
    a1: list[EmotionAnnotation], a2: list[EmotionAnnotation], seed: int = 0
) -> list[EmotionAnnotation]:
    """Merge two annotators into gold; disagreements pick one side per field
    via a seeded RNG (stable for a given seed and input order)."""
    by_id_2 = {a.message_id: a for a in a2}
    if {a.message_id for a in a1} != set(by_id_2):
        raise IdMismatch("annotators cover different message ids")
    rng = random.Random(seed)
    gold: list[EmotionAnnotation] = []
    for first in a1:
        second = by_id_2[first.message_id]
        valence = first.valence if first.valence == second.valence else (
            first.valence if rng.random() < 0.5 else second.valence
        )
        arousal = first.arousal if first.arousal == second.arousal else (
            first.arousal if rng.random() < 0.5 else second.arousal
        )
        if set(first.labels) == set(second.labels):
            labels = first.labels
        else:
            labels = first.labels if rng.random() < 0.5 else second.labels
        gold.append(
            EmotionAnnotation(
                message_id=first.message_id,
                valence=valence,
                arousal=arousal,
                labels=labels,
                annotator_id="gold",
            )
        )
    return gold
