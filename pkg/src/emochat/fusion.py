"""Fused feature rows and the 9-model suite (valence, arousal, 7 binaries).

A fused row is the 33 message dims followed by a 10-dim encoding of the
text analyzer's output. A suite trains one 3-class model each for valence
and arousal plus one one-vs-rest binary per category, all on the same
mode slice: kd (first 33 dims), text (last 10), or fusion (all 43).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .classifier import (
    DimMismatch,
    Dataset,
    ForestModel,
    ForestParams,
    LogisticModel,
    LogisticParams,
    load_model,
    predict_proba,
    save_model,
    train_forest,
    train_logistic,
)
from .core import CATEGORIES, EmochatError, EmotionAnnotation, EmotionPrediction
from .features import FEATURE_NAMES, FeatureRow
from .textanalysis import TextEmotion

MESSAGE_DIM = len(FEATURE_NAMES)  # 33
TEXT_FEATURE_NAMES: tuple[str, ...] = (
    "text_valence",
    "text_arousal",
    *(f"text_label_{c}" for c in CATEGORIES),
    "text_confidence",
)
TEXT_DIM = len(TEXT_FEATURE_NAMES)  # 10
FUSED_DIM = MESSAGE_DIM + TEXT_DIM  # 43

MODES = ("kd", "text", "fusion")
TARGETS: tuple[str, ...] = ("valence", "arousal", *CATEGORIES)

SUITE_MANIFEST = "manifest.json"
SUITE_SCHEMA_VERSION = 1


class MissingLabels(EmochatError):
    """A training row has no gold annotation."""


class SuiteFormatError(EmochatError):
    """Suite directory is missing files or inconsistent with this build."""


def mode_slice(mode: str) -> slice:
    if mode == "kd":
        return slice(0, MESSAGE_DIM)
    if mode == "text":
        return slice(MESSAGE_DIM, FUSED_DIM)
    if mode == "fusion":
        return slice(0, FUSED_DIM)
    raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def mode_dim(mode: str) -> int:
    s = mode_slice(mode)
    return s.stop - s.start


@dataclass(frozen=True, slots=True)
class FusedRow:
    message_id: str
    values: np.ndarray  # exactly FUSED_DIM floats

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.shape != (FUSED_DIM,):
            raise ValueError(f"fused row must have {FUSED_DIM} dims")


@dataclass(frozen=True, slots=True)
class LabeledRow:
    fused: FusedRow
    gold: EmotionAnnotation | None = None


def encode_text_emotion(te: TextEmotion) -> np.ndarray:
    vec = np.zeros(TEXT_DIM)
    vec[0] = te.valence
    vec[1] = te.arousal
    for lab in te.labels:
        vec[2 + CATEGORIES.index(lab)] = 1.0
    vec[-1] = te.confidence
    return vec


def build_fused_row(row: FeatureRow, te: TextEmotion) -> FusedRow:
    """Concatenate message dims (zero-filled KD when invalid) with text dims."""
    return FusedRow(
        message_id=row.message_id,
        values=np.concatenate([row.as_array(), encode_text_emotion(te)]),
    )


@dataclass(frozen=True, slots=True)
class SuiteParams:
    classifier: str = "forest"  # "forest" | "logistic"
    forest: ForestParams = field(default_factory=ForestParams)
    logistic: LogisticParams = field(default_factory=LogisticParams)

    def __post_init__(self) -> None:
        if self.classifier not in ("forest", "logistic"):
            raise ValueError(f"classifier must be forest|logistic, got {self.classifier!r}")


Member = ForestModel | LogisticModel


@dataclass(slots=True)
class ModelSuite:
    mode: str
    valence_model: Member
    arousal_model: Member
    category_models: dict[str, Member]
    params: SuiteParams
    seed: int

    @property
    def input_dim(self) -> int:
        return mode_dim(self.mode)

    def slice_values(self, fused_values: np.ndarray) -> np.ndarray:
        return np.asarray(fused_values, dtype=np.float64)[mode_slice(self.mode)]

    def member(self, target: str) -> Member:
        if target == "valence":
            return self.valence_model
        if target == "arousal":
            return self.arousal_model
        return self.category_models[target]


def _member_seed(seed: int, target_index: int) -> int:
    return (seed * 9973 + target_index) % 2**31


def _train_member(X: np.ndarray, y: np.ndarray, class_count: int, params: SuiteParams, seed: int) -> Member:
    data = Dataset(X=X, y=y, class_count=class_count)
    if params.classifier == "forest":
        return train_forest(data, params.forest, seed=seed)
    return train_logistic(data, params.logistic)


def train_suite(
    rows: list[LabeledRow],
    mode: str = "fusion",
    params: SuiteParams = SuiteParams(),
    seed: int = 0,
) -> ModelSuite:
    """Train all 9 member models on the mode's dim slice; seeded and deterministic."""
    if any(r.gold is None for r in rows):
        raise MissingLabels("every training row needs a gold annotation")
    sl = mode_slice(mode)
    X = np.stack([r.fused.values[sl] for r in rows])
    golds = [r.gold for r in rows]

    # scale values map -1/0/1 onto class indices 0/1/2
    y_val = np.array([g.valence + 1 for g in golds])
    y_aro = np.array([g.arousal + 1 for g in golds])

    valence_model = _train_member(X, y_val, 3, params, _member_seed(seed, 0))
    arousal_model = _train_member(X, y_aro, 3, params, _member_seed(seed, 1))
    category_models = {}
    for i, cat in enumerate(CATEGORIES):
        y_bin = np.array([1 if cat in g.labels else 0 for g in golds])
        category_models[cat] = _train_member(X, y_bin, 2, params, _member_seed(seed, 2 + i))
    return ModelSuite(
        mode=mode,
        valence_model=valence_model,
        arousal_model=arousal_model,
        category_models=category_models,
        params=params,
        seed=seed,
    )


def predict_message(suite: ModelSuite, values: np.ndarray, message_id: str = "") -> EmotionPrediction:
    """Predict all 9 targets for one mode-sliced row.

    Labels are the categories whose binary confidence exceeds 0.5, capped
    at the top 3; if none clear the bar, the single most confident
    category is emitted.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (suite.input_dim,):
        raise DimMismatch(f"expected dim {suite.input_dim}, got {values.shape}")
    row = values[None, :]

    val_proba = predict_proba(suite.valence_model, row)[0]
    aro_proba = predict_proba(suite.arousal_model, row)[0]
    val_cls = int(np.argmax(val_proba))
    aro_cls = int(np.argmax(aro_proba))

    cat_conf = {
        cat: float(predict_proba(model, row)[0][1])
        for cat, model in suite.category_models.items()
    }
    above = sorted(
        (c for c in CATEGORIES if cat_conf[c] > 0.5),
        key=lambda c: (-cat_conf[c], CATEGORIES.index(c)),
    )
    if above:
        chosen = above[:3]
    else:
        chosen = [min(CATEGORIES, key=lambda c: (-cat_conf[c], CATEGORIES.index(c)))]

    source = {"kd": "kd", "text": "text", "fusion": "fusion"}[suite.mode]
    return EmotionPrediction(
        message_id=message_id,
        valence=val_cls - 1,
        valence_confidence=float(val_proba[val_cls]),
        arousal=aro_cls - 1,
        arousal_confidence=float(aro_proba[aro_cls]),
        labels=tuple((c, cat_conf[c]) for c in chosen),
        source=source,
    )


def feature_dictionary_hash() -> str:
    text = "\n".join(FEATURE_NAMES + TEXT_FEATURE_NAMES)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def save_suite(suite: ModelSuite, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    files = {}
    for target in TARGETS:
        fname = f"{target}.model"
        save_model(suite.member(target), os.path.join(directory, fname))
        files[target] = fname
    manifest = {
        "schema_version": SUITE_SCHEMA_VERSION,
        "mode": suite.mode,
        "input_dim": suite.input_dim,
        "seed": suite.seed,
        "classifier": suite.params.classifier,
        "feature_dictionary_hash": feature_dictionary_hash(),
        "models": files,
    }
    with open(os.path.join(directory, SUITE_MANIFEST), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_suite(directory: str) -> ModelSuite:
    path = os.path.join(directory, SUITE_MANIFEST)
    try:
        with open(path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError as exc:
        raise SuiteFormatError(f"missing {SUITE_MANIFEST} in {directory}") from exc
    except json.JSONDecodeError as exc:
        raise SuiteFormatError(f"{path}: {exc}") from exc
    if manifest.get("schema_version") != SUITE_SCHEMA_VERSION:
        raise SuiteFormatError(f"unsupported suite schema_version {manifest.get('schema_version')}")
    if manifest.get("feature_dictionary_hash") != feature_dictionary_hash():
        raise SuiteFormatError("suite was trained against a different feature dictionary")
    mode = manifest["mode"]
    members = {
        target: load_model(os.path.join(directory, fname))
        for target, fname in manifest["models"].items()
    }
    missing = set(TARGETS) - set(members)
    if missing:
        raise SuiteFormatError(f"suite missing models for {sorted(missing)}")
    classifier = manifest.get("classifier", "forest")
    return ModelSuite(
        mode=mode,
        valence_model=members["valence"],
        arousal_model=members["arousal"],
        category_models={c: members[c] for c in CATEGORIES},
        params=SuiteParams(classifier=classifier),
        seed=manifest["seed"],
    )
