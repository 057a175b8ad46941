"""Trainable classifiers: random forest and multinomial logistic regression.

Both are seeded and fully deterministic, persist to a versioned binary
file, and report a confidence with every prediction (vote fraction for
the forest, max softmax probability for the logistic model).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import EmochatError

MODEL_MAGIC = b"EMOCHAT-MODEL\n"
SCHEMA_VERSION = 1


class EmptyData(EmochatError):
    """Training was given no rows."""


class DimMismatch(EmochatError):
    """Feature vector length does not match the model's input dimension."""


class CorruptModel(EmochatError):
    """Model file is truncated or not in the expected format."""


class VersionMismatch(EmochatError):
    """Model file was written with a different schema version."""


@dataclass(frozen=True, slots=True)
class Dataset:
    """Feature matrix plus integer class labels in [0, class_count)."""

    X: np.ndarray
    y: np.ndarray
    class_count: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "X", np.asarray(self.X, dtype=np.float64))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=np.int64))
        if self.X.ndim != 2:
            raise ValueError("X must be 2-dimensional")
        if len(self.X) != len(self.y):
            raise ValueError("X and y must have the same number of rows")
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= self.class_count):
            raise ValueError("labels must be in [0, class_count)")

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return len(self.y)


@dataclass(frozen=True, slots=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 12
    min_leaf: int = 2
    features_per_split: int | None = None  # None -> round(sqrt(dim))


@dataclass(frozen=True, slots=True)
class LogisticParams:
    learning_rate: float = 0.1
    epochs: int = 300
    l2: float = 1e-3


@dataclass(slots=True)
class Tree:
    """Flat node arrays; feature == -1 marks a leaf. Leaves keep class counts."""

    feature: np.ndarray  # int64, -1 at leaves
    threshold: np.ndarray  # float64
    left: np.ndarray  # int64 child index
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, class_count) float64, zeros at internal nodes
    leaf_class: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        # argmax breaks count ties toward the lower class index
        self.leaf_class = np.argmax(self.counts, axis=1)

    def predict_class(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            active = self.feature[node] >= 0
            if not active.any():
                break
            act = rows[active]
            nd = node[active]
            go_left = X[act, self.feature[nd]] <= self.threshold[nd]
            node[act] = np.where(go_left, self.left[nd], self.right[nd])
        return self.leaf_class[node]


@dataclass(slots=True)
class ForestModel:
    trees: list[Tree]
    params: ForestParams
    seed: int
    feature_dim: int
    class_count: int
    schema_version: int = SCHEMA_VERSION


@dataclass(slots=True)
class LogisticModel:
    weights: np.ndarray  # (class_count, dim + 1), column 0 is the bias
    mean: np.ndarray
    std: np.ndarray
    params: LogisticParams
    feature_dim: int
    class_count: int
    schema_version: int = SCHEMA_VERSION


def _best_split(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    candidates: np.ndarray,
    min_leaf: int,
    class_count: int,
) -> tuple[int, float] | None:
    n = idx.size
    ysub = y[idx]
    eye = np.eye(class_count, dtype=np.float64)
    best_score = math.inf
    best: tuple[int, float] | None = None
    for f in candidates:
        x = X[idx, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        if xs[0] == xs[-1]:
            continue
        left_counts = np.cumsum(eye[ysub[order]], axis=0)[:-1]  # after position i
        sizes_l = np.arange(1, n, dtype=np.float64)
        sizes_r = n - sizes_l
        valid = xs[1:] != xs[:-1]
        if min_leaf > 1:
            valid &= (sizes_l >= min_leaf) & (sizes_r >= min_leaf)
        if not valid.any():
            continue
        right_counts = left_counts[-1] + eye[ysub[order[-1]]] - left_counts
        gini_l = 1.0 - (left_counts**2).sum(axis=1) / sizes_l**2
        gini_r = 1.0 - (right_counts**2).sum(axis=1) / sizes_r**2
        score = (sizes_l * gini_l + sizes_r * gini_r) / n
        score[~valid] = math.inf
        i = int(np.argmin(score))
        if score[i] < best_score:
            best_score = score[i]
            best = (int(f), (xs[i] + xs[i + 1]) / 2.0)
    return best


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    params: ForestParams,
    m_features: int,
    class_count: int,
    rng: np.random.Generator,
) -> Tree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    counts: list[np.ndarray] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.zeros(class_count))
        return len(feature) - 1

    def build(node: int, rows: np.ndarray, depth: int) -> None:
        cnt = np.bincount(y[rows], minlength=class_count).astype(np.float64)
        if (
            depth >= params.max_depth
            or rows.size < 2 * params.min_leaf
            or (cnt > 0).sum() <= 1
        ):
            counts[node] = cnt
            return
        cand = rng.choice(X.shape[1], size=m_features, replace=False)
        split = _best_split(X, y, rows, cand, params.min_leaf, class_count)
        if split is None:
            counts[node] = cnt
            return
        f, thr = split
        mask = X[rows, f] <= thr
        feature[node] = f
        threshold[node] = thr
        l_node = new_node()
        r_node = new_node()
        left[node] = l_node
        right[node] = r_node
        build(l_node, rows[mask], depth + 1)
        build(r_node, rows[~mask], depth + 1)

    root = new_node()
    build(root, idx, 0)
    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        counts=np.asarray(counts, dtype=np.float64),
    )


def train_forest(data: Dataset, params: ForestParams = ForestParams(), seed: int = 0) -> ForestModel:
    """Grow n_trees on bootstrap samples; deterministic for a fixed seed."""
    if len(data) == 0:
        raise EmptyData("cannot train a forest on zero rows")
    n, dim = data.X.shape
    m = params.features_per_split or max(1, round(math.sqrt(dim)))
    m = min(m, dim)
    root_rng = np.random.default_rng(seed)
    tree_seeds = root_rng.integers(0, 2**63, size=params.n_trees)
    trees = []
    for ts in tree_seeds:
        rng = np.random.default_rng(int(ts))
        boot = rng.integers(0, n, size=n)
        trees.append(_grow_tree(data.X, data.y, boot, params, m, data.class_count, rng))
    return ForestModel(
        trees=trees, params=params, seed=seed, feature_dim=dim, class_count=data.class_count
    )


def forest_votes(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Per-class vote counts, shape (n_rows, class_count). Rows sum to n_trees."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.feature_dim:
        raise DimMismatch(f"expected dim {model.feature_dim}, got {X.shape[1]}")
    votes = np.zeros((len(X), model.class_count), dtype=np.float64)
    rows = np.arange(len(X))
    for tree in model.trees:
        votes[rows, tree.predict_class(X)] += 1.0
    return votes


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def logistic_proba(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.feature_dim:
        raise DimMismatch(f"expected dim {model.feature_dim}, got {X.shape[1]}")
    Xs = (X - model.mean) / model.std
    Xb = np.hstack([np.ones((len(Xs), 1)), Xs])
    return _softmax(Xb @ model.weights.T)


def predict_proba(model: ForestModel | LogisticModel, X: np.ndarray) -> np.ndarray:
    """Class-probability matrix for a batch (vote fractions for forests)."""
    if isinstance(model, ForestModel):
        return forest_votes(model, X) / len(model.trees)
    return logistic_proba(model, X)


def predict(model: ForestModel | LogisticModel, features: np.ndarray) -> tuple[int, float]:
    """Single-vector prediction: (class, confidence). Ties go to the lower class."""
    proba = predict_proba(model, np.asarray(features, dtype=np.float64))[0]
    cls = int(np.argmax(proba))
    return cls, float(proba[cls])


def predict_batch(model: ForestModel | LogisticModel, X: np.ndarray) -> np.ndarray:
    return np.argmax(predict_proba(model, X), axis=1)


def loss_and_gradient(
    weights: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float, class_count: int
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy + L2 (bias excluded) and its gradient.

    X must already carry the bias column. Exposed so the gradient can be
    checked against finite differences.
    """
    n = len(X)
    proba = _softmax(X @ weights.T)
    onehot = np.eye(class_count)[y]
    eps = 1e-12
    data_loss = -np.log(proba[np.arange(n), y] + eps).mean()
    reg = weights.copy()
    reg[:, 0] = 0.0
    loss = data_loss + 0.5 * l2 * float((reg**2).sum())
    grad = (proba - onehot).T @ X / n + l2 * reg
    return float(loss), grad


def train_logistic(data: Dataset, params: LogisticParams = LogisticParams()) -> LogisticModel:
    """Full-batch gradient descent; features are standardized internally."""
    if len(data) == 0:
        raise EmptyData("cannot train logistic regression on zero rows")
    mean = data.X.mean(axis=0)
    std = data.X.std(axis=0)
    std = np.where(std == 0, 1.0, std)
    Xs = (data.X - mean) / std
    Xb = np.hstack([np.ones((len(Xs), 1)), Xs])
    weights = np.zeros((data.class_count, data.dim + 1))
    for _ in range(params.epochs):
        _, grad = loss_and_gradient(weights, Xb, data.y, params.l2, data.class_count)
        weights -= params.learning_rate * grad
    return LogisticModel(
        weights=weights,
        mean=mean,
        std=std,
        params=params,
        feature_dim=data.dim,
        class_count=data.class_count,
    )


# ---------------------------------------------------------------------------
# Persistence: MODEL_MAGIC, then one canonical JSON document.


def _model_payload(model: ForestModel | LogisticModel) -> dict:
    if isinstance(model, ForestModel):
        return {
            "schema_version": model.schema_version,
            "model_type": "forest",
            "params": {
                "n_trees": model.params.n_trees,
                "max_depth": model.params.max_depth,
                "min_leaf": model.params.min_leaf,
                "features_per_split": model.params.features_per_split,
            },
            "seed": model.seed,
            "feature_dim": model.feature_dim,
            "class_count": model.class_count,
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "counts": t.counts.tolist(),
                }
                for t in model.trees
            ],
        }
    return {
        "schema_version": model.schema_version,
        "model_type": "logistic",
        "params": {
            "learning_rate": model.params.learning_rate,
            "epochs": model.params.epochs,
            "l2": model.params.l2,
        },
        "feature_dim": model.feature_dim,
        "class_count": model.class_count,
        "weights": model.weights.tolist(),
        "mean": model.mean.tolist(),
        "std": model.std.tolist(),
    }


def save_model(model: ForestModel | LogisticModel, path: str) -> None:
    doc = json.dumps(_model_payload(model), sort_keys=True, separators=(",", ":"))
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(doc.encode("utf-8"))


def load_model(path: str) -> ForestModel | LogisticModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(MODEL_MAGIC):
        raise CorruptModel(f"{path}: missing model magic bytes")
    try:
        doc = json.loads(blob[len(MODEL_MAGIC):])
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise CorruptModel(f"{path}: malformed model document")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise VersionMismatch(
            f"{path}: schema_version {doc['schema_version']} != supported {SCHEMA_VERSION}"
        )
    try:
        if doc["model_type"] == "forest":
            params = ForestParams(**doc["params"])
            trees = [
                Tree(
                    feature=np.asarray(t["feature"], dtype=np.int64),
                    threshold=np.asarray(t["threshold"], dtype=np.float64),
                    left=np.asarray(t["left"], dtype=np.int64),
                    right=np.asarray(t["right"], dtype=np.int64),
                    counts=np.asarray(t["counts"], dtype=np.float64),
                )
                for t in doc["trees"]
            ]
            return ForestModel(
                trees=trees,
                params=params,
                seed=doc["seed"],
                feature_dim=doc["feature_dim"],
                class_count=doc["class_count"],
            )
        if doc["model_type"] == "logistic":
            return LogisticModel(
                weights=np.asarray(doc["weights"], dtype=np.float64),
                mean=np.asarray(doc["mean"], dtype=np.float64),
                std=np.asarray(doc["std"], dtype=np.float64),
                params=LogisticParams(**doc["params"]),
                feature_dim=doc["feature_dim"],
                class_count=doc["class_count"],
            )
        raise CorruptModel(f"{path}: unknown model_type {doc['model_type']!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"{path}: {exc}") from exc
