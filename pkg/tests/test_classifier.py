import numpy as np
import pytest

from emochat.classifier import (
    CorruptModel,
    Dataset,
    DimMismatch,
    EmptyData,
    ForestModel,
    ForestParams,
    LogisticParams,
    Tree,
    VersionMismatch,
    forest_votes,
    load_model,
    loss_and_gradient,
    predict,
    predict_batch,
    save_model,
    train_forest,
    train_logistic,
)


def leaf_tree(counts):
    return Tree(
        feature=np.array([-1]),
        threshold=np.array([0.0]),
        left=np.array([-1]),
        right=np.array([-1]),
        counts=np.array([counts], dtype=np.float64),
    )


def stub_forest(votes_per_class, feature_dim=4):
    """Forest whose trees are single leaves voting a fixed class each."""
    trees = []
    for cls, n in enumerate(votes_per_class):
        counts = [0.0] * len(votes_per_class)
        counts[cls] = 1.0
        trees.extend(leaf_tree(counts) for _ in range(n))
    return ForestModel(
        trees=trees,
        params=ForestParams(n_trees=len(trees)),
        seed=0,
        feature_dim=feature_dim,
        class_count=len(votes_per_class),
    )


def two_cluster_data(n=20, seed=1):
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-3, -1.2, size=(n // 2, 2))
    x1 = rng.uniform(1.2, 3, size=(n // 2, 2))
    X = np.vstack([x0, x1])
    y = np.array([0] * (n // 2) + [1] * (n // 2))
    return Dataset(X=X, y=y, class_count=2)


class TestForest:
    def test_single_class_predicts_with_full_confidence(self):
        data = Dataset(X=np.random.default_rng(0).normal(size=(12, 3)), y=np.ones(12, dtype=int),
                       class_count=2)
        model = train_forest(data, ForestParams(n_trees=10), seed=0)
        for row in data.X:
            assert predict(model, row) == (1, 1.0)

    def test_separated_clusters_heldout_accuracy(self):
        data = two_cluster_data()
        train_idx = np.arange(0, 20, 2)
        test_idx = np.arange(1, 20, 2)
        train = Dataset(X=data.X[train_idx], y=data.y[train_idx], class_count=2)
        model = train_forest(train, ForestParams(n_trees=25, max_depth=6), seed=3)
        preds = predict_batch(model, data.X[test_idx])
        assert (preds == data.y[test_idx]).all()

        # nearest-centroid oracle agrees on every held-out point
        c0 = data.X[train_idx][train.y == 0].mean(axis=0)
        c1 = data.X[train_idx][train.y == 1].mean(axis=0)
        oracle = np.array(
            [int(np.linalg.norm(x - c1) < np.linalg.norm(x - c0)) for x in data.X[test_idx]]
        )
        assert (preds == oracle).all()

    def test_deterministic_same_seed(self, tmp_path):
        data = two_cluster_data(seed=7)
        a = train_forest(data, ForestParams(n_trees=20), seed=42)
        b = train_forest(data, ForestParams(n_trees=20), seed=42)
        pa, pb = tmp_path / "a.model", tmp_path / "b.model"
        save_model(a, str(pa))
        save_model(b, str(pb))
        assert pa.read_bytes() == pb.read_bytes()
        probe = np.random.default_rng(0).normal(size=(100, 2))
        assert (predict_batch(a, probe) == predict_batch(b, probe)).all()

    def test_vote_fraction_confidence(self):
        model = stub_forest([0, 0, 73] + [27])  # 73 of 100 vote class 2
        model.class_count = 4
        cls, conf = predict(model, np.zeros(4))
        assert cls == 2
        assert conf == pytest.approx(0.73)

    def test_single_tree_confidence_is_binary(self):
        data = two_cluster_data(seed=2)
        model = train_forest(data, ForestParams(n_trees=1), seed=0)
        for row in data.X:
            _, conf = predict(model, row)
            assert conf in (0.0, 1.0)

    def test_votes_sum_to_tree_count(self):
        data = two_cluster_data(seed=3)
        model = train_forest(data, ForestParams(n_trees=17), seed=9)
        votes = forest_votes(model, np.random.default_rng(1).normal(size=(30, 2)))
        assert (votes.sum(axis=1) == 17).all()

    def test_label_permutation_equivariance(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(40, 3))
        y = rng.integers(0, 3, size=40)
        perm = np.array([2, 0, 1])
        params = ForestParams(n_trees=15, max_depth=20, min_leaf=1)
        base = train_forest(Dataset(X=X, y=y, class_count=3), params, seed=5)
        permuted = train_forest(Dataset(X=X, y=perm[y], class_count=3), params, seed=5)
        probe = rng.normal(size=(60, 3))
        votes_base = forest_votes(base, probe)
        votes_perm = forest_votes(permuted, probe)
        # vote vectors permute exactly; argmax follows wherever votes are untied
        assert (votes_perm == votes_base[:, np.argsort(perm)]).all()
        untied = votes_base.max(axis=1) > np.sort(votes_base, axis=1)[:, -2]
        assert (
            perm[predict_batch(base, probe[untied])] == predict_batch(permuted, probe[untied])
        ).all()

    def test_empty_data_raises(self):
        with pytest.raises(EmptyData):
            train_forest(Dataset(X=np.zeros((0, 2)), y=np.zeros(0, dtype=int), class_count=2))

    def test_conflicting_duplicate_rows_still_train(self):
        X = np.ones((6, 2))
        y = np.array([0, 1, 0, 1, 0, 1])
        model = train_forest(Dataset(X=X, y=y, class_count=2), ForestParams(n_trees=5), seed=0)
        cls, conf = predict(model, np.ones(2))
        assert cls in (0, 1)
        assert 0.0 <= conf <= 1.0

    def test_dim_mismatch(self):
        model = train_forest(two_cluster_data(), ForestParams(n_trees=3), seed=0)
        with pytest.raises(DimMismatch):
            predict(model, np.zeros(5))


def separable_line_data(n=60, seed=4):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2, 2, size=(n, 2))
    margin = X[:, 0] + 0.5 * X[:, 1]
    keep = np.abs(margin) > 0.3
    X = X[keep]
    y = (margin[keep] > 0).astype(int)
    return Dataset(X=X, y=y, class_count=2)


def perceptron_separable(X, y, max_epochs=200):
    """Closed-form-ish separability check: perceptron converges iff separable."""
    Xb = np.hstack([np.ones((len(X), 1)), X])
    w = np.zeros(Xb.shape[1])
    signs = 2 * y - 1
    for _ in range(max_epochs):
        errors = 0
        for xi, si in zip(Xb, signs):
            if si * (w @ xi) <= 0:
                w += si * xi
                errors += 1
        if errors == 0:
            return True
    return False


class TestLogistic:
    def test_separable_line_reaches_high_accuracy(self):
        data = separable_line_data()
        assert perceptron_separable(data.X, data.y)
        model = train_logistic(data)
        preds = predict_batch(model, data.X)
        assert (preds == data.y).mean() >= 0.95

    def test_zero_epochs_uniform(self):
        data = Dataset(
            X=np.random.default_rng(0).normal(size=(9, 4)),
            y=np.array([0, 1, 2] * 3),
            class_count=3,
        )
        model = train_logistic(data, LogisticParams(epochs=0))
        cls, conf = predict(model, data.X[0])
        assert cls == 0
        assert conf == pytest.approx(1 / 3)

    def test_duplicated_dataset_same_decision_function(self):
        data = separable_line_data(seed=8)
        doubled = Dataset(
            X=np.vstack([data.X, data.X]),
            y=np.concatenate([data.y, data.y]),
            class_count=2,
        )
        a = train_logistic(data, LogisticParams(epochs=60))
        b = train_logistic(doubled, LogisticParams(epochs=60))
        probe = np.random.default_rng(2).normal(size=(50, 2))
        from emochat.classifier import logistic_proba

        assert np.allclose(logistic_proba(a, probe), logistic_proba(b, probe), atol=1e-8)
        assert (predict_batch(a, probe) == predict_batch(b, probe)).all()

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            n, d, c = 8, 3, 3
            X = np.hstack([np.ones((n, 1)), rng.normal(size=(n, d))])
            y = rng.integers(0, c, size=n)
            W = rng.normal(scale=0.5, size=(c, d + 1))
            _, grad = loss_and_gradient(W, X, y, l2=0.01, class_count=c)
            h = 1e-5
            for _ in range(6):
                i = rng.integers(0, c)
                j = rng.integers(0, d + 1)
                Wp, Wm = W.copy(), W.copy()
                Wp[i, j] += h
                Wm[i, j] -= h
                lp, _ = loss_and_gradient(Wp, X, y, l2=0.01, class_count=c)
                lm, _ = loss_and_gradient(Wm, X, y, l2=0.01, class_count=c)
                numeric = (lp - lm) / (2 * h)
                denom = max(abs(numeric), abs(grad[i, j]), 1e-8)
                assert abs(numeric - grad[i, j]) / denom <= 1e-4

    def test_empty_data_raises(self):
        with pytest.raises(EmptyData):
            train_logistic(Dataset(X=np.zeros((0, 2)), y=np.zeros(0, dtype=int), class_count=2))


class TestPersistence:
    def test_forest_round_trip(self, tmp_path):
        data = two_cluster_data(seed=5)
        model = train_forest(data, ForestParams(n_trees=12), seed=1)
        path = tmp_path / "f.model"
        save_model(model, str(path))
        loaded = load_model(str(path))
        probe = np.random.default_rng(3).normal(size=(100, 2))
        assert (predict_batch(model, probe) == predict_batch(loaded, probe)).all()

    def test_logistic_round_trip(self, tmp_path):
        model = train_logistic(separable_line_data(), LogisticParams(epochs=40))
        path = tmp_path / "l.model"
        save_model(model, str(path))
        loaded = load_model(str(path))
        probe = np.random.default_rng(4).normal(size=(40, 2))
        assert np.allclose(
            predict_batch(model, probe), predict_batch(loaded, probe)
        )

    def test_truncated_file_is_corrupt(self, tmp_path):
        data = two_cluster_data()
        model = train_forest(data, ForestParams(n_trees=3), seed=0)
        path = tmp_path / "t.model"
        save_model(model, str(path))
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(CorruptModel):
            load_model(str(path))

    def test_missing_magic_is_corrupt(self, tmp_path):
        path = tmp_path / "x.model"
        path.write_bytes(b"{}")
        with pytest.raises(CorruptModel):
            load_model(str(path))

    def test_older_schema_version_rejected(self, tmp_path):
        data = two_cluster_data()
        model = train_forest(data, ForestParams(n_trees=3), seed=0)
        path = tmp_path / "v.model"
        save_model(model, str(path))
        blob = path.read_bytes().replace(b'"schema_version":1', b'"schema_version":0')
        path.write_bytes(blob)
        with pytest.raises(VersionMismatch):
            load_model(str(path))
