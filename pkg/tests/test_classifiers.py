import numpy as np
import pytest

from soccode import classifiers as clf
from soccode.classifiers import (
    ALGORITHMS,
    ClassifierSpec,
    DecisionTree,
    FeatureError,
    GaussianNB,
    KNeighbors,
    LogisticRegression,
    RandomForest,
    best_split,
    gini_impurity,
    logreg_objective,
    softmax,
)
from oracles import brute_best_split, gnb_oracle_log_posterior, knn_oracle, logreg_fd_relative_error


def blobs(n_per_class=20, n_classes=3, dim=4, spread=0.3, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=4.0, size=(n_classes, dim))
    X = np.vstack([c + spread * rng.normal(size=(n_per_class, dim)) for c in centers])
    y = np.repeat(np.arange(n_classes), n_per_class)
    return X, y


# -- uniform contract -----------------------------------------------------

@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_single_class_predicts_that_class(algorithm):
    X = np.random.default_rng(1).normal(size=(6, 3))
    m = clf.fit(algorithm, X, np.full(6, 2), n_classes=4)
    assert m.predict(np.random.default_rng(2).normal(size=(5, 3))).tolist() == [2] * 5


@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_separable_blobs_and_determinism(algorithm):
    X, y = blobs()
    probe = np.random.default_rng(9).normal(scale=4.0, size=(30, 4))
    spec = ClassifierSpec(algorithm, {"n_estimators": 10} if algorithm == "forest" else {})
    a = clf.fit(spec, X, y)
    b = clf.fit(spec, X, y)
    assert np.array_equal(a.predict(probe), b.predict(probe))
    assert (a.predict(X) == y).mean() == 1.0


@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_state_roundtrip(algorithm):
    X, y = blobs(seed=3)
    spec = ClassifierSpec(algorithm, {"n_estimators": 5} if algorithm == "forest" else {})
    m = clf.fit(spec, X, y)
    meta, arrays = m.get_state()
    back = clf.load_state(meta, {k: np.array(v) for k, v in arrays.items()})
    probe = np.random.default_rng(4).normal(scale=4.0, size=(50, 4))
    assert np.array_equal(m.predict(probe), back.predict(probe))


def test_feature_errors():
    X, y = blobs()
    m = clf.fit("knn", X, y)
    with pytest.raises(FeatureError):
        m.predict(np.zeros((1, 5)))
    bad = X.copy()
    bad[0, 0] = np.nan
    with pytest.raises(FeatureError):
        clf.fit("gnb", bad, y)
    with pytest.raises(FeatureError):
        clf.fit("gnb", X, y[:-1])


def test_spec_validation():
    assert ClassifierSpec("knn").resolved() == {"k": 3}
    assert ClassifierSpec("forest").resolved()["n_estimators"] == 100
    with pytest.raises(ValueError):
        ClassifierSpec("perceptron")
    with pytest.raises(ValueError):
        ClassifierSpec("knn", {"depth": 3})
    with pytest.raises(ValueError):
        ClassifierSpec("knn", {"k": 0})


def test_sparse_rows_accepted():
    from soccode import text_vectorizer as tv

    m = tv.fit(["apple banana", "apple cherry", "kiwi melon", "kiwi banana"],
               tv.VectorizerConfig(n_max=1, min_df=0.0, max_df=1.0))
    rows = [m.transform(t) for t in ["apple banana", "apple cherry", "kiwi melon", "kiwi banana"]]
    model = clf.fit("knn", rows, [0, 0, 1, 1])
    assert clf.predict(model, m.transform("apple")) == 0


# -- knn ------------------------------------------------------------------

def test_knn_example():
    X = np.array([[0, 0], [0, 1], [5, 5], [5, 6], [0, 0.5]])
    y = np.array([0, 0, 1, 1, 0])
    assert KNeighbors(3).fit(X, y).predict_one([0, 0.2]) == 0


def test_knn_matches_exhaustive_search():
    rng = np.random.default_rng(5)
    X = rng.integers(0, 4, size=(40, 2)).astype(float)  # integer grid forces distance ties
    y = rng.integers(0, 3, size=40)
    m = KNeighbors(3).fit(X, y, n_classes=3)
    Q = rng.integers(0, 4, size=(200, 2)).astype(float)
    expected = [knn_oracle(X.tolist(), y.tolist(), q, 3, 3) for q in Q.tolist()]
    assert m.predict(Q).tolist() == expected


def test_knn_vote_tie_goes_to_lower_class():
    X = np.array([[0.0], [1.0], [3.0]])
    m = KNeighbors(2).fit(X, np.array([1, 0, 0]))
    assert m.predict_one([0.5]) == 0


# -- gnb ------------------------------------------------------------------

def test_gnb_means_closed_form():
    X = np.array([[-1.0], [-1.2], [-0.8], [1.0], [1.2], [0.8]])
    m = GaussianNB().fit(X, np.array([0, 0, 0, 1, 1, 1]))
    assert m.theta_[:, 0] == pytest.approx([-1.0, 1.0], abs=1e-12)
    pooled = sum(v * v for v in X[:, 0]) / 6  # overall mean is 0
    assert m.var_[:, 0] == pytest.approx([0.08 / 3 + 1e-9 * pooled] * 2, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_gnb_log_posterior_matches_formula(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(12, 3))
    y = np.array([0, 1, 2] * 4)
    Q = rng.normal(size=(5, 3))
    m = GaussianNB().fit(X, y)
    got = m.log_posterior(Q)
    for q, row in zip(Q.tolist(), got):
        assert row == pytest.approx(gnb_oracle_log_posterior(X.tolist(), y.tolist(), q, 3), abs=1e-9)


# -- logistic regression ----------------------------------------------------

def test_softmax_simplex():
    Z = np.random.default_rng(0).normal(scale=30.0, size=(100, 6))
    P = softmax(Z)
    assert (P >= 0).all()
    assert np.abs(P.sum(axis=1) - 1.0).max() <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_logreg_gradient_finite_differences(seed):
    assert logreg_fd_relative_error(logreg_objective, seed) < 1e-5


def test_logreg_prediction_equals_brute_scores():
    X, y = blobs(seed=7)
    m = LogisticRegression().fit(X, y)
    for x in X[::7]:
        scores = [float(np.dot(m.coef_[c], x) + m.intercept_[c]) for c in range(3)]
        assert m.predict_one(x) == scores.index(max(scores))
    P = m.predict_proba(X)
    assert np.abs(P.sum(axis=1) - 1).max() <= 1e-12


# -- trees ------------------------------------------------------------------

def test_gini_examples():
    assert gini_impurity([10, 0]) == 0.0
    assert gini_impurity([5, 5]) == 0.5
    assert gini_impurity([1, 2, 3]) == pytest.approx(11 / 18, abs=1e-15)
    with pytest.raises(ValueError):
        gini_impurity([0, 0])


def test_best_split_examples():
    assert best_split(np.array([[1.0], [2.0], [8.0], [9.0]]), [0, 0, 1, 1]) == (0, 5.0)
    assert best_split(np.array([[1.0], [2.0]]), [1, 1]) is None
    assert best_split(np.array([[3.0, 1.0], [3.0, 2.0]]), [0, 1], feature_subset=[0]) is None


@pytest.mark.parametrize("seed", range(20))
def test_best_split_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 5, size=(12, 3)).astype(float)
    y = rng.integers(0, 3, size=12)
    got = best_split(X, y, n_classes=3)
    want = brute_best_split(X, y, 3)
    assert got == want


def test_tree_fits_noise_free_data_exactly():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 5))
    y = (X[:, 0] + X[:, 1] ** 2 > 0.5).astype(int) + (X[:, 2] > 1).astype(int)
    m = DecisionTree().fit(X, y)
    assert (m.predict(X) == y).all()


def test_forest_of_one_equals_tree():
    X, y = blobs(n_per_class=30, dim=9, spread=2.0, seed=2)
    probe = np.random.default_rng(1).normal(scale=4.0, size=(300, 9))
    for max_features in ("sqrt", "all"):
        forest = RandomForest(n_estimators=1, bootstrap=False, max_features=max_features, seed=4).fit(X, y)
        tree = DecisionTree(max_features=max_features, seed=4).fit(X, y)
        assert np.array_equal(forest.predict(probe), tree.predict(probe))


def test_forest_vote_is_order_invariant():
    X, y = blobs(n_per_class=25, dim=6, spread=2.5, seed=8)
    m = RandomForest(n_estimators=12, seed=1).fit(X, y)
    probe = np.random.default_rng(2).normal(scale=4.0, size=(200, 6))
    before = m.predict(probe)
    parts = list(m.trees())[::-1]
    m._set_trees([tuple(np.array(a) for a in p) for p in parts])
    assert np.array_equal(before, m.predict(probe))
    votes = m.tree_predictions(probe)
    counts = np.stack([(votes == c).sum(axis=0) for c in range(3)], axis=1)
    assert np.array_equal(before, counts.argmax(axis=1))


def test_forest_seed_changes_trees():
    X, y = blobs(n_per_class=25, dim=6, spread=2.5, seed=8)
    a = RandomForest(n_estimators=5, seed=1).fit(X, y)
    b = RandomForest(n_estimators=5, seed=2).fit(X, y)
    assert not np.array_equal(a.threshold_, b.threshold_) or a.threshold_.size != b.threshold_.size
