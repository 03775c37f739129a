import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from hybrid_regimes import errors
from hybrid_regimes.classify import (
    CvReport,
    HyperParams,
    Kind,
    RegimeClassifier,
    cross_validate,
    fit,
    fold_indices,
    metric_accuracy,
    metric_auc,
    metric_f1,
    predict,
    predict_score,
    read_cv_table,
    write_cv_table,
)

KINDS = list(Kind)


def separable_blobs(seed=7, n=100, gap=4.0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal([0, 0], 1, (n, 2)), rng.normal([gap, gap], 1, (n, 2))])
    y = np.repeat([1, 2], n)
    return X, y


def widely_separated(seed=0, n=60):
    # margin large enough that any sensible rule is perfect on held-out folds too
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.uniform(-1, 1, (n, 3)), rng.uniform(-1, 1, (n, 3)) + [12, 0, 0]])
    y = np.repeat([1, 2], n)
    perm = rng.permutation(2 * n)
    return X[perm], y[perm]


@pytest.mark.parametrize("kind", [k for k in KINDS if k != Kind.TREE])
def test_separable_blobs_training_accuracy(kind):
    X, y = separable_blobs()
    m = fit(kind, X, y)
    assert metric_accuracy(predict(m, X), y) == 1.0
    assert set(np.unique(predict(m, X + 100))) <= {1, 2}


def test_tree_blobs_need_small_leaves():
    # a lone boundary point cannot be isolated when every leaf holds >= 5 points
    X, y = separable_blobs()
    assert metric_accuracy(predict(fit(Kind.TREE, X, y), X), y) >= 0.99
    small = fit(Kind.TREE, X, y, HyperParams(tree_min_leaf=1))
    assert metric_accuracy(predict(small, X), y) == 1.0


@pytest.mark.parametrize("kind", KINDS)
def test_predict_is_thresholded_score(kind):
    rng = np.random.default_rng(3)
    X = rng.normal(size=(150, 3))
    y = np.where(X[:, 0] + 0.8 * rng.normal(size=150) > 0, 2, 1)
    m = fit(kind, X, y)
    Z = rng.normal(size=(400, 3)) * 2
    np.testing.assert_array_equal(predict(m, Z), np.where(predict_score(m, Z) > 0, 2, 1))


@pytest.mark.parametrize("kind", KINDS)
def test_constant_rows_get_one_label(kind):
    X, y = separable_blobs()
    m = fit(kind, X, y)
    assert len(set(predict(m, np.tile([[1.5, 2.5]], (10, 1))).tolist())) == 1


@pytest.mark.parametrize("kind", KINDS)
def test_serialization_roundtrip(kind):
    rng = np.random.default_rng(11)
    X = rng.normal(size=(80, 3))
    y = np.where(X[:, 1] - X[:, 2] + 0.5 * rng.normal(size=80) > 0, 2, 1)
    m = fit(kind, X, y)
    again = RegimeClassifier.from_dict(json.loads(json.dumps(m.to_dict())))
    Z = rng.normal(size=(50, 3))
    np.testing.assert_array_equal(again.predict_score(Z), m.predict_score(Z))
    assert again.to_dict() == m.to_dict()


def test_tree_recovers_sign_threshold():
    x = np.array([-3.0, -2.5, -2.0, -1.7, -1.2, -0.4, 0.3, 0.9, 1.1, 1.8, 2.6, 3.1])
    y = np.where(x > 0, 2, 1)
    m = fit(Kind.TREE, x[:, None], y, HyperParams(tree_max_depth=1, tree_min_leaf=1))
    root = m.model.root
    assert m.model.depth() == 1
    assert -0.4 < root["threshold"] < 0.3
    assert metric_accuracy(predict(m, x[:, None]), y) == 1.0


def test_tree_respects_depth_and_leaf_size():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(300, 2))
    y = rng.integers(1, 3, 300)
    m = fit(Kind.TREE, X, y)
    assert m.model.depth() <= 8

    def leaves(node, Xn):
        if "leaf" in node:
            return [len(Xn)]
        left = Xn[:, node["feature"]] <= node["threshold"]
        return leaves(node["left"], Xn[left]) + leaves(node["right"], Xn[~left])

    assert min(leaves(m.model.root, X)) >= 5


def test_lda_midpoint_boundary():
    base = np.array([[0.3, 1.0], [-0.7, 0.2], [0.5, -0.9], [-0.1, -0.3]])
    mu1, mu2 = np.array([-2.0, 1.0]), np.array([2.0, 3.0])
    X = np.vstack([base + mu1, -base + mu2])  # mirrored noise: equal covariances
    y = np.repeat([1, 2], 4)
    m = fit(Kind.LDA, X, y)
    mid = (mu1 + mu2) / 2
    assert m.predict_score(mid[None])[0] == pytest.approx(0.0, abs=1e-12)
    step = 1e-6 * (mu2 - mu1)
    assert predict(m, (mid + step)[None])[0] == 2
    assert predict(m, (mid - step)[None])[0] == 1


def lda_direction_oracle(X, y):
    X1, X2 = X[y == 1], X[y == 2]
    pooled = (np.cov(X1, rowvar=False, bias=True) * len(X1)
              + np.cov(X2, rowvar=False, bias=True) * len(X2)) / len(X)
    return np.linalg.inv(pooled) @ (X2.mean(axis=0) - X1.mean(axis=0))


@pytest.mark.parametrize("seed", range(10))
def test_lda_direction_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(2, 2))
    X = np.vstack([rng.normal(size=(70, 2)) @ A, rng.normal(size=(50, 2)) @ A + [1.0, -0.5]])
    y = np.repeat([1, 2], [70, 50])
    coef = fit(Kind.LDA, X, y).model.coef
    oracle = lda_direction_oracle(X, y)
    assert np.linalg.norm(coef - oracle) / np.linalg.norm(oracle) < 1e-6


def nb_posterior_oracle(X, y, Z):
    joint = []
    for c in (1, 2):
        Xc = X[y == c]
        dens = np.prod(norm.pdf(Z, loc=Xc.mean(axis=0), scale=Xc.std(axis=0)), axis=1)
        joint.append(dens * len(Xc) / len(X))
    return joint[1] / (joint[0] + joint[1])


@pytest.mark.parametrize("seed", range(10))
def test_naive_bayes_posterior_matches_density_product(seed):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (60, 3)), rng.normal(0.8, 1.5, (40, 3))])
    y = np.repeat([1, 2], [60, 40])
    Z = rng.normal(0.4, 1.2, (200, 3))
    post = fit(Kind.NAIVE_BAYES, X, y).model.posterior(Z)
    np.testing.assert_allclose(post, nb_posterior_oracle(X, y, Z), rtol=0, atol=1e-10)


def test_naive_bayes_variance_floor():
    X = np.array([[1.0, 0.0], [1.0, 1.0], [2.0, 5.0], [2.0, 6.0]])
    m = fit(Kind.NAIVE_BAYES, X, [1, 1, 2, 2])
    assert m.model.vars.min() == 1e-9


def test_adaboost_stump_errors_below_half():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(200, 4))
    y = np.where(X[:, 0] * X[:, 1] > 0, 2, 1)  # XOR-like: hard for stumps
    m = fit(Kind.ADABOOST, X, y)
    assert len(m.model.errors) >= 1
    assert all(0 <= e < 0.5 for e in m.model.errors)


@pytest.mark.parametrize("seed", range(6))
def test_adaboost_exponential_loss_bounds_training_error(seed):
    # the 0/1 error may rise for a round; the exponential loss may not, and it
    # bounds the 0/1 error by prod 2 sqrt(e (1 - e))
    X, y = separable_blobs(seed=seed, n=60, gap=3.0)
    m = fit(Kind.ADABOOST, X, y)
    s = np.where(y == 2, 1, -1)
    staged = list(m.model.staged_decision(X))
    losses = [np.mean(np.exp(-s * f)) for f in staged]
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))
    bound = np.cumprod([2 * np.sqrt(e * (1 - e)) for e in m.model.errors])
    for f, loss, b in zip(staged, losses, bound):
        assert np.mean(np.sign(f) != s) <= loss <= b + 1e-9
    assert np.mean(np.sign(staged[-1]) != s) == 0.0


def test_qda_handles_singular_covariance_by_ridge():
    # second feature constant within class 1: singular class covariance
    X = np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [5.0, 3.0], [6.0, 2.0], [7.0, 4.0]])
    m = fit(Kind.QDA, X, [1, 1, 1, 2, 2, 2])
    assert np.array_equal(predict(m, X), [1, 1, 1, 2, 2, 2])


def test_lda_all_constant_features_error():
    X = np.zeros((6, 2))
    with pytest.raises(errors.SingularCovariance):
        fit(Kind.LDA, X, [1, 1, 1, 2, 2, 2])


def test_logistic_nonconvergence_reports_iterations():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(100, 2))
    y = np.where(X[:, 0] + rng.normal(size=100) > 0, 2, 1)
    with pytest.raises(errors.NonConvergence, match="1 iterations"):
        fit(Kind.LOGISTIC, X, y, HyperParams(logistic_max_iter=1, logistic_tol=0.0))


def test_logistic_matches_score_equation():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(300, 2))
    y = np.where(X @ [1.0, -0.5] + rng.logistic(size=300) > 0, 2, 1)
    m = fit(Kind.LOGISTIC, X, y).model
    p = 1 / (1 + np.exp(-(X @ m.coef + m.intercept)))
    A = np.hstack([np.ones((300, 1)), X])
    # gradient of the log-likelihood vanishes at the maximum
    np.testing.assert_allclose(A.T @ ((y == 2) - p), 0, atol=1e-6)


@pytest.mark.parametrize("labels,exc", [
    ([1, 1, 1, 1], errors.ClassError),
    ([1, 2, 3, 1], errors.ClassError),
    ([1, 1, 1, 2], errors.ClassError),
])
def test_fit_label_errors(labels, exc):
    with pytest.raises(exc):
        fit(Kind.LDA, np.arange(8.0).reshape(4, 2), labels)


def test_predict_dimension_mismatch():
    X, y = separable_blobs()
    m = fit(Kind.LOGISTIC, X, y)
    with pytest.raises(errors.DimensionMismatch):
        predict(m, np.zeros((3, 3)))


def test_metric_examples():
    assert metric_auc([0.1, 0.9], [1, 2]) == 1.0
    assert metric_auc([0.3, 0.3, 0.3], [1, 2, 2]) == 0.5
    assert metric_accuracy([2, 2, 1, 1], [2, 1, 2, 1]) == 0.5
    assert metric_f1([2, 2, 1, 1], [2, 1, 2, 1]) == 0.5
    with pytest.raises(errors.ClassError):
        metric_auc([0.1, 0.2], [2, 2])
    with pytest.raises(errors.ClassError):
        metric_f1([1, 2], [1, 1])


def auc_oracle(scores, truth):
    pos = [s for s, t in zip(scores, truth) if t == 2]
    neg = [s for s, t in zip(scores, truth) if t != 2]
    credit = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return credit / (len(pos) * len(neg))


@given(st.lists(st.tuples(st.integers(-5, 5), st.sampled_from([1, 2])), min_size=2, max_size=40))
@settings(max_examples=80, deadline=None)
def test_auc_properties(pairs):
    scores = np.array([p[0] for p in pairs], dtype=float)
    truth = np.array([p[1] for p in pairs])
    if len(set(truth.tolist())) < 2:
        return
    auc = metric_auc(scores, truth)
    assert auc == pytest.approx(auc_oracle(scores, truth), abs=1e-12)
    assert metric_auc(np.exp(scores) * 3 + 1, truth) == pytest.approx(auc, abs=1e-12)
    assert metric_auc(-scores, truth) == pytest.approx(1 - auc, abs=1e-12)


@given(st.lists(st.tuples(st.sampled_from([1, 2]), st.sampled_from([1, 2])), min_size=2, max_size=30))
@settings(max_examples=80, deadline=None)
def test_f1_accuracy_properties(pairs):
    pred = np.array([p[0] for p in pairs])
    truth = np.array([p[1] for p in pairs])
    assert 0 <= metric_accuracy(pred, truth) <= 1
    if len(set(truth.tolist())) < 2:
        return
    f1 = metric_f1(pred, truth)
    assert 0 <= f1 <= 1
    perfect_on_positives = np.all(pred[truth == 2] == 2) and np.all(pred[truth == 1] == 1)
    assert (f1 == 1.0) == bool(perfect_on_positives)


def test_fold_indices_block_and_shuffled():
    blocks = fold_indices(23, 5)
    assert [len(b) for b in blocks] == [5, 5, 5, 4, 4]
    assert np.array_equal(np.concatenate(blocks), np.arange(23))
    shuffled = fold_indices(23, 5, "shuffled", seed=3)
    assert np.array_equal(np.sort(np.concatenate(shuffled)), np.arange(23))
    assert [b.tolist() for b in shuffled] == [b.tolist() for b in fold_indices(23, 5, "shuffled", 3)]
    with pytest.raises(errors.DataError):
        fold_indices(5, 1)
    with pytest.raises(errors.DataError):
        fold_indices(5, 3, mode="other")


@pytest.mark.parametrize("kind", KINDS)
def test_cv_separable_is_perfect(kind):
    X, y = widely_separated()
    r = cross_validate(kind, X, y, folds=10)
    assert (r.auc, r.accuracy, r.f1) == (1.0, 1.0, 1.0)
    assert len(r.per_fold) == 10


@pytest.mark.parametrize("kind", [Kind.LDA, Kind.NAIVE_BAYES, Kind.LOGISTIC])
def test_cv_random_labels_near_majority_rate(kind):
    rng = np.random.default_rng(99)
    X = rng.normal(size=(500, 2))
    y = rng.integers(1, 3, 500)
    majority = max(np.mean(y == 1), np.mean(y == 2))
    r = cross_validate(kind, X, y, folds=10, mode="shuffled", seed=1)
    assert abs(r.accuracy - majority) < 0.1
    assert 0 <= r.auc <= 1 and 0 <= r.f1 <= 1


def test_cv_fold_missing_class_names_fold():
    X = np.arange(40.0).reshape(20, 2)
    y = np.array([1] * 18 + [2] * 2)
    with pytest.raises(errors.FoldMissingClass, match="fold 10"):
        cross_validate(Kind.LDA, X, y, folds=10)


def test_cv_thread_independent():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(120, 3))
    y = np.where(X[:, 0] + rng.normal(size=120) > 0, 2, 1)
    a = cross_validate(Kind.TREE, X, y, folds=5, mode="shuffled", seed=2)
    b = cross_validate(Kind.TREE, X, y, folds=5, mode="shuffled", seed=2, threads=4)
    assert a == b


def test_cv_table_roundtrip(tmp_path):
    reports = [CvReport(Kind.LDA, 0.9996, 0.9909, 0.9950), CvReport(Kind.NAIVE_BAYES, 0.9852, 0.9596, 0.9777)]
    write_cv_table(reports, tmp_path / "cv.csv")
    text = (tmp_path / "cv.csv").read_text().splitlines()
    assert text[0] == "model,AUC,accuracy,F1"
    assert text[2].startswith("Naive Bayes,")
    back = read_cv_table(tmp_path / "cv.csv")
    assert [(r.kind, r.auc, r.accuracy, r.f1) for r in back] == \
        [(r.kind, r.auc, r.accuracy, r.f1) for r in reports]
