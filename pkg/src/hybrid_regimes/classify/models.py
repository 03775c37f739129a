"""Binary regime classifiers written against numpy.

Every model exposes ``decision(X)``: a real score that grows with the
evidence for the positive class (the larger regime id, i.e. regime 2).
Predictions are ``positive if decision(X) > 0 else negative`` for every kind,
so thresholding the score at zero always reproduces ``predict``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

from ..errors import ClassError, DimensionMismatch, NonConvergence, SingularCovariance


class Kind(str, Enum):
    LDA = "LDA"
    QDA = "QDA"
    LOGISTIC = "LOGISTIC"
    TREE = "TREE"
    ADABOOST = "ADABOOST"
    NAIVE_BAYES = "NAIVE_BAYES"


DISPLAY_NAMES = {
    Kind.LDA: "LDA",
    Kind.QDA: "QDA",
    Kind.LOGISTIC: "Logistic Regression",
    Kind.TREE: "Decision Tree",
    Kind.ADABOOST: "AdaBoost",
    Kind.NAIVE_BAYES: "Naive Bayes",
}


@dataclass
class HyperParams:
    ridge: float = 1e-6
    logistic_max_iter: int = 100
    logistic_tol: float = 1e-8
    tree_max_depth: int = 8
    tree_min_leaf: int = 5
    ada_rounds: int = 100
    nb_var_floor: float = 1e-9

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------- Gaussian


def _log_gaussian(X, mean, cov):
    """Log density of N(mean, cov) at each row of X."""
    L = np.linalg.cholesky(cov)
    z = np.linalg.solve(L, (X - mean).T)
    logdet = 2.0 * np.log(np.diag(L)).sum()
    return -0.5 * ((z**2).sum(axis=0) + logdet + len(mean) * np.log(2 * np.pi))


def _regularized(cov: np.ndarray, ridge: float, what: str) -> np.ndarray:
    """Return cov unchanged if safely positive definite, else add a ridge.

    The ridge is ``ridge * trace / d`` on the diagonal.
    """
    d = len(cov)
    try:
        np.linalg.cholesky(cov)
        if np.linalg.cond(cov) < 1e12:
            return cov
    except np.linalg.LinAlgError:
        pass
    scale = np.trace(cov) / d
    if not scale > 0:
        raise SingularCovariance(f"{what} covariance is zero; a trace-scaled ridge cannot fix it")
    cov = cov + ridge * scale * np.eye(d)
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise SingularCovariance(f"{what} covariance is singular even after regularization") from None
    return cov


class LDA:
    kind = Kind.LDA

    def fit(self, X, y, hp: HyperParams):
        X0, X1 = X[y == 0], X[y == 1]
        self.means = np.vstack([X0.mean(axis=0), X1.mean(axis=0)])
        resid = np.vstack([X0 - self.means[0], X1 - self.means[1]])
        cov = resid.T @ resid / len(X)
        self.cov = _regularized(cov, hp.ridge, "pooled")
        self.log_priors = np.log(np.array([len(X0), len(X1)]) / len(X))
        self.coef = np.linalg.solve(self.cov, self.means[1] - self.means[0])
        self.intercept = float(
            -0.5 * (self.means[1] + self.means[0]) @ self.coef
            + self.log_priors[1] - self.log_priors[0]
        )
        return self

    def decision(self, X):
        return X @ self.coef + self.intercept

    def params(self):
        return {"means": self.means, "cov": self.cov, "log_priors": self.log_priors,
                "coef": self.coef, "intercept": self.intercept}


class QDA:
    kind = Kind.QDA

    def fit(self, X, y, hp: HyperParams):
        self.means, self.covs = [], []
        for c in (0, 1):
            Xc = X[y == c]
            mu = Xc.mean(axis=0)
            cov = (Xc - mu).T @ (Xc - mu) / len(Xc)
            self.means.append(mu)
            self.covs.append(_regularized(cov, hp.ridge, f"class {c}"))
        self.means = np.array(self.means)
        self.covs = np.array(self.covs)
        self.log_priors = np.log(np.bincount(y, minlength=2) / len(y))
        return self

    def decision(self, X):
        ll = [_log_gaussian(X, self.means[c], self.covs[c]) + self.log_priors[c] for c in (0, 1)]
        return ll[1] - ll[0]

    def params(self):
        return {"means": self.means, "covs": self.covs, "log_priors": self.log_priors}


class NaiveBayes:
    kind = Kind.NAIVE_BAYES

    def fit(self, X, y, hp: HyperParams):
        self.means = np.vstack([X[y == c].mean(axis=0) for c in (0, 1)])
        self.vars = np.maximum(np.vstack([X[y == c].var(axis=0) for c in (0, 1)]), hp.nb_var_floor)
        self.log_priors = np.log(np.bincount(y, minlength=2) / len(y))
        return self

    def _joint(self, X, c):
        v = self.vars[c]
        return (-0.5 * (np.log(2 * np.pi * v) + (X - self.means[c]) ** 2 / v)).sum(axis=1) \
            + self.log_priors[c]

    def decision(self, X):
        return self._joint(X, 1) - self._joint(X, 0)

    def posterior(self, X):
        """P(positive class | x)."""
        return expit(self.decision(X))

    def params(self):
        return {"means": self.means, "vars": self.vars, "log_priors": self.log_priors}


# ---------------------------------------------------------------- logistic


class Logistic:
    """Unpenalized maximum likelihood by IRLS.

    Converges when the largest parameter change drops below ``tol`` or the
    relative change in deviance does. On completely separated classes the
    likelihood has no finite maximizer; the fit stops at the first iterate
    whose linear predictor puts every training point on its own side.
    """

    kind = Kind.LOGISTIC

    def fit(self, X, y, hp: HyperParams):
        A = np.hstack([np.ones((len(X), 1)), X])
        beta = np.zeros(A.shape[1])
        dev = self._deviance(A @ beta, y)
        for it in range(1, hp.logistic_max_iter + 1):
            eta = A @ beta
            p = expit(eta)
            w = np.maximum(p * (1 - p), 1e-12)
            sw = np.sqrt(w)
            step = np.linalg.lstsq(A * sw[:, None], (y - p) / sw, rcond=None)[0]
            beta = beta + step
            eta = A @ beta
            new_dev = self._deviance(eta, y)
            separated = bool(np.all(np.where(y == 1, eta > 0, eta < 0)))
            if (separated or np.max(np.abs(step)) < hp.logistic_tol
                    or abs(new_dev - dev) < hp.logistic_tol * (abs(new_dev) + 0.1)):
                self.n_iter = it
                self.separated = separated
                break
            dev = new_dev
        else:
            raise NonConvergence(
                f"logistic regression did not converge in {hp.logistic_max_iter} iterations")
        self.intercept = float(beta[0])
        self.coef = beta[1:]
        return self

    @staticmethod
    def _deviance(eta, y):
        # -2 log-likelihood, computed without overflow
        return 2.0 * float(np.sum(np.logaddexp(0.0, eta) - y * eta))

    def decision(self, X):
        return X @ self.coef + self.intercept

    def params(self):
        return {"coef": self.coef, "intercept": self.intercept, "n_iter": self.n_iter,
                "separated": self.separated}


# ---------------------------------------------------------------- trees


def _best_split(X, y, w, min_leaf):
    """Weighted-Gini best split over all features and midpoint thresholds.

    Returns (gain, feature, threshold) or None. Ties keep the lowest feature
    and threshold.
    """
    n, d = X.shape
    total = w.sum()
    pos = (w * y).sum()
    parent = 1.0 - (pos / total) ** 2 - (1 - pos / total) ** 2
    best = None
    for j in range(d):
        order = np.argsort(X[:, j], kind="stable")
        xs, ws, ys = X[order, j], w[order], y[order]
        cw = np.cumsum(ws)[:-1]
        cp = np.cumsum(ws * ys)[:-1]
        left_n = np.arange(1, n)
        valid = (xs[1:] > xs[:-1]) & (left_n >= min_leaf) & (n - left_n >= min_leaf)
        if not valid.any():
            continue
        rw, rp = total - cw, pos - cp
        with np.errstate(invalid="ignore", divide="ignore"):
            gl = 1.0 - (cp / cw) ** 2 - (1 - cp / cw) ** 2
            gr = 1.0 - (rp / rw) ** 2 - (1 - rp / rw) ** 2
        child = (cw * gl + rw * gr) / total
        gain = np.where(valid, parent - child, -np.inf)
        i = int(np.argmax(gain))
        if best is None or gain[i] > best[0]:
            best = (float(gain[i]), j, float((xs[i] + xs[i + 1]) / 2))
    return best


class Tree:
    """CART with Gini impurity. Leaves store the positive-class fraction."""

    kind = Kind.TREE

    def fit(self, X, y, hp: HyperParams):
        self.root = self._grow(X, y.astype(float), 0, hp)
        return self

    def _grow(self, X, y, depth, hp):
        frac = float(y.mean())
        if depth >= hp.tree_max_depth or frac in (0.0, 1.0) or len(y) < 2 * hp.tree_min_leaf:
            return {"leaf": frac}
        split = _best_split(X, y, np.ones(len(y)), hp.tree_min_leaf)
        if split is None or split[0] <= 1e-12:
            return {"leaf": frac}
        _, j, thr = split
        left = X[:, j] <= thr
        return {"feature": j, "threshold": thr,
                "left": self._grow(X[left], y[left], depth + 1, hp),
                "right": self._grow(X[~left], y[~left], depth + 1, hp)}

    def decision(self, X):
        out = np.empty(len(X))
        self._fill(self.root, X, np.arange(len(X)), out)
        return out - 0.5

    def _fill(self, node, X, idx, out):
        if "leaf" in node:
            out[idx] = node["leaf"]
            return
        go_left = X[idx, node["feature"]] <= node["threshold"]
        self._fill(node["left"], X, idx[go_left], out)
        self._fill(node["right"], X, idx[~go_left], out)

    def depth(self, node=None):
        node = self.root if node is None else node
        if "leaf" in node:
            return 0
        return 1 + max(self.depth(node["left"]), self.depth(node["right"]))

    def params(self):
        return {"root": self.root}


class AdaBoost:
    """Discrete AdaBoost over depth-1 stumps.

    A stump votes ``polarity`` (+1/-1) when ``x[feature] > threshold``, and
    the opposite otherwise. Boosting stops early once a stump reaches zero
    weighted error or cannot beat one half.
    """

    kind = Kind.ADABOOST

    def fit(self, X, y, hp: HyperParams):
        n, d = X.shape
        s = np.where(y == 1, 1.0, -1.0)
        w = np.full(n, 1.0 / n)
        orders = [np.argsort(X[:, j], kind="stable") for j in range(d)]
        self.stumps, self.alphas, self.errors = [], [], []
        for _ in range(hp.ada_rounds):
            err, j, thr, pol = self._stump(X, s, w, orders)
            if err >= 0.5:
                break
            alpha = 0.5 * np.log((1 - max(err, 1e-10)) / max(err, 1e-10))
            self.stumps.append((j, thr, pol))
            self.alphas.append(float(alpha))
            self.errors.append(float(err))
            if err <= 1e-10:
                break
            pred = np.where(X[:, j] > thr, pol, -pol)
            w = w * np.exp(-alpha * s * pred)
            w /= w.sum()
        if not self.stumps:
            raise ClassError("AdaBoost found no stump better than chance")
        return self

    @staticmethod
    def _stump(X, s, w, orders):
        """Lowest weighted-error stump; cut ``i`` puts the first i sorted points left."""
        best = (np.inf, 0, 0.0, 1.0)
        neg_total = w[s < 0].sum()
        total = w.sum()
        for j, order in enumerate(orders):
            xs, ws, ss = X[order, j], w[order], s[order]
            pos_left = np.concatenate([[0.0], np.cumsum(np.where(ss > 0, ws, 0.0))])[:-1]
            neg_left = np.concatenate([[0.0], np.cumsum(np.where(ss < 0, ws, 0.0))])[:-1]
            # polarity +1 predicts positive right of the cut
            err_pos = pos_left + (neg_total - neg_left)
            err_neg = total - err_pos
            cut_ok = np.concatenate([[True], xs[1:] > xs[:-1]])
            thr = np.concatenate([[xs[0] - 1.0], (xs[1:] + xs[:-1]) / 2])
            for errs, pol in ((err_pos, 1.0), (err_neg, -1.0)):
                e = np.where(cut_ok, errs, np.inf)
                i = int(np.argmin(e))
                if e[i] < best[0] - 1e-15:
                    best = (float(e[i]), j, float(thr[i]), pol)
        return best

    def decision(self, X):
        out = np.zeros(len(X))
        for (j, thr, pol), a in zip(self.stumps, self.alphas):
            out += a * np.where(X[:, j] > thr, pol, -pol)
        return out

    def staged_decision(self, X):
        out = np.zeros(len(X))
        for (j, thr, pol), a in zip(self.stumps, self.alphas):
            out = out + a * np.where(X[:, j] > thr, pol, -pol)
            yield out

    def params(self):
        return {"stumps": [list(s) for s in self.stumps], "alphas": self.alphas,
                "errors": self.errors}


_MODELS = {m.kind: m for m in (LDA, QDA, Logistic, Tree, AdaBoost, NaiveBayes)}


# ---------------------------------------------------------------- facade


@dataclass(eq=False)
class RegimeClassifier:
    kind: Kind
    classes: tuple[int, int]
    model: object
    n_features: int

    def _check(self, X):
        X = np.asarray(getattr(X, "scores", X), dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"{self.kind.value} was fit on {self.n_features} features, got shape {X.shape}")
        return X

    def predict_score(self, X) -> np.ndarray:
        return self.model.decision(self._check(X))

    def predict(self, X) -> np.ndarray:
        return np.where(self.predict_score(X) > 0, self.classes[1], self.classes[0])

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "classes": list(self.classes),
                "n_features": self.n_features, "params": _jsonable(self.model.params())}

    @classmethod
    def from_dict(cls, d: dict) -> "RegimeClassifier":
        kind = Kind(d["kind"])
        model = _MODELS[kind].__new__(_MODELS[kind])
        for key, val in d["params"].items():
            if key == "stumps":
                val = [(int(j), float(t), float(p)) for j, t, p in val]
            elif key not in ("root", "alphas", "errors", "n_iter", "separated") and isinstance(val, list):
                val = np.asarray(val, dtype=float)
            setattr(model, key, val)
        return cls(kind, tuple(d["classes"]), model, int(d["n_features"]))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def encode_labels(labels) -> tuple[np.ndarray, tuple[int, int]]:
    labels = np.asarray(labels).astype(int)
    classes = tuple(int(c) for c in np.unique(labels))
    if len(classes) != 2:
        raise ClassError(f"binary classification needs exactly 2 classes, got {list(classes)}")
    return (labels == classes[1]).astype(int), classes


def fit(kind, scores, labels, hyper: HyperParams | None = None) -> RegimeClassifier:
    kind = Kind(kind)
    hyper = hyper or HyperParams()
    X = np.asarray(getattr(scores, "scores", scores), dtype=float)
    y, classes = encode_labels(labels)
    counts = np.bincount(y, minlength=2)
    if counts.min() < 2:
        raise ClassError(f"each class needs at least 2 samples, got {counts.tolist()}")
    model = _MODELS[kind]().fit(X, y, hyper)
    return RegimeClassifier(kind, classes, model, X.shape[1])


def predict(model: RegimeClassifier, scores) -> np.ndarray:
    return model.predict(scores)


def predict_score(model: RegimeClassifier, scores) -> np.ndarray:
    return model.predict_score(scores)
