"""Standardization, ridge and softmax regression, and the cross-validation protocol.

Both estimators are linear in standardized features. Ridge minimizes
``||y - Xw - b||^2 + lam * ||w||^2`` with an unpenalized intercept. Softmax
regression minimizes the mean cross-entropy between target share rows and
predicted class probabilities plus ``lam / 2 * ||W||^2``.

Under :func:`cv_train` the grid values are per-sample penalties: the ridge fit
on a fold with ``m`` training rows uses ``lam * m``, which makes the softmax
and ridge grids comparable and keeps model selection unchanged when every row
is duplicated.
"""

from dataclasses import dataclass, field

import numpy as np

from carcensus import constants as C
from carcensus._io import atomic_write_text, dumps_json, read_json
from carcensus.rng import Lcg64

_ZERO_STD_RTOL = 1e-12


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if np.any(self.std <= 0):
            raise ValueError("standardizer std components must be positive")

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.std

    def to_json(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_json(cls, d):
        return cls(np.array(d["mean"], dtype=float), np.array(d["std"], dtype=float))

    @classmethod
    def identity(cls, d):
        return cls(np.zeros(d), np.ones(d))


def fit_standardizer(X):
    """Column means and population standard deviations; constant columns get std 1."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need a 2-D matrix with at least 2 rows to standardize")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain NaN or infinite values")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    flat = std <= _ZERO_STD_RTOL * np.maximum(1.0, np.abs(mean))
    std = np.where(flat, 1.0, std)
    # constant columns must map exactly to 0
    mean = np.where(flat, X[0], mean)
    return Standardizer(mean, std)


def apply_standardizer(S, X):
    return S.transform(X)


@dataclass
class RidgeModel:
    weights: np.ndarray
    intercept: float
    lam: float
    standardizer: Standardizer
    clip_lo: float = -np.inf
    clip_hi: float = np.inf

    def __post_init__(self):
        if self.clip_lo > self.clip_hi:
            raise ValueError("clip_lo must not exceed clip_hi")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("ridge weights must be finite")

    kind = "ridge"

    def raw(self, X):
        Z = self.standardizer.transform(_as_features(X, self.weights.shape[0]))
        return Z @ self.weights + self.intercept

    def predict(self, X):
        out = np.clip(self.raw(X), self.clip_lo, self.clip_hi)
        return float(out) if np.ndim(X) == 1 else out

    def to_json(self):
        return {
            "kind": "ridge",
            "lambda": self.lam,
            "weights": self.weights.tolist(),
            "intercept": self.intercept,
            "clip": [self.clip_lo, self.clip_hi],
            "standardizer": self.standardizer.to_json(),
        }

    @classmethod
    def from_json(cls, d):
        return cls(np.array(d["weights"], dtype=float), float(d["intercept"]), float(d["lambda"]),
                   Standardizer.from_json(d["standardizer"]), float(d["clip"][0]), float(d["clip"][1]))


@dataclass
class SoftmaxModel:
    weight_matrix: np.ndarray  # K x d
    intercepts: np.ndarray  # K
    lam: float
    standardizer: Standardizer
    class_labels: tuple = ()
    n_iter: int = 0
    converged: bool = True

    kind = "softmax"

    def logits(self, X):
        Z = self.standardizer.transform(_as_features(X, self.weight_matrix.shape[1]))
        return Z @ self.weight_matrix.T + self.intercepts

    def predict(self, X):
        return softmax(self.logits(X))

    def to_json(self):
        return {
            "kind": "softmax",
            "lambda": self.lam,
            "class_labels": list(self.class_labels),
            "weight_matrix": self.weight_matrix.tolist(),
            "intercepts": self.intercepts.tolist(),
            "standardizer": self.standardizer.to_json(),
        }

    @classmethod
    def from_json(cls, d):
        return cls(np.array(d["weight_matrix"], dtype=float), np.array(d["intercepts"], dtype=float),
                   float(d["lambda"]), Standardizer.from_json(d["standardizer"]),
                   tuple(d["class_labels"]))


def _as_features(X, d):
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != d or X.ndim not in (1, 2):
        raise ValueError(f"expected feature vectors of length {d}, got shape {X.shape}")
    return X


def predict(model, x):
    """Ridge: clipped scalar (or array). Softmax: rows on the simplex."""
    return model.predict(x)


# -- ridge -----------------------------------------------------------------

def fit_ridge(X, y, lam, standardizer=None):
    """Exact ridge solution from the normal equations with an unpenalized intercept.

    ``X`` is already standardized; ``standardizer`` is stored on the model so
    that :func:`predict` can take raw features. The clip range is set to the
    range of ``y``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0 or y.shape != (X.shape[0],):
        raise ValueError("X must be n x d with n > 0 and y of length n")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("ridge inputs contain NaN or infinite values")
    n, d = X.shape
    A = np.empty((d + 1, d + 1))
    A[:d, :d] = X.T @ X
    A[:d, :d][np.diag_indices(d)] += lam
    col = X.sum(axis=0)
    A[:d, d] = col
    A[d, :d] = col
    A[d, d] = n
    rhs = np.append(X.T @ y, y.sum())
    if np.linalg.matrix_rank(A) < d + 1:
        raise np.linalg.LinAlgError(
            "ridge normal equations are singular (collinear features); use lambda > 0"
        )
    sol = np.linalg.solve(A, rhs)
    if standardizer is None:
        standardizer = Standardizer.identity(d)
    return RidgeModel(sol[:d], float(sol[d]), float(lam), standardizer, float(y.min()), float(y.max()))


def ridge_stationarity(X, y, model):
    """Max-norm of the objective gradient at the fitted parameters."""
    X = np.asarray(X, dtype=float)
    r = X @ model.weights + model.intercept - np.asarray(y, dtype=float)
    g = np.append(X.T @ r + model.lam * model.weights, r.sum())
    return float(np.max(np.abs(g)))


# -- softmax ---------------------------------------------------------------

def softmax(Z):
    Z = np.asarray(Z, dtype=float)
    Z = Z - Z.max(axis=-1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=-1, keepdims=True)


def _log_softmax(Z):
    m = Z.max(axis=1, keepdims=True)
    return Z - m - np.log(np.exp(Z - m).sum(axis=1, keepdims=True))


def softmax_loss_grad(W, b, X, Y, lam):
    """Objective value and gradients ``(loss, dW, db)``."""
    n = X.shape[0]
    Z = X @ W.T + b
    logP = _log_softmax(Z)
    loss = -np.sum(Y * logP) / n + 0.5 * lam * np.sum(W * W)
    R = (np.exp(logP) - Y) / n
    return loss, R.T @ X + lam * W, R.sum(axis=0)


def cross_entropy(Y, P):
    """Mean cross-entropy of target rows ``Y`` against predictions ``P``."""
    P = np.clip(np.asarray(P, dtype=float), 1e-300, 1.0)
    return float(-np.sum(np.asarray(Y) * np.log(P)) / len(P))


def _check_simplex_rows(Y):
    if Y.ndim != 2 or Y.shape[1] < 2:
        raise ValueError("targets must be an n x K matrix with K >= 2")
    if np.any(Y < -1e-12) or np.any(np.abs(Y.sum(axis=1) - 1.0) > 1e-6):
        raise ValueError("every target row must be on the simplex")


def fit_softmax(X, Y, lam, standardizer=None, class_labels=(), tol=1e-6, max_iter=10_000,
                init=None):
    """Full-batch gradient descent with Armijo backtracking.

    Trial steps use the Barzilai-Borwein length from the previous iterate.
    Stops when the gradient max-norm drops below ``tol`` or after
    ``max_iter`` iterations.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.shape[0] != X.shape[0] or X.shape[0] == 0:
        raise ValueError("X must be n x d and Y n x K with matching n > 0")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain NaN or infinite values")
    _check_simplex_rows(Y)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    n, d = X.shape
    K = Y.shape[1]
    if init is None:
        W = np.zeros((K, d))
        b = np.zeros(K)
    else:
        W, b = (np.array(a, dtype=float) for a in init)

    loss, gW, gb = softmax_loss_grad(W, b, X, Y, lam)
    step = 1.0
    it = 0
    converged = False
    while it < max_iter:
        gmax = max(np.max(np.abs(gW)), np.max(np.abs(gb)))
        if gmax < tol:
            converged = True
            break
        g2 = np.sum(gW * gW) + np.sum(gb * gb)
        t = step
        while True:
            W_new = W - t * gW
            b_new = b - t * gb
            loss_new, gW_new, gb_new = softmax_loss_grad(W_new, b_new, X, Y, lam)
            if loss_new <= loss - 1e-4 * t * g2 or t < 1e-20:
                break
            t *= 0.5
        sW, sb = W_new - W, b_new - b
        dW, db = gW_new - gW, gb_new - gb
        sy = np.sum(sW * dW) + np.sum(sb * db)
        ss = np.sum(sW * sW) + np.sum(sb * sb)
        step = ss / sy if sy > 1e-300 else 2.0 * t
        W, b, loss, gW, gb = W_new, b_new, loss_new, gW_new, gb_new
        it += 1
    b = b - b.mean()
    if standardizer is None:
        standardizer = Standardizer.identity(d)
    labels = tuple(class_labels) if class_labels else tuple(str(k) for k in range(K))
    return SoftmaxModel(W, b, float(lam), standardizer, labels, it, converged)


# -- cross-validation ------------------------------------------------------

def fold_assignment(n, folds=C.FOLDS, seed=0):
    """Shuffle rows with the portable generator, then deal folds round-robin."""
    perm = Lcg64(seed).permutation(n)
    ids = np.empty(n, dtype=int)
    for pos, row in enumerate(perm):
        ids[row] = pos % folds
    return ids


@dataclass
class CVResult:
    model: object
    lam: float
    cv_loss: dict  # lambda -> mean held-out loss
    fold_models: list = field(default_factory=list)
    fold_ids: np.ndarray | None = None


def cv_train(X, targets, kind, lambda_grid=C.LAMBDA_GRID, folds=C.FOLDS, seed=0,
             fold_ids=None, class_labels=()):
    """Select a global lambda by mean held-out loss and average the fold models.

    ``X`` holds raw features; the standardizer is fit once on all of ``X``.
    ``kind`` is ``"ridge"`` (``targets`` is a vector, held-out squared error)
    or ``"softmax"`` (``targets`` is n x K, held-out cross-entropy). The
    returned model averages the weights and intercepts of the ``folds``
    models trained at the selected lambda.
    """
    X = np.asarray(X, dtype=float)
    T = np.asarray(targets, dtype=float)
    n = X.shape[0]
    if kind not in ("ridge", "softmax"):
        raise ValueError(f"unknown model kind {kind!r}")
    if not lambda_grid:
        raise ValueError("lambda grid is empty")
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if n < folds:
        raise ValueError(f"need at least {folds} rows for {folds}-fold CV, got {n}")
    if fold_ids is None:
        fold_ids = fold_assignment(n, folds, seed)
    fold_ids = np.asarray(fold_ids)
    for k in range(folds):
        if not np.any(fold_ids == k):
            raise ValueError(f"fold {k} has no samples")
        if np.all(fold_ids == k):
            raise ValueError(f"fold {k} leaves no training samples")

    S = fit_standardizer(X)
    Z = S.transform(X)
    cv_loss = {}
    models_at = {}
    for lam in lambda_grid:
        losses, models = [], []
        warm = None
        for k in range(folds):
            tr, te = fold_ids != k, fold_ids == k
            if kind == "ridge":
                m = fit_ridge(Z[tr], T[tr], lam * tr.sum(), S)
                pred = Z[te] @ m.weights + m.intercept
                losses.append(float(np.mean((pred - T[te]) ** 2)))
            else:
                m = fit_softmax(Z[tr], T[tr], lam, S, class_labels, init=warm)
                losses.append(cross_entropy(T[te], softmax(Z[te] @ m.weight_matrix.T + m.intercepts)))
            models.append(m)
        cv_loss[float(lam)] = float(np.mean(losses))
        models_at[float(lam)] = models
    best = min(cv_loss, key=lambda lam: (cv_loss[lam], lam))
    fold_models = models_at[best]
    if kind == "ridge":
        model = RidgeModel(
            np.mean([m.weights for m in fold_models], axis=0),
            float(np.mean([m.intercept for m in fold_models])),
            best, S, float(T.min()), float(T.max()),
        )
    else:
        model = SoftmaxModel(
            np.mean([m.weight_matrix for m in fold_models], axis=0),
            np.mean([m.intercepts for m in fold_models], axis=0),
            best, S, fold_models[0].class_labels,
            max(m.n_iter for m in fold_models), all(m.converged for m in fold_models),
        )
    return CVResult(model, best, cv_loss, fold_models, fold_ids)


# -- model.json ------------------------------------------------------------

def model_from_json(d):
    return RidgeModel.from_json(d) if d["kind"] == "ridge" else SoftmaxModel.from_json(d)


def save_models(path, models, config=None, feature_names=None):
    """Write a model bundle keyed by target name."""
    doc = {
        "layout_version": C.FEATURE_LAYOUT_VERSION,
        "config": dict(config or {}),
        "feature_names": list(feature_names or []),
        "models": {name: m.to_json() for name, m in models.items()},
    }
    atomic_write_text(path, dumps_json(doc))


def load_models(path):
    """Return ``(models, doc)`` from a model bundle."""
    doc = read_json(path)
    if doc.get("layout_version") != C.FEATURE_LAYOUT_VERSION:
        raise ValueError(
            f"model layout {doc.get('layout_version')!r} does not match {C.FEATURE_LAYOUT_VERSION!r}"
        )
    return {name: model_from_json(d) for name, d in doc["models"].items()}, doc
