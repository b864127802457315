"""One-vs-rest linear SVM trained with Pegasos stochastic subgradient steps."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

from . import kernels
from .corpus import LabelSchema, schema_for


class SVMError(ValueError):
    pass


@dataclass
class LinearModel:
    schema: LabelSchema
    weights: np.ndarray  # [K, d]
    bias: np.ndarray  # [K]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def scores(self, X) -> np.ndarray:
        X = _as_matrix(X)
        if X.shape[1] != self.dim:
            raise SVMError(f"feature dimension {X.shape[1]} does not match model dimension {self.dim}")
        return np.asarray(X @ self.weights.T) + self.bias


def _as_matrix(X):
    if sparse.issparse(X):
        return X.tocsr()
    X = np.asarray(X, dtype=np.float64)
    return X.reshape(1, -1) if X.ndim == 1 else X


def _label_indices(labels: Sequence, schema: LabelSchema) -> np.ndarray:
    return np.array([lab if isinstance(lab, (int, np.integer)) else schema.index(lab) for lab in labels], dtype=np.int64)


def train_svm(
    features,
    labels: Sequence,
    schema: LabelSchema,
    lam: float = 1e-4,
    epochs: int = 20,
    seed: int = 13,
) -> LinearModel:
    """Fit one binary Pegasos run per class (that class = +1, the rest = -1).

    The step size at update ``t`` is ``1 / (lam * t)``. The bias is an
    extra coordinate with a constant feature of 1, shrunk together with the
    weights. All classes see the same seeded visiting order, so the result
    depends only on the data and ``seed``.
    """
    if lam <= 0:
        raise SVMError("lambda must be positive")
    if epochs < 0:
        raise SVMError("epochs must be non-negative")
    X = _as_matrix(features)
    y_idx = _label_indices(labels, schema)
    n, d = X.shape
    if n != len(y_idx):
        raise SVMError(f"{n} feature rows but {len(y_idx)} labels")
    present = np.bincount(y_idx, minlength=len(schema))
    missing = [c for c, k in zip(schema.classes, present) if k == 0]
    if missing:
        raise SVMError(f"no training examples for class(es) {missing}")

    rng = np.random.default_rng(seed)
    orders = np.ascontiguousarray(
        np.stack([rng.permutation(n) for _ in range(epochs)]) if epochs else np.zeros((0, n)),
        dtype=np.int64,
    )
    W = np.zeros((len(schema), d))
    b = np.zeros(len(schema))
    if epochs == 0:
        return LinearModel(schema, W, b)
    if sparse.issparse(X):
        data = np.ascontiguousarray(X.data, dtype=np.float64)
        indices = np.ascontiguousarray(X.indices, dtype=np.int32)
        indptr = np.ascontiguousarray(X.indptr, dtype=np.int32)
    else:
        X = np.ascontiguousarray(X)
    for c in range(len(schema)):
        y = np.where(y_idx == c, 1.0, -1.0)
        w = np.zeros(d)
        if sparse.issparse(X):
            b[c] = kernels.pegasos_sparse(data, indices, indptr, y, orders, float(lam), w)
        else:
            b[c] = kernels.pegasos_dense(X, y, orders, float(lam), w)
        W[c] = w
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
        raise SVMError("training diverged to non-finite weights")
    return LinearModel(schema, W, b)


def train_standardized(features, labels: Sequence, schema: LabelSchema, lam: float = 1e-4, epochs: int = 20, seed: int = 13) -> LinearModel:
    """Train on z-scored dense features, then fold the scaling into the weights.

    The returned model scores raw features exactly as the trained model scores
    standardized ones. Constant columns are left unscaled.
    """
    X = _as_matrix(features)
    if sparse.issparse(X):
        raise SVMError("standardization needs dense features")
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd < 1e-12] = 1.0
    model = train_svm((X - mu) / sd, labels, schema, lam, epochs, seed)
    weights = model.weights / sd
    return LinearModel(schema, weights, model.bias - weights @ mu)


def predict_indices(model: LinearModel, features) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. schema order breaks ties.
    return np.argmax(model.scores(features), axis=1)


def predict(model: LinearModel, vector) -> str:
    return model.schema.classes[int(predict_indices(model, vector)[0])]


def predict_many(model: LinearModel, features) -> list[str]:
    return [model.schema.classes[i] for i in predict_indices(model, features)]


def hinge_objective(model: LinearModel, features, labels: Sequence, lam: float) -> float:
    """``lam/2 * sum_c ||w_c||^2`` plus the hinge loss averaged over examples and classes.

    The bias is left out of the penalty here even though training shrinks it.
    """
    scores = model.scores(features)
    y_idx = _label_indices(labels, model.schema)
    signs = -np.ones_like(scores)
    signs[np.arange(len(y_idx)), y_idx] = 1.0
    hinge = np.maximum(0.0, 1.0 - signs * scores)
    return float(0.5 * lam * np.sum(model.weights**2) + hinge.mean())


def save_svm(model: LinearModel, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# task={model.schema.task_id}\tdim={model.dim}\n")
        for name, w, b in zip(model.schema.classes, model.weights, model.bias):
            fh.write(name + "\t" + "\t".join(repr(float(x)) for x in w) + "\t" + repr(float(b)) + "\n")


def load_svm(path: str | os.PathLike) -> LinearModel:
    with open(path, encoding="utf-8") as fh:
        head = fh.readline()
        if not head.startswith("# "):
            raise SVMError(f"{os.fspath(path)}: missing svm header")
        meta = dict(item.split("=", 1) for item in head[2:].strip().split("\t"))
        schema = schema_for(meta["task"])
        dim = int(meta["dim"])
        rows = [line.rstrip("\n").split("\t") for line in fh if line.strip()]
    if [r[0] for r in rows] != list(schema.classes):
        raise SVMError(f"{os.fspath(path)}: class rows do not match task {schema.task_id}")
    values = np.array([[float(x) for x in r[1:]] for r in rows])
    if values.shape[1] != dim + 1:
        raise SVMError(f"{os.fspath(path)}: expected {dim + 1} numbers per class row")
    return LinearModel(schema, values[:, :dim].copy(), values[:, dim].copy())
