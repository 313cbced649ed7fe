"""Prediction models whose fairness is being estimated.

Linear SVM trained by incremental subgradient steps on the primal objective
with the Pegasos schedule eta_t = 1/(lambda*t); classification uses hinge
loss, regression an epsilon-insensitive absolute loss (epsilon = 0.1).  By
default each epoch visits the training rows in stored order; pass
``shuffle=True`` to re-permute per epoch with the supplied stream.  The
forest model reuses the shared CART machinery (variance splits for
regression, Gini + majority vote for classification).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .dataset import Dataset, Task
from .errors import DimensionError, ValidationError
from .rng import RngStream
from .trees import ForestConfig, Tree, grow_forest, predict_forest_mean, predict_forest_vote

SVM_EPSILON = 0.1  # insensitivity width of the regression loss


@dataclass(frozen=True)
class LinearSvmModel:
    weights: np.ndarray
    bias: float
    lambda_: float
    epochs: int
    seed: int
    task: Task
    objective_trace: tuple[float, ...] = ()  # end-of-epoch primal objective

    def raw_score(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.weights.size:
            raise DimensionError(f"model has p={self.weights.size}, rows have {X.shape[1]}")
        return X @ self.weights + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        s = self.raw_score(X)
        return (s > 0).astype(float) if self.task == "classification" else s


@dataclass(frozen=True)
class ForestModel:
    trees: list[Tree] = field(repr=False)
    config: ForestConfig
    task: Task

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.task == "classification":
            return predict_forest_vote(self.trees, X)
        return predict_forest_mean(self.trees, X)


def train_svm(train: Dataset, task: Task, lambda_: float = 1e-4, epochs: int = 20,
              rng: RngStream = RngStream(0), shuffle: bool = False) -> LinearSvmModel:
    """Primal subgradient training; deterministic under a fixed stream.

    Classification maps labels to +-1 and requires both classes present.  The
    bias is unregularized and moves with the same step size as the weights.
    """
    if lambda_ <= 0:
        raise ValidationError("lambda_ must be > 0")
    if epochs < 1:
        raise ValidationError("epochs must be >= 1")
    X = np.ascontiguousarray(train.features, dtype=float)
    y = np.asarray(train.response, dtype=float)
    n, p = X.shape
    if task == "classification":
        if not np.isin(y, (0.0, 1.0)).all():
            raise ValidationError("classification labels must be 0/1")
        if y.min() == y.max():
            raise ValidationError("single-class training set")
        ypm = 2.0 * y - 1.0
    gen = rng.generator() if shuffle else None
    w = np.zeros(p)
    b = 0.0
    t = 0
    trace = []
    for _ in range(epochs):
        order = gen.permutation(n) if shuffle else range(n)
        for i in order:
            t += 1
            eta = 1.0 / (lambda_ * t)
            xi = X[i]
            score = xi @ w + b
            w *= 1.0 - eta * lambda_
            if task == "classification":
                if ypm[i] * score < 1.0:
                    w += (eta * ypm[i]) * xi
                    b += eta * ypm[i]
            else:
                r = score - y[i]
                if abs(r) > SVM_EPSILON:
                    sgn = 1.0 if r > 0 else -1.0
                    w -= (eta * sgn) * xi
                    b -= eta * sgn
        trace.append(_svm_objective(X, y, w, b, lambda_, task))
    return LinearSvmModel(weights=w, bias=float(b), lambda_=lambda_, epochs=epochs,
                          seed=rng.seed, task=task, objective_trace=tuple(trace))


def _svm_objective(X, y, w, b, lambda_, task) -> float:
    s = X @ w + b
    if task == "classification":
        loss = np.maximum(0.0, 1.0 - (2.0 * y - 1.0) * s)
    else:
        loss = np.maximum(0.0, np.abs(s - y) - SVM_EPSILON)
    return float(loss.mean() + 0.5 * lambda_ * w @ w)


def train_forest(train: Dataset, cfg: ForestConfig, task: Task) -> ForestModel:
    """Bagged CART ensemble: leaf means + ensemble mean for regression,
    majority vote for classification."""
    y = train.response
    if task == "classification" and not np.isin(y, (0.0, 1.0)).all():
        raise ValidationError("classification labels must be 0/1")
    criterion = "gini" if task == "classification" else "variance"
    trees = grow_forest(train.features, y, cfg, criterion)
    return ForestModel(trees=trees, config=cfg, task=task)


def predict_loss(model, X: np.ndarray, y_true: np.ndarray,
                 bounds: tuple[float, float] | None = None) -> np.ndarray:
    """Per-case absolute loss |g(x) - y|.

    Classification: 0/1 mismatch.  Regression: when ``bounds`` = (b1, b2) is
    supplied, both the prediction and the response are clipped into [b1, b2]
    first, so the loss lives in [0, b2 - b1].
    """
    y_true = np.asarray(y_true, dtype=float)
    g = model.predict(X)
    if getattr(model, "task") == "classification":
        return (g != y_true).astype(float)
    if bounds is not None:
        b1, b2 = bounds
        if not b2 > b1:
            raise ValidationError("bounds must satisfy b2 > b1")
        g = np.clip(g, b1, b2)
        y_true = np.clip(y_true, b1, b2)
    return np.abs(g - y_true)
