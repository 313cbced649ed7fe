"""Propensity-score estimation: pi_hat(z, A) = P(R=1 | always-observed columns, A).

Models are fit on the columns that are observed for every row (plus the
sensitive attribute), since those are the only inputs available on incomplete
cases.  Reference implementations: ridge-penalized logistic regression via
IRLS (optionally on cubed features, the deliberately misspecified variant)
and a bagged Gini forest.  Other model families plug in by producing a
:class:`PropensityFit` with their own ``kind``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import DimensionError, ValidationError
from .missingness import PropensityOracle, stable_sigmoid
from .trees import ForestConfig, Tree, grow_forest, predict_forest_mean, tree_table

ModelKind = Literal["true_oracle", "logistic", "logistic_misspecified", "random_forest"]
Transform = Literal["identity", "cubed"]

DEFAULT_CLIP = (1e-3, 1.0 - 1e-3)


@dataclass(frozen=True)
class LogisticConfig:
    max_iterations: int = 100
    tolerance: float = 1e-8
    ridge: float = 1e-8

    def validate(self) -> None:
        if self.tolerance <= 0:
            raise ValidationError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if self.ridge < 0:
            raise ValidationError("ridge must be >= 0")


@dataclass(frozen=True)
class PropensityFit:
    kind: ModelKind
    transform: Transform = "identity"
    clip: tuple[float, float] = DEFAULT_CLIP
    coef: np.ndarray | None = None            # [intercept, features..., sensitive?]
    trees: list[Tree] | None = field(default=None, repr=False)
    oracle: PropensityOracle | None = None
    uses_sensitive: bool = False
    n_feature_columns: int = 0
    converged: bool = True
    fallback_used: bool = False

    def to_text(self) -> dict:
        """Versioned, binary-agnostic dump for debugging."""
        out = {"format": 1, "kind": self.kind, "transform": self.transform,
               "clip": list(self.clip), "uses_sensitive": self.uses_sensitive,
               "converged": self.converged, "fallback_used": self.fallback_used}
        if self.coef is not None:
            out["coef"] = [float(c) for c in self.coef]
        if self.trees is not None:
            out["trees"] = [tree_table(t) for t in self.trees]
        return out


def _design(rows: np.ndarray, transform: Transform, sensitive) -> np.ndarray:
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[None, :]
    if not np.isfinite(rows).all():
        raise ValidationError("feature columns must be finite")
    feats = rows**3 if transform == "cubed" else rows
    cols = [np.ones(feats.shape[0]), feats]
    if sensitive is not None:
        cols.append(np.asarray(sensitive, dtype=float)[:, None]
                    if np.ndim(sensitive) else np.full((feats.shape[0], 1), float(sensitive)))
    return np.column_stack(cols)


def _penalized_ll(X, y, beta, ridge) -> float:
    mu = np.clip(stable_sigmoid(X @ beta), 1e-12, 1 - 1e-12)
    return float(y @ np.log(mu) + (1 - y) @ np.log1p(-mu) - 0.5 * ridge * beta @ beta)


def fit_logistic(rows: np.ndarray, labels: np.ndarray, transform: Transform = "identity",
                 cfg: LogisticConfig = LogisticConfig(), sensitive=None,
                 clip: tuple[float, float] = DEFAULT_CLIP) -> PropensityFit:
    """Ridge-penalized maximum likelihood by iteratively reweighted least squares.

    The cubed transform replaces each feature x with x^3 before fitting, which
    misspecifies a model whose true logit is linear in x.  A Newton step that
    would decrease the penalized log-likelihood (or a singular system) falls
    back to a backtracking gradient step and flags the fit.
    """
    cfg.validate()
    y = np.asarray(labels, dtype=float)
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValidationError("labels must be 0/1")
    X = _design(rows, transform, sensitive)
    if cfg.ridge == 0 and (y.min() == y.max()):
        raise ValidationError("single-class labels need ridge > 0")
    d = X.shape[1]
    beta = np.zeros(d)
    ll = _penalized_ll(X, y, beta, cfg.ridge)
    converged = False
    fallback_used = False
    eye = np.eye(d)
    for _ in range(cfg.max_iterations):
        mu = stable_sigmoid(X @ beta)
        w = mu * (1.0 - mu)
        grad = X.T @ (y - mu) - cfg.ridge * beta
        H = X.T @ (w[:, None] * X) + cfg.ridge * eye
        try:
            step = np.linalg.solve(H, grad)
            candidate = beta + step
            ll_new = _penalized_ll(X, y, candidate, cfg.ridge)
            ok = ll_new >= ll - 1e-10
        except np.linalg.LinAlgError:
            ok = False
        if not ok:
            fallback_used = True
            t, candidate, ll_new = 1.0, beta, ll
            while t > 1e-12:
                trial = beta + t * grad
                ll_t = _penalized_ll(X, y, trial, cfg.ridge)
                if ll_t >= ll - 1e-10:
                    candidate, ll_new = trial, ll_t
                    break
                t *= 0.5
        delta = np.max(np.abs(candidate - beta))
        beta, ll = candidate, ll_new
        if delta < cfg.tolerance:
            converged = True
            break
    n_cols = np.atleast_2d(np.asarray(rows)).shape[1]
    kind = "logistic" if transform == "identity" else "logistic_misspecified"
    return PropensityFit(kind=kind, transform=transform, clip=clip, coef=beta,
                         uses_sensitive=sensitive is not None, n_feature_columns=n_cols,
                         converged=converged, fallback_used=fallback_used)


def fit_forest(rows: np.ndarray, labels: np.ndarray, cfg: ForestConfig = ForestConfig(),
               sensitive=None, clip: tuple[float, float] = DEFAULT_CLIP) -> PropensityFit:
    """Bagged Gini CART; predicted pi is the mean leaf class-1 fraction, clipped."""
    y = np.asarray(labels, dtype=float)
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValidationError("labels must be 0/1")
    X = _design(rows, "identity", sensitive)[:, 1:]  # trees need no intercept column
    trees = grow_forest(X, y, cfg, "gini")
    n_cols = np.atleast_2d(np.asarray(rows)).shape[1]
    return PropensityFit(kind="random_forest", clip=clip, trees=trees,
                         uses_sensitive=sensitive is not None, n_feature_columns=n_cols)


def oracle_fit(oracle: PropensityOracle, clip: tuple[float, float] = (0.0, 1.0)) -> PropensityFit:
    """Wrap the true propensity as a fit (no clipping by default: it is exact)."""
    return PropensityFit(kind="true_oracle", clip=clip, oracle=oracle, uses_sensitive=True)


def predict(fit: PropensityFit, rows: np.ndarray, sensitive=None, response=None) -> np.ndarray:
    """pi_hat in [clip.lo, clip.hi] for each row."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if fit.kind == "true_oracle":
        if sensitive is None:
            raise ValidationError("the true-propensity oracle needs the sensitive attribute")
        pi = fit.oracle.evaluate(rows, sensitive, response)
        lo, hi = fit.clip
        return np.clip(pi, lo, hi) if (lo, hi) != (0.0, 1.0) else pi
    if rows.shape[1] != fit.n_feature_columns:
        raise DimensionError(f"fit expects {fit.n_feature_columns} feature columns, got {rows.shape[1]}")
    if fit.uses_sensitive and sensitive is None:
        raise ValidationError("fit was trained with the sensitive attribute; pass it")
    if not fit.uses_sensitive and sensitive is not None:
        raise ValidationError("fit was trained without the sensitive attribute")
    if fit.kind in ("logistic", "logistic_misspecified"):
        X = _design(rows, fit.transform, sensitive)
        raw = stable_sigmoid(X @ fit.coef)
    else:
        X = _design(rows, "identity", sensitive)[:, 1:]
        raw = predict_forest_mean(fit.trees, X)
    return np.clip(raw, fit.clip[0], fit.clip[1])
