"""Complete-case weights with per-group mean one.

All constructors produce weights normalized so the empirical mean within each
sensitive group's complete cases is exactly 1 (Hajek normalization):

    w_i = n_a * (1/pi_i) / sum_{j in group a} (1/pi_j)

which also makes the weights invariant to any common rescaling of pi within a
group.  ``B`` is the realized max weight and ``D`` the per-group second
moments; both feed the error-bound calculators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .missingness import CompleteCases, PropensityOracle
from .propensity import PropensityFit, predict


@dataclass(frozen=True)
class WeightVector:
    values: np.ndarray     # one weight per complete case, ordered as cc.data rows
    group_of: np.ndarray   # sensitive attribute per complete case
    B: float               # max weight
    D: tuple[float, float]  # per-group second moments (D_0, D_1)

    def group_values(self, a: int) -> np.ndarray:
        return self.values[self.group_of == a]


def _from_inverse_propensity(cc: CompleteCases, pi: np.ndarray) -> WeightVector:
    pi = np.asarray(pi, dtype=float)
    if np.any(pi <= 0.0):
        raise ValidationError("propensity at 0: inverse weight is unbounded")
    if np.any(pi > 1.0):
        raise ValidationError("propensity above 1")
    inv = 1.0 / pi
    A = cc.data.sensitive
    w = np.empty_like(inv)
    D = []
    for a, na in ((0, cc.n0), (1, cc.n1)):
        g = A == a
        w[g] = na * inv[g] / inv[g].sum()
        D.append(float(np.mean(w[g] ** 2)))
    return WeightVector(values=w, group_of=A.copy(), B=float(w.max()), D=(D[0], D[1]))


def true_weights(cc: CompleteCases, oracle: PropensityOracle) -> WeightVector:
    """Weights from the true propensity, the conditional expectation replaced
    by its empirical mean over each group's complete cases."""
    pi = oracle.pi_of_rows(cc.indices)
    return _from_inverse_propensity(cc, pi)


def estimated_weights(cc: CompleteCases, fit: PropensityFit,
                      feature_columns: np.ndarray | None = None) -> WeightVector:
    """Same construction with pi_hat from a fitted model.

    ``feature_columns`` selects the always-observed columns the fit was
    trained on (None = all columns).  The oracle kind also needs the response,
    which complete cases have by definition.
    """
    X = cc.data.features if feature_columns is None else cc.data.features[:, feature_columns]
    pi = predict(fit, X, sensitive=cc.data.sensitive, response=cc.data.response)
    return _from_inverse_propensity(cc, pi)


def unit_weights(cc: CompleteCases) -> WeightVector:
    """The unweighted estimator's weights: all ones."""
    n = cc.data.n
    return WeightVector(values=np.ones(n), group_of=cc.data.sensitive.copy(),
                        B=1.0, D=(1.0, 1.0))
