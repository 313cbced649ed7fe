"""Finite-sample bounds on the fairness estimation error.

Upper bound (holds with probability >= 1 - delta, per sensitive group a):

    sum_a [ tv_a + sqrt( B * C_d(n_a, D_a, delta)
                         / ( n_a * ((1 + D_a/B) * log(1 + B/D_a) - 1) ) ) ]

scaled by the response range width (b2 - b1), requiring the moment condition
D_a * (b2 - b1) <= n_a / 8 in each group.  C_d has separate closed forms for
classification (VC dimension d) and regression (pseudo dimension d, needs
n_a >= d):

    classification: log((d+1) * (8e)^(d+1) / delta) + (d/2) * log(n_a / (2 D_a))
    regression:     log((4/delta) * (8e/d)^d) + (3d/2) * log(n_a / (2 D_a)^(1/3))

Lower bound (true weights only; needs B^2/sigma_a^2 <= n_min for both groups;
holds with probability >= 7/1440): with s = sqrt(sigma_0^2/n_0 + sigma_1^2/n_1),
the signed estimation difference lies in [s/24, 12 s], and the absolute error
is at least s/24 when the estimate is >= (13/2) s, at least s/72 when the
estimate is <= s/72, and carries no conclusion in between.  All logs natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .dataset import SyntheticSpec, Task, generate_synthetic
from .errors import ValidationError
from .missingness import PropensityOracle
from .propensity import PropensityFit, predict
from .rng import RngStream

LOWER_BOUND_PROBABILITY = 7.0 / 1440.0
Regime = Literal["large_delta_hat", "small_delta_hat", "inconclusive", "not_applicable"]

_D_SLACK = 1e-9  # float residue of the mean-one normalization


@dataclass(frozen=True)
class BoundInputs:
    n: tuple[int, int]                 # complete cases per group
    D: tuple[float, float]             # second moments of the weights per group
    B: float                           # max weight
    d: int                             # VC dimension (pseudo dimension for regression)
    delta: float                       # confidence parameter of the upper bound
    task: Task
    sigma2: tuple[float, float] = (0.0, 0.0)   # weighted-loss variances per group
    value_range: tuple[float, float] = (0.0, 1.0)
    tv: tuple[float, float] = (0.0, 0.0)       # total-variation terms (0 under true weights)

    def validate(self) -> None:
        if min(self.n) < 1:
            raise ValidationError("need at least one complete case per group")
        if self.B < 1.0 - _D_SLACK:
            raise ValidationError("mean-one weights have max >= 1")
        for a in (0, 1):
            if not (1.0 - _D_SLACK <= self.D[a] <= self.B**2 + _D_SLACK):
                raise ValidationError(f"D_{a}={self.D[a]} outside [1, B^2]")
            if self.tv[a] < 0:
                raise ValidationError("total variation terms are nonnegative")
            if self.sigma2[a] < 0:
                raise ValidationError("variances are nonnegative")
        if not (0.0 < self.delta < 1.0):
            raise ValidationError("delta must be in (0, 1)")
        b1, b2 = self.value_range
        if not b2 > b1:
            raise ValidationError("value range must satisfy b2 > b1")
        if self.d < 1:
            raise ValidationError("dimension d must be >= 1")


def c_d(task: Task, n_a: int, D_a: float, d: int, delta: float) -> float:
    """Complexity term of the upper bound; all pieces in log space."""
    if not (0.0 < delta < 1.0):
        raise ValidationError("delta must be in (0, 1)")
    if task == "classification":
        return (math.log(d + 1) + (d + 1) * math.log(8 * math.e) - math.log(delta)
                + 0.5 * d * math.log(n_a / (2.0 * D_a)))
    if n_a < d:
        raise ValidationError(f"regression bound needs n_a >= d, got n_a={n_a} < d={d}")
    return (math.log(4.0) - math.log(delta) + d * (math.log(8 * math.e) - math.log(d))
            + 1.5 * d * (math.log(n_a) - math.log(2.0 * D_a) / 3.0))


@dataclass(frozen=True)
class UpperBoundResult:
    value: float | None                # None when the moment condition fails
    concentration: tuple[float, float]
    tv: tuple[float, float]
    c_d: tuple[float, float]
    moment_ok: tuple[bool, bool]
    probability: float


def upper_bound(inputs: BoundInputs) -> UpperBoundResult:
    inputs.validate()
    b1, b2 = inputs.value_range
    width = b2 - b1
    moment_ok = tuple(inputs.D[a] * width <= inputs.n[a] / 8.0 for a in (0, 1))
    conc, cds = [], []
    for a in (0, 1):
        n_a, D_a = inputs.n[a], inputs.D[a]
        cd = c_d(inputs.task, n_a, D_a, inputs.d, inputs.delta)
        denom = n_a * ((1.0 + D_a / inputs.B) * math.log1p(inputs.B / D_a) - 1.0)
        conc.append(math.sqrt(inputs.B * cd / denom))
        cds.append(cd)
    value = None
    if all(moment_ok):
        value = width * sum(inputs.tv[a] + conc[a] for a in (0, 1))
    return UpperBoundResult(value=value, concentration=(conc[0], conc[1]),
                            tv=inputs.tv, c_d=(cds[0], cds[1]),
                            moment_ok=moment_ok, probability=1.0 - inputs.delta)


@dataclass(frozen=True)
class LowerBoundResult:
    value: float | None
    regime: Regime
    s: float | None                    # sqrt(sigma_0^2/n_0 + sigma_1^2/n_1)
    bracket: tuple[float, float] | None  # unconditional signed-difference bracket
    variance_ok: tuple[bool, bool]
    probability: float


def lower_bound(inputs: BoundInputs, delta_hat: float, true_weights: bool = True) -> LowerBoundResult:
    """Conditional lower bounds; the caller attests the weights are the true ones."""
    inputs.validate()
    if delta_hat < 0:
        raise ValidationError("delta_hat is an absolute gap, must be >= 0")
    n_min = min(inputs.n)
    variance_ok = tuple(
        inputs.sigma2[a] > 0 and inputs.B**2 / inputs.sigma2[a] <= n_min for a in (0, 1)
    )
    if not true_weights or not all(variance_ok):
        return LowerBoundResult(value=None, regime="not_applicable", s=None, bracket=None,
                                variance_ok=variance_ok, probability=LOWER_BOUND_PROBABILITY)
    s = math.sqrt(inputs.sigma2[0] / inputs.n[0] + inputs.sigma2[1] / inputs.n[1])
    bracket = (s / 24.0, 12.0 * s)
    if delta_hat >= 6.5 * s:
        return LowerBoundResult(s / 24.0, "large_delta_hat", s, bracket, variance_ok,
                                LOWER_BOUND_PROBABILITY)
    if delta_hat <= s / 72.0:
        return LowerBoundResult(s / 72.0, "small_delta_hat", s, bracket, variance_ok,
                                LOWER_BOUND_PROBABILITY)
    return LowerBoundResult(None, "inconclusive", s, bracket, variance_ok,
                            LOWER_BOUND_PROBABILITY)


@dataclass(frozen=True)
class BoundReport:
    """Everything the harness records about one bound evaluation."""

    upper: UpperBoundResult
    lower: LowerBoundResult
    inputs: BoundInputs = field(repr=False)

    def to_json_dict(self) -> dict:
        return {
            "upper": self.upper.value,
            "upper_probability": self.upper.probability,
            "upper_concentration": list(self.upper.concentration),
            "upper_tv": list(self.upper.tv),
            "c_d": list(self.upper.c_d),
            "thm1_moment_ok": list(self.upper.moment_ok),
            "lower": self.lower.value,
            "lower_regime": self.lower.regime,
            "lower_probability": self.lower.probability,
            "s": self.lower.s,
            "signed_bracket": list(self.lower.bracket) if self.lower.bracket else None,
            "thm2_variance_ok": list(self.lower.variance_ok),
            "n": list(self.inputs.n),
            "D": list(self.inputs.D),
            "B": self.inputs.B,
            "d": self.inputs.d,
            "delta": self.inputs.delta,
            "task": self.inputs.task,
            "value_range": list(self.inputs.value_range),
            "sigma2": list(self.inputs.sigma2),
        }


def evaluate_bounds(inputs: BoundInputs, delta_hat: float, true_weights: bool) -> BoundReport:
    return BoundReport(upper=upper_bound(inputs),
                       lower=lower_bound(inputs, delta_hat, true_weights=true_weights),
                       inputs=inputs)


def estimate_tv(oracle: PropensityOracle, fit: PropensityFit | None, spec: SyntheticSpec,
                N: int, rng: RngStream,
                feature_columns: np.ndarray | None = None) -> tuple[tuple[float, float], tuple[float, float]]:
    """Monte Carlo estimate of the per-group total-variation terms.

    Needs the true propensity, so synthetic runs only.  ``fit`` = None means
    the unit weights; otherwise the weight function is the Hajek-normalized
    inverse of the fit's propensity, with the normalizing constant itself
    estimated on the same fresh draw.  Returns ((tv_0, tv_1), (se_0, se_1));
    the standard errors are plug-in (normalizer noise ignored).
    """
    if N < 1000:
        raise ValidationError("need N >= 1000 Monte Carlo samples")
    draw_spec = SyntheticSpec(
        n_per_group=(N, N), p=spec.p, beta=spec.beta, task=spec.task,
        feature_mean_coefficients=spec.feature_mean_coefficients,
        feature_sd=spec.feature_sd, noise_sd=spec.noise_sd)
    ds = generate_synthetic(draw_spec, rng)
    tvs, ses = [], []
    for a in (0, 1):
        sel = ds.sensitive == a
        X = ds.features[sel]
        yv = ds.response[sel]
        Av = ds.sensitive[sel]
        pi = oracle.evaluate(X, Av, yv)
        p_complete = pi.mean()
        if fit is None:
            omega = np.ones(X.shape[0])
        else:
            Xf = X if feature_columns is None else X[:, feature_columns]
            pi_hat = predict(fit, Xf, sensitive=Av, response=yv)
            u = 1.0 / pi_hat
            omega = u / (np.mean(u * pi) / p_complete)
        integrand = 0.5 * np.abs(1.0 - omega * pi / p_complete)
        tvs.append(float(integrand.mean()))
        ses.append(float(integrand.std() / math.sqrt(integrand.size)))
    return (tvs[0], tvs[1]), (ses[0], ses[1])
