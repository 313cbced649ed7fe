"""Weighted group risks, the accuracy-parity-gap estimator, and its target.

The estimator averages weighted absolute losses over each group's complete
cases; the target quantity is the same gap on the full population, which the
synthetic experiments approximate by Monte Carlo on fresh fully-observed
draws.  Variances use the population (divide-by-n) convention throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import SyntheticSpec, generate_synthetic
from .errors import EmptyGroupError, ValidationError
from .missingness import CompleteCases
from .predictors import predict_loss
from .rng import RngStream
from .weights import WeightVector


@dataclass(frozen=True)
class GroupRisk:
    value: float    # weighted mean absolute loss over the group's complete cases
    group: int
    n_a: int
    sigma2: float   # population variance of the weighted per-case losses


@dataclass(frozen=True)
class FairnessReport:
    delta_hat: float
    delta_true: float
    bias: float
    risk0: GroupRisk
    risk1: GroupRisk
    mc_samples: int
    mc_standard_error: float


def weighted_risk(cc: CompleteCases, losses: np.ndarray, w: WeightVector, group: int) -> GroupRisk:
    losses = np.asarray(losses, dtype=float)
    if losses.shape[0] != cc.data.n:
        raise ValidationError("need one loss per complete case")
    sel = cc.data.sensitive == group
    n_a = int(sel.sum())
    if n_a == 0:
        raise EmptyGroupError(group)
    wl = w.values[sel] * losses[sel]
    return GroupRisk(value=float(wl.mean()), group=group, n_a=n_a,
                     sigma2=float(wl.var()))


def apg_estimate(risk0: GroupRisk, risk1: GroupRisk) -> float:
    """The complete-case fairness estimate: |risk gap| between groups."""
    return abs(risk0.value - risk1.value)


def estimate_apg(cc: CompleteCases, losses: np.ndarray, w: WeightVector) -> tuple[float, GroupRisk, GroupRisk]:
    """Convenience wrapper: both group risks plus their absolute gap."""
    r0 = weighted_risk(cc, losses, w, 0)
    r1 = weighted_risk(cc, losses, w, 1)
    return apg_estimate(r0, r1), r0, r1


def apg_true_components(model, spec: SyntheticSpec, N: int, rng: RngStream,
                        bounds: tuple[float, float] | None = None) -> tuple[float, float, float]:
    """Monte Carlo group mean losses on fresh fully-observed draws.

    Returns (mean loss group 0, mean loss group 1, standard error of the
    difference); N samples per group.
    """
    if N < 1000:
        raise ValidationError("need N >= 1000 Monte Carlo samples")
    draw_spec = SyntheticSpec(
        n_per_group=(N, N), p=spec.p, beta=spec.beta, task=spec.task,
        feature_mean_coefficients=spec.feature_mean_coefficients,
        feature_sd=spec.feature_sd, noise_sd=spec.noise_sd)
    ds = generate_synthetic(draw_spec, rng)
    losses = predict_loss(model, ds.features, ds.response, bounds=bounds)
    g0 = losses[ds.sensitive == 0]
    g1 = losses[ds.sensitive == 1]
    se = float(np.sqrt(g0.var() / N + g1.var() / N))
    return float(g0.mean()), float(g1.mean()), se


def apg_true(model, spec: SyntheticSpec, N: int, rng: RngStream,
             bounds: tuple[float, float] | None = None) -> tuple[float, float]:
    """Monte Carlo approximation of the population accuracy parity gap.

    Returns (|gap|, standard error), the standard error by the delta method
    on the two group means.
    """
    m0, m1, se = apg_true_components(model, spec, N, rng, bounds=bounds)
    return abs(m0 - m1), se


def bias(delta_true: float, delta_hat: float) -> float:
    return abs(delta_true - delta_hat)
