"""Draw synthetic samples until each group reaches a complete-case target.

The imbalance and lower-bound experiments sweep *complete-case* counts, so
the sampler draws group rows in adaptive blocks, applies the missingness
Bernoulli as it goes, and stops at the row containing the target-th complete
case.  Rows drawn before the stopping point (complete or not) are all kept:
conditioned on completeness the retained rows are still iid draws, and the
incomplete ones feed the propensity-model fits.
"""

from __future__ import annotations

import numpy as np

from ..dataset import Dataset, SyntheticSpec, draw_group
from ..errors import ValidationError
from ..missingness import MissingnessSpec, PropensityOracle, evaluate_logit, stable_sigmoid
from ..rng import RngStream

MAX_TOTAL_DRAWS = 50_000_000


def draw_with_cc_targets(spec: SyntheticSpec, miss: MissingnessSpec,
                         targets: tuple[int, int], rng: RngStream
                         ) -> tuple[Dataset, PropensityOracle]:
    """Sample each group until it holds ``targets[a]`` complete cases.

    Returns the assembled dataset (group-0 rows first) with the injected mask
    plus the matching propensity oracle.
    """
    if min(targets) < 1:
        raise ValidationError("complete-case targets must be >= 1")
    miss.validate(p=spec.p)
    gen = rng.generator()
    parts = []
    for a in (0, 1):
        parts.append(_draw_one_group(spec, miss, a, targets[a], gen))
    X = np.vstack([p[0] for p in parts])
    y = np.concatenate([p[1] for p in parts])
    A = np.concatenate([np.full(p[0].shape[0], a, dtype=np.int64) for a, p in zip((0, 1), parts)])
    keep = np.concatenate([p[2] for p in parts])
    pi = np.concatenate([p[3] for p in parts])
    mask = np.ones(X.shape, dtype=bool)
    resp_obs = np.ones(X.shape[0], dtype=bool)
    if miss.target_features:
        cols = np.fromiter(sorted(miss.target_features), dtype=int)
        mask[np.ix_(~keep, cols)] = False
    if miss.target_response:
        resp_obs[~keep] = False
    ds = Dataset(X, y, A, mask, resp_obs)
    oracle = PropensityOracle(miss, pi, ds.features, ds.response, ds.sensitive)
    return ds, oracle


def _draw_one_group(spec, miss, a, target, gen):
    xs, ys, keeps, pis = [], [], [], []
    have = 0
    drawn = 0
    block = max(256, 2 * target)
    while have < target:
        if drawn > MAX_TOTAL_DRAWS:
            raise ValidationError(
                f"group {a}: {have}/{target} complete cases after {drawn} draws; "
                "propensity too small for this target")
        X, y = draw_group(spec, a, block, gen)
        A = np.full(block, a, dtype=np.int64)
        pi = stable_sigmoid(evaluate_logit(miss, X, A, y))
        keep = gen.random(block) < pi
        xs.append(X)
        ys.append(y)
        keeps.append(keep)
        pis.append(pi)
        have += int(keep.sum())
        drawn += block
        if have < target:
            rate = max(have / drawn, 1e-4)
            block = int(np.ceil((target - have) / rate * 1.25)) + 64
    X = np.vstack(xs)
    y = np.concatenate(ys)
    keep = np.concatenate(keeps)
    pi = np.concatenate(pis)
    # stop exactly at the row holding the target-th complete case
    stop = np.flatnonzero(keep)[target - 1] + 1
    return X[:stop], y[:stop], keep[:stop], pi[:stop]
