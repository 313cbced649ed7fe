"""Missingness injection under MCAR/MAR/MNAR logit-linear propensity models.

One Bernoulli draw per row decides whether the row stays complete; on failure
the whole target set (some feature columns, optionally the response) is
masked at once.  This case-wise scheme matches a single complete-case
indicator per observation, which is what the weighting theory is about.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

from .dataset import Dataset
from .errors import EmptyGroupError, ValidationError
from .rng import RngStream

Mechanism = Literal["MCAR", "MAR", "MNAR"]
TermKind = Literal["intercept", "feature", "response", "sensitive"]

# sigmoid outputs are clamped into (PI_FLOOR, 1 - PI_FLOOR): a propensity of
# exactly 0/1 would make inverse weights undefined or missingness vacuous
PI_FLOOR = 1e-12


@dataclass(frozen=True)
class LogitTerm:
    kind: TermKind
    coef: float
    index: int | None = None  # feature column, for kind == "feature"

    def __post_init__(self):
        if self.kind == "feature" and (self.index is None or self.index < 0):
            raise ValidationError("feature term needs a nonnegative column index")
        if self.kind != "feature" and self.index is not None:
            raise ValidationError(f"{self.kind} term must not carry an index")


@dataclass(frozen=True)
class MissingnessSpec:
    """Mechanism tag plus logit(pi) = sum of terms, and the jointly-missing target set."""

    mechanism: Mechanism
    logit_terms: tuple[LogitTerm, ...]
    target_features: frozenset[int] = frozenset()
    target_response: bool = False

    def __post_init__(self):
        object.__setattr__(self, "logit_terms", tuple(self.logit_terms))
        object.__setattr__(self, "target_features", frozenset(self.target_features))

    def validate(self, p: int | None = None) -> None:
        if self.mechanism not in ("MCAR", "MAR", "MNAR"):
            raise ValidationError(f"unknown mechanism {self.mechanism!r}")
        if not self.target_features and not self.target_response:
            raise ValidationError("target set is empty: nothing would ever be missing")
        kinds = {t.kind for t in self.logit_terms}
        refs_target_feature = any(
            t.kind == "feature" and t.index in self.target_features for t in self.logit_terms
        )
        refs_target_response = self.target_response and "response" in kinds
        if self.mechanism == "MCAR":
            if kinds - {"intercept", "sensitive"}:
                raise ValidationError("MCAR logit may reference only the intercept and the sensitive attribute")
        elif self.mechanism == "MAR":
            if refs_target_feature or refs_target_response:
                raise ValidationError("MAR logit may not reference any targeted column")
        else:  # MNAR
            if not (refs_target_feature or refs_target_response):
                raise ValidationError("MNAR logit must reference at least one targeted column")
        if p is not None:
            for t in self.logit_terms:
                if t.kind == "feature" and t.index >= p:
                    raise ValidationError(f"logit references feature {t.index}, dataset has p={p}")
            if self.target_features and max(self.target_features) >= p:
                raise ValidationError("target set references a feature outside the dataset")


def stable_sigmoid(z: np.ndarray) -> np.ndarray:
    """Branching sigmoid, safe for |z| far beyond 700; output in (0, 1) strictly."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return np.clip(out, PI_FLOOR, 1.0 - PI_FLOOR)


@dataclass(frozen=True)
class PropensityOracle:
    """The true pi(z, A), evaluable on fresh rows and on the injected sample.

    Holds the spec plus shadow copies of the pre-mask values, so MNAR
    propensities remain evaluable after the targeted cells are hidden.
    """

    spec: MissingnessSpec
    pi_by_row: np.ndarray          # pi used at injection, full length n
    _features: np.ndarray = field(repr=False)
    _response: np.ndarray = field(repr=False)
    _sensitive: np.ndarray = field(repr=False)

    def evaluate(self, features: np.ndarray, sensitive: np.ndarray,
                 response: np.ndarray | None = None) -> np.ndarray:
        """pi on arbitrary rows; all referenced values must be supplied."""
        return stable_sigmoid(evaluate_logit(self.spec, features, sensitive, response))

    def pi_of_rows(self, indices: np.ndarray) -> np.ndarray:
        """pi for original-sample rows, bit-identical to the injection draw."""
        return self.pi_by_row[indices]


def evaluate_logit(spec: MissingnessSpec, features, sensitive, response=None) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    z = np.zeros(features.shape[0])
    for t in spec.logit_terms:
        if t.kind == "intercept":
            z += t.coef
        elif t.kind == "feature":
            z += t.coef * features[:, t.index]
        elif t.kind == "sensitive":
            z += t.coef * np.asarray(sensitive, dtype=float)
        else:
            if response is None:
                raise ValidationError("this propensity references the response; pass it")
            z += t.coef * np.asarray(response, dtype=float)
    return z


def inject(data: Dataset, spec: MissingnessSpec, rng: RngStream) -> tuple[Dataset, PropensityOracle]:
    """Draw per-row completeness Bernoulli(pi_i) and mask the target set on failure.

    Observed numeric values are never altered, only the mask.  Every
    referenced column must be observed in the input for every row.
    """
    spec.validate(p=data.p)
    for t in spec.logit_terms:
        if t.kind == "feature" and not data.mask[:, t.index].all():
            raise ValidationError(f"logit references feature {t.index} which has missing values")
        if t.kind == "response" and not data.response_observed.all():
            raise ValidationError("logit references the response which has missing values")
    pi = stable_sigmoid(evaluate_logit(spec, data.features, data.sensitive, data.response))
    keep = rng.generator().random(data.n) < pi
    mask = data.mask.copy()
    resp_obs = data.response_observed.copy()
    if spec.target_features:
        cols = np.fromiter(sorted(spec.target_features), dtype=int)
        mask[np.ix_(~keep, cols)] = False
    if spec.target_response:
        resp_obs[~keep] = False
    injected = Dataset(data.features, data.response, data.sensitive, mask, resp_obs)
    oracle = PropensityOracle(spec, pi, data.features, data.response, data.sensitive)
    return injected, oracle


@dataclass(frozen=True)
class CompleteCases:
    """The R=1 subsample, with the original row indices and per-group counts."""

    data: Dataset
    indices: np.ndarray
    n0: int
    n1: int

    def group_index(self, a: int) -> np.ndarray:
        """Positions (within the subsample) of complete cases in group a."""
        return np.flatnonzero(self.data.sensitive == a)


def complete_cases(data: Dataset) -> CompleteCases:
    """Extract rows with R_i = 1.  Errors if either sensitive group is empty."""
    r = data.complete_indicator()
    idx = np.flatnonzero(r)
    sens = data.sensitive[idx]
    n0 = int((sens == 0).sum())
    n1 = int((sens == 1).sum())
    for a, na in ((0, n0), (1, n1)):
        if na == 0:
            raise EmptyGroupError(a)
    return CompleteCases(data.take(idx), idx, n0, n1)
