"""Core data model, synthetic population generation, CSV ingestion.

A :class:`Dataset` is a feature matrix with a response, a binary sensitive
attribute, and an observation mask.  A row is a *complete case* when every
feature and the response are observed; downstream estimators work on the
complete-case subsample and weight it back toward the full population.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .errors import DataError, SchemaError, ValidationError
from .rng import RngStream

Task = Literal["classification", "regression_quadratic"]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Immutable sample of n observations with p features.

    ``mask[i, j]`` is True when feature j of row i is observed;
    ``response_observed[i]`` likewise for the response.  The sensitive
    attribute is never maskable.
    """

    features: np.ndarray
    response: np.ndarray
    sensitive: np.ndarray
    mask: np.ndarray
    response_observed: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.response, dtype=float)
        A = np.asarray(self.sensitive, dtype=np.int64)
        m = np.asarray(self.mask, dtype=bool)
        ro = np.asarray(self.response_observed, dtype=bool)
        if X.ndim != 2:
            raise ValidationError("features must be a 2-d matrix")
        n = X.shape[0]
        if y.shape != (n,) or A.shape != (n,) or ro.shape != (n,):
            raise ValidationError("response/sensitive/response_observed must have length n")
        if m.shape != X.shape:
            raise ValidationError("mask must have the same shape as features")
        if not np.isin(A, (0, 1)).all():
            raise ValidationError("sensitive attribute must be binary 0/1")
        for name, val in (("features", _freeze(X)), ("response", _freeze(y)),
                          ("sensitive", _freeze(A)), ("mask", _freeze(m)),
                          ("response_observed", _freeze(ro))):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def complete_indicator(self) -> np.ndarray:
        """R_i = 1 iff row i is fully observed (all features and response)."""
        return self.mask.all(axis=1) & self.response_observed

    def fully_observed(self) -> "Dataset":
        """Copy of this dataset with every cell marked observed."""
        return Dataset(self.features, self.response, self.sensitive,
                       np.ones_like(self.mask), np.ones_like(self.response_observed))

    def take(self, idx: np.ndarray) -> "Dataset":
        """Row subset (copies; the result is independent of self)."""
        return Dataset(self.features[idx], self.response[idx], self.sensitive[idx],
                       self.mask[idx], self.response_observed[idx])


def dataset_all_observed(features, response, sensitive) -> Dataset:
    features = np.asarray(features, dtype=float)
    n = features.shape[0]
    return Dataset(features, response, sensitive,
                   np.ones(features.shape, dtype=bool), np.ones(n, dtype=bool))


@dataclass(frozen=True)
class SyntheticSpec:
    """Gaussian-feature population used by the simulation experiments.

    Features are iid N(c0 + c1*A, sd^2) where (c0, c1) are
    ``feature_mean_coefficients``; a disparity sweep scales c1.  The response
    is Bernoulli((1+exp(x'beta))^-1) for classification or (x'beta)^2 + eps,
    eps ~ N(0, noise_sd^2), for quadratic regression.
    """

    n_per_group: tuple[int, int]
    p: int
    beta: tuple[float, ...]
    task: Task
    feature_mean_coefficients: tuple[float, float] = (1.0, -2.0)
    feature_sd: float = 0.5
    noise_sd: float = 1.0

    def validate(self) -> None:
        if self.feature_sd <= 0:
            raise ValidationError("feature_sd must be > 0")
        if len(self.n_per_group) != 2 or min(self.n_per_group) < 1:
            raise ValidationError("n_per_group must be two counts >= 1")
        if self.p < 1:
            raise ValidationError("p must be >= 1")
        if len(self.beta) != self.p:
            raise ValidationError(f"beta must have length p={self.p}")
        if self.task not in ("classification", "regression_quadratic"):
            raise ValidationError(f"unknown task {self.task!r}")
        if self.task == "regression_quadratic" and self.noise_sd < 0:
            raise ValidationError("noise_sd must be >= 0")


def generate_synthetic(spec: SyntheticSpec, rng: RngStream) -> Dataset:
    """Draw a fully-observed dataset from ``spec``.

    Group 0 rows come first, then group 1.  Draw order is fixed (features,
    then response noise) so a given stream reproduces byte-identical data.
    """
    spec.validate()
    gen = rng.generator()
    n0, n1 = spec.n_per_group
    n = n0 + n1
    A = np.repeat(np.array([0, 1], dtype=np.int64), (n0, n1))
    c0, c1 = spec.feature_mean_coefficients
    X = gen.normal(0.0, spec.feature_sd, size=(n, spec.p)) + (c0 + c1 * A)[:, None]
    score = X @ np.asarray(spec.beta, dtype=float)
    if spec.task == "classification":
        # probability (1 + exp(x'beta))^-1, i.e. sigmoid(-x'beta)
        prob = _sigmoid(-score)
        y = (gen.random(n) < prob).astype(float)
    else:
        y = score**2 + gen.normal(0.0, spec.noise_sd, size=n)
    return dataset_all_observed(X, y, A)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def draw_group(spec: SyntheticSpec, group: int, count: int,
               gen: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``count`` rows of one sensitive group from an already-positioned
    generator (for samplers that draw in adaptive blocks)."""
    c0, c1 = spec.feature_mean_coefficients
    X = gen.normal(c0 + c1 * group, spec.feature_sd, size=(count, spec.p))
    score = X @ np.asarray(spec.beta, dtype=float)
    if spec.task == "classification":
        y = (gen.random(count) < _sigmoid(-score)).astype(float)
    else:
        y = score**2 + gen.normal(0.0, spec.noise_sd, size=count)
    return X, y


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for :func:`load_csv`."""

    sensitive_col: str
    response_col: str
    feature_cols: Sequence[str] = field(default_factory=tuple)


def load_csv(path: str | Path, schema: CsvSchema) -> Dataset:
    """Ingest an RFC-4180-style CSV (header row, '.' decimals, UTF-8).

    Empty fields are recorded as missing in the mask rather than rejected;
    anything else that fails to parse as a number raises :class:`DataError`
    with the offending row.  The sensitive column must code to 0/1 and is not
    maskable.
    """
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row required") from None
        col_index = {name: i for i, name in enumerate(header)}
        wanted = [schema.sensitive_col, schema.response_col, *schema.feature_cols]
        for name in wanted:
            if name not in col_index:
                raise SchemaError(f"{path}: column {name!r} not in header {header}")
        a_i = col_index[schema.sensitive_col]
        y_i = col_index[schema.response_col]
        f_is = [col_index[c] for c in schema.feature_cols]

        feats, ys, As, masks, yobs = [], [], [], [], []
        for rownum, row in enumerate(reader, start=2):  # 1-based, after header
            if len(row) != len(header):
                raise DataError(f"{path}: row {rownum} has {len(row)} fields, header has {len(header)}")
            a_raw = row[a_i].strip()
            a_val = _parse_number(a_raw, path, rownum, schema.sensitive_col)
            if a_val is None:
                raise DataError(f"{path}: row {rownum}: sensitive column may not be empty")
            if a_val not in (0.0, 1.0):
                raise DataError(f"{path}: row {rownum}: non-binary sensitive value {a_raw!r}")
            y_val = _parse_number(row[y_i].strip(), path, rownum, schema.response_col)
            frow, mrow = [], []
            for name, i in zip(schema.feature_cols, f_is):
                v = _parse_number(row[i].strip(), path, rownum, name)
                frow.append(np.nan if v is None else v)
                mrow.append(v is not None)
            feats.append(frow)
            masks.append(mrow)
            ys.append(np.nan if y_val is None else y_val)
            yobs.append(y_val is not None)
            As.append(int(a_val))
    if not feats:
        raise DataError(f"{path}: no data rows")
    return Dataset(np.asarray(feats, dtype=float), np.asarray(ys, dtype=float),
                   np.asarray(As, dtype=np.int64), np.asarray(masks, dtype=bool),
                   np.asarray(yobs, dtype=bool))


def _parse_number(text: str, path, rownum: int, col: str) -> float | None:
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        raise DataError(f"{path}: row {rownum}: column {col!r}: unparseable numeric {text!r}") from None


def split(data: Dataset, fraction: float, rng: RngStream) -> tuple[Dataset, Dataset]:
    """Random disjoint row partition; the first part gets round(fraction*n) rows."""
    if not (0.0 < fraction < 1.0):
        raise ValidationError("fraction must be in (0, 1)")
    if data.n < 2:
        raise ValidationError("need n >= 2 to split")
    k = int(round(fraction * data.n))
    if k < 1 or k > data.n - 1:
        raise ValidationError(f"fraction {fraction} leaves an empty part for n={data.n}")
    perm = rng.generator().permutation(data.n)
    first = np.sort(perm[:k])
    second = np.sort(perm[k:])
    return data.take(first), data.take(second)
