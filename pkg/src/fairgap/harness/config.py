"""Experiment config: JSON schema, parsing, validation.

One JSON document drives a whole experiment run.  ``version`` guards the
schema; unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..dataset import CsvSchema, SyntheticSpec
from ..errors import SchemaError, ValidationError
from ..missingness import LogitTerm, MissingnessSpec
from ..propensity import LogisticConfig
from ..trees import ForestConfig

CONFIG_VERSION = 1

EXPERIMENTS = ("upper_coverage", "lower_assessment", "weight_comparison",
               "imbalance_sweep", "disparity_sweep", "real_data")
WEIGHT_METHODS = ("unweighted", "true", "logistic", "logistic_misspecified", "random_forest")
SWEEP_AXES = ("n0", "ratio", "disparity")


@dataclass(frozen=True)
class PredictorConfig:
    kind: str  # "linear_svm" | "random_forest"
    lambda_: float = 1e-4
    epochs: int = 20
    shuffle: bool = False
    forest: ForestConfig = ForestConfig()


@dataclass(frozen=True)
class SweepConfig:
    axis: str
    grid: tuple[float, ...]


@dataclass(frozen=True)
class RealDataConfig:
    csv_path: str
    schema: CsvSchema
    task: str
    split_fraction: float = 0.5
    standardize: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    repeats: int
    missingness: MissingnessSpec
    weight_methods: tuple[str, ...]
    predictor: PredictorConfig
    output_dir: str
    synthetic: SyntheticSpec | None = None
    real_data: RealDataConfig | None = None
    sweep: SweepConfig | None = None
    cc_total: int | None = None          # imbalance sweep: total complete-case budget
    train_n_per_group: int = 1000
    mc_samples: int = 100_000
    delta: float = 0.05
    vc_dim: int | None = None
    workers: int = 1
    ps_logistic: LogisticConfig = LogisticConfig()
    ps_forest: ForestConfig = ForestConfig()

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.repeats < 1:
            raise ValidationError("repeats must be >= 1")
        if self.repeats >= (1 << 16) - 1:
            raise ValidationError("repeats must fit in 16 bits")
        if not self.weight_methods:
            raise ValidationError("need at least one weight method")
        for m in self.weight_methods:
            if m not in WEIGHT_METHODS:
                raise ValidationError(f"unknown weight method {m!r}")
        if not (0 < self.delta < 1):
            raise ValidationError("delta must be in (0, 1)")
        if self.mc_samples < 1000:
            raise ValidationError("mc_samples must be >= 1000")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        if self.predictor.kind not in ("linear_svm", "random_forest"):
            raise ValidationError(f"unknown predictor {self.predictor.kind!r}")
        if self.experiment == "real_data":
            if self.real_data is None:
                raise ValidationError("real_data experiment needs the real_data block")
            if not (0 < self.real_data.split_fraction < 1):
                raise ValidationError("split_fraction must be in (0, 1)")
            if self.real_data.task not in ("classification", "regression_quadratic", "regression"):
                raise ValidationError("real_data.task must be classification or regression")
        else:
            if self.synthetic is None:
                raise ValidationError(f"{self.experiment} needs the synthetic block")
            self.synthetic.validate()
        sweep_needed = {"lower_assessment": "n0", "imbalance_sweep": "ratio",
                        "disparity_sweep": "disparity"}
        if self.experiment in sweep_needed:
            want = sweep_needed[self.experiment]
            if self.sweep is None or self.sweep.axis != want:
                raise ValidationError(f"{self.experiment} needs sweep axis {want!r}")
            if not self.sweep.grid:
                raise ValidationError("sweep grid must be nonempty")
            if len(self.sweep.grid) >= (1 << 16) - 1:
                raise ValidationError("sweep grid must fit in 16 bits")
            if any(g <= 0 for g in self.sweep.grid):
                raise ValidationError("sweep grid values must be positive")
        elif self.sweep is not None:
            raise ValidationError(f"{self.experiment} takes no sweep block")
        if self.experiment == "imbalance_sweep":
            if self.cc_total is None or self.cc_total < 4:
                raise ValidationError("imbalance_sweep needs cc_total >= 4")
        self.missingness.validate(p=self.synthetic.p if self.synthetic else None)
        if self.train_n_per_group < 1:
            raise ValidationError("train_n_per_group must be >= 1")

    def effective_vc_dim(self) -> int | None:
        """Caller-declared dimension; defaults to p+1 for the linear model."""
        if self.vc_dim is not None:
            return self.vc_dim
        if self.predictor.kind == "linear_svm" and self.synthetic is not None:
            return self.synthetic.p + 1
        return None


def _take(d: dict, key: str, default=None, required: bool = False):
    if required and key not in d:
        raise SchemaError(f"config missing required key {key!r}")
    return d.pop(key, default)


def _no_leftovers(d: dict, where: str) -> None:
    if d:
        raise SchemaError(f"unknown keys in {where}: {sorted(d)}")


def parse_logit_terms(items: list[dict]) -> tuple[LogitTerm, ...]:
    terms = []
    for it in items:
        it = dict(it)
        kind = _take(it, "source", required=True)
        coef = float(_take(it, "coef", required=True))
        index = _take(it, "index")
        _no_leftovers(it, "logit term")
        terms.append(LogitTerm(kind=kind, coef=coef, index=None if index is None else int(index)))
    return tuple(terms)


def parse_missingness(d: dict) -> MissingnessSpec:
    d = dict(d)
    mech = _take(d, "mechanism", required=True)
    terms = parse_logit_terms(_take(d, "logit_terms", required=True))
    targets = dict(_take(d, "targets", required=True))
    feats = frozenset(int(j) for j in _take(targets, "features", default=[]))
    resp = bool(_take(targets, "response", default=False))
    _no_leftovers(targets, "missingness.targets")
    _no_leftovers(d, "missingness")
    return MissingnessSpec(mechanism=mech, logit_terms=terms,
                           target_features=feats, target_response=resp)


def parse_synthetic(d: dict) -> SyntheticSpec:
    d = dict(d)
    spec = SyntheticSpec(
        n_per_group=tuple(int(x) for x in _take(d, "n_per_group", required=True)),
        p=int(_take(d, "p", required=True)),
        beta=tuple(float(b) for b in _take(d, "beta", required=True)),
        task=_take(d, "task", required=True),
        feature_mean_coefficients=tuple(float(x) for x in _take(d, "feature_mean", default=[1.0, -2.0])),
        feature_sd=float(_take(d, "feature_sd", default=0.5)),
        noise_sd=float(_take(d, "noise_sd", default=1.0)),
    )
    _no_leftovers(d, "synthetic")
    return spec


def parse_predictor(d: dict | None) -> PredictorConfig:
    if d is None:
        return PredictorConfig(kind="linear_svm")
    d = dict(d)
    kind = _take(d, "kind", required=True)
    lam = float(_take(d, "lambda", default=1e-4))
    epochs = int(_take(d, "epochs", default=20))
    shuffle = bool(_take(d, "shuffle", default=False))
    forest = parse_forest(_take(d, "forest", default=None))
    _no_leftovers(d, "predictor")
    return PredictorConfig(kind=kind, lambda_=lam, epochs=epochs, shuffle=shuffle, forest=forest)


def parse_forest(d: dict | None) -> ForestConfig:
    if d is None:
        return ForestConfig()
    d = dict(d)
    cfg = ForestConfig(
        n_trees=int(_take(d, "n_trees", default=100)),
        max_depth=int(_take(d, "max_depth", default=8)),
        min_leaf=int(_take(d, "min_leaf", default=5)),
        features_per_split=(lambda v: None if v is None else int(v))(_take(d, "features_per_split", default=None)),
        bootstrap=bool(_take(d, "bootstrap", default=True)),
        seed=int(_take(d, "seed", default=0)),
    )
    _no_leftovers(d, "forest config")
    return cfg


def parse_logistic(d: dict | None) -> LogisticConfig:
    if d is None:
        return LogisticConfig()
    d = dict(d)
    cfg = LogisticConfig(
        max_iterations=int(_take(d, "max_iterations", default=100)),
        tolerance=float(_take(d, "tolerance", default=1e-8)),
        ridge=float(_take(d, "ridge", default=1e-8)),
    )
    _no_leftovers(d, "logistic config")
    return cfg


def parse_real_data(d: dict | None) -> RealDataConfig | None:
    if d is None:
        return None
    d = dict(d)
    schema_d = dict(_take(d, "schema", required=True))
    schema = CsvSchema(
        sensitive_col=_take(schema_d, "sensitive_col", required=True),
        response_col=_take(schema_d, "response_col", required=True),
        feature_cols=tuple(_take(schema_d, "feature_cols", required=True)),
    )
    _no_leftovers(schema_d, "real_data.schema")
    out = RealDataConfig(
        csv_path=_take(d, "csv_path", required=True),
        schema=schema,
        task=_take(d, "task", required=True),
        split_fraction=float(_take(d, "split_fraction", default=0.5)),
        standardize=bool(_take(d, "standardize", default=False)),
    )
    _no_leftovers(d, "real_data")
    return out


def config_from_dict(doc: dict) -> ExperimentConfig:
    doc = dict(doc)
    version = _take(doc, "version", required=True)
    if version != CONFIG_VERSION:
        raise SchemaError(f"config version {version} not supported (expected {CONFIG_VERSION})")
    sweep_d = _take(doc, "sweep", default=None)
    sweep = None
    if sweep_d is not None:
        sweep_d = dict(sweep_d)
        sweep = SweepConfig(axis=_take(sweep_d, "axis", required=True),
                            grid=tuple(float(g) for g in _take(sweep_d, "grid", required=True)))
        _no_leftovers(sweep_d, "sweep")
        if sweep.axis not in SWEEP_AXES:
            raise SchemaError(f"unknown sweep axis {sweep.axis!r}")
    synth_d = _take(doc, "synthetic", default=None)
    cfg = ExperimentConfig(
        experiment=_take(doc, "experiment", required=True),
        seed=int(_take(doc, "seed", required=True)),
        repeats=int(_take(doc, "repeats", default=100)),
        missingness=parse_missingness(dict(_take(doc, "missingness", required=True))),
        weight_methods=tuple(_take(doc, "weight_methods", default=["true"])),
        predictor=parse_predictor(_take(doc, "predictor", default=None)),
        output_dir=_take(doc, "output_dir", default="fairgap-out"),
        synthetic=None if synth_d is None else parse_synthetic(dict(synth_d)),
        real_data=parse_real_data(_take(doc, "real_data", default=None)),
        sweep=sweep,
        cc_total=(lambda v: None if v is None else int(v))(_take(doc, "cc_total", default=None)),
        train_n_per_group=int(_take(doc, "train_n_per_group", default=1000)),
        mc_samples=int(_take(doc, "mc_samples", default=100_000)),
        delta=float(_take(doc, "delta", default=0.05)),
        vc_dim=(lambda v: None if v is None else int(v))(_take(doc, "vc_dim", default=None)),
        workers=int(_take(doc, "workers", default=1)),
        ps_logistic=parse_logistic(_take(doc, "ps_logistic", default=None)),
        ps_forest=parse_forest(_take(doc, "ps_forest", default=None)),
    )
    _no_leftovers(doc, "config")
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"no such config file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: config must be a JSON object")
    return config_from_dict(doc)


def config_to_dict(cfg: ExperimentConfig) -> dict[str, Any]:
    """Round-trippable dump, written into the run manifest."""
    out: dict[str, Any] = {
        "version": CONFIG_VERSION,
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "repeats": cfg.repeats,
        "weight_methods": list(cfg.weight_methods),
        "predictor": {"kind": cfg.predictor.kind, "lambda": cfg.predictor.lambda_,
                      "epochs": cfg.predictor.epochs, "shuffle": cfg.predictor.shuffle,
                      "forest": _forest_dict(cfg.predictor.forest)},
        "missingness": {
            "mechanism": cfg.missingness.mechanism,
            "logit_terms": [
                {"source": t.kind, "coef": t.coef, **({"index": t.index} if t.index is not None else {})}
                for t in cfg.missingness.logit_terms],
            "targets": {"features": sorted(cfg.missingness.target_features),
                        "response": cfg.missingness.target_response},
        },
        "train_n_per_group": cfg.train_n_per_group,
        "mc_samples": cfg.mc_samples,
        "delta": cfg.delta,
        "vc_dim": cfg.vc_dim,
        "workers": cfg.workers,
        "output_dir": cfg.output_dir,
        "ps_logistic": {"max_iterations": cfg.ps_logistic.max_iterations,
                        "tolerance": cfg.ps_logistic.tolerance, "ridge": cfg.ps_logistic.ridge},
        "ps_forest": _forest_dict(cfg.ps_forest),
    }
    if cfg.synthetic is not None:
        s = cfg.synthetic
        out["synthetic"] = {"n_per_group": list(s.n_per_group), "p": s.p,
                            "beta": list(s.beta), "task": s.task,
                            "feature_mean": list(s.feature_mean_coefficients),
                            "feature_sd": s.feature_sd, "noise_sd": s.noise_sd}
    if cfg.sweep is not None:
        out["sweep"] = {"axis": cfg.sweep.axis, "grid": list(cfg.sweep.grid)}
    if cfg.cc_total is not None:
        out["cc_total"] = cfg.cc_total
    if cfg.real_data is not None:
        rd = cfg.real_data
        out["real_data"] = {"csv_path": rd.csv_path, "task": rd.task,
                            "split_fraction": rd.split_fraction, "standardize": rd.standardize,
                            "schema": {"sensitive_col": rd.schema.sensitive_col,
                                       "response_col": rd.schema.response_col,
                                       "feature_cols": list(rd.schema.feature_cols)}}
    return out


def _forest_dict(f: ForestConfig) -> dict:
    return {"n_trees": f.n_trees, "max_depth": f.max_depth, "min_leaf": f.min_leaf,
            "features_per_split": f.features_per_split, "bootstrap": f.bootstrap, "seed": f.seed}
