"""Experiment execution: contexts, per-repeat tasks, result files.

A run resolves the config into one context per sweep point (population,
trained prediction model, Monte Carlo target gap, declared response range),
then executes repeats.  Each repeat draws evaluation data, injects
missingness, builds every requested weight vector, and emits one result row
per weight method.  Repeats are independent and keyed by (sweep index,
repeat index) streams, so serial and parallel execution produce identical
rows.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np

from .. import __version__
from ..bounds import BoundInputs, lower_bound, upper_bound
from ..dataset import Dataset, SyntheticSpec, generate_synthetic, load_csv, split
from ..errors import FairgapError, SchemaError, ValidationError
from ..fairness import apg_true_components, estimate_apg
from ..missingness import MissingnessSpec, complete_cases, inject
from ..predictors import predict_loss, train_forest, train_svm
from ..propensity import fit_forest, fit_logistic, oracle_fit
from ..rng import RngStream, pack_stream
from ..weights import estimated_weights, true_weights, unit_weights
from .config import ExperimentConfig, config_to_dict
from .sampling import draw_with_cc_targets

SCHEMA_VERSION = 1

RESULT_COLUMNS = [
    "schema_version", "experiment", "sweep_axis", "sweep_value", "repeat", "method",
    "status", "fail_reason",
    "delta_hat", "delta_true", "bias", "delta_hat_signed", "delta_true_signed", "mc_se",
    "n0_cc", "n1_cc", "B", "D0", "D1", "sigma2_0", "sigma2_1",
    "upper", "upper_partial", "lower", "lower_regime", "s_value",
    "thm1_moment_ok", "thm2_variance_ok", "vc_dim", "range_lo", "range_hi", "wall_ms",
]

# stream purposes; (sweep slot, repeat slot, purpose) packs into one stream id
_P_DATA, _P_INJECT, _P_TRAIN, _P_MC, _P_SPLIT, _P_RANGE = 1, 2, 3, 4, 5, 6
_SETUP_REPEAT = (1 << 16) - 1  # reserved repeat slot for per-sweep-point setup


def _stream(cfg: ExperimentConfig, sweep_idx: int, repeat: int, purpose: int) -> RngStream:
    return RngStream(cfg.seed, pack_stream(sweep_idx, repeat, purpose))


@dataclass(frozen=True)
class SweepContext:
    sweep_index: int
    sweep_axis: str
    sweep_value: float
    population: SyntheticSpec | None
    missingness: MissingnessSpec
    model: Any                       # trained predictor, or None to train per repeat
    train_on: str                    # "context" | "eval_cc" | "real_cc"
    delta_true: float | None        # None -> computed per repeat
    delta_true_signed: float | None
    mc_se: float | None
    task: str
    value_range: tuple[float, float] | None   # regression loss clipping, None for classification
    observed_cols: tuple[int, ...]
    cc_targets: tuple[int, int] | None        # rejection sampling when set
    d: int | None
    real: Dataset | None = None


def _train_predictor(cfg: ExperimentConfig, data: Dataset, task: str, rng: RngStream):
    if cfg.predictor.kind == "linear_svm":
        return train_svm(data, task, lambda_=cfg.predictor.lambda_,
                         epochs=cfg.predictor.epochs, rng=rng, shuffle=cfg.predictor.shuffle)
    seed = int(rng.generator().integers(1 << 62))
    forest_cfg = replace(cfg.predictor.forest, seed=seed)
    return train_forest(data, forest_cfg, task)


def _declared_range(spec: SyntheticSpec, task: str, rng: RngStream, n_ref: int) -> tuple[float, float] | None:
    """For regression: the 0.1%..99.9% response range of a reference draw."""
    if task == "classification":
        return None
    ref = generate_synthetic(replace(spec, n_per_group=(n_ref, n_ref)), rng)
    lo, hi = np.quantile(ref.response, (0.001, 0.999))
    return float(lo), float(hi)


def _bound_range(value_range, task) -> tuple[float, float]:
    if task == "classification":
        return (0.0, 1.0)
    return value_range


def prepare_contexts(cfg: ExperimentConfig) -> list[SweepContext]:
    cfg.validate()
    if cfg.experiment == "real_data":
        return [_real_data_context(cfg)]
    base = cfg.synthetic
    task = base.task
    obs = tuple(sorted(set(range(base.p)) - set(cfg.missingness.target_features)))
    d = cfg.effective_vc_dim()
    contexts = []
    if cfg.experiment == "upper_coverage" or cfg.experiment == "weight_comparison":
        points = [(0, cfg.experiment, 0.0)]
    else:
        points = [(i, cfg.sweep.axis, v) for i, v in enumerate(cfg.sweep.grid)]
    for i, axis, value in points:
        population = base
        if cfg.experiment == "disparity_sweep":
            c0, c1 = base.feature_mean_coefficients
            population = replace(base, feature_mean_coefficients=(c0, c1 * value))
        value_range = _declared_range(population, task,
                                      _stream(cfg, i, _SETUP_REPEAT, _P_RANGE),
                                      min(cfg.mc_samples, 100_000))
        cc_targets = None
        if cfg.experiment == "lower_assessment":
            t = int(round(value))
            cc_targets = (t, t)
        elif cfg.experiment == "imbalance_sweep":
            n0 = max(1, int(round(cfg.cc_total / (1.0 + value))))
            cc_targets = (n0, max(1, cfg.cc_total - n0))
        if cfg.experiment == "upper_coverage":
            model, delta_true, delta_signed, mc_se, train_on = None, None, None, None, "eval_cc"
        else:
            train_spec = replace(population, n_per_group=(cfg.train_n_per_group, cfg.train_n_per_group))
            train_ds = generate_synthetic(train_spec, _stream(cfg, i, _SETUP_REPEAT, _P_TRAIN))
            model = _train_predictor(cfg, train_ds, task, _stream(cfg, i, _SETUP_REPEAT, _P_TRAIN))
            m0, m1, mc_se = apg_true_components(model, population, cfg.mc_samples,
                                                _stream(cfg, i, _SETUP_REPEAT, _P_MC),
                                                bounds=value_range)
            delta_true, delta_signed = abs(m0 - m1), m0 - m1
            train_on = "context"
        contexts.append(SweepContext(
            sweep_index=i, sweep_axis=axis, sweep_value=value, population=population,
            missingness=cfg.missingness, model=model, train_on=train_on,
            delta_true=delta_true, delta_true_signed=delta_signed, mc_se=mc_se, task=task,
            value_range=value_range, observed_cols=obs, cc_targets=cc_targets, d=d))
    return contexts


def _real_data_context(cfg: ExperimentConfig) -> SweepContext:
    rd = cfg.real_data
    data = load_csv(rd.csv_path, rd.schema)
    if rd.standardize:
        data = _standardize(data)
    task = "classification" if rd.task == "classification" else "regression_quadratic"
    cfg.missingness.validate(p=data.p)
    obs = tuple(sorted(set(range(data.p)) - set(cfg.missingness.target_features)))
    if task == "classification":
        value_range = None
    else:
        y = data.response[data.response_observed]
        lo, hi = np.quantile(y, (0.001, 0.999))
        if hi <= lo:
            lo, hi = float(y.min()), float(y.max() + 1e-9)
        value_range = (float(lo), float(hi))
    return SweepContext(
        sweep_index=0, sweep_axis="real_data", sweep_value=0.0, population=None,
        missingness=cfg.missingness, model=None, train_on="real_cc", delta_true=None,
        delta_true_signed=None, mc_se=None, task=task, value_range=value_range,
        observed_cols=obs, cc_targets=None, d=cfg.vc_dim, real=data)


def _standardize(data: Dataset) -> Dataset:
    X = data.features.copy()
    for j in range(data.p):
        col = X[:, j]
        seen = data.mask[:, j]
        mu = col[seen].mean()
        sd = col[seen].std()
        X[:, j] = (col - mu) / (sd if sd > 0 else 1.0)
    return Dataset(X, data.response, data.sensitive, data.mask, data.response_observed)


def _unit_is_true(miss: MissingnessSpec) -> bool:
    """Propensity constant within each group => the unit weights are the true ones."""
    return all(t.kind in ("intercept", "sensitive") for t in miss.logit_terms)


def run_task(cfg: ExperimentConfig, ctx: SweepContext, repeat: int) -> list[dict]:
    t0 = time.perf_counter()
    try:
        rows = _run_task_inner(cfg, ctx, repeat)
    except FairgapError as e:
        wall = 1000.0 * (time.perf_counter() - t0)
        rows = [_failed_row(cfg, ctx, repeat, m, f"{type(e).__name__}: {e}", wall)
                for m in cfg.weight_methods]
    return rows


def _run_task_inner(cfg: ExperimentConfig, ctx: SweepContext, repeat: int) -> list[dict]:
    t0 = time.perf_counter()
    miss = ctx.missingness
    if ctx.train_on == "real_cc":
        part1, part2 = split(ctx.real, cfg.real_data.split_fraction,
                             _stream(cfg, ctx.sweep_index, repeat, _P_SPLIT))
        injected, oracle = inject(part1, miss, _stream(cfg, ctx.sweep_index, repeat, _P_INJECT))
        cc = complete_cases(injected)
        model = _train_predictor(cfg, cc.data, ctx.task,
                                 _stream(cfg, ctx.sweep_index, repeat, _P_TRAIN))
        delta_true, delta_true_signed, mc_se = _holdout_gap(model, part2, ctx)
    else:
        if ctx.cc_targets is not None:
            injected, oracle = draw_with_cc_targets(
                ctx.population, miss, ctx.cc_targets,
                _stream(cfg, ctx.sweep_index, repeat, _P_DATA))
        else:
            ds = generate_synthetic(ctx.population, _stream(cfg, ctx.sweep_index, repeat, _P_DATA))
            injected, oracle = inject(ds, miss, _stream(cfg, ctx.sweep_index, repeat, _P_INJECT))
        cc = complete_cases(injected)
        if ctx.train_on == "eval_cc":
            model = _train_predictor(cfg, cc.data, ctx.task,
                                     _stream(cfg, ctx.sweep_index, repeat, _P_TRAIN))
            m0, m1, mc_se = apg_true_components(model, ctx.population, cfg.mc_samples,
                                                _stream(cfg, ctx.sweep_index, repeat, _P_MC),
                                                bounds=ctx.value_range)
            delta_true, delta_true_signed = abs(m0 - m1), m0 - m1
        else:
            model, delta_true, mc_se = ctx.model, ctx.delta_true, ctx.mc_se
            delta_true_signed = ctx.delta_true_signed
    losses = predict_loss(model, cc.data.features, cc.data.response, bounds=ctx.value_range)

    obs_cols = _usable_columns(injected, ctx.observed_cols)
    fits = _propensity_fits(cfg, injected, obs_cols)
    unit_true = _unit_is_true(miss)

    rows = []
    for method in cfg.weight_methods:
        if method == "unweighted":
            w = unit_weights(cc)
            exact = unit_true
        elif method == "true":
            w = true_weights(cc, oracle)
            exact = True
        else:
            w = estimated_weights(cc, fits[method], feature_columns=np.asarray(obs_cols, dtype=int))
            exact = False
        gap, r0, r1 = estimate_apg(cc, losses, w)
        signed_hat = r0.value - r1.value
        wall = 1000.0 * (time.perf_counter() - t0)
        rows.append(_result_row(cfg, ctx, repeat, method, gap, signed_hat, delta_true,
                                delta_true_signed, mc_se, cc, w, (r0, r1), exact, wall))
    return rows


def _holdout_gap(model, part2: Dataset, ctx: SweepContext):
    """Target gap from the held-out split: unweighted, natively complete rows only."""
    full = part2.complete_indicator()
    held = part2.take(np.flatnonzero(full))
    for a in (0, 1):
        if not (held.sensitive == a).any():
            raise ValidationError(f"held-out split has no fully-observed rows in group {a}")
    losses = predict_loss(model, held.features, held.response, bounds=ctx.value_range)
    g0 = losses[held.sensitive == 0]
    g1 = losses[held.sensitive == 1]
    signed = float(g0.mean() - g1.mean())
    se = float(np.sqrt(g0.var() / g0.size + g1.var() / g1.size))
    return abs(signed), signed, se


def _usable_columns(injected: Dataset, observed_cols: tuple[int, ...]) -> tuple[int, ...]:
    """Always-observed columns that are furthermore complete in this sample."""
    return tuple(j for j in observed_cols if injected.mask[:, j].all())


def _propensity_fits(cfg: ExperimentConfig, injected: Dataset, obs_cols) -> dict:
    needed = {m for m in cfg.weight_methods if m in ("logistic", "logistic_misspecified", "random_forest")}
    if not needed:
        return {}
    X = injected.features[:, np.asarray(obs_cols, dtype=int)]
    labels = injected.complete_indicator().astype(float)
    A = injected.sensitive
    fits = {}
    if "logistic" in needed:
        fits["logistic"] = fit_logistic(X, labels, "identity", cfg.ps_logistic, sensitive=A)
    if "logistic_misspecified" in needed:
        fits["logistic_misspecified"] = fit_logistic(X, labels, "cubed", cfg.ps_logistic, sensitive=A)
    if "random_forest" in needed:
        fits["random_forest"] = fit_forest(X, labels, cfg.ps_forest, sensitive=A)
    return fits


def _result_row(cfg, ctx, repeat, method, gap, signed_hat, delta_true, delta_true_signed,
                mc_se, cc, w, risks, weights_are_true, wall) -> dict:
    r0, r1 = risks
    brange = _bound_range(ctx.value_range, ctx.task)
    upper_val, upper_partial, moment_ok = None, None, (False, False)
    lower_val, regime, s_val, variance_ok = None, "not_applicable", None, (False, False)
    if ctx.d is not None or weights_are_true:
        inputs = BoundInputs(
            n=(cc.n0, cc.n1), D=w.D, B=max(w.B, 1.0), d=ctx.d if ctx.d is not None else 1,
            delta=cfg.delta,
            task="classification" if ctx.task == "classification" else "regression_quadratic",
            sigma2=(r0.sigma2, r1.sigma2), value_range=brange, tv=(0.0, 0.0))
        if ctx.d is not None:
            try:
                ub = upper_bound(inputs)
                upper_val = ub.value
                moment_ok = ub.moment_ok
                upper_partial = not weights_are_true
            except ValidationError:
                upper_val, upper_partial = None, None
        lb = lower_bound(inputs, gap, true_weights=weights_are_true)
        lower_val, regime, s_val, variance_ok = lb.value, lb.regime, lb.s, lb.variance_ok
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment,
        "sweep_axis": ctx.sweep_axis,
        "sweep_value": ctx.sweep_value,
        "repeat": repeat,
        "method": method,
        "status": "ok",
        "fail_reason": "",
        "delta_hat": gap,
        "delta_true": delta_true,
        "bias": abs(delta_true - gap),
        "delta_hat_signed": signed_hat,
        "delta_true_signed": delta_true_signed,
        "mc_se": mc_se,
        "n0_cc": cc.n0,
        "n1_cc": cc.n1,
        "B": w.B,
        "D0": w.D[0],
        "D1": w.D[1],
        "sigma2_0": r0.sigma2,
        "sigma2_1": r1.sigma2,
        "upper": upper_val,
        "upper_partial": upper_partial,
        "lower": lower_val,
        "lower_regime": regime,
        "s_value": s_val,
        "thm1_moment_ok": all(moment_ok),
        "thm2_variance_ok": all(variance_ok),
        "vc_dim": ctx.d,
        "range_lo": None if ctx.value_range is None else ctx.value_range[0],
        "range_hi": None if ctx.value_range is None else ctx.value_range[1],
        "wall_ms": wall,
    }


def _failed_row(cfg, ctx, repeat, method, reason, wall) -> dict:
    row = {c: None for c in RESULT_COLUMNS}
    row.update({
        "schema_version": SCHEMA_VERSION, "experiment": cfg.experiment,
        "sweep_axis": ctx.sweep_axis, "sweep_value": ctx.sweep_value,
        "repeat": repeat, "method": method, "status": "failed", "fail_reason": reason,
        "wall_ms": wall,
    })
    return row


# -- execution ---------------------------------------------------------------

_WORKER_STATE: dict = {}


def _init_worker(cfg: ExperimentConfig, contexts: list[SweepContext]) -> None:
    _WORKER_STATE["cfg"] = cfg
    _WORKER_STATE["contexts"] = contexts


def _worker_entry(task: tuple[int, int]) -> list[dict]:
    cfg = _WORKER_STATE["cfg"]
    contexts = _WORKER_STATE["contexts"]
    si, rep = task
    return run_task(cfg, contexts[si], rep)


@dataclass(frozen=True)
class RunPaths:
    results_csv: Path
    summary_json: Path
    manifest_json: Path


def run(cfg: ExperimentConfig, workers: int | None = None, output_dir: str | None = None) -> RunPaths:
    started = time.perf_counter()
    workers = cfg.workers if workers is None else workers
    outdir = Path(output_dir if output_dir is not None else cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    contexts = prepare_contexts(cfg)
    tasks = [(si, rep) for si in range(len(contexts)) for rep in range(cfg.repeats)]
    if workers <= 1:
        row_lists = [run_task(cfg, contexts[si], rep) for si, rep in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(cfg, contexts)) as ex:
            row_lists = list(ex.map(_worker_entry, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    rows = [r for rl in row_lists for r in rl]
    method_order = {m: i for i, m in enumerate(cfg.weight_methods)}
    rows.sort(key=lambda r: (r["sweep_value"], r["repeat"], method_order[r["method"]]))

    results_csv = outdir / "results.csv"
    _write_results(results_csv, rows)
    summary = summarize_rows(rows)
    summary_json = outdir / "summary.json"
    summary_json.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "config": config_to_dict(cfg),
        "resolved": {
            "workers": workers,
            "sweep_points": [
                {"index": c.sweep_index, "axis": c.sweep_axis, "value": c.sweep_value,
                 "value_range": list(c.value_range) if c.value_range else None,
                 "cc_targets": list(c.cc_targets) if c.cc_targets else None,
                 "delta_true": c.delta_true, "mc_se": c.mc_se, "vc_dim": c.d,
                 "observed_columns": list(c.observed_cols)}
                for c in contexts],
        },
        "elapsed_s": time.perf_counter() - started,
    }
    manifest_json = outdir / "manifest.json"
    manifest_json.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return RunPaths(results_csv, summary_json, manifest_json)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_results(path: Path, rows: list[dict]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])


def read_results(path: str | Path) -> list[dict]:
    """Parse results.csv back into typed rows; rejects schema drift."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESULT_COLUMNS:
            raise SchemaError(
                f"{path}: unexpected results schema (version {SCHEMA_VERSION} expects "
                f"{len(RESULT_COLUMNS)} columns); found {header and header[:4]}...")
        out = []
        for raw in reader:
            row = dict(zip(RESULT_COLUMNS, raw))
            for key in ("sweep_value", "delta_hat", "delta_true", "bias", "delta_hat_signed",
                        "delta_true_signed", "mc_se", "B", "D0", "D1", "sigma2_0", "sigma2_1",
                        "upper", "lower", "s_value", "range_lo", "range_hi", "wall_ms"):
                row[key] = float(row[key]) if row[key] != "" else None
            for key in ("repeat", "n0_cc", "n1_cc", "vc_dim", "schema_version"):
                row[key] = int(row[key]) if row[key] != "" else None
            for key in ("upper_partial", "thm1_moment_ok", "thm2_variance_ok"):
                row[key] = {"true": True, "false": False, "": None}[row[key]]
            out.append(row)
    return out


def summarize_rows(rows: list[dict]) -> dict:
    """Per (sweep point, method): moments and percentile band of the bias."""
    cells: dict[tuple, dict] = {}
    for r in rows:
        key = (r["sweep_value"], r["method"])
        cell = cells.setdefault(key, {"biases": [], "delta_hats": [], "delta_trues": [],
                                      "uppers": [], "lowers": [], "failures": 0})
        if r["status"] != "ok":
            cell["failures"] += 1
            continue
        cell["biases"].append(float(r["bias"]))
        cell["delta_hats"].append(float(r["delta_hat"]))
        cell["delta_trues"].append(float(r["delta_true"]))
        if r["upper"] is not None:
            cell["uppers"].append(float(r["upper"]))
        if r["lower"] is not None:
            cell["lowers"].append(float(r["lower"]))
    out = []
    for (sweep_value, method), cell in sorted(cells.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        b = np.asarray(cell["biases"], dtype=float)
        entry = {"sweep_value": sweep_value, "method": method,
                 "n_ok": int(b.size), "n_failed": cell["failures"]}
        if b.size:
            entry.update({
                "bias_mean": float(b.mean()),
                "bias_sd": float(b.std()),
                "bias_median": float(np.median(b)),
                "bias_p5": float(np.percentile(b, 5)),
                "bias_p95": float(np.percentile(b, 95)),
                "delta_hat_mean": float(np.mean(cell["delta_hats"])),
                "delta_true_mean": float(np.mean(cell["delta_trues"])),
                "upper_mean": float(np.mean(cell["uppers"])) if cell["uppers"] else None,
                "lower_mean": float(np.mean(cell["lowers"])) if cell["lowers"] else None,
                "n_upper": len(cell["uppers"]),
                "n_lower": len(cell["lowers"]),
            })
        out.append(entry)
    return {"schema_version": SCHEMA_VERSION, "cells": out}


def summarize_file(results_csv: str | Path, output_json: str | Path | None = None) -> dict:
    rows = read_results(results_csv)
    summary = summarize_rows(rows)
    if output_json is not None:
        Path(output_json).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    return summary
