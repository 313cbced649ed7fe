"""Figure rendering for finished runs.

Reads results.csv / summary.json / manifest.json from a run directory and
writes PNG figures next to them: bias against the sweep coordinate with a
5th-95th percentile band per weight method (log-log for the lower-bound
assessment, with the bound overlays), or per-method bias bars for
non-sweep experiments.
"""

from __future__ import annotations

import json
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import SchemaError  # noqa: E402
from .harness.runner import read_results  # noqa: E402

_METHOD_COLORS = {
    "unweighted": "tab:gray",
    "true": "tab:green",
    "logistic": "tab:blue",
    "logistic_misspecified": "tab:red",
    "random_forest": "tab:orange",
}


def _cells_by_method(summary: dict) -> dict[str, list[dict]]:
    by = defaultdict(list)
    for cell in summary["cells"]:
        if cell.get("n_ok"):
            by[cell["method"]].append(cell)
    for cells in by.values():
        cells.sort(key=lambda c: c["sweep_value"])
    return by


def render_run(run_dir: str | Path, output_dir: str | Path | None = None) -> list[Path]:
    run_dir = Path(run_dir)
    results = run_dir / "results.csv"
    summary_path = run_dir / "summary.json"
    manifest_path = run_dir / "manifest.json"
    for p in (results, summary_path, manifest_path):
        if not p.exists():
            raise SchemaError(f"not a run directory: missing {p}")
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    outdir = Path(output_dir) if output_dir is not None else run_dir
    outdir.mkdir(parents=True, exist_ok=True)
    experiment = manifest["config"]["experiment"]
    outputs = []
    if experiment in ("lower_assessment", "imbalance_sweep", "disparity_sweep"):
        outputs.append(_sweep_figure(summary, manifest, outdir, experiment))
    else:
        outputs.append(_bar_figure(summary, outdir, experiment))
    if experiment == "upper_coverage":
        outputs.append(_coverage_figure(results, outdir))
    return outputs


def _sweep_figure(summary: dict, manifest: dict, outdir: Path, experiment: str) -> Path:
    by_method = _cells_by_method(summary)
    axis = manifest["config"].get("sweep", {}).get("axis", "sweep")
    loglog = experiment == "lower_assessment"
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for method, cells in sorted(by_method.items()):
        x = [c["sweep_value"] for c in cells]
        mean = [c["bias_mean"] for c in cells]
        p5 = [c["bias_p5"] for c in cells]
        p95 = [c["bias_p95"] for c in cells]
        color = _METHOD_COLORS.get(method)
        ax.plot(x, mean, marker="o", label=f"{method} bias", color=color)
        ax.fill_between(x, p5, p95, alpha=0.2, color=color)
        lowers = [c.get("lower_mean") for c in cells]
        if any(v is not None for v in lowers):
            ax.plot(x, lowers, linestyle="--", color=color,
                    label=f"{method} lower bound")
        uppers = [c.get("upper_mean") for c in cells]
        if any(v is not None for v in uppers):
            ax.plot(x, uppers, linestyle=":", color=color,
                    label=f"{method} upper bound")
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(axis)
    ax.set_ylabel("|estimation bias|")
    ax.set_title(f"{experiment}: bias vs {axis} (band: 5th-95th pct)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = outdir / f"{experiment}_bias.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _bar_figure(summary: dict, outdir: Path, experiment: str) -> Path:
    by_method = _cells_by_method(summary)
    methods = sorted(by_method)
    means = [by_method[m][0]["bias_mean"] for m in methods]
    sds = [by_method[m][0]["bias_sd"] for m in methods]
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    colors = [_METHOD_COLORS.get(m) for m in methods]
    ax.bar(range(len(methods)), means, yerr=sds, capsize=4, color=colors)
    ax.set_xticks(range(len(methods)))
    ax.set_xticklabels(methods, rotation=20, ha="right")
    ax.set_ylabel("mean |estimation bias| (+- SD)")
    ax.set_title(f"{experiment}: bias by weight method")
    fig.tight_layout()
    path = outdir / f"{experiment}_bias.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _coverage_figure(results_csv: Path, outdir: Path) -> Path:
    rows = [r for r in read_results(results_csv) if r["status"] == "ok"]
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    reps = [r["repeat"] for r in rows]
    ax.plot(reps, [r["delta_true"] for r in rows], "o", label="Monte Carlo target gap")
    ax.plot(reps, [r["delta_hat"] for r in rows], "s", label="complete-case estimate")
    uppers = [(r["repeat"], r["delta_hat"] + r["upper"]) for r in rows if r["upper"] is not None]
    if uppers:
        ax.plot([u[0] for u in uppers], [u[1] for u in uppers], "^", label="interval top")
    ax.set_xlabel("repeat")
    ax.set_ylabel("accuracy parity gap")
    ax.set_title("upper-bound coverage per repeat")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = outdir / "upper_coverage_intervals.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
