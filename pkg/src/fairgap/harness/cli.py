"""Command-line interface.

    fairgap run <config.json> [--workers N] [--seed S] [--output DIR]
    fairgap summarize <results.csv> [--output summary.json]
    fairgap bounds <inputs.json> [--output report.json]
    fairgap validate <config.json>
    fairgap report <run_dir> [--output DIR]

Exit codes: 0 success, 2 config/schema error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from ..bounds import BoundInputs, evaluate_bounds
from ..errors import DataError, FairgapError, SchemaError, ValidationError
from .config import load_config
from .runner import run, summarize_file

CONFIG_ERROR, RUNTIME_ERROR = 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairgap",
                                     description="Fairness estimation experiments on incomplete data")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--workers", type=int, default=None, help="parallel repeat workers")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--output", type=Path, default=None, help="override the output directory")

    p_sum = sub.add_parser("summarize", help="summarize a results.csv")
    p_sum.add_argument("results", type=Path)
    p_sum.add_argument("--output", type=Path, default=None)

    p_bounds = sub.add_parser("bounds", help="evaluate the error bounds for explicit inputs")
    p_bounds.add_argument("inputs", type=Path)
    p_bounds.add_argument("--output", type=Path, default=None)

    p_val = sub.add_parser("validate", help="check a config file")
    p_val.add_argument("config", type=Path)

    p_rep = sub.add_parser("report", help="render figures from a finished run directory")
    p_rep.add_argument("run_dir", type=Path)
    p_rep.add_argument("--output", type=Path, default=None)
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    paths = run(cfg, workers=args.workers,
                output_dir=None if args.output is None else str(args.output))
    print(paths.results_csv)
    print(paths.summary_json)
    print(paths.manifest_json)
    return 0


def _cmd_summarize(args) -> int:
    summary = summarize_file(args.results, output_json=args.output)
    if args.output is None:
        json.dump(summary, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def _cmd_bounds(args) -> int:
    try:
        doc = json.loads(Path(args.inputs).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise SchemaError(f"{args.inputs}: {e}") from None
    try:
        inputs = BoundInputs(
            n=tuple(int(x) for x in doc["n"]),
            D=tuple(float(x) for x in doc["D"]),
            B=float(doc["B"]),
            d=int(doc["d"]),
            delta=float(doc["delta"]),
            task=doc["task"],
            sigma2=tuple(float(x) for x in doc.get("sigma2", (0.0, 0.0))),
            value_range=tuple(float(x) for x in doc.get("value_range", (0.0, 1.0))),
            tv=tuple(float(x) for x in doc.get("tv", (0.0, 0.0))),
        )
        delta_hat = float(doc.get("delta_hat", 0.0))
        attests_true = bool(doc.get("true_weights", False))
    except (KeyError, TypeError) as e:
        raise SchemaError(f"{args.inputs}: missing or malformed field: {e}") from None
    report = evaluate_bounds(inputs, delta_hat, attests_true)
    text = json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n"
    if args.output is not None:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_validate(args) -> int:
    load_config(args.config)
    print(f"{args.config}: ok")
    return 0


def _cmd_report(args) -> int:
    from ..report import render_run
    outputs = render_run(args.run_dir, output_dir=args.output)
    for path in outputs:
        print(path)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "summarize": _cmd_summarize, "bounds": _cmd_bounds,
                "validate": _cmd_validate, "report": _cmd_report}
    try:
        return handlers[args.command](args)
    except (SchemaError, ValidationError, DataError) as e:
        print(f"error: {e}", file=sys.stderr)
        return CONFIG_ERROR
    except FairgapError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return RUNTIME_ERROR
    except OSError as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
