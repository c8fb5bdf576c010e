"""Command-line experiment runner.

Subcommands:
  run      execute a policy x environment x seed grid from a JSON/TOML config
  fit      fit a scaling law (T axis: power law; norm axis: affine) to a summary
  compare  head-to-head comparison of two summaries at one comparator norm
"""
from __future__ import annotations

import argparse
import json
import sys

from .harness import (compare_baseline, fit_scaling, load_config,
                      read_summary_csv, run_grid, total_violations)


def _parse_seed_range(text):
    if ".." in text:
        a, b = text.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(s) for s in text.split(",")]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cabandits",
                                     description="Comparator-adaptive bandit experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment grid")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seeds", help="override seeds, e.g. 0..19 or 3,5,7")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--trace", action="store_true", help="write per-round trace CSVs")

    p_fit = sub.add_parser("fit", help="fit a scaling law to a summary CSV")
    p_fit.add_argument("--summary", required=True)
    p_fit.add_argument("--axis", choices=("T", "norm"), required=True)

    p_cmp = sub.add_parser("compare", help="compare two summary CSVs")
    p_cmp.add_argument("--a", required=True, help="policy summary")
    p_cmp.add_argument("--b", required=True, help="baseline summary")
    p_cmp.add_argument("--norm", type=float, required=True)

    args = parser.parse_args(argv)

    if args.command == "run":
        config = load_config(args.config)
        if args.seeds:
            config["seeds"] = _parse_seed_range(args.seeds)
        out = args.out or config.get("out_dir")
        ledgers, rows = run_grid(config, out_dir=out,
                                 workers=args.workers or config.get("workers", 1),
                                 keep_trace=args.trace)
        print(json.dumps(rows, indent=2, sort_keys=True))
        return 0 if total_violations(ledgers) == 0 else 1

    if args.command == "fit":
        rows = read_summary_csv(args.summary)
        fit = fit_scaling(rows, args.axis)
        print(json.dumps(vars(fit), indent=2, sort_keys=True))
        return 0

    rows_a = read_summary_csv(args.a)
    rows_b = read_summary_csv(args.b)
    report = compare_baseline(rows_a, rows_b, args.norm)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
