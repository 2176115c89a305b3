"""Command line entry point: ``opcalc <suite> [--config FILE] [--seed S] [--out DIR] [--golden DIR]``.

Exit status: 0 when every check passes (negative controls excluded),
1 when a check fails, 2 on usage or configuration errors, 3 on a golden
file mismatch.
"""
import argparse
import json
import sys
from pathlib import Path

from .runner import (THREAD_ENV, ConfigError, ExperimentConfig, compare_golden, emit_plots, run,
                     update_golden, write_report)

TG_COMMANDS = {"build-corpus": "tg-build-corpus", "seminorms": "tg-seminorms", "sobolev": "tg-sobolev",
               "theorem-a": "tg-theorem-a"}


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--seed", type=int, help="64-bit seed (overrides the config)")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--golden", help="directory of golden CSV files to compare against")
    p.add_argument("--update-golden", action="store_true", help="write the produced CSVs to --golden")
    p.add_argument("--no-plots", action="store_true", help="skip SVG output")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(
        prog="opcalc", description="Differential-operator calculus checks on matrices, the Heisenberg "
        f"group and the tangent groupoid of the circle.  {THREAD_ENV} caps the worker count.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fc-matrix", parents=[common], help="smooth and holomorphic calculus vs oracles")
    sub.add_parser("leibniz", parents=[common], help="certificate closure and quantitative bounds")
    sub.add_parser("heisenberg", parents=[common], help="z-multiplication rule under refinement")
    tg = sub.add_parser("tg", help="tangent groupoid of the circle")
    tgs = tg.add_subparsers(dest="tg_command", required=True)
    tgs.add_parser("build-corpus", parents=[common], help="store the corpus; algebra and Leibniz laws")
    tgs.add_parser("seminorms", parents=[common], help="Schwartz verdicts on corpus and controls")
    tgs.add_parser("sobolev", parents=[common], help="sup norm vs C*-norm comparison")
    tgs.add_parser("theorem-a", parents=[common], help="smooth calculus of Schwartz kernels")
    sub.add_parser("all", parents=[common], help="every suite")
    return parser


def load_config(args):
    d = {}
    if args.config:
        try:
            d = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config: {e}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
    cfg = ExperimentConfig.from_dict(d)
    if args.command == "tg":
        cfg.module = TG_COMMANDS[args.tg_command]
    else:
        cfg.module = args.command
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.out = args.out
    return cfg.validate()


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        if args.update_golden and not args.golden:
            raise ConfigError("--update-golden needs --golden")
        report = run(cfg)
    except ConfigError as e:
        parser.print_usage(sys.stderr)
        print(f"opcalc: error: {e}", file=sys.stderr)
        return 2
    paths = write_report(report, cfg.out)
    if not args.no_plots:
        emit_plots(report, Path(cfg.out) / "plots")
    for suite, r in report.records():
        status = "PASS" if r.passed else ("FAIL (expected)" if r.expected_fail else "FAIL")
        print(f"{suite:16s} {r.name:40s} {r.value:<12.4g} {r.relation} {r.threshold!s:<12} {status}")
    code = 0 if report.passed else 1
    if args.golden:
        if args.update_golden:
            update_golden(paths, args.golden)
            print(f"golden files written to {args.golden}")
        else:
            problems = compare_golden(paths, args.golden)
            for p in problems:
                print(f"golden mismatch: {p}")
            if problems:
                code = 3
    print(f"config {cfg.hash()}: {'all checks passed' if report.passed else 'checks failed'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
