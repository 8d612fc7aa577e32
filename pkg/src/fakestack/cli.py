"""Command line entry point: ``fakestack run|sweep|stack|synth``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .corpus import CLASSIFIERS, METHODS, VECTORIZERS, CorpusError, load_config
from .harness import SWEEP_METHODS, StageError, SweepReport, run_experiment, run_stacking_sweep, run_sweep, \
    sweep_configs
from .synth import synthetic_corpus, write_corpus

logger = logging.getLogger("fakestack")


def _csv_list(choices):
    def parse(text):
        items = [t.strip() for t in text.split(",") if t.strip()]
        bad = [t for t in items if t not in choices]
        if bad:
            raise argparse.ArgumentTypeError(f"invalid choice(s) {bad}; choose from {', '.join(choices)}")
        return items
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fakestack", description="Imbalanced fake-news classification experiments.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value experiment config file")
    common.add_argument("--corpus", type=Path, nargs="+", required=True, help="labelled CSV file(s)")
    common.add_argument("--seed", type=int, help="master seed (default 42)")
    common.add_argument("--out", type=Path, help="directory for report.json / report.csv / timings")
    common.add_argument("--format", choices=("table", "csv", "json"), default="table",
                        help="what to print on standard output")

    run = sub.add_parser("run", parents=[common], help="one experiment")
    run.add_argument("--method", choices=METHODS)
    run.add_argument("--vectorizer", choices=VECTORIZERS)
    run.add_argument("--classifier", choices=CLASSIFIERS)
    run.add_argument("--oversample-test", action="store_true", default=None,
                     help="also oversample the test split (inflates metrics)")

    sweep = sub.add_parser("sweep", parents=[common], help="methods x vectorizers x classifiers")
    sweep.add_argument("--method", type=_csv_list(METHODS), default=list(SWEEP_METHODS),
                       help="comma-separated methods (default: all but stacking)")
    sweep.add_argument("--vectorizer", type=_csv_list(VECTORIZERS), default=list(VECTORIZERS))
    sweep.add_argument("--classifier", type=_csv_list(CLASSIFIERS), default=list(CLASSIFIERS))
    sweep.add_argument("--oversample-test", choices=("both", "yes", "no"), default="both",
                       help="test-split protocol for oversampling methods")

    stack = sub.add_parser("stack", parents=[common], help="each classifier as the stacking meta model")
    stack.add_argument("--classifier", type=_csv_list(CLASSIFIERS), default=list(CLASSIFIERS),
                       help="meta models to try")

    synth = sub.add_parser("synth", help="write a seeded synthetic corpus")
    synth.add_argument("--out", type=Path, required=True, help="output CSV path")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--n-majority", type=int, default=5000)
    synth.add_argument("--n-minority", type=int, default=150)
    return parser


def _emit(report: SweepReport, args) -> None:
    if args.out:
        report.write(args.out)
    text = {"table": report.to_table, "csv": report.to_csv, "json": report.to_json}[args.format]()
    sys.stdout.write(text)


def _config(args, **overrides):
    return load_config(args.config, seed=args.seed, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "synth":
            dataset = synthetic_corpus(args.n_majority, args.n_minority, seed=args.seed)
            args.out.parent.mkdir(parents=True, exist_ok=True)
            write_corpus(dataset, args.out)
            print(f"wrote {len(dataset)} articles {dataset.class_counts} to {args.out}")
            return 0

        if args.command == "run":
            cfg = _config(args, method=args.method, vectorizer=args.vectorizer, classifier=args.classifier,
                          oversample_test=args.oversample_test)
            result = run_experiment(cfg, args.corpus)
            _emit(SweepReport([result]), args)
            return 0

        if args.command == "sweep":
            base = _config(args, oversample_test={"yes": True, "no": False}.get(args.oversample_test))
            configs = sweep_configs(base, args.method, args.vectorizer, args.classifier,
                                    both_test_protocols=args.oversample_test == "both")
            report = run_sweep(configs, args.corpus, base)
        else:
            report = run_stacking_sweep(args.corpus, _config(args), meta_kinds=args.classifier)
        _emit(report, args)
        failed = [r for r in report.runs if r.status == "failed"]
        for r in failed:
            print(f"error: {r.error}", file=sys.stderr)
        return 1 if failed else 0
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CorpusError, ValueError, OSError) as exc:
        print(f"error: stage 'config' failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
