"""Command line: ``qneat run``, ``qneat trace``, ``qneat summarize``.

Exit codes: 0 ok, 1 configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .runner import ConfigError, TraceError, format_summary, load_config, replay_trace, run_experiment, summarize, with_seed

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("qneat")


def _run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = with_seed(config, args.seed)
    outcome = run_experiment(config, args.out)
    log.info("wrote %s", outcome.out_dir)
    for key, value in sorted(outcome.result.items()):
        print(f"{key}: {value}")
    return EXIT_OK


def _trace(args) -> int:
    print("\n\n".join(replay_trace(args.dir)))
    return EXIT_OK


def _summarize(args) -> int:
    rows = summarize(args.files, threshold=args.threshold)
    sys.stdout.write(format_summary(rows, args.format))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qneat", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output directory (relative paths honour $QNEAT_OUTPUT_ROOT)")
    run.set_defaults(func=_run)

    trace = sub.add_parser("trace", help="render the best lineage of a finished run")
    trace.add_argument("dir")
    trace.set_defaults(func=_trace)

    summ = sub.add_parser("summarize", help="compare history files")
    summ.add_argument("files", nargs="+")
    summ.add_argument("--threshold", type=float, help="report the first generation whose top-5 mean reaches this")
    summ.add_argument("--format", choices=("text", "csv", "json"), default="text")
    summ.set_defaults(func=_summarize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
