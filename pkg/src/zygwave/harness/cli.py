"""Command line entry point: ``zygwave run`` and ``zygwave list``."""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS, ConfigError, load_config
from .runner import EXIT_CONFIG, run
from .suites import DESCRIPTIONS


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("need at least one thread")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="zygwave", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment described by a TOML config")
    r.add_argument("--config", required=True, help="path to the TOML config")
    r.add_argument("--out", help="output directory (overrides the config)")
    r.add_argument("--seed", type=_u64, help="64-bit seed (overrides the config)")
    r.add_argument("--threads", type=_positive, default=1, help="worker threads for independent runs")
    r.add_argument("--quiet", action="store_true", help="do not echo the report")
    sub.add_parser("list", help="list the available experiments")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, matching the config-error code
        return int(exc.code or 0)
    if args.command == "list":
        for name in EXPERIMENTS:
            print(f"{name:<18} {DESCRIPTIONS[name]}")
        return 0
    try:
        cfg = load_config(args.config, seed=args.seed, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, _, report = run(cfg, args.threads)
    if not args.quiet:
        sys.stdout.write(report)
    return code


if __name__ == "__main__":
    sys.exit(main())
