"""Command-line entry point.

Usage::

    phantomnet <kind> --config <path> [--seed N] [--out DIR]
               [--allow-relaxation p=N]

Exit codes: 0 success, 2 config error, 3 membrane refusal, 4 numeric
failure.
"""

from __future__ import annotations

import argparse
import sys

from . import runner
from .errors import ConfigError, IntegrityError, MembraneError, NumericError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MEMBRANE = 3
EXIT_NUMERIC = 4


def _parse_relaxation(raw: str) -> int:
    if not raw.startswith("p="):
        raise argparse.ArgumentTypeError(
            "--allow-relaxation takes the form p=<n>")
    try:
        value = int(raw[2:])
    except ValueError:
        raise argparse.ArgumentTypeError(
            "--allow-relaxation takes the form p=<n>")
    if value < 1:
        raise argparse.ArgumentTypeError("relaxation p must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phantomnet",
        description="Run strict incremental-learning experiments from "
                    "declarative JSON configs.")
    parser.add_argument("kind", choices=runner.RUN_KINDS,
                        help="experiment kind; must match the config's kind")
    parser.add_argument("--config", required=True, help="path to the JSON "
                        "run config")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config's seed")
    parser.add_argument("--out", default=None,
                        help="override the config's output directory")
    parser.add_argument("--allow-relaxation", type=_parse_relaxation,
                        default=None, metavar="p=N",
                        help="explicitly permit the exemplar baseline to "
                             "move N real samples per class across the "
                             "membrane")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = runner.load_config(args.config)
        if cfg.get("kind") != args.kind:
            raise ConfigError(
                f"config kind {cfg.get('kind')!r} does not match the "
                f"requested kind {args.kind!r}")
        runner.execute(cfg, seed_override=args.seed, out_override=args.out,
                       allow_relaxation=args.allow_relaxation)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MembraneError as exc:
        print(f"membrane refusal: {exc}", file=sys.stderr)
        return EXIT_MEMBRANE
    except (NumericError,) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except IntegrityError as exc:
        print(f"bundle integrity failure: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
