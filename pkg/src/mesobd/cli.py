"""Command-line entry point.

Subcommands ``simulate``, ``kinetic``, ``sweep`` and ``validate`` execute a
JSON experiment config whose ``mode`` field must match the subcommand;
``selftest`` runs the built-in exactness checks.  Exit codes: 0 success,
2 failed validation, 64 usage error, 65 malformed config, 1 runtime/I-O
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from . import selftest
from .harness import ConfigError, load_config, run_single, run_sweep_and_write

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 2
EXIT_USAGE = 64
EXIT_CONFIG = 65


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep argparse from calling sys.exit(2)
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mesobd", description=__doc__, add_help=True)
    sub = parser.add_subparsers(dest="command")
    for name, help_ in (
        ("simulate", "run stochastic replicas and write trajectories/densities"),
        ("kinetic", "integrate the model's kinetic system and write the series"),
        ("sweep", "scaling sweep: simulator vs kinetic solution over n levels"),
        ("validate", "check the model's parameter inequalities"),
        ("selftest", "run built-in exactness checks"),
    ):
        p = sub.add_parser(name, help=help_)
        if name != "selftest":
            p.add_argument("--config", required=True, help="path to a JSON config")
            p.add_argument("--seed", type=int, help="override the config seed")
            p.add_argument("--out", help="override the config output directory")
            p.add_argument("--format", choices=("csv", "json"),
                           help="override the config output format")
        p.add_argument("--quiet", action="store_true",
                       help="only warnings on the diagnostic stream")
    return parser


def cli_main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.command == "selftest":
        return EXIT_OK if selftest.run(verbose=not args.quiet) else 1

    try:
        cfg = load_config(args.config)
        if cfg.mode != args.command:
            raise ConfigError(
                f"mode: config says {cfg.mode!r} but the subcommand is "
                f"{args.command!r}"
            )
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["output_dir"] = args.out
        if args.format is not None:
            overrides["output_format"] = args.format
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "sweep":
            run_sweep_and_write(cfg)
            return EXIT_OK
        _, code = run_single(cfg)
        return code
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
