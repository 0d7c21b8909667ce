"""Command-line entry point: ``qbattery {simulate,sweep,parametric,reduced}``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, parse_config
from .dynamics import PropagationError
from .model import TruncationError
from .observables import ObservableError
from .reduced import ReducedModelError
from .runner import NumericalFailure, run

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    # usage mistakes are configuration errors; 2 is reserved for numerics
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qbattery", description=__doc__)
    sub = parser.add_subparsers(dest="mode", required=True)
    helps = {
        "simulate": "single parameter point, observables time series",
        "sweep": "vary one axis, for each zeta value",
        "parametric": "concurrence against energy or fluctuation over a window",
        "reduced": "closed 16-component model and its comparison with the full model",
    }
    for mode, text in helps.items():
        p = sub.add_parser(mode, help=text)
        p.add_argument("--config", help="YAML file with run keys and a 'params' mapping")
        p.add_argument("--preset", help="scenario preset (fig_a..fig_d)")
        p.add_argument(
            "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
            help="override a config key, e.g. --set params.alpha=3 (repeatable)",
        )
        p.add_argument("--out", dest="output_dir", help="output directory")
        p.add_argument("--plots", action="store_true", default=None, help="also write SVG plots")
        p.add_argument("--workers", type=int, help="parallel processes for sweeps")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(
            args.config, args.overrides,
            mode=args.mode, preset=args.preset, output_dir=args.output_dir,
            emit_plots=args.plots, workers=args.workers,
        )
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        meta = run(cfg)
    except (ConfigError, TruncationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, PropagationError, ObservableError, ReducedModelError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    n_files = sum(len(pt["files"]) for pt in meta["points"])
    print(f"wrote {n_files} file(s) and metadata.json to {cfg.output_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
