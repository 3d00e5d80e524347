"""Command-line entry point: ``sqztomo {simulate,reconstruct,analyze,all}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import FitError
from .config import RunConfig
from .core import CalibrationError
from .io import TraceFormatError
from .pipeline import DataError, cmd_analyze, cmd_reconstruct, cmd_simulate, run_all

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("sqztomo")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output directory (overrides the config)")
    common.add_argument("--bands", help="bands to process: 'all' or e.g. 1,3-5")
    common.add_argument("--nmax", type=int, dest="n_max", help="Fock-space cutoff")
    common.add_argument("--kc", type=float, dest="k_c", help="back-projection cutoff")
    common.add_argument("--workers", type=int, help="concurrent band reconstructions")
    common.add_argument("--deterministic", action="store_true",
                        help="omit timestamps so reruns are byte-identical")
    common.add_argument("--signal", type=Path, help="signal trace (default OUT/signal.sqz)")
    common.add_argument("--vacuum", type=Path, help="vacuum trace (default OUT/vacuum.sqz)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="sqztomo", description="Multimode homodyne tomography of "
                     "simulated OPA squeezed light.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="write signal and vacuum traces")
    sub.add_parser("reconstruct", parents=[common], help="per-band density matrices and "
                   "Wigner functions")
    sub.add_parser("analyze", parents=[common], help="spectrum fit, totals, g1, plots")
    sub.add_parser("all", parents=[common], help="simulate, reconstruct and analyze")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    out = str(args.out) if args.out is not None else None
    return cfg.with_overrides(seed=args.seed, output=out, bands=args.bands, n_max=args.n_max,
                              k_c=args.k_c, workers=args.workers)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
    except FileNotFoundError as exc:
        print(f"sqztomo: config file not found: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"sqztomo: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(cfg.output)
    det = args.deterministic
    try:
        with np.errstate(invalid="raise", divide="raise", over="raise"):
            if args.command == "simulate":
                paths = cmd_simulate(cfg, out)
            elif args.command == "reconstruct":
                paths = cmd_reconstruct(cfg, out, args.signal, args.vacuum, deterministic=det)
            elif args.command == "analyze":
                paths = [cmd_analyze(cfg, out, args.signal, args.vacuum, deterministic=det)]
            else:
                paths = [run_all(cfg, out, deterministic=det)]
    except (DataError, CalibrationError, TraceFormatError, OSError, ValueError) as exc:
        print(f"sqztomo: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitError, FloatingPointError, np.linalg.LinAlgError, ArithmeticError,
            RuntimeError) as exc:
        print(f"sqztomo: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for p in paths:
        log.info("wrote %s", p)
    print(f"{args.command}: wrote {len(paths)} file(s) to {out} (config {cfg.hash()})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
