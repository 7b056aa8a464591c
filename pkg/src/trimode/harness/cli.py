"""Command-line entry point: ``trimode {evolve,sweep,dfs-scan,validate}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import NumericalError, ParameterError, UnphysicalStateError
from .config import ConfigError, SweepSpec, load_config
from .runner import default_workers, run_dfs_scan, run_evolve, run_sweep, run_validate

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VALIDATION = 3


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trimode", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, needs_config: bool = True) -> None:
        if needs_config:
            p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--workers", type=_positive, default=default_workers())
        p.add_argument("--seed", type=_u64, default=0, help="seed for randomized validation corpora")

    common(sub.add_parser("evolve", help="time series and averages for one parameter set"))
    common(sub.add_parser("sweep", help="long-time averages over a 2-D parameter grid"))
    common(sub.add_parser("dfs-scan", help="averaged fidelity susceptibility along omega_b"))
    common(sub.add_parser("validate", help="run the invariant suite"), needs_config=False)
    return parser


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "validate":
        passed, results = run_validate(args.out, seed=args.seed, workers=args.workers)
        for r in results:
            status = "PASS" if r.passed else ("FAIL" if r.enforced else "INFO")
            print(f"{status} {r.name}: {r.value:.3e} (threshold {r.threshold:g})")
        return EXIT_OK if passed else EXIT_VALIDATION

    cfg = load_config(str(args.config))
    if args.command == "evolve":
        if isinstance(cfg, SweepSpec):
            raise ConfigError("evolve takes a config without a sweep section")
        result = run_evolve(cfg, args.out)
        print(f"wrote {args.out / 'timeseries.csv'} and {args.out / 'summary.json'}")
        for name, value in result.summary["averages"].items():
            print(f"<{name}> = {value!r}")
        return EXIT_OK
    if args.command == "sweep":
        if not isinstance(cfg, SweepSpec):
            raise ConfigError("sweep needs a sweep section")
        result = run_sweep(cfg, args.out, workers=args.workers)
        failed = sum(r.error is not None for r in result.points)
        print(f"wrote {args.out / 'sweep.csv'} ({len(result.points)} rows, {failed} without values)")
        return EXIT_OK
    if args.command == "dfs-scan":
        result = run_dfs_scan(cfg, args.out, workers=args.workers)
        print(f"wrote {args.out / 'dfs_scan.csv'} ({len(result.points)} rows)")
        failed = [r for r in result.points if r.error is not None]
        for r in failed:
            print(f"point {r.index}: {r.error}", file=sys.stderr)
        return EXIT_NUMERICAL if failed else EXIT_OK
    raise AssertionError(args.command)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (NumericalError, UnphysicalStateError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
