"""Command line entry point: ``nc-hodge <subcommand> --config <path>``."""

from __future__ import annotations

import argparse
import sys
import warnings

from .config import SUBCOMMANDS, load_config
from .errors import ConfigError
from .runner import THREADS_ENV, run, write_outputs

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nc-hodge",
        description="Conformally perturbed Hodge-de Rham operators on fuzzy spheres and noncommutative tori.",
        epilog=f"Set {THREADS_ENV} to run independent (h, u) pipelines in parallel.",
    )
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--out", default=None, help="output root (default: the config's output entry)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("-q", "--quiet", action="store_true", help="only print the verdict line")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cfg = load_config(args.config)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        if args.seed is not None:
            cfg.seed = args.seed
        report = run(cfg, args.subcommand)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = write_outputs(report, args.out or cfg.output)
    if not args.quiet:
        for row in report.invariants.rows:
            status = "ok" if row["passed"] else ("FAIL" if row["hard"] else "soft-fail")
            print(f"{status:9s} {row['name']:<55s} {row['residual']:.3e} <= {row['bound']:.1e}")
        for res in report.hodge:
            if "chi" in res:
                print(f"h={res['h']} u={res['u']:g}: dims={res['dims']} chi={res['chi']} index={res['odd_index']}")
    failure = report.invariants.first_failure()
    if failure:
        print(f"FAILED: {failure['name']} residual {failure['residual']:.3e} > bound {failure['bound']:.1e}", file=sys.stderr)
        print(f"report: {out / 'report.json'}")
        return EXIT_INVARIANT
    print(f"passed; report: {out / 'report.json'}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
