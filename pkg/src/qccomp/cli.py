"""Command-line runner: `qcc <subcommand> [--config cfg.json] [--seed N] [--out DIR] ...`.

Exit status: 0 when every verdict passes, 1 when any fails, 2 on a
configuration error.  Environment overrides: QCC_SEED, QCC_OUT,
QCC_REPRODUCIBLE, QCC_BASIS_DEGREE, QCC_N_RADIAL, QCC_N_ANGLES.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time

from . import __version__
from .config import ExperimentConfig, apply_env, load_config
from .errors import ConfigError
from .report import Report, emit_plot_data, write_report
from .suites import SUBCOMMANDS

log = logging.getLogger("qccomp")


def run(subcommand: str, cfg: ExperimentConfig, reproducible: bool = False) -> Report:
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    report = Report(__version__, subcommand, cfg.to_dict(), timings=None if reproducible else {})
    for suite in SUBCOMMANDS[subcommand]:
        t = time.perf_counter()
        res = suite(cfg)
        report.scalars.update(res.scalars)
        report.verdicts.update(res.verdicts)
        report.tables.update(res.tables)
        if report.timings is not None:
            report.timings[suite.__name__] = time.perf_counter() - t
        log.info("%s done", suite.__name__)
    return report


def _truthy(value: str | None) -> bool:
    return value is not None and value.strip().lower() in {"1", "true", "yes", "on"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcc", description="Quasiconformal composition operator experiments.")
    p.add_argument("subcommand", choices=sorted(SUBCOMMANDS))
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--seed", type=int, help="global seed (overrides config)")
    p.add_argument("--out", help="output directory (default: ./qcc-out)")
    p.add_argument("--reproducible", action="store_true", help="omit timings so reports are byte-identical")
    p.add_argument("--emit-svg", action="store_true", help="also write SVG charts next to the CSV tables")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = apply_env(load_config(args.config))
        if args.seed is not None:
            cfg.seed = args.seed
        if cfg.seed < 0:
            raise ConfigError("seed must be non-negative")
        cfg.build_map()
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    out = args.out or os.environ.get("QCC_OUT") or "qcc-out"
    reproducible = args.reproducible or _truthy(os.environ.get("QCC_REPRODUCIBLE"))

    report = run(args.subcommand, cfg, reproducible)
    path = write_report(report, out)
    for name, table in report.tables.items():
        if table:
            emit_plot_data(report, name, out, svg=args.emit_svg)
    for name, ok in sorted(report.verdicts.items()):
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print(f"report: {path}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
