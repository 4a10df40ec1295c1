"""Command line: ``warpfock run`` and ``warpfock theta-check``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import SUITES, from_dict, load, validate
from .errors import WarpFockError
from .geometry import ThetaMatrix, is_admissible
from .report import SuiteReport, emit_tables, to_plain
from .suites import SUITE_FUNCTIONS

log = logging.getLogger("warpfock")
THREADS_ENV = "WARPFOCK_THREADS"


def suite_rng(seed, name):
    """Independent stream per suite so selection order never changes results."""
    return np.random.default_rng([int(seed), SUITES.index(name)])


def run_suite(cfg):
    """Run the selected suites in canonical order; returns (report, tables)."""
    validate(cfg)
    names = [s for s in SUITES if s in cfg.suites]
    threads = max(1, int(os.environ.get(THREADS_ENV, "1")))

    def one(name):
        log.info("suite %s", name)
        return SUITE_FUNCTIONS[name](cfg, suite_rng(cfg.seed, name))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, names))
    else:
        results = [one(n) for n in names]
    report = SuiteReport(cfg.digest(), __version__)
    tables = {}
    for cases, tabs in results:
        report.cases.extend(cases)
        tables.update(tabs)
    return report, tables


def cmd_run(args):
    cfg = load(args.config) if args.config else from_dict({})
    if args.suite:
        cfg.suites = list(args.suite)
    if args.out:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    report, tables = run_suite(cfg)
    paths = emit_tables(report, cfg.out_dir, tables=tables)
    s = report.summary()
    for c in report.cases:
        if not c.passed:
            log.warning("FAIL %s/%s measured=%s %s", c.suite, c.case_id, to_plain(c.measured), c.error or "")
    print(json.dumps({"digest": report.digest(), "summary": s, "files": [str(p) for p in paths]}, sort_keys=True))
    return 0 if report.passed else 1


def cmd_theta_check(args):
    th = ThetaMatrix.from_params(args.lam, args.eta, args.dim)
    out = {"theta": th.entries.tolist(), "admissible": is_admissible(th, args.dim)}
    print(json.dumps(out, sort_keys=True))
    return 0 if out["admissible"] else 1


def build_parser():
    p = argparse.ArgumentParser(prog="warpfock", description="Warped-convolution deformation checks on a truncated Fock space.")
    p.add_argument("--verbose", "-v", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run verification suites")
    r.add_argument("--config", help="YAML or JSON config file")
    r.add_argument("--suite", action="extend", nargs="+", choices=SUITES, help="suites to run (repeatable)")
    r.add_argument("--out", help="output directory")
    r.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    r.set_defaults(func=cmd_run)
    t = sub.add_parser("theta-check", help="build and check an admissible theta")
    t.add_argument("--lambda", dest="lam", type=float, required=True)
    t.add_argument("--eta", type=float, default=0.0)
    t.add_argument("--dim", type=int, default=2)
    t.set_defaults(func=cmd_theta_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except WarpFockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
