"""
Command-line front end: ``airylayer {flow,midpoint,predict,exact,hk,compare}``.

Exit codes: 0 success, 2 configuration error, 3 reliability error,
4 prediction/exact join mismatch.  Every command writes ``<command>.csv``
into ``--out``; ``compare`` also writes ``report.json`` and, with
``--calibrate``, ``ledger.json``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

from . import harness
from .config import load_config
from .errors import ConfigError, InputError, JoinMismatchError, ReliabilityError

log = logging.getLogger("airylayer")

EXIT_OK, EXIT_CONFIG, EXIT_RELIABILITY, EXIT_JOIN = 0, 2, 3, 4

COMMANDS = ("flow", "midpoint", "predict", "exact", "hk", "compare")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="airylayer",
                                 description="Airy-layer asymptotics of spectral Wigner functions")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--strict", action="store_true",
                       help="turn warnings (window support, domain limits) into errors")
        if name == "compare":
            p.add_argument("--calibrate", action="store_true",
                           help="fit the prefactor on the d=1 oscillator and write ledger.json")
    return ap


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _dump_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_json_safe(data), indent=2, sort_keys=True) + "\n")


def run(args) -> int:
    cfg = load_config(args.config)
    out: Path = args.out
    cmd = args.command
    if cmd == "flow":
        cols, rows = harness.run_flow(cfg)
    elif cmd == "midpoint":
        cols, rows = harness.run_midpoint(cfg)
    elif cmd == "predict":
        cols, rows = harness.run_predict(cfg, strict=args.strict)
    elif cmd == "exact":
        cols, rows = harness.run_exact(cfg, out_dir=out, strict=args.strict)
    elif cmd == "hk":
        cols, rows = harness.run_hk(cfg)
    else:
        cols, rows, report, ledger = harness.run_compare(cfg, calibrate=args.calibrate,
                                                         out_dir=out, strict=args.strict)
        _dump_json(out / "report.json", report)
        if ledger is not None:
            ledger.save(out / "ledger.json")
            log.info("calibrated prefactor %.17g written to %s", ledger.prefactor,
                     out / "ledger.json")
    path = harness.write_csv(out / f"{cmd}.csv", cols, rows)
    log.info("wrote %d rows to %s", len(rows), path)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.strict:
        warnings.simplefilter("error", RuntimeWarning)
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReliabilityError as exc:
        print(f"reliability error: {exc}", file=sys.stderr)
        return EXIT_RELIABILITY
    except JoinMismatchError as exc:
        print(f"join mismatch: {exc}", file=sys.stderr)
        return EXIT_JOIN
    except InputError as exc:
        # strict-mode refusals (window support etc.) are configuration problems
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
