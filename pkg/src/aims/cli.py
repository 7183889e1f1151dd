"""Command-line entry point: ``aims price | simulate | verify``.

Exit status: 0 success, 1 bad input, 2 invariant violation.  Diagnostics go
to stderr as a single JSON line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from .audit import verify_log_text
from .errors import (
    ActionFailed,
    AimsError,
    DecimalPrecisionError,
    InvariantViolation,
    MalformedLog,
    SchemaError,
)
from .pricing import load_price_function, make_wish_function
from .scenario import parse_scenario, run, write_outputs
from .timestamps import DAY, format_timestamp, parse_timestamp

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INVARIANT = 2


class InputError(AimsError):
    pass


def _fail(exc: Exception, code: int) -> int:
    diag = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, InvariantViolation):
        diag["invariant"] = exc.invariant
        if exc.seq is not None:
            diag["seq"] = exc.seq
    elif isinstance(exc, MalformedLog):
        diag["seq"] = exc.seq
    elif isinstance(exc, SchemaError):
        diag["pointer"] = exc.pointer
    elif isinstance(exc, ActionFailed):
        diag["action_index"] = exc.index
        diag["cause"] = type(exc.cause).__name__
    sys.stderr.write(json.dumps(diag, sort_keys=True, ensure_ascii=True) + "\n")
    return code


def _price_function(path: str | None):
    path = path or os.environ.get("AIMS_CONFIG")
    if not path:
        return make_wish_function()
    try:
        return load_price_function(path)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None


def _timestamp(text: str, flag: str) -> int:
    try:
        return parse_timestamp(text)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{flag}: {exc}") from None


def cmd_price(args) -> int:
    pf = _price_function(args.config)
    if args.series:
        start = _timestamp(args.from_, "--from") if args.from_ else pf.start
        stop = _timestamp(args.to, "--to") if args.to else pf.end
        if args.step <= 0:
            raise InputError("--step must be a positive number of days")
        if stop < start:
            raise InputError("--to precedes --from")
        rows = [(format_timestamp(t), str(pf.price_at(t))) for t in range(start, stop + 1, args.step * DAY)]
        if args.pretty:
            width = max(len(p) for _, p in rows)
            out = "".join(f"{t}  {p:>{width}}\n" for t, p in rows)
        else:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(("timestamp", "price"))
            w.writerows(rows)
            out = buf.getvalue()
        sys.stdout.write(out)
        return EXIT_OK
    if not args.at:
        raise InputError("give --at TIMESTAMP or --series")
    t = _timestamp(args.at, "--at")
    price = pf.price_at(t)
    sys.stdout.write(f"{format_timestamp(t)}  {price}\n" if args.pretty else f"{price}\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        with open(args.scenario, "rb") as fh:
            document = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read scenario {args.scenario}: {exc.strerror}") from None
    scenario = parse_scenario(document)
    result = run(scenario, seed=args.seed)
    write_outputs(result, scenario, args.out)
    summary = {
        "digest": result.state.state_digest.hex(),
        "events": len(result.log),
        "rows": len(result.series.rows),
    }
    if args.pretty:
        sys.stdout.write("".join(f"{k:>8}: {v}\n" for k, v in summary.items()))
    else:
        sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    pf = _price_function(args.config)
    try:
        with open(args.log, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read log {args.log}: {exc.strerror}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedLog(raw[: exc.start].count(b"\n"), "not UTF-8") from None
    state = verify_log_text(text, pf)
    summary = {"status": "ok", "events": len(state.log), "digest": state.state_digest.hex()}
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aims", description="Automatic-increase market ledger tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="query the price function")
    p.add_argument("--config", help="price function JSON (default: $AIMS_CONFIG, else WISH)")
    p.add_argument("--at", help="single timestamp")
    p.add_argument("--series", action="store_true", help="emit a CSV price series")
    p.add_argument("--from", dest="from_", help="series start (default: schedule start)")
    p.add_argument("--to", help="series end, inclusive (default: schedule end)")
    p.add_argument("--step", type=int, default=1, help="series step in days")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_price)

    s = sub.add_parser("simulate", help="run a scenario file")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, help="override the scenario seed")
    s.add_argument("--pretty", action="store_true")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="replay an event log and check every invariant")
    v.add_argument("--log", required=True)
    v.add_argument("--config", help="price function JSON (default: $AIMS_CONFIG, else WISH)")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InvariantViolation as exc:
        return _fail(exc, EXIT_INVARIANT)
    except (AimsError, DecimalPrecisionError) as exc:
        return _fail(exc, EXIT_INPUT)
    except ValueError as exc:
        # price function constructor rejections (degenerate base, bad span)
        return _fail(exc, EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
