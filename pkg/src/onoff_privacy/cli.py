"""Command-line front end.

Subcommands:
  rate      tabulate capacity, the converse bound, and optionally an
            empirical Monte Carlo estimate per time step
  audit     enumerate a window exactly and certify zero leakage (exit 1 if
            the certificate fails, e.g. for --policy naive)
  table     print the policy table(s) as JSON
  simulate  run seeded sessions, write traces, summarize rates

Every command is deterministic given --seed; when a command that consumes
randomness is run without one, a fresh seed is drawn and printed to stderr.
Exit codes: 0 success/pass, 1 audit failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import secrets
import sys
from contextlib import nullcontext
from typing import IO

from .analysis import converse_min_length, theoretical_rate
from .audit import MAX_HORIZON, audit_model
from .markov import MarkovModel, default_initial
from .policy import Explicit, PrivacyMode, StepAtZero, latest_on_time, table_for
from .server import (
    DEFAULT_L,
    TraceBatch,
    empirical_rate,
    run_sessions,
    write_traces_csv,
    write_traces_jsonl,
)


def parse_mode(text: str) -> PrivacyMode:
    return StepAtZero() if text == "step" else Explicit.from_string(text)


def _add_common(p: argparse.ArgumentParser, *, runs: bool = False) -> None:
    p.add_argument("--alpha", type=float, required=True, help="Pr(next request B | current A)")
    p.add_argument("--beta", type=float, required=True, help="Pr(next request A | current B)")
    p.add_argument(
        "--mode",
        default="step",
        help="'step' (ON up to time 0) or a Y/N string like NYYN, index 0 = time 0",
    )
    p.add_argument("--horizon", type=int, default=None, help="see the subcommand help")
    p.add_argument("--seed", type=int, default=None, help="RNG seed; drawn and printed if omitted")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    if runs:
        p.add_argument("--runs", type=int, default=0, help="Monte Carlo sessions (0 = none)")
        p.add_argument("--L", type=int, default=DEFAULT_L, help="message length in symbols")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onoff-privacy",
        description="ON-OFF privacy for two correlated sources: rates, audits, simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="capacity and converse bound per time step")
    _add_common(p, runs=True)
    p.add_argument("--delta", type=float, default=None, help="Pr(X0 = A) for the converse")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("audit", help="exact leakage certificate by enumeration")
    _add_common(p)
    p.add_argument("--policy", choices=("scheme", "naive"), default="scheme")
    p.set_defaults(func=cmd_audit, fmt="json")

    p = sub.add_parser("table", help="print the policy table(s) as JSON")
    _add_common(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("simulate", help="run seeded sessions and summarize")
    _add_common(p, runs=True)
    p.set_defaults(func=cmd_simulate)
    return parser


def _model(args: argparse.Namespace) -> MarkovModel:
    return MarkovModel(args.alpha, args.beta)


def _seed(args: argparse.Namespace) -> int:
    if args.seed is None:
        seed = secrets.randbits(63)
        print(f"seed: {seed}", file=sys.stderr)
        return seed
    return args.seed


def _open_out(args: argparse.Namespace):
    return open(args.out, "w") if args.out else nullcontext(sys.stdout)


def _write_rows(rows: list[dict], columns: tuple[str, ...], fmt: str, fp: IO[str]) -> None:
    if fmt == "json":
        json.dump(rows, fp, indent=2)
        fp.write("\n")
        return
    writer = csv.DictWriter(fp, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(
            {k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()}
        )


def cmd_rate(args: argparse.Namespace) -> int:
    m = _model(args)
    mode = parse_mode(args.mode)
    if isinstance(mode, StepAtZero):
        horizon = 20 if args.horizon is None else args.horizon
        if horizon < 0:
            raise ValueError("--horizon must be >= 0")
        times = list(range(0, horizon + 1))  # --horizon is the last time index
    else:
        times = list(range(len(mode.flags) if args.horizon is None else args.horizon))
        if not times:
            raise ValueError("--horizon must be >= 1 for explicit modes")
    delta = args.delta if args.delta is not None else default_initial(m)[0]

    batch: TraceBatch | None = None
    if args.runs > 0:
        seed = _seed(args)
        steps = (times[-1] + 2) if isinstance(mode, StepAtZero) else len(times)
        batch = run_sessions(m, mode, steps, args.runs, args.L, seed)

    rows = []
    for t in times:
        rate = theoretical_rate(m, mode, t)
        if mode.is_on(t):
            bound = 0.5
        else:
            ref = latest_on_time(mode, t)
            bound = 1.0 if ref is None else 1.0 / converse_min_length(m, t - ref, delta)
        row: dict = {"t": t, "rate": rate, "converse_bound": bound}
        if batch is not None:
            est = empirical_rate(batch, t)
            row["empirical_rate"] = est.rate
            row["empirical_se"] = est.stderr
        rows.append(row)
    columns = ("t", "rate", "converse_bound") + (
        ("empirical_rate", "empirical_se") if batch is not None else ()
    )
    with _open_out(args) as fp:
        _write_rows(rows, columns, args.fmt, fp)
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    m = _model(args)
    mode = parse_mode(args.mode)
    if args.horizon is None:
        horizon = len(mode.flags) if isinstance(mode, Explicit) else 6
    else:
        horizon = args.horizon
    if horizon > MAX_HORIZON:
        raise ValueError(f"--horizon must be <= {MAX_HORIZON} for exact enumeration")
    report = audit_model(m, mode, horizon, policy=args.policy)
    with _open_out(args) as fp:
        report.to_json(fp)
    return 0 if report.passed else 1


def cmd_table(args: argparse.Namespace) -> int:
    m = _model(args)
    tables = [table_for(m, 1)]
    second = table_for(m, 2)
    if second.regime != tables[0].regime:
        tables.append(second)
    with _open_out(args) as fp:
        json.dump([t.to_json_dict() for t in tables], fp, indent=2)
        fp.write("\n")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    m = _model(args)
    mode = parse_mode(args.mode)
    seed = _seed(args)
    runs = args.runs if args.runs > 0 else 1
    if isinstance(mode, StepAtZero):
        last = 5 if args.horizon is None else args.horizon
        steps = last + 2  # window starts at t = -1
    else:
        steps = len(mode.flags) if args.horizon is None else args.horizon
    batch = run_sessions(m, mode, steps, runs, args.L, seed)

    if args.out:
        with open(args.out, "w") as fp:
            if args.fmt == "json":
                write_traces_jsonl(batch.sessions(), fp, with_run=runs > 1)
            else:
                write_traces_csv(batch.sessions(), fp, with_run=runs > 1)

    print(f"decodability: {'PASS' if batch.decodable() else 'FAIL'} "
          f"({runs} runs x {steps} steps)")
    if runs >= 2:
        for t in batch.times:
            est = empirical_rate(batch, t)
            theory = theoretical_rate(m, mode, t)
            print(
                f"t={t:d} empirical_rate={est.rate:.6f} se={est.stderr:.6f} theory={theory:.6f}"
            )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
