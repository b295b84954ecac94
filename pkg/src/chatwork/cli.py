"""Command-line entry point.

Subcommands: ``parse``, ``analyze``, ``fit``, ``generate``, ``roundtrip``.
Exit status is 0 on success, 1 on internal errors and 2 on usage,
configuration or input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from io import StringIO
from pathlib import Path

from .generator import GeneratorParams, generate_trace, load_params, round_trip_check
from .ingest import (
    DEFAULT_FORMAT,
    ConfigError,
    FormatConfig,
    MessageLog,
    ParseError,
    RosterError,
    anonymize,
    anonymize_roster,
    load_format_config,
    load_roster,
    parse_export,
    read_records,
    render_export,
    write_records,
)
from .report import AnalysisConfig, analyze_log, dumps_report
from .sessionizer import InsufficientDataError, combined_elbow, silence_gap_histogram
from .statfit import rank_frequency, zipf_fit, zipf_table
from .typology import RoleThresholds

log = logging.getLogger("chatwork")

FORMAT_ENV = "CHATWORK_FORMAT"
SALT_ENV = "CHATWORK_SALT"


class UsageError(Exception):
    pass


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_config(args) -> FormatConfig:
    path = args.format or os.environ.get(FORMAT_ENV)
    fmt = DEFAULT_FORMAT
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                fmt = load_format_config(fh)
        except OSError as exc:
            raise UsageError(f"cannot read format config: {exc}") from None
    tz = getattr(args, "tz_offset", None)
    return fmt.with_overrides(tz_offset_min=tz) if tz is not None else fmt


def _salt(args) -> bytes:
    salt = args.salt if args.salt is not None else os.environ.get(SALT_ENV, "")
    return salt.encode("utf-8")


def _require_inputs(paths) -> None:
    for p in paths:
        if not Path(p).is_file():
            raise UsageError(f"input not found: {p}")


def _load_logs(paths) -> dict[str, MessageLog]:
    logs: dict[str, MessageLog] = {}
    for p in paths:
        with open(p, encoding="utf-8") as fh:
            found = read_records(fh)
        if not found:
            group = Path(p).name.removesuffix(".jsonl")
            found = {group: MessageLog(group)}
        for g, lg in found.items():
            if g in logs:
                lg = MessageLog.from_messages(g, logs[g].messages + lg.messages)
            logs[g] = lg
    return logs


# -- subcommands -------------------------------------------------------------

def cmd_parse(args) -> int:
    _require_inputs(args.inputs)
    fmt = _format_config(args)
    salt = _salt(args)
    out = Path(args.out)
    if args.group and len(args.inputs) > 1:
        raise UsageError("--group only applies to a single input")
    for path in args.inputs:
        group = args.group or Path(path).stem
        with open(path, encoding="utf-8") as fh:
            parsed, report = parse_export(fh, fmt, group_id=group)
        parsed = anonymize(parsed, salt)
        target = out / f"{group}.jsonl"
        buf = StringIO()
        write_records(parsed, buf)
        write_atomic(target, buf.getvalue())
        write_atomic(out / f"{group}.skips.json",
                     json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
        print(f"{path}: {len(parsed)} messages, {report.system_lines} system lines, "
              f"{len(report.skipped)} skipped -> {target}")
    return 0


def _group_threshold(value: str):
    if value in ("auto", "auto-mean", "auto-pooled"):
        return value
    try:
        v = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected minutes or auto, auto-mean, auto-pooled") from None
    if v <= 0:
        raise argparse.ArgumentTypeError("group threshold must be positive")
    return v


def _positive_int(value: str) -> int:
    try:
        v = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def cmd_analyze(args) -> int:
    _require_inputs(args.inputs)
    logs = _load_logs(args.inputs)
    rosters = {}
    for path in args.roster or []:
        _require_inputs([path])
        with open(path, encoding="utf-8") as fh:
            roster = load_roster(fh)
        if args.salt is not None or os.environ.get(SALT_ENV):
            roster = anonymize_roster(roster, _salt(args))
        rosters[roster.group_id] = roster

    roles = RoleThresholds(msg_pct_high=args.host_msg_pct)
    threshold = args.group_threshold
    source = "fixed"
    if threshold in ("auto-mean", "auto-pooled"):
        hists = []
        for lg in logs.values():
            try:
                hists.append(silence_gap_histogram(lg))
            except InsufficientDataError:
                pass
        if not hists:
            raise UsageError("no group has enough data for an elbow threshold")
        threshold = combined_elbow(hists, threshold.split("-")[1])
        source = args.group_threshold
        log.info("combined elbow threshold: %d min", threshold)
    config = AnalysisConfig(
        user_threshold=args.user_threshold,
        group_threshold=threshold,
        tz_offset_min=args.tz_offset or 0,
        roles=roles,
        threshold_source=source,
    )
    out = Path(args.out)
    formats = set(args.report_formats.split(","))
    if not formats <= {"json", "csv"}:
        raise UsageError(f"unknown report format(s): {sorted(formats - {'json', 'csv'})}")

    def run(item):
        group, lg = item
        report = analyze_log(lg, config, rosters.get(group))
        if "json" in formats:
            write_atomic(out / f"{group}.report.json", dumps_report(report.document))
        if "csv" in formats:
            for name, text in report.csv_files().items():
                write_atomic(out / group / name, text)
        return group, report

    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(run, sorted(logs.items())))
    for group, report in results:
        doc = report.document
        n = doc["message_layer"]["n_messages"] if doc["message_layer"] else 0
        gs = doc["group_layer"]["n_sessions"] if doc["group_layer"] else 0
        print(f"{group}: {n} messages, {gs} group sessions "
              f"(threshold {doc['thresholds']['group_threshold']} min)")
    return 0


def cmd_fit(args) -> int:
    _require_inputs(args.inputs)
    results = {}
    for group, lg in sorted(_load_logs(args.inputs).items()):
        counts: dict[str, int] = {}
        for m in lg.messages:
            counts[m.user_id] = counts.get(m.user_id, 0) + 1
        if len(counts) < 2:
            results[group] = None
            continue
        pairs = rank_frequency(counts)
        fit = zipf_fit(pairs)
        results[group] = fit.as_dict()
        if args.out:
            rows = "".join(f"{r},{f},{round(y, 6)}\n" for r, f, y in zipf_table(pairs, fit))
            write_atomic(Path(args.out) / f"{group}.rank_frequency.csv", "rank,frequency,fitted\n" + rows)
    print(json.dumps(results, indent=2, sort_keys=True))
    return 0


def _params(args) -> GeneratorParams:
    overrides = {"seed": args.seed, "n_users": args.n_users, "horizon_min": args.horizon}
    if args.params:
        try:
            with open(args.params, encoding="utf-8") as fh:
                return load_params(fh, **overrides)
        except OSError as exc:
            raise UsageError(f"cannot read params: {exc}") from None
    return GeneratorParams.from_mapping({k: v for k, v in overrides.items() if v is not None})


def cmd_generate(args) -> int:
    params = _params(args)
    trace = generate_trace(params)
    if args.as_export:
        text = render_export(trace, _format_config(args))
    else:
        buf = StringIO()
        write_records(trace, buf)
        text = buf.getvalue()
    write_atomic(Path(args.out), text)
    print(f"{len(trace)} messages from {len(trace.senders)} users -> {args.out}")
    return 0


def cmd_roundtrip(args) -> int:
    report = round_trip_check(_params(args), args.user_threshold)
    print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    return 0


# -- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chatwork", description="Workload characterization of group-chat logs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def fmt_opts(p):
        p.add_argument("--format", help=f"format config JSON (default: ${FORMAT_ENV})")
        p.add_argument("--tz-offset", type=int, help="local time = UTC + this many minutes")

    p = sub.add_parser("parse", help="text exports -> canonical JSON-lines logs")
    p.add_argument("inputs", nargs="+")
    fmt_opts(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--group", help="group id (default: input file stem)")
    p.add_argument("--salt", help=f"pseudonymization key (default: ${SALT_ENV} or empty)")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("analyze", help="canonical logs -> per-group reports")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--user-threshold", type=_positive_int, default=15)
    p.add_argument("--group-threshold", type=_group_threshold, default=81,
                   help="minutes, 'auto' (per-group elbow), 'auto-mean' or 'auto-pooled'")
    p.add_argument("--tz-offset", type=int, default=0)
    p.add_argument("--roster", action="append", help="roster JSON (repeatable)")
    p.add_argument("--salt", help="pseudonymize roster ids with this key")
    p.add_argument("--host-msg-pct", type=float, default=RoleThresholds.msg_pct_high)
    p.add_argument("--report-formats", default="json,csv")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="Zipf fit of user message counts")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", help="directory for rank-frequency CSVs")
    p.set_defaults(func=cmd_fit)

    def gen_opts(p):
        p.add_argument("--params", help="generator params JSON")
        p.add_argument("--seed", type=int)
        p.add_argument("--n-users", type=int)
        p.add_argument("--horizon", type=int, help="horizon in minutes")

    p = sub.add_parser("generate", help="synthetic ON/OFF trace")
    gen_opts(p)
    p.add_argument("--out", required=True, help="output file")
    p.add_argument("--as-export", action="store_true", help="write a text export instead of records")
    fmt_opts(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("roundtrip", help="generate, sessionize and compare to ground truth")
    gen_opts(p)
    p.add_argument("--user-threshold", type=_positive_int, default=15)
    p.set_defaults(func=cmd_roundtrip)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, ParseError, RosterError, InsufficientDataError) as exc:
        print(f"chatwork {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        log.exception("internal error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
