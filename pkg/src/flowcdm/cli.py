"""Single-binary CLI over the pipeline: gen, profile, validate, transform, summarize.

Exit codes: 0 success, 1 validation failure, 2 usage/config error,
3 runtime I/O failure. Every subcommand is deterministic given identical
inputs and flags; environment variables are deliberately ignored.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .generate import generate, spec_from_config
from .ingest import CSV_KWARGS, FORMAT_DELIMITED, FORMATS, open_stream, write_records
from .mapping import default_mapping, load_mapping
from .model import MappingValidationError
from .profiling import context_report, count_row_names, substring_query, top_n
from .report import (
    patient_coverage,
    per_concept_summary,
    render_concept_summary,
    write_concept_summary,
)
from .transform import (
    MODE_IDENTIFIED,
    MODES,
    TransformConfig,
    render_report,
    run_pipeline,
)


def _error(message: str) -> None:
    print(f"flowcdm: {message}", file=sys.stderr)


def _load_mapping_arg(spec: str):
    return default_mapping() if spec == "default" else load_mapping(spec)


def cmd_gen(args: argparse.Namespace) -> int:
    data: dict = {}
    if args.spec:
        try:
            with open(args.spec, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, ValueError) as exc:
            _error(f"cannot read spec file: {exc}")
            return 2
    if args.seed is not None:
        data["seed"] = args.seed
    if args.rows is not None:
        data["total_rows"] = args.rows
    if args.patients is not None:
        data["patients"] = args.patients
    if args.noise_fraction is not None:
        data["noise_fraction"] = args.noise_fraction
    try:
        spec = spec_from_config(data)
    except (ValueError, TypeError, KeyError) as exc:
        _error(f"bad generator spec: {exc}")
        return 2
    try:
        count = write_records(args.out, generate(spec), args.format)
    except OSError as exc:
        try:
            os.remove(args.out)
        except OSError:
            pass
        _error(f"write failed: {exc}")
        return 3
    print(f"wrote {count} records to {args.out}")
    return 0


def cmd_profile(args: argparse.Namespace) -> int:
    try:
        stream = open_stream(args.infile, args.format)
    except (OSError, ValueError) as exc:
        _error(str(exc))
        return 2
    with stream:
        report = count_row_names(stream, collect_contexts=args.contexts is not None)

    if args.contains:
        rows = substring_query(
            report,
            args.contains,
            args.exclude,
            case_fold=not args.case_sensitive,
        )
        if args.top:
            rows = rows[: args.top]
    else:
        n = args.top if args.top else max(1, len(report.counts))
        rows = top_n(report, n)

    out = csv.writer(sys.stdout, **CSV_KWARGS)
    for name, count in rows:
        out.writerow((name, str(count)))
    if args.contexts is not None:
        print()
        print(f"# contexts\t{args.contexts}")
        for template, group, count in context_report(report, args.contexts):
            out.writerow((template, group, str(count)))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        table = load_mapping(args.mapping)
    except MappingValidationError as exc:
        for violation in exc.violations:
            print(f"violation: {violation}", file=sys.stderr)
        return 1
    except OSError as exc:
        _error(str(exc))
        return 2
    print(f"OK: {len(table.rules)} rules, {len(table.index)} row names")
    return 0


def cmd_transform(args: argparse.Namespace) -> int:
    try:
        mapping = _load_mapping_arg(args.mapping)
    except MappingValidationError as exc:
        _error(f"invalid mapping: {exc}")
        return 2
    except OSError as exc:
        _error(str(exc))
        return 2
    try:
        config = TransformConfig(mapping=mapping, mode=args.mode)
        stream = open_stream(args.infile, args.format)
    except (OSError, ValueError) as exc:
        _error(str(exc))
        return 2
    if args.workers < 1:
        _error("--workers must be >= 1")
        return 2
    try:
        with stream:
            report = run_pipeline(
                stream,
                config,
                args.obs_out,
                args.meas_out,
                report_path=args.report,
                skipped_names_path=args.skipped_out,
                workers=args.workers,
            )
    except OSError as exc:
        _error(f"I/O failure, partial outputs removed: {exc}")
        return 3
    print(render_report(report))
    return 0


def cmd_summarize(args: argparse.Namespace) -> int:
    try:
        mapping = _load_mapping_arg(args.mapping)
    except (OSError, MappingValidationError) as exc:
        _error(str(exc))
        return 2
    try:
        summary = per_concept_summary(args.meas, mapping)
        patients = patient_coverage(args.meas)
    except (OSError, ValueError) as exc:
        _error(str(exc))
        return 2
    print(render_concept_summary(summary))
    print(f"distinct patients: {patients}")
    if args.out:
        try:
            write_concept_summary(summary, args.out)
        except OSError as exc:
            _error(f"write failed: {exc}")
            return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowcdm",
        description="Streaming ETL from raw flowsheet exports to OMOP-shaped tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic flowsheet corpus")
    gen.add_argument("--spec", help="JSON generator spec file")
    gen.add_argument("--seed", type=int, help="RNG seed (default 7)")
    gen.add_argument("--rows", type=int, help="total records to generate")
    gen.add_argument("--patients", type=int, help="distinct synthetic patients")
    gen.add_argument("--noise-fraction", type=float, dest="noise_fraction",
                     help="share of free-text noise rows (default 0.05)")
    gen.add_argument("--out", required=True, help="output file (.gz supported)")
    gen.add_argument("--format", choices=FORMATS, default=FORMAT_DELIMITED)
    gen.set_defaults(func=cmd_gen)

    profile = sub.add_parser("profile", help="row-name frequency report")
    profile.add_argument("--in", dest="infile", required=True,
                         help="interchange file or - for stdin")
    profile.add_argument("--format", choices=FORMATS, default=FORMAT_DELIMITED)
    profile.add_argument("--top", type=int, help="limit to the n most frequent names")
    profile.add_argument("--contains", help="only names containing this substring")
    profile.add_argument("--exclude", action="append", default=[], metavar="SUBSTRING",
                         help="drop names containing this substring (repeatable)")
    profile.add_argument("--case-sensitive", action="store_true",
                         help="match substrings without case folding")
    profile.add_argument("--contexts", metavar="ROW_NAME",
                         help="also list (template, group) contexts for this name")
    profile.set_defaults(func=cmd_profile)

    validate = sub.add_parser("validate", help="check a mapping file")
    validate.add_argument("--mapping", required=True)
    validate.set_defaults(func=cmd_validate)

    transform = sub.add_parser("transform", help="run both output paths")
    transform.add_argument("--in", dest="infile", required=True,
                           help="interchange file or - for stdin")
    transform.add_argument("--format", choices=FORMATS, default=FORMAT_DELIMITED)
    transform.add_argument("--mapping", default="default",
                           help='mapping file, or "default" for the built-in table')
    transform.add_argument("--mode", choices=MODES, default=MODE_IDENTIFIED)
    transform.add_argument("--obs-out", required=True, dest="obs_out")
    transform.add_argument("--meas-out", required=True, dest="meas_out")
    transform.add_argument("--report", help="write machine-readable counters (JSON)")
    transform.add_argument("--skipped-out", dest="skipped_out",
                           help="dump skipped row names with counts")
    transform.add_argument("--workers", type=int, default=1,
                           help="transform fan-out processes")
    transform.set_defaults(func=cmd_transform)

    summarize = sub.add_parser("summarize", help="per-concept counts and coverage")
    summarize.add_argument("--meas", required=True, help="measurement output file")
    summarize.add_argument("--mapping", default="default")
    summarize.add_argument("--out", help="also write the summary as tab-delimited")
    summarize.set_defaults(func=cmd_summarize)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
