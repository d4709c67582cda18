"""Command line interface.

One subcommand per pipeline capability:

    stateframe validate    --reg R --erp E --rules M [--datum K]... [--out P]
    stateframe impact      --erp E --item CODE --datum K
    stateframe check-rules --rules M --reg R [--erp E]
    stateframe dump-graph  --erp E [--out P]

Exit codes partition outcomes: 0 compliant / clean, 1 exceptions or
diagnostics found, 2 operational errors (unreadable or malformed input).
`STATEFRAME_THREADS` caps validation fan-out; all output is UTF-8.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .compliance import report_to_json
from .errors import StateFrameError
from .graph import build_graph, impact_of_modification, render_edges
from .model import DEFAULT_DATUM_KINDS, DatumKind, StateId, System
from .pipeline import RunConfig, parse_input_file, run_validation
from .rules import parse_rules, validate_rules
from .ingest import parse_erp_export, parse_regulatory_export, group_by_licence
from .mapping import build_regulatory_frame

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_ERROR = 2


def _datum_kind(text: str) -> DatumKind:
    try:
        return DatumKind(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stateframe",
        description="Validate ERP product data against its regulatory registrations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser("validate", help="run the full compliance pipeline")
    validate.add_argument("--reg", required=True, type=Path, help="regulatory export file")
    validate.add_argument("--erp", required=True, type=Path, help="ERP extract file")
    validate.add_argument("--rules", required=True, type=Path, help="mapping rules file")
    validate.add_argument(
        "--datum",
        action="append",
        type=_datum_kind,
        metavar="KIND",
        help="datum kind to check (repeatable; default: site_of_manufacturing, shelf_life, storage_condition)",
    )
    validate.add_argument("--out", type=Path, help="write the JSON report here instead of stdout")
    validate.add_argument("--figures", type=Path, metavar="DIR", help="render summary figures into DIR")
    validate.add_argument(
        "--strict",
        action="store_true",
        help="also fail (exit 1) when uncovered ERP values exist",
    )

    impact = sub.add_parser("impact", help="who uses a state, and what a change would touch")
    impact.add_argument("--erp", required=True, type=Path)
    impact.add_argument("--item", required=True, metavar="CODE", help="item code of the modified state")
    impact.add_argument("--datum", required=True, type=_datum_kind, metavar="KIND")

    check = sub.add_parser("check-rules", help="pre-flight mapping rules against an export")
    check.add_argument("--rules", required=True, type=Path)
    check.add_argument("--reg", required=True, type=Path)
    check.add_argument("--erp", type=Path, help="also check targets against ERP state names")

    dump = sub.add_parser("dump-graph", help="write filiation edges for external tools")
    dump.add_argument("--erp", required=True, type=Path)
    dump.add_argument("--out", type=Path)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "impact":
            return _cmd_impact(args)
        if args.command == "check-rules":
            return _cmd_check_rules(args)
        if args.command == "dump-graph":
            return _cmd_dump_graph(args)
    except StateFrameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    raise AssertionError(f"unhandled command {args.command!r}")


def _threads_from_env() -> int:
    raw = os.environ.get("STATEFRAME_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError:
        raise StateFrameError(f"STATEFRAME_THREADS must be an integer, got {raw!r}") from None
    return max(threads, 1)


def _cmd_validate(args) -> int:
    config = RunConfig(
        regulatory_path=args.reg,
        erp_path=args.erp,
        rules_path=args.rules,
        datum_kinds=tuple(dict.fromkeys(args.datum)) if args.datum else DEFAULT_DATUM_KINDS,
        output_path=args.out,
        figures_dir=args.figures,
        fail_on_uncovered=args.strict,
        threads=_threads_from_env(),
    )
    result = run_validation(config)
    report = result.report

    rendered = report_to_json(report)
    if config.output_path:
        Path(config.output_path).write_text(rendered, encoding="utf-8")
        print(
            f"checked {report.final_products_checked} final products: "
            f"{report.final_products_compliant} compliant, "
            f"{len(report.exceptions)} exceptions, ratio {report.ratio_display()}"
        )
    else:
        sys.stdout.write(rendered)

    if config.figures_dir:
        from .figures import save_report_figures

        for path in save_report_figures(report, result.graph, config.figures_dir):
            print(f"wrote {path}", file=sys.stderr)

    if report.exceptions:
        return EXIT_FINDINGS
    if config.fail_on_uncovered and report.uncovered:
        return EXIT_FINDINGS
    return EXIT_OK


def _cmd_impact(args) -> int:
    erp = parse_input_file(args.erp, parse_erp_export)
    graph = build_graph(erp, erp.final_products)
    impact = impact_of_modification(graph, args.item, args.datum)
    affected = sorted(impact.affected_products)
    print(f"modified: {impact.modified[0]} {impact.modified[1]}")
    print(f"affected products ({len(affected)}): {', '.join(affected) if affected else '-'}")
    if impact.derived_revalidations:
        print(f"revalidations ({len(impact.derived_revalidations)}):")
        for product, datum, reason in impact.derived_revalidations:
            print(f"  {product} {datum}: {reason}")
    else:
        print("revalidations (0):")
    return EXIT_OK


def _cmd_check_rules(args) -> int:
    rulesets = parse_input_file(args.rules, parse_rules)
    reg = parse_input_file(args.reg, parse_regulatory_export)
    prod_states = None
    if args.erp:
        erp = parse_input_file(args.erp, parse_erp_export)
        names = sorted({item.state for item in erp.items})
        prod_states = [StateId(System.PRODUCTION, name) for name in names]

    groups = group_by_licence(reg)
    findings = 0
    for ruleset in rulesets:
        matched = False
        for licence in sorted(groups):
            frame = build_regulatory_frame(groups[licence], ruleset.datum)
            if frame.product_id != ruleset.product_id:
                continue
            matched = True
            for diag in validate_rules(ruleset, frame, prod_states):
                findings += 1
                print(f"{args.rules}:{diag} (licence {licence})")
        if not matched:
            findings += 1
            print(
                f"{args.rules}: UnmatchedProduct: rule set for product "
                f"{ruleset.product_id!r} matches no licence in {args.reg}"
            )
    if findings:
        print(f"{findings} finding(s)", file=sys.stderr)
        return EXIT_FINDINGS
    print("rules are applicable: no findings", file=sys.stderr)
    return EXIT_OK


def _cmd_dump_graph(args) -> int:
    erp = parse_input_file(args.erp, parse_erp_export)
    graph = build_graph(erp, erp.final_products)
    rendered = render_edges(graph)
    if args.out:
        Path(args.out).write_text(rendered, encoding="utf-8")
    else:
        sys.stdout.write(rendered)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
