"""End-to-end validation run: exports in, exception report out.

The wiring follows the reporting flow the engine automates: parse the
regulatory export, split it by licence number, build one regulatory frame
per (licence, datum), map each through the product line's rules into an
expected production frame, rebuild the actual production frames from the
ERP extract by walking each final item's filiation, then run the three
coherence checks and count compliance per final product.

Each final item is bound (via the ERP `FINAL:` directive) to the product
identity it validates under, which is the licence number of its
registration. Per-(final, datum) checks are independent, so they may fan
out to worker threads; results merge in sorted task order either way.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .compliance import (
    ComplianceException,
    ExceptionReport,
    UncoveredValue,
    check_cross_country,
    check_frames,
    check_item_codes,
    sort_exceptions,
    uncovered_values,
)
from .errors import PipelineError, PositionedError, StateFrameError
from .graph import StateGraph, build_graph
from .ingest import (
    ErpExport,
    RegulatoryExport,
    group_by_licence,
    parse_erp_export,
    parse_regulatory_export,
)
from .mapping import ExpectedProductionFrame, apply_mapping, build_regulatory_frame
from .model import (
    DEFAULT_DATUM_KINDS,
    DatumKind,
    FrameEntry,
    ReferenceFrame,
    StateId,
    System,
)
from .rules import MappingRuleSet, parse_rules


@dataclass(frozen=True)
class RunConfig:
    """Everything one validation run needs."""

    regulatory_path: Path
    erp_path: Path
    rules_path: Path
    datum_kinds: tuple[DatumKind, ...] = DEFAULT_DATUM_KINDS
    output_path: Path | None = None
    figures_dir: Path | None = None
    fail_on_uncovered: bool = False
    threads: int = 1

    def __post_init__(self):
        if not self.datum_kinds:
            raise ValueError("datum kind filter must not be empty")


@dataclass(frozen=True)
class ValidationResult:
    """Report plus the artifacts downstream consumers may want."""

    report: ExceptionReport
    graph: StateGraph
    product_line: str


def load_inputs(config: RunConfig) -> tuple[RegulatoryExport, ErpExport, list[MappingRuleSet]]:
    """Parse all three inputs, attributing errors to their files."""
    reg = parse_input_file(config.regulatory_path, parse_regulatory_export)
    erp = parse_input_file(config.erp_path, parse_erp_export)
    rulesets = parse_input_file(config.rules_path, parse_rules)
    return reg, erp, rulesets


def parse_input_file(path: Path, parser):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise PipelineError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return parser(data)
    except PositionedError as exc:
        raise PipelineError(f"{path}:{exc.line}:{exc.column}: {exc.message}") from exc
    except StateFrameError as exc:
        raise PipelineError(f"{path}: {exc}") from exc


def run_validation(config: RunConfig) -> ValidationResult:
    reg, erp, rulesets = load_inputs(config)
    return validate_exports(reg, erp, rulesets, config.datum_kinds, threads=config.threads)


def validate_exports(
    reg: RegulatoryExport,
    erp: ErpExport,
    rulesets: list[MappingRuleSet],
    datum_kinds: tuple[DatumKind, ...] = DEFAULT_DATUM_KINDS,
    threads: int = 1,
) -> ValidationResult:
    """Run the full pipeline over already-parsed exports."""
    groups = group_by_licence(reg)
    graph = build_graph(erp, erp.final_products)
    rules_index = {(rs.product_id, rs.datum): rs for rs in rulesets}
    items_by_code = _index_items(erp)

    finals = sorted(erp.final_item_codes)
    for final in finals:
        product = erp.final_products[final]
        if product not in groups:
            raise PipelineError(
                f"final item {final!r} validates under licence {product!r}, "
                f"which has no records in the regulatory export"
            )

    # Expected frames are shared by finals of one licence; build them once,
    # up front, so the per-final fan-out below stays read-only.
    expected: dict[tuple[str, DatumKind], ExpectedProductionFrame] = {}
    reg_frames: dict[tuple[str, DatumKind], ReferenceFrame] = {}
    licences_with_finals = sorted({erp.final_products[f] for f in finals})
    for licence in licences_with_finals:
        for datum in datum_kinds:
            frame = build_regulatory_frame(groups[licence], datum)
            reg_frames[(licence, datum)] = frame
            ruleset = rules_index.get((frame.product_id, datum))
            if ruleset is None:
                raise PipelineError(
                    f"no mapping rules for product line {frame.product_id!r} datum {datum}"
                )
            try:
                expected[(licence, datum)] = apply_mapping(frame, ruleset)
            except StateFrameError as exc:
                raise PipelineError(f"licence {licence}, datum {datum}: {exc}") from exc

    tasks = [(final, datum) for final in finals for datum in datum_kinds]

    def check_one(task: tuple[str, DatumKind]):
        final, datum = task
        product = erp.final_products[final]
        exp = _specialize(expected[(product, datum)], product)
        actual = _actual_frame(graph, items_by_code, final, product, datum, exp.frame.country)
        return (
            check_frames(exp, actual),
            uncovered_values(exp, actual),
            actual,
        )

    results = _fan_out(tasks, check_one, threads)

    exceptions: list[ComplianceException] = []
    uncovered: list[UncoveredValue] = []
    actual_by_datum: dict[DatumKind, list[ReferenceFrame]] = {d: [] for d in datum_kinds}
    for (final, datum), (excs, uncov, actual) in zip(tasks, results):
        exceptions.extend(excs)
        uncovered.extend(uncov)
        actual_by_datum[datum].append(actual)

    for datum in datum_kinds:
        exceptions.extend(check_item_codes(actual_by_datum[datum]))
        line_frames = [
            reg_frames.get((licence, datum)) or build_regulatory_frame(groups[licence], datum)
            for licence in sorted(groups)
        ]
        exceptions.extend(check_cross_country(line_frames))

    ordered = sort_exceptions(exceptions)
    products = sorted(set(erp.final_products.values()))
    per_product = {
        p: not any(p in e.affected_products for e in ordered) for p in products
    }
    report = ExceptionReport(
        exceptions=ordered,
        final_products_checked=len(products),
        final_products_compliant=sum(per_product.values()),
        uncovered=tuple(
            sorted(set(uncovered), key=lambda u: (u.product, u.datum.name, u.subject, u.item_code or ""))
        ),
    )
    return ValidationResult(report=report, graph=graph, product_line=reg.product_line)


def _index_items(erp: ErpExport) -> dict[str, list]:
    index: dict[str, list] = {}
    for item in erp.items:
        index.setdefault(item.item_code, []).append(item)
    return index


def _specialize(expected: ExpectedProductionFrame, product: str) -> ExpectedProductionFrame:
    """Re-key a licence-level expected frame to the product it checks."""
    if expected.frame.product_id == product:
        return expected
    return ExpectedProductionFrame(
        frame=dataclasses.replace(expected.frame, product_id=product),
        provenance=expected.provenance,
    )


def _actual_frame(
    graph: StateGraph,
    items_by_code: dict[str, list],
    final: str,
    product: str,
    datum: DatumKind,
    country: str,
) -> ReferenceFrame:
    """Rebuild one final product's production frame from its filiation closure."""
    entries: list[FrameEntry] = []
    claimed: dict[tuple[str, str | None], str] = {}
    for code in sorted(graph.closure(final)):
        for item in items_by_code.get(code, []):
            if item.datum != datum:
                continue
            key = (item.state, item.component)
            if key in claimed and claimed[key] != code:
                state = item.state if item.component is None else f"{item.state}.{item.component}"
                raise PipelineError(
                    f"final item {final!r}: state {state!r} carried by both "
                    f"{claimed[key]!r} and {code!r} for datum {datum}"
                )
            if key in claimed:
                continue
            claimed[key] = code
            entries.append(
                FrameEntry(
                    state=StateId(System.PRODUCTION, item.state),
                    component=item.component,
                    value=item.value,
                    item_code=code,
                )
            )
    return ReferenceFrame(
        product_id=product,
        licence_number=product,
        country=country,
        datum=datum,
        entries=tuple(entries),
    )


def _fan_out(tasks, worker, threads: int):
    if threads <= 1:
        return [worker(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, tasks))
