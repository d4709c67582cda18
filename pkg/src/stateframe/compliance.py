"""Coherence checks between expected and actual production frames.

Three rules:

1. the same production state must carry the same value in the expected
   (regulatory-derived) frame and in the ERP frame;
2. the same item code must carry the same value wherever it appears;
3. registrations of one product line must agree across countries for
   every state registered in more than one country.

Violations are data, not log lines: each one is a typed exception record
naming the product, the state or item code, the two values and any
business constraint carried along for the human who triages it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Iterable, Mapping

from .errors import FrameMismatch
from .mapping import ExpectedProductionFrame
from .model import (
    DataValue,
    DatumKind,
    FrameEntry,
    ReferenceFrame,
    System,
    value_to_string,
    values_equal,
)


class ExceptionKind(Enum):
    STATE_VALUE_MISMATCH = "state_value_mismatch"
    ITEM_CODE_VALUE_MISMATCH = "item_code_value_mismatch"
    CROSS_COUNTRY_MISMATCH = "cross_country_mismatch"
    MISSING_EXPECTED_VALUE = "missing_expected_value"


_MISMATCH_KINDS = (
    ExceptionKind.STATE_VALUE_MISMATCH,
    ExceptionKind.ITEM_CODE_VALUE_MISMATCH,
    ExceptionKind.CROSS_COUNTRY_MISMATCH,
)


@dataclass(frozen=True)
class ComplianceException:
    """One coherence violation, attributable to the products it touches."""

    kind: ExceptionKind
    product: str
    subject: str
    datum: DatumKind
    expected: DataValue | None
    actual: DataValue | None
    note: str = ""
    affected_products: tuple[str, ...] = ()

    def __post_init__(self):
        if (
            self.kind in _MISMATCH_KINDS
            and self.expected is not None
            and self.actual is not None
            and values_equal(self.expected, self.actual)
        ):
            raise ValueError("mismatch exception with equal expected and actual values")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "product": self.product,
            "subject": self.subject,
            "datum": self.datum.name,
            "expected": value_to_string(self.expected),
            "actual": value_to_string(self.actual),
            "note": self.note,
            "affected_products": list(self.affected_products),
        }


@dataclass(frozen=True)
class UncoveredValue:
    """An ERP value with no regulatory counterpart (informational only)."""

    product: str
    subject: str
    datum: DatumKind
    item_code: str | None
    value: DataValue

    def to_dict(self) -> dict:
        return {
            "product": self.product,
            "subject": self.subject,
            "datum": self.datum.name,
            "item_code": self.item_code,
            "value": value_to_string(self.value),
        }


@dataclass(frozen=True)
class ExceptionReport:
    """All violations of a run plus the compliance ratio over final products."""

    exceptions: tuple[ComplianceException, ...]
    final_products_checked: int
    final_products_compliant: int
    uncovered: tuple[UncoveredValue, ...] = ()

    def __post_init__(self):
        if not 0 <= self.final_products_compliant <= self.final_products_checked:
            raise ValueError("compliant count must lie within checked count")

    @property
    def compliance_ratio(self) -> Decimal | None:
        """Percentage of compliant final products, one decimal, half-up; None when nothing was checked."""
        if self.final_products_checked == 0:
            return None
        ratio = Decimal(self.final_products_compliant) * 100 / Decimal(self.final_products_checked)
        return ratio.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)

    def ratio_display(self) -> str:
        ratio = self.compliance_ratio
        return "n/a" if ratio is None else f"{ratio}%"


def _joined_note(*entries: FrameEntry | None) -> str:
    return "; ".join(
        e.business_constraint for e in entries if e is not None and e.business_constraint
    )


def check_frames(expected: ExpectedProductionFrame, actual: ReferenceFrame) -> list[ComplianceException]:
    """Rule one: same production state, same value.

    Emits a mismatch for every state active on both sides with different
    values and a missing-expected-value finding where the ERP is silent
    about a state the registration mandates. ERP-only states are not
    exceptions; the caller may surface them as uncovered values.
    """
    exp = expected.frame
    if exp.product_id != actual.product_id or exp.datum != actual.datum:
        raise FrameMismatch(
            f"cannot compare ({exp.product_id}, {exp.datum}) with ({actual.product_id}, {actual.datum})"
        )
    if actual.system == System.REGULATORY:
        raise FrameMismatch("actual frame holds regulatory states, expected production ones")

    exceptions: list[ComplianceException] = []
    for entry in exp.entries:
        if entry.value is None:
            continue
        found = actual.entry(entry.key)
        if found is None or found.value is None:
            exceptions.append(
                ComplianceException(
                    kind=ExceptionKind.MISSING_EXPECTED_VALUE,
                    product=actual.product_id,
                    subject=entry.subject,
                    datum=exp.datum,
                    expected=entry.value,
                    actual=None,
                    note=_joined_note(entry, found),
                    affected_products=(actual.product_id,),
                )
            )
        elif not values_equal(entry.value, found.value):
            exceptions.append(
                ComplianceException(
                    kind=ExceptionKind.STATE_VALUE_MISMATCH,
                    product=actual.product_id,
                    subject=entry.subject,
                    datum=exp.datum,
                    expected=entry.value,
                    actual=found.value,
                    note=_joined_note(entry, found),
                    affected_products=(actual.product_id,),
                )
            )
    return exceptions


def uncovered_values(expected: ExpectedProductionFrame, actual: ReferenceFrame) -> list[UncoveredValue]:
    """ERP values active where the expected frame has nothing to say."""
    covered = {e.key for e in expected.frame.entries if e.value is not None}
    return [
        UncoveredValue(
            product=actual.product_id,
            subject=entry.subject,
            datum=actual.datum,
            item_code=entry.item_code,
            value=entry.value,
        )
        for entry in actual.entries
        if entry.value is not None and entry.key not in covered
    ]


def check_item_codes(frames: Iterable[ReferenceFrame]) -> list[ComplianceException]:
    """Rule two: one item code, one value, wherever the code appears."""
    frames = list(frames)
    datums = {f.datum for f in frames}
    if len(datums) > 1:
        raise ValueError(f"frames mix datum kinds: {sorted(d.name for d in datums)}")

    by_code: dict[str, list[tuple[ReferenceFrame, FrameEntry]]] = {}
    for frame in frames:
        for entry in frame.entries:
            if entry.value is not None and entry.item_code is not None:
                by_code.setdefault(entry.item_code, []).append((frame, entry))

    exceptions: list[ComplianceException] = []
    for code, occurrences in by_code.items():
        # content order, so permuting the input frames cannot change the result
        occurrences.sort(key=lambda fe: (fe[0].product_id, fe[1].subject, str(value_to_string(fe[1].value))))
        distinct: list[DataValue] = []
        for _, entry in occurrences:
            if not any(values_equal(entry.value, v) for v in distinct):
                distinct.append(entry.value)
        if len(distinct) < 2:
            continue
        products = sorted({frame.product_id for frame, _ in occurrences})
        note = "; ".join(
            f"{frame.product_id}/{entry.subject}={value_to_string(entry.value)}"
            for frame, entry in occurrences
        )
        exceptions.append(
            ComplianceException(
                kind=ExceptionKind.ITEM_CODE_VALUE_MISMATCH,
                product=products[0],
                subject=code,
                datum=frames[0].datum,
                expected=distinct[0],
                actual=distinct[1],
                note=note,
                affected_products=tuple(products),
            )
        )
    return exceptions


def check_cross_country(frames: Iterable[ReferenceFrame]) -> list[ComplianceException]:
    """Rule three: one product line, one value across all registering countries.

    Registrations that differ only by country must agree on every state
    both countries register; states known in a single country are vacuous.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("need at least one frame")
    lines = {f.product_id for f in frames}
    datums = {f.datum for f in frames}
    if len(lines) > 1:
        raise ValueError(f"frames mix product lines: {sorted(lines)}")
    if len(datums) > 1:
        raise ValueError(f"frames mix datum kinds: {sorted(d.name for d in datums)}")
    for frame in frames:
        if frame.system == System.PRODUCTION:
            raise ValueError("cross-country check runs on regulatory frames")

    occurrences: dict[tuple[str, str | None], list[tuple[ReferenceFrame, FrameEntry]]] = {}
    for frame in frames:
        for entry in frame.entries:
            if entry.value is not None:
                occurrences.setdefault(entry.key, []).append((frame, entry))

    exceptions: list[ComplianceException] = []
    for key in sorted(occurrences, key=lambda k: (k[0], k[1] or "")):
        found = occurrences[key]
        # content order, so permuting the input frames cannot change the result
        found.sort(key=lambda fe: (fe[0].country, fe[0].licence_number))
        countries = {frame.country for frame, _ in found}
        if len(countries) < 2:
            continue
        first = found[0][1].value
        if all(values_equal(entry.value, first) for _, entry in found):
            continue
        differing = next(e.value for _, e in found if not values_equal(e.value, first))
        note = "; ".join(
            f"{frame.country}({frame.licence_number})={value_to_string(entry.value)}"
            for frame, entry in found
        )
        exceptions.append(
            ComplianceException(
                kind=ExceptionKind.CROSS_COUNTRY_MISMATCH,
                product=frames[0].product_id,
                subject=found[0][1].subject,
                datum=frames[0].datum,
                expected=first,
                actual=differing,
                note=note,
                affected_products=tuple(sorted({frame.licence_number for frame, _ in found})),
            )
        )
    return exceptions


def compliance_ratio(per_product_results: Mapping[str, bool]) -> tuple[int, int, Decimal | None]:
    """Totals over final products: (checked, compliant, ratio or None).

    A final product counts as compliant only when it triggered zero
    exceptions across every check and every checked datum kind. Zero
    checked products yields a None ratio (reported as n/a), never a
    division error.
    """
    checked = len(per_product_results)
    compliant = sum(1 for ok in per_product_results.values() if ok)
    if checked == 0:
        return 0, 0, None
    ratio = (Decimal(compliant) * 100 / Decimal(checked)).quantize(
        Decimal("0.1"), rounding=ROUND_HALF_UP
    )
    return checked, compliant, ratio


def sort_exceptions(exceptions: Iterable[ComplianceException]) -> tuple[ComplianceException, ...]:
    """Deduplicate and order exceptions deterministically."""
    unique = sorted(
        set(exceptions),
        key=lambda e: (e.product, e.datum.name, e.kind.value, e.subject, str(e.note)),
    )
    return tuple(unique)


def report_to_json(report: ExceptionReport) -> str:
    """Stable JSON rendering of a report (byte-identical for equal reports)."""
    ratio = report.compliance_ratio
    payload = {
        "exceptions": [e.to_dict() for e in report.exceptions],
        "uncovered": [u.to_dict() for u in report.uncovered],
        "totals": {
            "final_products_checked": report.final_products_checked,
            "final_products_compliant": report.final_products_compliant,
        },
        "compliance_ratio": "n/a" if ratio is None else float(ratio),
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
