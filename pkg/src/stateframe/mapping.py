"""Build regulatory reference frames and map them into expected production frames."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import ConflictingRecord, MissingSourceValue
from .model import (
    DatumKind,
    FrameEntry,
    ReferenceFrame,
    RegistrationRecord,
    StateId,
    StateRef,
    System,
    value_to_string,
    values_equal,
)
from .rules import LinkRule, MappingRuleSet, Transform, TransformKind, apply_transform


@dataclass(frozen=True)
class Provenance:
    """Where an expected production value came from."""

    source_refs: tuple[StateRef, ...]
    transform: Transform
    location: tuple[int, int] | None

    def describe(self) -> str:
        if self.transform.kind == TransformKind.CONSTANT:
            return self.transform.render()
        sources = ",".join(str(r) for r in self.source_refs)
        return f"{self.transform.render()}([{sources}])"


@dataclass(frozen=True)
class ExpectedProductionFrame:
    """A production-side frame derived from regulatory data via mapping rules.

    Entries exist only for rule targets; every active entry records which
    regulatory states and transform produced it.
    """

    frame: ReferenceFrame
    provenance: Mapping[tuple[str, str | None], Provenance]

    def __post_init__(self):
        for entry in self.frame.entries:
            if entry.active and entry.key not in self.provenance:
                raise ValueError(f"active expected entry {entry.subject} lacks provenance")


def build_regulatory_frame(records: Iterable[RegistrationRecord], datum: DatumKind) -> ReferenceFrame:
    """Instantiate one regulatory frame from a licence's records.

    Every state mentioned anywhere in the licence group gets an entry;
    states with no record for this datum stay inactive.
    """
    records = list(records)
    if not records:
        raise ValueError("cannot build a frame from zero records")
    licence = records[0].licence_number
    for r in records:
        if r.licence_number != licence:
            raise ValueError(f"records mix licences {licence!r} and {r.licence_number!r}")

    order: list[tuple[str, str | None]] = []
    values: dict[tuple[str, str | None], RegistrationRecord] = {}
    for r in records:
        key = (r.state, r.component)
        if key not in order:
            order.append(key)
        if r.datum != datum:
            continue
        earlier = values.get(key)
        if earlier is not None and not values_equal(earlier.value, r.value):
            raise ConflictingRecord(
                f"conflicting values for ({licence}, {r.state}, {datum}): "
                f"{value_to_string(earlier.value)} vs {value_to_string(r.value)}"
            )
        values.setdefault(key, r)

    entries = tuple(
        FrameEntry(
            state=StateId(System.REGULATORY, name),
            component=component,
            value=values[(name, component)].value if (name, component) in values else None,
        )
        for name, component in order
    )
    return ReferenceFrame(
        product_id=records[0].product_line,
        licence_number=licence,
        country=records[0].country,
        datum=datum,
        entries=entries,
    )


def apply_mapping(reg_frame: ReferenceFrame, rules: MappingRuleSet) -> ExpectedProductionFrame:
    """Apply a rule set to a regulatory frame, yielding the expected production frame.

    Each link gathers its source values, applies its transform once and
    writes the result to every target. A link that reads an inactive or
    absent regulatory state raises MissingSourceValue: a silently missing
    regulatory value is itself a finding, never something to skip.
    """
    if rules.datum != reg_frame.datum:
        raise ValueError(f"rule set is for {rules.datum}, frame for {reg_frame.datum}")

    active = {e.key: e for e in reg_frame.entries if e.active}
    entries: list[FrameEntry] = []
    provenance: dict[tuple[str, str | None], Provenance] = {}
    for rule in rules.rules:
        value = _evaluate(rule, active)
        constraint = "; ".join(
            c for c in (
                active[ref.key].business_constraint
                for ref in rule.source_refs
                if ref.key in active
            ) if c
        )
        location = rule.location
        rule_id = f"link@{location[0]}:{location[1]}" if location else "link"
        for ref in rule.target_refs:
            entries.append(
                FrameEntry(
                    state=StateId(System.PRODUCTION, ref.state.name),
                    component=ref.component,
                    value=value,
                    integration_rule_id=rule_id,
                    business_constraint=constraint,
                )
            )
            provenance[ref.key] = Provenance(
                source_refs=rule.source_refs if rule.transform.kind != TransformKind.CONSTANT else (),
                transform=rule.transform,
                location=location,
            )

    frame = ReferenceFrame(
        product_id=reg_frame.product_id,
        licence_number=reg_frame.licence_number,
        country=reg_frame.country,
        datum=reg_frame.datum,
        entries=tuple(entries),
    )
    return ExpectedProductionFrame(frame=frame, provenance=provenance)


def _evaluate(rule: LinkRule, active: Mapping[tuple[str, str | None], FrameEntry]):
    if rule.transform.kind == TransformKind.CONSTANT:
        return apply_transform(rule.transform, [])
    values = []
    for ref in rule.source_refs:
        entry = active.get(ref.key)
        if entry is None or entry.value is None:
            raise MissingSourceValue(rule, str(ref))
        values.append(entry.value)
    return apply_transform(rule.transform, values)
