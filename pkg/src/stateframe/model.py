"""Domain types shared by every other module.

Everything here is an immutable value object: construction validates the
structural invariants, after which instances are freely shareable. No I/O
and no rules logic live in this module.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from enum import Enum

from .errors import UnknownUnit, ValueUnitMismatch

_CUSTOM_NAME = re.compile(r"^[a-z][a-z0-9_]*$")
_STATE_NAME = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")
_COMPONENT_NAME = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")

#: Accepted raw unit vocabulary for ingest and rendering.
UNITS = ("years", "months", "celsius", "none")


@dataclass(frozen=True)
class DatumKind:
    """A kind of product datum (shelf life, storage condition, ...).

    The three built-in kinds cover the classic registration data; any other
    lowercase identifier is an open, custom kind.
    """

    name: str

    def __post_init__(self):
        if not _CUSTOM_NAME.match(self.name):
            raise ValueError(f"illegal datum kind name: {self.name!r}")

    @property
    def is_builtin(self) -> bool:
        return self.name in _BUILTIN_DATUM_NAMES

    def __str__(self) -> str:
        return self.name


SITE_OF_MANUFACTURING = DatumKind("site_of_manufacturing")
SHELF_LIFE = DatumKind("shelf_life")
STORAGE_CONDITION = DatumKind("storage_condition")

_BUILTIN_DATUM_NAMES = frozenset(
    (SITE_OF_MANUFACTURING.name, SHELF_LIFE.name, STORAGE_CONDITION.name)
)

#: The default set of datum kinds a validation run checks.
DEFAULT_DATUM_KINDS = (SITE_OF_MANUFACTURING, SHELF_LIFE, STORAGE_CONDITION)


class System(Enum):
    """Which information system a state belongs to."""

    REGULATORY = "regulatory"
    PRODUCTION = "production"


@dataclass(frozen=True)
class StateId:
    """Name of one product state within one system.

    Regulatory and production names live in disjoint namespaces: the same
    spelling on both sides never implies identity.
    """

    system: System
    name: str

    def __post_init__(self):
        if not _STATE_NAME.match(self.name):
            raise ValueError(f"illegal state name: {self.name!r}")

    def __str__(self) -> str:
        return self.name


class DataValue:
    """Base for the tagged union of datum payloads.

    Equality is structural and variant-aware: a 12-month duration never
    equals the bare number 12.
    """

    __slots__ = ()


@dataclass(frozen=True)
class Duration(DataValue):
    """A shelf life, always stored in whole months."""

    months: int

    def __post_init__(self):
        if not isinstance(self.months, int) or self.months < 1:
            raise ValueError(f"duration months must be a positive integer: {self.months!r}")


@dataclass(frozen=True)
class Temperature(DataValue):
    """A single storage set-point in degrees Celsius."""

    celsius: int


@dataclass(frozen=True)
class TemperatureRange(DataValue):
    """An inclusive storage band in degrees Celsius."""

    low: int
    high: int

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"temperature range inverted: {self.low}..{self.high}")


@dataclass(frozen=True)
class Site(DataValue):
    """A manufacturing site code."""

    code: str

    def __post_init__(self):
        if not self.code or self.code != self.code.strip():
            raise ValueError(f"site code must be non-empty and trimmed: {self.code!r}")


@dataclass(frozen=True)
class Text(DataValue):
    """Free text carried through unchanged."""

    value: str


@dataclass(frozen=True)
class Number(DataValue):
    """A bare decimal quantity (custom datum kinds only)."""

    value: Decimal

    def __post_init__(self):
        object.__setattr__(self, "value", _clean_decimal(self.value))


def _clean_decimal(d: Decimal) -> Decimal:
    """Canonicalize so that renders of equal decimals are byte-identical."""
    d = Decimal(d)
    if d == d.to_integral_value():
        return d.quantize(Decimal(1))
    return d.normalize()


_RANGE = re.compile(r"^(-?\d+)\.\.(-?\d+)$")


def normalize_value(raw_value: str, raw_unit: str, datum: DatumKind) -> DataValue:
    """Turn a raw (value, unit) pair into a normalized DataValue.

    Durations land in whole months, temperatures in °C; sites and text
    pass through trimmed. Raises UnknownUnit for units outside the
    vocabulary and ValueUnitMismatch when the unit cannot apply to the
    datum kind (a shelf life in celsius, say).
    """
    unit = raw_unit.strip()
    if unit not in UNITS:
        raise UnknownUnit(f"unknown unit {unit!r} (expected one of {', '.join(UNITS)})")
    value = raw_value.strip()

    if datum == SHELF_LIFE:
        if unit not in ("years", "months"):
            raise ValueUnitMismatch(f"shelf life cannot carry unit {unit!r}")
        return _parse_duration(value, unit)
    if datum == STORAGE_CONDITION:
        if unit != "celsius":
            raise ValueUnitMismatch(f"storage condition cannot carry unit {unit!r}")
        return _parse_temperature(value)
    if datum == SITE_OF_MANUFACTURING:
        if unit != "none":
            raise ValueUnitMismatch(f"site of manufacturing cannot carry unit {unit!r}")
        if not value:
            raise ValueError("empty site code")
        return Site(value)

    # Custom kinds: the unit decides the variant; unitless values become
    # numbers when they parse as one, free text otherwise.
    if unit in ("years", "months"):
        return _parse_duration(value, unit)
    if unit == "celsius":
        return _parse_temperature(value)
    try:
        return Number(Decimal(value))
    except InvalidOperation:
        return Text(value)


def _parse_duration(value: str, unit: str) -> Duration:
    try:
        n = int(value)
    except ValueError as exc:
        raise ValueError(f"duration value must be an integer: {value!r}") from exc
    return Duration(n * 12 if unit == "years" else n)


def _parse_temperature(value: str) -> Temperature | TemperatureRange:
    m = _RANGE.match(value)
    if m:
        return TemperatureRange(int(m.group(1)), int(m.group(2)))
    try:
        return Temperature(int(value))
    except ValueError as exc:
        raise ValueError(f"temperature must be an integer or low..high: {value!r}") from exc


def render_value(value: DataValue) -> tuple[str, str]:
    """Inverse of normalize_value: a canonical (raw_value, raw_unit) pair.

    Re-normalizing the result yields a structurally equal value (for text,
    provided it does not itself parse as a number).
    """
    if isinstance(value, Duration):
        return str(value.months), "months"
    if isinstance(value, Temperature):
        return str(value.celsius), "celsius"
    if isinstance(value, TemperatureRange):
        return f"{value.low}..{value.high}", "celsius"
    if isinstance(value, Site):
        return value.code, "none"
    if isinstance(value, Number):
        return str(value.value), "none"
    if isinstance(value, Text):
        return value.value, "none"
    raise TypeError(f"not a DataValue: {value!r}")


def value_to_string(value: DataValue | None) -> str | None:
    """Human-readable rendering used in reports ('36 months', '-70 celsius')."""
    if value is None:
        return None
    raw, unit = render_value(value)
    return raw if unit == "none" else f"{raw} {unit}"


def values_equal(a: DataValue, b: DataValue) -> bool:
    """Structural equality; values of different variants are never equal."""
    return a == b


@dataclass(frozen=True)
class StateRef:
    """A state, optionally narrowed to one of its components ('FINAL.bottle_2')."""

    state: StateId
    component: str | None = None

    def __post_init__(self):
        if self.component is not None and not _COMPONENT_NAME.match(self.component):
            raise ValueError(f"illegal component name: {self.component!r}")

    @property
    def key(self) -> tuple[str, str | None]:
        return (self.state.name, self.component)

    def __str__(self) -> str:
        if self.component is None:
            return self.state.name
        return f"{self.state.name}.{self.component}"


def parse_state_ref(text: str, system: System) -> StateRef:
    """Parse 'STATE' or 'STATE.component' into a StateRef."""
    name, dot, component = text.partition(".")
    return StateRef(StateId(system, name), component if dot else None)


@dataclass(frozen=True)
class FrameEntry:
    """One line of a reference frame: a state and what we know about it.

    An entry is ACTIVE when it carries a value or an extraction rule;
    entries with neither stand for states that are not significant for
    this datum. Business constraints are opaque text for human readers,
    never interpreted by the engine.
    """

    state: StateId
    component: str | None = None
    value: DataValue | None = None
    extraction_rule_id: str | None = None
    integration_rule_id: str | None = None
    business_constraint: str = ""
    item_code: str | None = None

    @property
    def active(self) -> bool:
        return self.value is not None or self.extraction_rule_id is not None

    @property
    def key(self) -> tuple[str, str | None]:
        return (self.state.name, self.component)

    @property
    def subject(self) -> str:
        if self.component is None:
            return self.state.name
        return f"{self.state.name}.{self.component}"


@dataclass(frozen=True)
class ReferenceFrame:
    """Per-(product, datum) table assigning each state a value and rules."""

    product_id: str
    licence_number: str
    country: str
    datum: DatumKind
    entries: tuple[FrameEntry, ...]

    def __post_init__(self):
        seen: set[tuple[str, str | None]] = set()
        systems = set()
        for entry in self.entries:
            if entry.key in seen:
                raise ValueError(f"duplicate (state, component) in frame: {entry.subject}")
            seen.add(entry.key)
            systems.add(entry.state.system)
        if len(systems) > 1:
            raise ValueError("frame mixes regulatory and production states")

    @property
    def system(self) -> System | None:
        return self.entries[0].state.system if self.entries else None

    def entry(self, key: tuple[str, str | None]) -> FrameEntry | None:
        for e in self.entries:
            if e.key == key:
                return e
        return None

    def active_entries(self) -> tuple[FrameEntry, ...]:
        return tuple(e for e in self.entries if e.active)


@dataclass(frozen=True)
class RegistrationRecord:
    """One row of a regulatory export, with its normalized value attached."""

    product_line: str
    licence_number: str
    country: str
    state: str
    component: str | None
    datum: DatumKind
    raw_value: str
    raw_unit: str
    value: DataValue


@dataclass(frozen=True)
class ErpItem:
    """One (item, datum) row of an ERP export.

    The same item code may legally appear under several state labels; rule
    two of the coherence checks exists to catch the value drift that
    produces. Parents are the item codes this item is built into; a shared
    state lists every parent.
    """

    item_code: str
    state: str
    component: str | None
    parent_item_codes: tuple[str, ...]
    datum: DatumKind
    value: DataValue
    quality: str | None = None


__all__ = [
    "DatumKind",
    "SITE_OF_MANUFACTURING",
    "SHELF_LIFE",
    "STORAGE_CONDITION",
    "DEFAULT_DATUM_KINDS",
    "System",
    "StateId",
    "StateRef",
    "parse_state_ref",
    "DataValue",
    "Duration",
    "Temperature",
    "TemperatureRange",
    "Site",
    "Text",
    "Number",
    "normalize_value",
    "render_value",
    "value_to_string",
    "values_equal",
    "FrameEntry",
    "ReferenceFrame",
    "RegistrationRecord",
    "ErpItem",
    "UNITS",
]
