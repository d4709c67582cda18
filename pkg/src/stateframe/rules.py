"""Mapping-rule DSL: declares how regulatory states feed production states.

A rule file holds one block per (product, datum); each link connects any
number of regulatory source states to any number of production target
states through a single transform, and every target receives the one
transformed value::

    # GRIPPE shelf-life mapping
    map product GRIPPE datum shelf_life {
        link [S2, S3] -> [BULK] using min;
        link [S5] -> [FINAL, FINAL_EXPORT] using identity;
        link [] -> [LABEL] using constant(36 months);
    }

States may be narrowed to a component with a dot (FINAL.bottle_2).
Within one block a production target may be written by only one link, so
the expected value is always unambiguous.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum

from .errors import (
    ArityError,
    DuplicateTarget,
    EmptyInput,
    MixedVariants,
    ParseError,
    StateFrameError,
    TransformTypeError,
    UnsupportedVariant,
)
from .model import (
    SHELF_LIFE,
    SITE_OF_MANUFACTURING,
    STORAGE_CONDITION,
    DataValue,
    DatumKind,
    Duration,
    Number,
    ReferenceFrame,
    StateId,
    StateRef,
    System,
    Temperature,
    normalize_value,
    parse_state_ref,
    render_value,
)


class TransformKind(Enum):
    IDENTITY = "identity"
    SUM = "sum"
    AVERAGE = "average"
    MIN = "min"
    MAX = "max"
    CONSTANT = "constant"


#: Variants each aggregating transform is defined for.
_SUMMABLE = (Duration, Number)
_ORDERABLE = (Duration, Number, Temperature)


@dataclass(frozen=True)
class Transform:
    """A link's value transform; CONSTANT carries its literal value."""

    kind: TransformKind
    value: DataValue | None = None

    def __post_init__(self):
        if (self.kind == TransformKind.CONSTANT) != (self.value is not None):
            raise ValueError("constant transforms carry a value, others do not")

    def render(self) -> str:
        if self.kind == TransformKind.CONSTANT:
            raw, unit = render_value(self.value)
            return f"constant({raw} {unit})"
        return self.kind.value


@dataclass(frozen=True)
class LinkRule:
    """One n..n link between regulatory and production states."""

    source_refs: tuple[StateRef, ...]
    target_refs: tuple[StateRef, ...]
    transform: Transform
    datum: DatumKind
    location: tuple[int, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.target_refs:
            raise ValueError("link has no target states")
        if self.transform.kind == TransformKind.IDENTITY and len(self.source_refs) != 1:
            raise ValueError("identity links take exactly one source state")
        if self.transform.kind != TransformKind.CONSTANT and not self.source_refs:
            raise ValueError("only constant links may omit source states")

    def render(self) -> str:
        src = ",".join(str(r) for r in self.source_refs)
        tgt = ",".join(str(r) for r in self.target_refs)
        return f"link [{src}] -> [{tgt}] using {self.transform.render()};"


@dataclass(frozen=True)
class MappingRuleSet:
    """All links for one (product, datum), single writer per target."""

    product_id: str
    datum: DatumKind
    rules: tuple[LinkRule, ...]

    def __post_init__(self):
        seen: set[tuple[str, str | None]] = set()
        for rule in self.rules:
            for ref in rule.target_refs:
                if ref.key in seen:
                    raise ValueError(f"target {ref} written by two links")
                seen.add(ref.key)


@dataclass(frozen=True)
class Diagnostic:
    """A non-fatal finding from pre-flight rule validation."""

    code: str
    message: str
    location: tuple[int, int] | None = field(default=None, compare=False)

    def __str__(self) -> str:
        if self.location:
            return f"{self.location[0]}:{self.location[1]}: {self.code}: {self.message}"
        return f"{self.code}: {self.message}"


def apply_transform(transform: Transform, inputs: list[DataValue]) -> DataValue:
    """Collapse the gathered source values into the single target value."""
    if transform.kind == TransformKind.CONSTANT:
        return transform.value
    if not inputs:
        raise EmptyInput(f"{transform.kind.value} received no input values")
    variant = type(inputs[0])
    if any(type(v) is not variant for v in inputs):
        names = sorted({type(v).__name__ for v in inputs})
        raise MixedVariants(f"mixed value variants: {', '.join(names)}")

    kind = transform.kind
    if kind == TransformKind.IDENTITY:
        if len(inputs) != 1:
            raise ValueError("identity expects exactly one input")
        return inputs[0]
    if kind in (TransformKind.SUM, TransformKind.AVERAGE):
        if variant not in _SUMMABLE:
            raise UnsupportedVariant(f"{kind.value} is undefined for {variant.__name__}")
        if variant is Duration:
            total = sum(v.months for v in inputs)
            if kind == TransformKind.SUM:
                return Duration(total)
            # Half-up rounding to whole months, in exact integer arithmetic.
            n = len(inputs)
            return Duration((2 * total + n) // (2 * n))
        total = sum((v.value for v in inputs), Decimal(0))
        if kind == TransformKind.SUM:
            return Number(total)
        return Number(total / len(inputs))
    if kind in (TransformKind.MIN, TransformKind.MAX):
        if variant not in _ORDERABLE:
            raise UnsupportedVariant(f"{kind.value} is undefined for {variant.__name__}")
        pick = min if kind == TransformKind.MIN else max
        if variant is Duration:
            return pick(inputs, key=lambda v: v.months)
        if variant is Temperature:
            return pick(inputs, key=lambda v: v.celsius)
        return pick(inputs, key=lambda v: v.value)
    raise ValueError(f"unhandled transform kind: {kind}")


def validate_rules(
    rules: MappingRuleSet,
    reg_frame: ReferenceFrame,
    prod_states: list[StateId] | None,
) -> list[Diagnostic]:
    """Pre-flight a rule set against a regulatory frame.

    Reports sources that are absent or inactive in the frame and, when a
    production state list is given, targets outside it. An empty result
    means the set is applicable.
    """
    if rules.datum != reg_frame.datum:
        raise ValueError(f"rule set is for {rules.datum}, frame for {reg_frame.datum}")
    known_targets = {s.name for s in prod_states} if prod_states is not None else None
    diagnostics: list[Diagnostic] = []
    for rule in rules.rules:
        if rule.transform.kind != TransformKind.CONSTANT:
            for ref in rule.source_refs:
                entry = reg_frame.entry(ref.key)
                if entry is None:
                    diagnostics.append(
                        Diagnostic("UnknownSourceState", f"source state {ref} not in frame", rule.location)
                    )
                elif not entry.active:
                    diagnostics.append(
                        Diagnostic("InactiveSourceState", f"source state {ref} carries no value", rule.location)
                    )
        if known_targets is not None:
            for ref in rule.target_refs:
                if ref.state.name not in known_targets:
                    diagnostics.append(
                        Diagnostic("UnknownTargetState", f"target state {ref} not in production states", rule.location)
                    )
    return diagnostics


# --- DSL parsing ------------------------------------------------------------

_TOKEN = re.compile(
    r"""(?P<ws>[ \t\r]+)
      | (?P<comment>\#[^\n]*)
      | (?P<nl>\n)
      | (?P<arrow>->)
      | (?P<punct>[\[\]{}(),;])
      | (?P<word>(?:[A-Za-z0-9_.+]|-(?!>))+)
    """,
    re.VERBOSE,
)

_KEYWORDS = ("map", "product", "datum", "link", "using")
_PLAIN_TRANSFORMS = {
    "identity": TransformKind.IDENTITY,
    "sum": TransformKind.SUM,
    "average": TransformKind.AVERAGE,
    "min": TransformKind.MIN,
    "max": TransformKind.MAX,
}


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        if m.lastgroup == "nl":
            line += 1
            line_start = m.end()
        elif m.lastgroup not in ("ws", "comment"):
            tokens.append(_Token(m.group(), line, pos - line_start + 1))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def _fail(self, message: str, token: _Token | None = None):
        if token is None:
            token = self.tokens[self.pos - 1] if self.tokens else None
        if token is None:
            raise ParseError(message, 1, 1)
        raise ParseError(message, token.line, token.column)

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self, what: str) -> _Token:
        token = self.peek()
        if token is None:
            last = self.tokens[-1] if self.tokens else _Token("", 1, 1)
            raise ParseError(f"unexpected end of file, expected {what}", last.line, last.column)
        self.pos += 1
        return token

    def expect(self, literal: str) -> _Token:
        token = self.next(repr(literal))
        if token.text != literal:
            raise ParseError(f"expected {literal!r}, found {token.text!r}", token.line, token.column)
        return token

    def word(self, what: str) -> _Token:
        token = self.next(what)
        if not re.match(r"^[A-Za-z0-9_.+-]+$", token.text) or token.text in _KEYWORDS:
            raise ParseError(f"expected {what}, found {token.text!r}", token.line, token.column)
        return token

    def parse_file(self) -> list[MappingRuleSet]:
        sets: list[MappingRuleSet] = []
        seen: set[tuple[str, str]] = set()
        while self.peek() is not None:
            ruleset, header = self.parse_map_block()
            key = (ruleset.product_id, ruleset.datum.name)
            if key in seen:
                raise ParseError(
                    f"second map block for product {key[0]!r} datum {key[1]!r}",
                    header.line,
                    header.column,
                )
            seen.add(key)
            sets.append(ruleset)
        return sets

    def parse_map_block(self) -> tuple[MappingRuleSet, _Token]:
        header = self.expect("map")
        self.expect("product")
        product = self.word("a product identifier").text
        self.expect("datum")
        datum_token = self.word("a datum kind")
        try:
            datum = DatumKind(datum_token.text)
        except ValueError:
            self._fail(f"illegal datum kind {datum_token.text!r}", datum_token)
        self.expect("{")
        rules: list[LinkRule] = []
        targets_seen: dict[tuple[str, str | None], tuple[int, int]] = {}
        while True:
            token = self.peek()
            if token is None:
                self._fail("unexpected end of file inside map block")
            if token.text == "}":
                self.pos += 1
                break
            rules.append(self.parse_link(datum, targets_seen))
        return MappingRuleSet(product_id=product, datum=datum, rules=tuple(rules)), header

    def parse_link(self, datum, targets_seen) -> LinkRule:
        start = self.expect("link")
        sources = self.parse_ref_list(System.REGULATORY, allow_empty=True)
        self.expect("->")
        targets = self.parse_ref_list(System.PRODUCTION, allow_empty=False)
        self.expect("using")
        transform = self.parse_transform(datum)
        self.expect(";")
        location = (start.line, start.column)

        if transform.kind == TransformKind.IDENTITY and len(sources) != 1:
            raise ArityError(
                f"identity takes exactly one source state, found {len(sources)}",
                start.line,
                start.column,
            )
        if transform.kind != TransformKind.CONSTANT and not sources:
            raise ArityError("only constant links may omit source states", start.line, start.column)
        _check_transform_type(transform, datum, start)
        for ref in targets:
            if ref.key in targets_seen:
                first = targets_seen[ref.key]
                raise DuplicateTarget(
                    f"target {ref} already written by link at {first[0]}:{first[1]}",
                    start.line,
                    start.column,
                )
            targets_seen[ref.key] = location
        return LinkRule(
            source_refs=tuple(sources),
            target_refs=tuple(targets),
            transform=transform,
            datum=datum,
            location=location,
        )

    def parse_ref_list(self, system: System, allow_empty: bool) -> list[StateRef]:
        self.expect("[")
        refs: list[StateRef] = []
        token = self.peek()
        if token is not None and token.text == "]":
            self.pos += 1
            if not allow_empty and not refs:
                self._fail("empty target state list", token)
            return refs
        while True:
            token = self.word("a state name")
            try:
                refs.append(parse_state_ref(token.text, system))
            except ValueError as exc:
                self._fail(str(exc), token)
            sep = self.next("',' or ']'")
            if sep.text == "]":
                return refs
            if sep.text != ",":
                self._fail(f"expected ',' or ']', found {sep.text!r}", sep)

    def parse_transform(self, datum: DatumKind) -> Transform:
        token = self.next("a transform name")
        if token.text in _PLAIN_TRANSFORMS:
            return Transform(_PLAIN_TRANSFORMS[token.text])
        if token.text != "constant":
            self._fail(f"unknown transform {token.text!r}", token)
        self.expect("(")
        value_token = self.word("a constant value")
        unit_token = self.word("a unit")
        self.expect(")")
        try:
            value = normalize_value(value_token.text, unit_token.text, datum)
        except (StateFrameError, ValueError) as exc:
            self._fail(str(exc), value_token)
        return Transform(TransformKind.CONSTANT, value)


def _check_transform_type(transform: Transform, datum: DatumKind, token: _Token):
    """Reject transforms that can never apply to the datum's value variant."""
    kind = transform.kind
    if kind in (TransformKind.IDENTITY, TransformKind.CONSTANT):
        return
    if datum == SITE_OF_MANUFACTURING:
        raise TransformTypeError(f"{kind.value} is undefined for site codes", token.line, token.column)
    if datum == STORAGE_CONDITION and kind in (TransformKind.SUM, TransformKind.AVERAGE):
        raise TransformTypeError(f"{kind.value} is undefined for temperatures", token.line, token.column)
    # shelf_life is a duration and custom kinds are unknown until runtime;
    # both are left to apply_transform's variant checks.


def parse_rules(source) -> list[MappingRuleSet]:
    """Parse a DSL file into rule sets, with positions kept for diagnostics."""
    if isinstance(source, (bytes, bytearray)):
        text = bytes(source).decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    return _Parser(text).parse_file()


def render_rules(rulesets: list[MappingRuleSet]) -> str:
    """Serialize rule sets back to canonical DSL text."""
    blocks = []
    for rs in rulesets:
        lines = [f"map product {rs.product_id} datum {rs.datum} {{"]
        lines.extend(f"    {rule.render()}" for rule in rs.rules)
        lines.append("}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")
