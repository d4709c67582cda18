"""File-based ingest of the two exports the engine reconciles.

Both formats are `;`-delimited UTF-8 text with LF line endings, a
mandatory header row and `#` comment lines. Parsing is strict: the first
problem aborts with a (line, column) position. Render functions are exact
inverses, so parse(render(export)) round-trips.

Regulatory report, one registration datum per row::

    product_line;licence_number;country;state;datum;value;unit
    GRIPPE;LIC-001;FR;INTERMEDIATE;shelf_life;3;years

ERP extract, one (item, datum) per row plus a directive naming the final
item codes (optionally bound to a product id)::

    item_code;state;parent_item_code;datum;value;unit
    B-100;BULK;F-900;shelf_life;24;months
    FINAL: F-900=LIC-001

A shared state lists every parent, comma-separated; `-` means no parent.
An optional seventh column carries an opaque quality tag.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field

from .errors import (
    CycleDetected,
    DanglingParent,
    DuplicateKey,
    ParseError,
    StateFrameError,
    UnknownDatumKind,
)
from .model import (
    DatumKind,
    DataValue,
    ErpItem,
    RegistrationRecord,
    System,
    normalize_value,
    parse_state_ref,
    render_value,
)

REGULATORY_HEADER = "product_line;licence_number;country;state;datum;value;unit"
ERP_HEADER = "item_code;state;parent_item_code;datum;value;unit"

_IDENTIFIER = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_-]*$")
_COUNTRY = re.compile(r"^[A-Z]{2}$")
_FINAL_DIRECTIVE = re.compile(r"^FINAL:\s*(.*)$")


@dataclass(frozen=True)
class RegulatoryExport:
    """All registration records exported for one product line."""

    product_line: str
    records: tuple[RegistrationRecord, ...]

    def __post_init__(self):
        for r in self.records:
            if r.product_line != self.product_line:
                raise ValueError(
                    f"record for line {r.product_line!r} in export of {self.product_line!r}"
                )


@dataclass(frozen=True)
class ErpExport:
    """All (item, datum) rows of one ERP extract plus its final items.

    final_products binds each final item code to the product identity it
    is validated under; codes declared bare map to themselves.
    """

    items: tuple[ErpItem, ...]
    final_item_codes: tuple[str, ...]
    final_products: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        codes = {i.item_code for i in self.items}
        for final in self.final_item_codes:
            if final not in codes:
                raise ValueError(f"final item code {final!r} has no item rows")
        merged = {c: self.final_products.get(c, c) for c in self.final_item_codes}
        object.__setattr__(self, "final_products", merged)


class _Lines:
    """Iterate meaningful lines of a delimited export with positions."""

    def __init__(self, source):
        if isinstance(source, (bytes, bytearray)):
            text = bytes(source).decode("utf-8")
        elif isinstance(source, str):
            text = source
        else:
            data = source.read()
            text = data.decode("utf-8") if isinstance(data, bytes) else data
        self.raw = text.split("\n")

    def __iter__(self):
        for lineno, line in enumerate(self.raw, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, line


def _split_fields(line: str, lineno: int, expected: tuple[int, ...]) -> list[tuple[str, int]]:
    """Split on `;`, returning (field, 1-based column of field start)."""
    fields: list[tuple[str, int]] = []
    col = 1
    for part in line.split(";"):
        fields.append((part.strip(), col))
        col += len(part) + 1
    if len(fields) not in expected:
        want = " or ".join(str(n) for n in expected)
        raise ParseError(f"expected {want} fields, found {len(fields)}", lineno, 1)
    return fields


def _parse_datum(name: str, lineno: int, column: int) -> DatumKind:
    try:
        return DatumKind(name)
    except ValueError:
        raise UnknownDatumKind(f"illegal datum kind name {name!r}", lineno, column) from None


def _parse_value(raw_value: str, raw_unit: str, datum: DatumKind, lineno: int, column: int) -> DataValue:
    try:
        return normalize_value(raw_value, raw_unit, datum)
    except StateFrameError as exc:
        raise ParseError(str(exc), lineno, column) from exc
    except ValueError as exc:
        raise ParseError(str(exc), lineno, column) from exc


def _check_identifier(text: str, what: str, lineno: int, column: int) -> str:
    if not _IDENTIFIER.match(text):
        raise ParseError(f"illegal {what}: {text!r}", lineno, column)
    return text


def parse_regulatory_export(source) -> RegulatoryExport:
    """Parse a regulatory report; row order is preserved."""
    lines = iter(_Lines(source))
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError("missing header row", 1, 1) from None
    if header.strip() != REGULATORY_HEADER:
        raise ParseError(f"expected header {REGULATORY_HEADER!r}", lineno, 1)

    records: list[RegistrationRecord] = []
    product_line: str | None = None
    seen: set[tuple[str, str, str | None, DatumKind]] = set()
    for lineno, line in lines:
        f = _split_fields(line, lineno, (7,))
        line_id = _check_identifier(f[0][0], "product_line", lineno, f[0][1])
        licence = _check_identifier(f[1][0], "licence_number", lineno, f[1][1])
        country = f[2][0]
        if not _COUNTRY.match(country):
            raise ParseError(f"illegal country code: {country!r}", lineno, f[2][1])
        try:
            ref = parse_state_ref(f[3][0], System.REGULATORY)
        except ValueError as exc:
            raise ParseError(str(exc), lineno, f[3][1]) from exc
        datum = _parse_datum(f[4][0], lineno, f[4][1])
        value = _parse_value(f[5][0], f[6][0], datum, lineno, f[5][1])

        if product_line is None:
            product_line = line_id
        elif line_id != product_line:
            raise ParseError(
                f"export mixes product lines {product_line!r} and {line_id!r}", lineno, f[0][1]
            )
        key = (licence, ref.state.name, ref.component, datum)
        if key in seen:
            raise DuplicateKey(
                f"duplicate record for ({licence}, {ref}, {datum})", lineno, 1
            )
        seen.add(key)
        records.append(
            RegistrationRecord(
                product_line=line_id,
                licence_number=licence,
                country=country,
                state=ref.state.name,
                component=ref.component,
                datum=datum,
                raw_value=f[5][0],
                raw_unit=f[6][0],
                value=value,
            )
        )
    return RegulatoryExport(product_line=product_line or "", records=tuple(records))


def _renderable(value: str) -> str:
    if ";" in value or "\n" in value:
        raise ValueError(f"value {value!r} is not representable in a delimited export")
    return value


def render_regulatory_export(export: RegulatoryExport) -> str:
    """Serialize back to the delimited grammar (canonical units)."""
    out = io.StringIO()
    out.write(REGULATORY_HEADER + "\n")
    for r in export.records:
        state = r.state if r.component is None else f"{r.state}.{r.component}"
        value, unit = render_value(r.value)
        out.write(
            f"{r.product_line};{r.licence_number};{r.country};{state};{r.datum};{_renderable(value)};{unit}\n"
        )
    return out.getvalue()


def _parse_final_directive(body: str, lineno: int, finals: dict[str, tuple[str, int]]):
    if not body.strip():
        raise ParseError("empty FINAL directive", lineno, 1)
    for chunk in body.split(","):
        entry = chunk.strip()
        if not entry:
            raise ParseError("empty entry in FINAL directive", lineno, 1)
        code, eq, product = entry.partition("=")
        code = code.strip()
        product = product.strip() if eq else code
        if not _IDENTIFIER.match(code) or not _IDENTIFIER.match(product):
            raise ParseError(f"illegal FINAL entry: {entry!r}", lineno, 1)
        if code in finals:
            raise DuplicateKey(f"final item {code!r} declared twice", lineno, 1)
        finals[code] = (product, lineno)


def parse_erp_export(source) -> ErpExport:
    """Parse an ERP extract and validate its filiation as a DAG."""
    lines = iter(_Lines(source))
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError("missing header row", 1, 1) from None
    stripped = header.strip()
    if stripped not in (ERP_HEADER, ERP_HEADER + ";quality"):
        raise ParseError(f"expected header {ERP_HEADER!r}", lineno, 1)

    items: list[ErpItem] = []
    first_row_of: dict[str, int] = {}
    seen: set[tuple[str, str, str | None, DatumKind]] = set()
    finals: dict[str, tuple[str, int]] = {}
    for lineno, line in lines:
        m = _FINAL_DIRECTIVE.match(line.strip())
        if m:
            _parse_final_directive(m.group(1), lineno, finals)
            continue
        f = _split_fields(line, lineno, (6, 7))
        code = _check_identifier(f[0][0], "item_code", lineno, f[0][1])
        try:
            ref = parse_state_ref(f[1][0], System.PRODUCTION)
        except ValueError as exc:
            raise ParseError(str(exc), lineno, f[1][1]) from exc
        parents: tuple[str, ...] = ()
        if f[2][0] != "-":
            parents = tuple(
                _check_identifier(p.strip(), "parent_item_code", lineno, f[2][1])
                for p in f[2][0].split(",")
            )
        datum = _parse_datum(f[3][0], lineno, f[3][1])
        value = _parse_value(f[4][0], f[5][0], datum, lineno, f[4][1])
        quality = f[6][0] if len(f) == 7 and f[6][0] else None

        key = (code, ref.state.name, ref.component, datum)
        if key in seen:
            raise DuplicateKey(f"duplicate row for ({code}, {ref}, {datum})", lineno, 1)
        seen.add(key)
        first_row_of.setdefault(code, lineno)
        items.append(
            ErpItem(
                item_code=code,
                state=ref.state.name,
                component=ref.component,
                parent_item_codes=parents,
                datum=datum,
                value=value,
                quality=quality,
            )
        )

    _check_filiation(items, first_row_of)
    for final, (_, declared_at) in finals.items():
        if final not in first_row_of:
            raise ParseError(f"final item code {final!r} has no item rows", declared_at, 1)
    return ErpExport(
        items=tuple(items),
        final_item_codes=tuple(finals),
        final_products={code: product for code, (product, _) in finals.items()},
    )


def _check_filiation(items: list[ErpItem], first_row_of: dict[str, int]):
    codes = set(first_row_of)
    children: dict[str, list[str]] = {c: [] for c in codes}
    for item in items:
        for parent in item.parent_item_codes:
            if parent not in codes:
                raise DanglingParent(item.item_code, parent, first_row_of[item.item_code])
            if item.item_code not in children[parent]:
                children[parent].append(item.item_code)

    # Iterative DFS with colors; reports the first cycle found.
    WHITE, GREY, BLACK = 0, 1, 2
    color = {c: WHITE for c in codes}
    for start in sorted(codes):
        if color[start] != WHITE:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        path: list[str] = []
        color[start] = GREY
        path.append(start)
        while stack:
            node, idx = stack[-1]
            if idx < len(children[node]):
                stack[-1] = (node, idx + 1)
                nxt = children[node][idx]
                if color[nxt] == GREY:
                    cycle = tuple(path[path.index(nxt):] + [nxt])
                    raise CycleDetected(cycle, first_row_of[nxt])
                if color[nxt] == WHITE:
                    color[nxt] = GREY
                    path.append(nxt)
                    stack.append((nxt, 0))
            else:
                color[node] = BLACK
                path.pop()
                stack.pop()


def render_erp_export(export: ErpExport) -> str:
    """Serialize back to the delimited grammar, directive last."""
    with_quality = any(i.quality is not None for i in export.items)
    out = io.StringIO()
    out.write(ERP_HEADER + (";quality\n" if with_quality else "\n"))
    for i in export.items:
        state = i.state if i.component is None else f"{i.state}.{i.component}"
        parent = ",".join(i.parent_item_codes) if i.parent_item_codes else "-"
        value, unit = render_value(i.value)
        row = f"{i.item_code};{state};{parent};{i.datum};{_renderable(value)};{unit}"
        if with_quality:
            row += f";{i.quality or ''}"
        out.write(row + "\n")
    if export.final_item_codes:
        entries = []
        for code in export.final_item_codes:
            product = export.final_products.get(code, code)
            entries.append(code if product == code else f"{code}={product}")
        out.write("FINAL: " + ",".join(entries) + "\n")
    return out.getvalue()


def group_by_licence(export: RegulatoryExport) -> dict[str, list[RegistrationRecord]]:
    """Partition records by licence number, preserving row order."""
    groups: dict[str, list[RegistrationRecord]] = {}
    for record in export.records:
        groups.setdefault(record.licence_number, []).append(record)
    return groups
