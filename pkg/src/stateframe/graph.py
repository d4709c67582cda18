"""Production state graph: shared-state ownership, where-used and impact queries.

The ERP identifies every state instance by an item code; filiation edges
run from each assembly down to its components, so a product's slice of
the graph is the downward closure of its final item. States shared by
several products simply appear in several closures — ownership is always
computed here, never read from the inputs, because implicit ownership in
the ERP is precisely what makes these questions slow to answer by hand.
"""

from __future__ import annotations

import calendar
import datetime as dt
from dataclasses import dataclass
from typing import Mapping

from .errors import SharedFinalNode, UnknownItemCode
from .ingest import ErpExport
from .model import SHELF_LIFE, DatumKind, Duration

#: Derived datum revalidated whenever a shelf life changes.
EXPIRY_DATE = DatumKind("expiry_date")

_EXPIRY_REASON = "expiry = manufacture date + shelf life"


@dataclass(frozen=True)
class StateGraph:
    """Immutable DAG of production states shared across products."""

    #: item code -> state labels it appears under (first-seen order).
    nodes: Mapping[str, tuple[str, ...]]
    #: item code -> child item codes (components), parent -> child.
    children: Mapping[str, tuple[str, ...]]
    #: final item code -> product id.
    product_of_final: Mapping[str, str]
    #: item code -> products whose closure contains it.
    ownership: Mapping[str, frozenset[str]]

    def closure(self, item_code: str) -> frozenset[str]:
        """All item codes reachable downward from item_code, inclusive."""
        if item_code not in self.nodes:
            raise UnknownItemCode(item_code)
        seen: set[str] = set()
        stack = [item_code]
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            stack.extend(self.children[node])
        return frozenset(seen)


@dataclass(frozen=True)
class ImpactSet:
    """Everything a modification of one (item, datum) touches."""

    modified: tuple[str, DatumKind]
    affected_products: frozenset[str]
    derived_revalidations: tuple[tuple[str, DatumKind, str], ...]


def build_graph(erp: ErpExport, product_of_final: Mapping[str, str]) -> StateGraph:
    """Assemble the graph and compute ownership by closure from each final."""
    states: dict[str, list[str]] = {}
    children: dict[str, list[str]] = {}
    for item in erp.items:
        states.setdefault(item.item_code, [])
        children.setdefault(item.item_code, [])
        if item.state not in states[item.item_code]:
            states[item.item_code].append(item.state)
    for item in erp.items:
        for parent in item.parent_item_codes:
            if parent not in children:
                raise ValueError(f"item {item.item_code!r} names unknown parent {parent!r}")
            if item.item_code not in children[parent]:
                children[parent].append(item.item_code)
    _assert_acyclic(children)

    finals = list(erp.final_item_codes)
    for final in finals:
        if final not in product_of_final:
            raise ValueError(f"final item {final!r} is not mapped to a product")

    ownership: dict[str, set[str]] = {code: set() for code in states}
    final_set = set(finals)
    for final in finals:
        seen: set[str] = set()
        stack = [final]
        while stack:
            code = stack.pop()
            if code in seen:
                continue
            seen.add(code)
            if code in final_set and code != final:
                raise SharedFinalNode(code)
            ownership[code].add(product_of_final[final])
            stack.extend(children[code])
    return StateGraph(
        nodes={code: tuple(labels) for code, labels in states.items()},
        children={code: tuple(kids) for code, kids in children.items()},
        product_of_final={code: product_of_final[code] for code in finals},
        ownership={code: frozenset(owners) for code, owners in ownership.items()},
    )


def _assert_acyclic(children: Mapping[str, list[str]]):
    WHITE, GREY, BLACK = 0, 1, 2
    color = {c: WHITE for c in children}
    for start in children:
        if color[start] != WHITE:
            continue
        stack = [(start, 0)]
        color[start] = GREY
        while stack:
            node, idx = stack[-1]
            kids = children[node]
            if idx < len(kids):
                stack[-1] = (node, idx + 1)
                nxt = kids[idx]
                if color[nxt] == GREY:
                    raise ValueError(f"filiation cycle through {nxt!r}")
                if color[nxt] == WHITE:
                    color[nxt] = GREY
                    stack.append((nxt, 0))
            else:
                color[node] = BLACK
                stack.pop()


def products_using_state(graph: StateGraph, item_code: str) -> frozenset[str]:
    """Which products' closures contain this state. O(1) after build."""
    if item_code not in graph.ownership:
        raise UnknownItemCode(item_code)
    return graph.ownership[item_code]


def impact_of_modification(graph: StateGraph, item_code: str, datum: DatumKind) -> ImpactSet:
    """What a value change on (item, datum) would force downstream.

    Shelf-life changes additionally schedule an expiry-date revalidation
    for every affected product, since expiry derives from shelf life.
    """
    affected = products_using_state(graph, item_code)
    revalidations: tuple[tuple[str, DatumKind, str], ...] = ()
    if datum == SHELF_LIFE:
        revalidations = tuple(
            (product, EXPIRY_DATE, _EXPIRY_REASON) for product in sorted(affected)
        )
    return ImpactSet(
        modified=(item_code, datum),
        affected_products=affected,
        derived_revalidations=revalidations,
    )


def derive_expiry(manufacture_date: dt.date, shelf_life: Duration) -> dt.date:
    """Advance a manufacture date by a shelf life, clamping to month length.

    2005-01-31 plus one month is 2005-02-28 (2004-01-31 plus one month is
    2004-02-29): the day of month is clamped to the target month's length.
    """
    months = manufacture_date.year * 12 + (manufacture_date.month - 1) + shelf_life.months
    year, month0 = divmod(months, 12)
    day = min(manufacture_date.day, calendar.monthrange(year, month0 + 1)[1])
    return dt.date(year, month0 + 1, day)


def render_edges(graph: StateGraph) -> str:
    """One `parent -> child` line per filiation edge, sorted, for external tools."""
    lines = [
        f"{parent} -> {child}"
        for parent, kids in graph.children.items()
        for child in kids
    ]
    return "\n".join(sorted(lines)) + ("\n" if lines else "")
