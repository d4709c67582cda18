"""Export parsing: strictness, positions, grouping and round-trips."""

from __future__ import annotations

import random

import pytest

from stateframe.errors import (
    CycleDetected,
    DanglingParent,
    DuplicateKey,
    ParseError,
    PositionedError,
    UnknownDatumKind,
)
from stateframe.ingest import (
    group_by_licence,
    parse_erp_export,
    parse_regulatory_export,
    render_erp_export,
    render_regulatory_export,
)
from stateframe.model import Duration, Site

from corpusgen import random_erp_export, random_regulatory_export

REG_HEADER = "product_line;licence_number;country;state;datum;value;unit\n"
ERP_HEADER = "item_code;state;parent_item_code;datum;value;unit\n"


class TestRegulatoryParse:
    def test_shelf_life_row_normalizes_to_months(self):
        export = parse_regulatory_export(
            REG_HEADER + "GRIPPE;LIC-001;FR;INTERMEDIATE;shelf_life;3;years\n"
        )
        (record,) = export.records
        assert record.value == Duration(36)
        assert record.state == "INTERMEDIATE"
        assert record.country == "FR"

    def test_header_only_file_is_empty_export(self):
        export = parse_regulatory_export(REG_HEADER)
        assert export.records == ()

    def test_duplicate_key_rejected(self):
        text = REG_HEADER + (
            "GRIPPE;LIC-001;FR;FINAL;shelf_life;1;years\n"
            "GRIPPE;LIC-001;FR;FINAL;shelf_life;2;years\n"
        )
        with pytest.raises(DuplicateKey) as exc:
            parse_regulatory_export(text)
        assert exc.value.line == 3

    def test_unknown_datum_becomes_custom_kind(self):
        export = parse_regulatory_export(
            REG_HEADER + "GRIPPE;LIC-001;FR;S1;potency;40;none\n"
        )
        assert export.records[0].datum.name == "potency"
        assert not export.records[0].datum.is_builtin

    def test_illegal_datum_name_rejected_with_position(self):
        with pytest.raises(UnknownDatumKind) as exc:
            parse_regulatory_export(REG_HEADER + "GRIPPE;LIC-001;FR;S1;Potency!;40;none\n")
        assert exc.value.line == 2

    def test_mixed_product_lines_rejected(self):
        text = REG_HEADER + (
            "GRIPPE;LIC-001;FR;S1;shelf_life;1;years\n"
            "POLIO;LIC-002;FR;S1;shelf_life;1;years\n"
        )
        with pytest.raises(ParseError):
            parse_regulatory_export(text)

    def test_bad_value_reports_row_position(self):
        with pytest.raises(ParseError) as exc:
            parse_regulatory_export(REG_HEADER + "GRIPPE;LIC-001;FR;S1;shelf_life;soon;years\n")
        assert exc.value.line == 2
        assert exc.value.column > 1

    def test_component_states_parse(self):
        export = parse_regulatory_export(
            REG_HEADER + "GRIPPE;LIC-001;FR;FINAL.bottle_2;shelf_life;1;years\n"
        )
        assert export.records[0].component == "bottle_2"

    def test_comments_and_blank_lines_skipped(self):
        text = "# exported report\n\n" + REG_HEADER + "# row comment\nGRIPPE;LIC-001;FR;S1;site_of_manufacturing;LYON;none\n"
        export = parse_regulatory_export(text)
        assert export.records[0].value == Site("LYON")

    def test_wrong_field_count(self):
        with pytest.raises(ParseError):
            parse_regulatory_export(REG_HEADER + "GRIPPE;LIC-001;FR;S1;shelf_life;3\n")


class TestErpParse:
    def test_three_row_chain_has_two_edges(self):
        text = ERP_HEADER + (
            "F-1;FINAL;-;shelf_life;12;months\n"
            "B-1;BULK;F-1;shelf_life;24;months\n"
            "S-1;SEED;B-1;shelf_life;36;months\n"
            "FINAL: F-1\n"
        )
        export = parse_erp_export(text)
        edges = [(i.item_code, p) for i in export.items for p in i.parent_item_codes]
        assert edges == [("B-1", "F-1"), ("S-1", "B-1")]
        assert export.final_products == {"F-1": "F-1"}

    def test_dangling_parent(self):
        text = ERP_HEADER + "B-1;BULK;GHOST;shelf_life;24;months\n"
        with pytest.raises(DanglingParent) as exc:
            parse_erp_export(text)
        assert exc.value.parent == "GHOST"

    def test_self_parent_is_cycle(self):
        text = ERP_HEADER + "B-1;BULK;B-1;shelf_life;24;months\n"
        with pytest.raises(CycleDetected):
            parse_erp_export(text)

    def test_longer_cycle_detected(self):
        text = ERP_HEADER + (
            "A-1;BULK;B-1;shelf_life;24;months\n"
            "B-1;BLEND;C-1;shelf_life;24;months\n"
            "C-1;SEED;A-1;shelf_life;24;months\n"
        )
        with pytest.raises(CycleDetected) as exc:
            parse_erp_export(text)
        assert len(exc.value.path) >= 3

    def test_final_directive_with_product_binding(self):
        text = ERP_HEADER + (
            "F-1;FINAL;-;shelf_life;12;months\n"
            "FINAL: F-1=LIC-007\n"
        )
        export = parse_erp_export(text)
        assert export.final_products == {"F-1": "LIC-007"}

    def test_final_without_rows_rejected(self):
        text = ERP_HEADER + "B-1;BULK;-;shelf_life;24;months\nFINAL: F-1\n"
        with pytest.raises(ParseError):
            parse_erp_export(text)

    def test_multi_parent_shared_state(self):
        text = ERP_HEADER + (
            "F-1;FINAL;-;shelf_life;12;months\n"
            "F-2;FINAL;-;shelf_life;12;months\n"
            "B-1;BULK;F-1,F-2;shelf_life;24;months\n"
            "FINAL: F-1,F-2\n"
        )
        export = parse_erp_export(text)
        bulk = next(i for i in export.items if i.item_code == "B-1")
        assert bulk.parent_item_codes == ("F-1", "F-2")

    def test_same_code_under_two_states_is_legal(self):
        text = ERP_HEADER + (
            "B-1;BULK;-;shelf_life;24;months\n"
            "B-1;BLEND;-;shelf_life;36;months\n"
        )
        export = parse_erp_export(text)
        assert len(export.items) == 2

    def test_duplicate_item_row_rejected(self):
        text = ERP_HEADER + (
            "B-1;BULK;-;shelf_life;24;months\n"
            "B-1;BULK;-;shelf_life;36;months\n"
        )
        with pytest.raises(DuplicateKey):
            parse_erp_export(text)

    def test_quality_column_round_trips(self):
        text = ERP_HEADER.rstrip() + ";quality\n" + (
            "F-1;FINAL;-;shelf_life;12;months;grade_b\n"
            "B-1;BULK;F-1;shelf_life;24;months;\n"
        )
        export = parse_erp_export(text)
        assert export.items[0].quality == "grade_b"
        assert export.items[1].quality is None
        assert parse_erp_export(render_erp_export(export)) == export


class TestGroupByLicence:
    def test_two_licences_two_groups(self):
        export = parse_regulatory_export(
            REG_HEADER
            + "GRIPPE;LIC-001;FR;S1;shelf_life;1;years\n"
            + "GRIPPE;LIC-002;DE;S1;shelf_life;1;years\n"
        )
        groups = group_by_licence(export)
        assert sorted(groups) == ["LIC-001", "LIC-002"]

    def test_empty_export_empty_map(self):
        assert group_by_licence(parse_regulatory_export(REG_HEADER)) == {}

    def test_partition_property(self):
        rng = random.Random(7)
        for _ in range(50):
            export = random_regulatory_export(rng)
            groups = group_by_licence(export)
            total = sum(len(records) for records in groups.values())
            assert total == len(export.records)
            for licence, records in groups.items():
                assert all(r.licence_number == licence for r in records)


class TestRoundTrips:
    def test_regulatory_round_trip_random(self):
        rng = random.Random(31)
        for _ in range(60):
            export = random_regulatory_export(rng)
            assert parse_regulatory_export(render_regulatory_export(export)) == export

    def test_erp_round_trip_random(self):
        rng = random.Random(32)
        for _ in range(60):
            export = random_erp_export(rng)
            assert parse_erp_export(render_erp_export(export)) == export

    def test_fuzzed_documents_fail_with_positions(self):
        rng = random.Random(33)
        for _ in range(120):
            base = render_regulatory_export(random_regulatory_export(rng))
            mutated = _mutate(rng, base)
            try:
                parse_regulatory_export(mutated)
            except PositionedError as exc:
                assert exc.line >= 1 and exc.column >= 1
            # a mutation may still be valid text; that is fine too


def _mutate(rng: random.Random, text: str) -> str:
    lines = text.split("\n")
    roll = rng.random()
    if roll < 0.3 and len(lines) > 1:
        i = rng.randrange(len(lines))
        lines[i] = lines[i].replace(";", "|", 1)
    elif roll < 0.6 and len(lines) > 1:
        i = rng.randrange(1, len(lines))
        lines.insert(i, "totally;unparseable;garbage")
    elif roll < 0.8:
        lines.insert(0, "")
        lines[0] = "not-a-header"
    else:
        i = rng.randrange(len(lines))
        if lines[i]:
            cut = rng.randrange(len(lines[i]))
            lines[i] = lines[i][:cut]
    return "\n".join(lines)
