"""stateframe: reconcile ERP product-state data with regulatory registrations.

The library builds per-(product, datum) reference frames for both
information systems, connects them through a small mapping-rule DSL,
and reports typed coherence exceptions plus a compliance ratio over
final products. A state graph over shared ERP item codes answers
where-used and modification-impact queries.
"""

from .compliance import (
    ComplianceException,
    ExceptionKind,
    ExceptionReport,
    UncoveredValue,
    check_cross_country,
    check_frames,
    check_item_codes,
    compliance_ratio,
    report_to_json,
)
from .errors import StateFrameError
from .graph import (
    ImpactSet,
    StateGraph,
    build_graph,
    derive_expiry,
    impact_of_modification,
    products_using_state,
    render_edges,
)
from .ingest import (
    ErpExport,
    RegulatoryExport,
    group_by_licence,
    parse_erp_export,
    parse_regulatory_export,
    render_erp_export,
    render_regulatory_export,
)
from .mapping import ExpectedProductionFrame, apply_mapping, build_regulatory_frame
from .model import (
    DEFAULT_DATUM_KINDS,
    SHELF_LIFE,
    SITE_OF_MANUFACTURING,
    STORAGE_CONDITION,
    DataValue,
    DatumKind,
    Duration,
    ErpItem,
    FrameEntry,
    Number,
    ReferenceFrame,
    RegistrationRecord,
    Site,
    StateId,
    StateRef,
    System,
    Temperature,
    TemperatureRange,
    Text,
    normalize_value,
    render_value,
    values_equal,
)
from .pipeline import RunConfig, ValidationResult, run_validation, validate_exports
from .rules import (
    Diagnostic,
    LinkRule,
    MappingRuleSet,
    Transform,
    TransformKind,
    apply_transform,
    parse_rules,
    render_rules,
    validate_rules,
)

__version__ = "0.1.0"
