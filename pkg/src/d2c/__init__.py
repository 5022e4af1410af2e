"""Design-to-code toolkit.

Layout-region box optimization, hybrid detection fusion, schema-guided HTML
generation with record/replay backends, fine-grained fidelity metrics, and
corpus statistics.
"""

from .detect import (
    AssetRepository,
    ClassRoutingTable,
    Detection,
    DetectionSet,
    Route,
    Source,
    crop_elements,
    default_routing,
    fuse_detections,
    parse_detection_file,
    parse_element_listing,
    serialize_detections,
)
from .errors import (
    BackendError,
    D2CError,
    MalformedVerdictError,
    ParseError,
    ReplayMissError,
    SchemaFormatError,
    SchemaNotFoundError,
    StageError,
    ValidationError,
)
from .geometry import (
    BoundingBox,
    OptimizationConfig,
    ScoredBox,
    area,
    clamp_to_page,
    intersection_area,
    iou,
    optimize_boxes,
)
from .schema import (
    ElementRef,
    LayoutSchema,
    RegionNode,
    SemanticType,
    ValidationReport,
    assign_elements,
    build_schema,
    parse_schema_json,
    schema_to_json,
    validate_schema,
)

__version__ = "0.1.0"
