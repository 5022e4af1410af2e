"""The hierarchical layout schema: the spatial-to-logical intermediate
representation that nests detected elements inside their parent regions.

The structure is deliberately two-level (regions owning elements, plus an
orphan bucket for elements outside every region); no deeper nesting is
modeled.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum

from .detect import DetectionSet, element_id
from .errors import SchemaFormatError, ValidationError
from .geometry import BoundingBox, ScoredBox, area, intersection_area

log = logging.getLogger(__name__)


class SemanticType(str, Enum):
    HEADER = "HEADER"
    NAVBAR = "NAVBAR"
    SIDEBAR = "SIDEBAR"
    CONTENT = "CONTENT"
    FOOTER = "FOOTER"
    HERO = "HERO"
    UNKNOWN = "UNKNOWN"


@dataclass
class ElementRef:
    element_id: str
    box: BoundingBox
    label: str = ""


@dataclass
class RegionNode:
    region_id: str
    box: BoundingBox
    semantic_type: SemanticType = SemanticType.UNKNOWN
    description: str = ""
    children: list[ElementRef] = field(default_factory=list)


@dataclass
class LayoutSchema:
    page_id: str
    page_size: tuple[int, int] | None
    regions: list[RegionNode] = field(default_factory=list)
    orphans: list[ElementRef] = field(default_factory=list)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    subject: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


# --------------------------------------------------------------------------
# Assignment and construction


def assign_elements(
    regions: list[ScoredBox], elements: DetectionSet
) -> list[int | None]:
    """Assign each element to the region that contains most of it.

    Returns one entry per element: the index into `regions` maximizing
    area(element ∩ region) / area(element), or None for orphans. Ties break
    toward the smaller region, then toward region order. Zero-area elements
    are orphaned with a warning.
    """
    assignment: list[int | None] = []
    for i, det in enumerate(elements.detections):
        elem_area = area(det.box)
        if elem_area <= 0.0:
            log.warning("element %d has zero area; treated as orphan", i)
            assignment.append(None)
            continue
        best: int | None = None
        best_key = None
        for ri, region in enumerate(regions):
            ratio = intersection_area(det.box, region.box) / elem_area
            if ratio <= 0.0:
                continue
            key = (-ratio, area(region.box), ri)
            if best_key is None or key < best_key:
                best, best_key = ri, key
        assignment.append(best)
    return assignment


def _reading_order(box: BoundingBox) -> tuple[float, float]:
    return (box.y, box.x)


def build_schema(
    regions: list[ScoredBox],
    elements: DetectionSet,
    assignment: list[int | None] | None = None,
) -> LayoutSchema:
    """Build the two-level schema from optimized regions and fused elements.

    Regions come out top-to-bottom then left-to-right; children of each
    region (and orphans) are sorted the same way. Semantic types stay
    UNKNOWN: filling them is the model's job downstream.
    """
    if assignment is None:
        assignment = assign_elements(regions, elements)
    if len(assignment) != len(elements.detections):
        raise ValidationError(
            f"assignment covers {len(assignment)} elements, expected {len(elements.detections)}"
        )

    refs = [
        ElementRef(element_id(elements.page_id, i), det.box, det.label)
        for i, det in enumerate(elements.detections)
    ]
    seen: set[str] = set()
    for ref in refs:
        if ref.element_id in seen:
            raise ValidationError(f"duplicate element id {ref.element_id!r}")
        seen.add(ref.element_id)

    region_order = sorted(range(len(regions)), key=lambda ri: _reading_order(regions[ri].box))
    nodes: list[RegionNode] = []
    position = {ri: k for k, ri in enumerate(region_order)}
    for k, ri in enumerate(region_order):
        nodes.append(RegionNode(region_id=f"region{k}", box=regions[ri].box))
    orphans: list[ElementRef] = []
    for ref, target in zip(refs, assignment):
        if target is None:
            orphans.append(ref)
        else:
            nodes[position[target]].children.append(ref)
    for node in nodes:
        node.children.sort(key=lambda r: _reading_order(r.box))
    orphans.sort(key=lambda r: _reading_order(r.box))
    return LayoutSchema(
        page_id=elements.page_id,
        page_size=elements.page_size,
        regions=nodes,
        orphans=orphans,
    )


# --------------------------------------------------------------------------
# Validation


def validate_schema(s: LayoutSchema) -> ValidationReport:
    """Structural checks over a schema; every problem becomes a report entry.

    Codes: DUPLICATE_REGION, DUPLICATE_ELEMENT, CHILD_OUTSIDE_PARENT,
    REGION_OUTSIDE_PAGE, REGION_ORDER, CHILD_ORDER.
    """
    report = ValidationReport()

    seen_regions: set[str] = set()
    for region in s.regions:
        if region.region_id in seen_regions:
            report.violations.append(
                Violation("DUPLICATE_REGION", "region id appears more than once", region.region_id)
            )
        seen_regions.add(region.region_id)

    seen_elements: set[str] = set()
    for ref in _all_refs(s):
        if ref.element_id in seen_elements:
            report.violations.append(
                Violation("DUPLICATE_ELEMENT", "element appears more than once", ref.element_id)
            )
        seen_elements.add(ref.element_id)

    for region in s.regions:
        for ref in region.children:
            if intersection_area(ref.box, region.box) <= 0.0:
                report.violations.append(
                    Violation(
                        "CHILD_OUTSIDE_PARENT",
                        f"element does not intersect its parent region {region.region_id}",
                        ref.element_id,
                    )
                )

    if s.page_size is not None:
        pw, ph = s.page_size
        for region in s.regions:
            b = region.box
            if b.x < 0 or b.y < 0 or b.right > pw or b.bottom > ph:
                report.violations.append(
                    Violation(
                        "REGION_OUTSIDE_PAGE",
                        f"region box extends beyond the {pw}x{ph} page",
                        region.region_id,
                    )
                )

    for prev, cur in zip(s.regions, s.regions[1:]):
        if _reading_order(cur.box) < _reading_order(prev.box):
            report.violations.append(
                Violation("REGION_ORDER", "regions are not in reading order", cur.region_id)
            )
    for region in s.regions:
        for prev, cur in zip(region.children, region.children[1:]):
            if _reading_order(cur.box) < _reading_order(prev.box):
                report.violations.append(
                    Violation(
                        "CHILD_ORDER",
                        f"children of {region.region_id} are not in reading order",
                        cur.element_id,
                    )
                )
    return report


def _all_refs(s: LayoutSchema):
    for region in s.regions:
        yield from region.children
    yield from s.orphans


# --------------------------------------------------------------------------
# Canonical JSON


def _px(v: float):
    return int(v) if float(v).is_integer() else v


def _render_bbox(b: BoundingBox) -> str:
    return "[" + ", ".join(json.dumps(_px(v)) for v in (b.x, b.y, b.w, b.h)) + "]"


def _render_ref(ref: ElementRef) -> str:
    return (
        "{"
        + f'"element_id": {json.dumps(ref.element_id, ensure_ascii=False)}, '
        + f'"bbox": {_render_bbox(ref.box)}, '
        + f'"label": {json.dumps(ref.label, ensure_ascii=False)}'
        + "}"
    )


def _render_ref_list(refs: list[ElementRef], indent: str) -> list[str]:
    lines = []
    for i, ref in enumerate(refs):
        comma = "," if i + 1 < len(refs) else ""
        lines.append(f"{indent}{_render_ref(ref)}{comma}")
    return lines


def schema_to_json(s: LayoutSchema) -> str:
    """Canonical serialization: fixed key order, 2-space indent, bbox arrays
    on one line, integral pixel coordinates written as integers.
    parse_schema_json inverts it exactly."""
    dumps = lambda v: json.dumps(v, ensure_ascii=False)  # noqa: E731
    lines = ["{"]
    lines.append(f'  "page_id": {dumps(s.page_id)},')
    if s.page_size:
        size = f"[{json.dumps(_px(s.page_size[0]))}, {json.dumps(_px(s.page_size[1]))}]"
    else:
        size = "null"
    lines.append(f'  "page_size": {size},')
    if s.regions:
        lines.append('  "regions": [')
        for i, r in enumerate(s.regions):
            lines.append("    {")
            lines.append(f'      "region_id": {dumps(r.region_id)},')
            lines.append(f'      "bbox": {_render_bbox(r.box)},')
            lines.append(f'      "semantic_type": {dumps(r.semantic_type.value)},')
            lines.append(f'      "description": {dumps(r.description)},')
            if r.children:
                lines.append('      "children": [')
                lines.extend(_render_ref_list(r.children, "        "))
                lines.append("      ]")
            else:
                lines.append('      "children": []')
            lines.append("    }" + ("," if i + 1 < len(s.regions) else ""))
        lines.append("  ],")
    else:
        lines.append('  "regions": [],')
    if s.orphans:
        lines.append('  "orphans": [')
        lines.extend(_render_ref_list(s.orphans, "    "))
        lines.append("  ]")
    else:
        lines.append('  "orphans": []')
    lines.append("}")
    return "\n".join(lines)


def _shape_error(message: str) -> SchemaFormatError:
    report = ValidationReport([Violation("SCHEMA_SHAPE", message, "")])
    return SchemaFormatError(message, report=report)


def _parse_bbox(raw, subject: str) -> BoundingBox:
    if not isinstance(raw, list) or len(raw) != 4 or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw
    ):
        raise _shape_error(f"{subject}: bbox must be [x, y, width, height]")
    return BoundingBox(*(float(v) for v in raw))


def _parse_ref(
    raw,
    subject: str,
    element_boxes: dict[str, BoundingBox] | None,
    element_labels: dict[str, str] | None,
) -> ElementRef:
    if not isinstance(raw, dict):
        raise _shape_error(f"{subject}: expected an element object")
    eid = raw.get("element_id")
    if not isinstance(eid, str) or not eid:
        raise _shape_error(f"{subject}: element_id must be a non-empty string")
    if "bbox" in raw:
        box = _parse_bbox(raw["bbox"], f"element {eid}")
    elif element_boxes is not None and eid in element_boxes:
        box = element_boxes[eid]
    else:
        raise _shape_error(f"element {eid}: missing bbox and no detection to backfill from")
    label = raw.get("label")
    if not isinstance(label, str) or not label:
        label = (element_labels or {}).get(eid, "")
    return ElementRef(eid, box, label)


def schema_from_obj(
    obj,
    *,
    element_boxes: dict[str, BoundingBox] | None = None,
    element_labels: dict[str, str] | None = None,
    default_page_id: str | None = None,
    default_page_size: tuple[int, int] | None = None,
) -> LayoutSchema:
    """Build a LayoutSchema from decoded JSON, tolerating model output:
    unknown keys are ignored, unknown semantic types map to UNKNOWN, and
    missing element boxes/labels are backfilled from the detection inputs.
    Structural problems raise SchemaFormatError."""
    if not isinstance(obj, dict):
        raise _shape_error("schema must be a JSON object")
    page_id = obj.get("page_id", default_page_id)
    if not isinstance(page_id, str) or not page_id:
        if default_page_id is None:
            raise _shape_error("page_id must be a non-empty string")
        page_id = default_page_id
    raw_size = obj.get("page_size")
    if isinstance(raw_size, list) and len(raw_size) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw_size
    ):
        page_size = (int(raw_size[0]), int(raw_size[1]))
    elif raw_size is None:
        page_size = tuple(default_page_size) if default_page_size else None
    else:
        raise _shape_error("page_size must be [width, height]")

    raw_regions = obj.get("regions", [])
    if not isinstance(raw_regions, list):
        raise _shape_error("regions must be an array")
    regions = []
    for i, raw in enumerate(raw_regions):
        if not isinstance(raw, dict):
            raise _shape_error(f"region {i}: expected an object")
        rid = raw.get("region_id")
        if not isinstance(rid, str) or not rid:
            raise _shape_error(f"region {i}: region_id must be a non-empty string")
        box = _parse_bbox(raw.get("bbox"), f"region {rid}")
        sem_raw = raw.get("semantic_type", "UNKNOWN")
        try:
            sem = SemanticType(str(sem_raw).upper())
        except ValueError:
            sem = SemanticType.UNKNOWN
        raw_children = raw.get("children", [])
        if not isinstance(raw_children, list):
            raise _shape_error(f"region {rid}: children must be an array")
        children = [
            _parse_ref(c, f"region {rid} child {j}", element_boxes, element_labels)
            for j, c in enumerate(raw_children)
        ]
        regions.append(
            RegionNode(rid, box, sem, str(raw.get("description", "")), children)
        )
    raw_orphans = obj.get("orphans", [])
    if not isinstance(raw_orphans, list):
        raise _shape_error("orphans must be an array")
    orphans = [
        _parse_ref(o, f"orphan {j}", element_boxes, element_labels)
        for j, o in enumerate(raw_orphans)
    ]
    return LayoutSchema(page_id, page_size, regions, orphans)


def parse_schema_json(text: str) -> LayoutSchema:
    """Strict parse of the canonical schema JSON file format."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise _shape_error(f"malformed schema JSON: {e.msg}") from e
    return schema_from_obj(obj)
