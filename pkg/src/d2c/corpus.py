"""Corpus manifests, dataset statistics, and evaluation-report aggregation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image

from .detect import (
    ClassRoutingTable,
    Detection,
    DetectionSet,
    fuse_detections,
    parse_detection_file,
)
from .errors import ParseError, ValidationError
from .fidelity import FineGrainedScores
from .geometry import BoundingBox, ScoredBox, area
from .schema import assign_elements


# --------------------------------------------------------------------------
# Annotations and statistics


@dataclass
class PageAnnotation:
    """Layout boxes and element detections for one page, plus per-box token
    counts (zeros when the source provides none)."""

    page_id: str
    page_size: tuple[int, int]
    layout_boxes: list[BoundingBox]
    elements: list[Detection]
    token_counts_per_box: list[int] | None = None

    def __post_init__(self):
        if self.token_counts_per_box is None:
            self.token_counts_per_box = [0] * len(self.layout_boxes)
        if len(self.token_counts_per_box) != len(self.layout_boxes):
            raise ValidationError(
                f"page {self.page_id}: {len(self.token_counts_per_box)} token counts "
                f"for {len(self.layout_boxes)} boxes"
            )


def count_tokens(text: str) -> int:
    """Whitespace-delimited token count, for filling token_counts_per_box."""
    return len(text.split())


@dataclass(frozen=True)
class Summary:
    min: float
    max: float
    avg: float


def _summarize(values: list[float]) -> Summary:
    if not values:
        return Summary(0.0, 0.0, 0.0)
    return Summary(min(values), max(values), sum(values) / len(values))


@dataclass(frozen=True)
class LayoutStats:
    boxes_per_page: Summary
    elements_per_page: Summary
    elements_per_box: Summary
    tokens_per_box: Summary
    box_to_page_ratio: Summary  # percentages


@dataclass(frozen=True)
class BenchmarkStats:
    avg_boxes_per_page: float
    avg_elements_per_page: float
    avg_elements_per_box: float
    element_coverage: float  # fraction of elements centered inside >= 1 box
    large_elements: float  # fraction of elements with area >= threshold * page area


def _per_box_element_counts(ann: PageAnnotation) -> list[int]:
    regions = [ScoredBox(b, 1.0) for b in ann.layout_boxes]
    elements = DetectionSet(ann.page_id, ann.page_size, list(ann.elements))
    counts = [0] * len(ann.layout_boxes)
    for target in assign_elements(regions, elements):
        if target is not None:
            counts[target] += 1
    return counts


def compute_layout_stats(annotations: list[PageAnnotation]) -> LayoutStats:
    """Table-style layout statistics: per-page box/element counts, per-box
    element and token counts, and box-to-page area percentages."""
    if not annotations:
        raise ValidationError("cannot compute statistics over an empty corpus")
    boxes_per_page = [float(len(a.layout_boxes)) for a in annotations]
    elements_per_page = [float(len(a.elements)) for a in annotations]
    elements_per_box: list[float] = []
    tokens_per_box: list[float] = []
    ratios: list[float] = []
    for ann in annotations:
        elements_per_box.extend(float(c) for c in _per_box_element_counts(ann))
        tokens_per_box.extend(float(t) for t in ann.token_counts_per_box)
        page_area = float(ann.page_size[0]) * float(ann.page_size[1])
        if page_area <= 0:
            raise ValidationError(f"page {ann.page_id}: non-positive page area")
        ratios.extend(100.0 * area(b) / page_area for b in ann.layout_boxes)
    return LayoutStats(
        boxes_per_page=_summarize(boxes_per_page),
        elements_per_page=_summarize(elements_per_page),
        elements_per_box=_summarize(elements_per_box),
        tokens_per_box=_summarize(tokens_per_box),
        box_to_page_ratio=_summarize(ratios),
    )


def _center_covered(det: Detection, boxes: list[BoundingBox]) -> bool:
    cx, cy = det.box.center
    return any(b.x <= cx <= b.right and b.y <= cy <= b.bottom for b in boxes)


def compute_eval_stats(
    annotations: list[PageAnnotation], large_threshold: float = 0.01
) -> BenchmarkStats:
    """Benchmark comparison statistics. An element is covered when its
    center lies inside at least one layout box, and large when its area is
    at least `large_threshold` of the page area (boundary inclusive)."""
    if not annotations:
        raise ValidationError("cannot compute statistics over an empty corpus")
    if not 0.0 < large_threshold < 1.0:
        raise ValidationError(f"large_threshold must be in (0, 1), got {large_threshold}")
    total = 0
    covered = 0
    large = 0
    element_counts = []
    box_counts = []
    per_box: list[int] = []
    for ann in annotations:
        box_counts.append(len(ann.layout_boxes))
        element_counts.append(len(ann.elements))
        per_box.extend(_per_box_element_counts(ann))
        page_area = float(ann.page_size[0]) * float(ann.page_size[1])
        for det in ann.elements:
            total += 1
            if _center_covered(det, ann.layout_boxes):
                covered += 1
            if area(det.box) >= large_threshold * page_area:
                large += 1
    return BenchmarkStats(
        avg_boxes_per_page=sum(box_counts) / len(box_counts),
        avg_elements_per_page=sum(element_counts) / len(element_counts),
        avg_elements_per_box=(sum(per_box) / len(per_box)) if per_box else 0.0,
        element_coverage=(covered / total) if total else 0.0,
        large_elements=(large / total) if total else 0.0,
    )


# --------------------------------------------------------------------------
# Manifests


@dataclass
class ManifestPage:
    page_id: str
    screenshot: Path
    regions: Path
    global_detections: Path | None = None
    dense_detections: Path | None = None
    elements: Path | None = None  # pre-fused elements, preferred by `stats`
    gt_html: Path | None = None
    token_counts: list[int] | None = None


@dataclass
class CorpusManifest:
    name: str
    pages: list[ManifestPage] = field(default_factory=list)


_PATH_KEYS = {
    "screenshot": "screenshot",
    "regions": "regions",
    "global": "global_detections",
    "dense": "dense_detections",
    "elements": "elements",
    "gt_html": "gt_html",
}


def load_manifest(path: str | Path) -> CorpusManifest:
    """Load a corpus manifest; relative paths resolve against the manifest's
    directory, page ids must be unique, and every referenced file must exist."""
    path = Path(path)
    base = path.parent
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed manifest {path}: {e.msg}", offset=e.pos) from e
    if not isinstance(raw, dict) or not isinstance(raw.get("pages"), list):
        raise ValidationError(f"manifest {path} must be an object with a 'pages' array")
    manifest = CorpusManifest(name=str(raw.get("name", path.stem)))
    seen: set[str] = set()
    for i, entry in enumerate(raw["pages"]):
        if not isinstance(entry, dict):
            raise ValidationError(f"manifest page {i}: expected an object")
        page_id = entry.get("page_id")
        if not isinstance(page_id, str) or not page_id:
            raise ValidationError(f"manifest page {i}: page_id must be a non-empty string")
        if page_id in seen:
            raise ValidationError(f"duplicate page_id {page_id!r} in manifest")
        seen.add(page_id)
        fields: dict = {"page_id": page_id}
        for key, attr in _PATH_KEYS.items():
            value = entry.get(key)
            if value is None:
                continue
            resolved = base / value if not Path(value).is_absolute() else Path(value)
            if not resolved.exists():
                raise ValidationError(f"page {page_id}: referenced file {resolved} does not exist")
            fields[attr] = resolved
        if "screenshot" not in fields or "regions" not in fields:
            raise ValidationError(f"page {page_id}: 'screenshot' and 'regions' are required")
        counts = entry.get("token_counts")
        if counts is not None:
            if not isinstance(counts, list) or not all(
                isinstance(c, int) and not isinstance(c, bool) and c >= 0 for c in counts
            ):
                raise ValidationError(f"page {page_id}: token_counts must be non-negative integers")
            fields["token_counts"] = counts
        manifest.pages.append(ManifestPage(**fields))
    return manifest


def annotation_from_manifest(
    page: ManifestPage, routing: ClassRoutingTable | None = None
) -> PageAnnotation:
    """Materialize a page annotation: layout boxes from the regions file and
    elements from, in order of preference, the pre-fused elements file, the
    fused (global, dense) pair, or whichever single detector file exists."""
    with Image.open(page.screenshot) as img:
        page_size = img.size
    region_set = parse_detection_file(
        page.regions.read_bytes(), page_id=page.page_id, page_size=page_size
    )
    if page.elements is not None:
        element_set = parse_detection_file(
            page.elements.read_bytes(), page_id=page.page_id, page_size=page_size
        )
    elif page.global_detections is not None and page.dense_detections is not None:
        if routing is None:
            raise ValidationError(f"page {page.page_id}: fusing detections requires a routing table")
        element_set = fuse_detections(
            parse_detection_file(
                page.global_detections.read_bytes(), page_id=page.page_id, page_size=page_size
            ),
            parse_detection_file(
                page.dense_detections.read_bytes(), page_id=page.page_id, page_size=page_size
            ),
            routing,
        )
    else:
        single = page.global_detections or page.dense_detections
        element_set = (
            parse_detection_file(single.read_bytes(), page_id=page.page_id, page_size=page_size)
            if single
            else DetectionSet(page.page_id, page_size)
        )
    return PageAnnotation(
        page_id=page.page_id,
        page_size=page_size,
        layout_boxes=[d.box for d in region_set.detections],
        elements=list(element_set.detections),
        token_counts_per_box=list(page.token_counts) if page.token_counts else None,
    )


# --------------------------------------------------------------------------
# Evaluation reports


@dataclass
class EvalReport:
    pages: list[tuple[str, FineGrainedScores]]
    means: FineGrainedScores
    metadata: dict = field(default_factory=dict)


def aggregate_reports(
    per_page: list[tuple[str, FineGrainedScores]], metadata: dict | None = None
) -> EvalReport:
    """Arithmetic means of the four scores across pages."""
    if not per_page:
        raise ValidationError("cannot aggregate an empty report list")
    seen: set[str] = set()
    for page_id, _ in per_page:
        if page_id in seen:
            raise ValidationError(f"duplicate page_id {page_id!r} in report list")
        seen.add(page_id)
    n = len(per_page)
    means = FineGrainedScores(
        block=sum(s.block for _, s in per_page) / n,
        text=sum(s.text for _, s in per_page) / n,
        position=sum(s.position for _, s in per_page) / n,
        color=sum(s.color for _, s in per_page) / n,
    )
    return EvalReport(pages=list(per_page), means=means, metadata=dict(metadata or {}))


def report_to_json(report: EvalReport) -> str:
    obj = {
        "metadata": report.metadata,
        "pages": [
            {
                "page_id": pid,
                "text": s.text,
                "block": s.block,
                "position": s.position,
                "color": s.color,
            }
            for pid, s in report.pages
        ],
        "means": {
            "text": report.means.text,
            "block": report.means.block,
            "position": report.means.position,
            "color": report.means.color,
        },
    }
    return json.dumps(obj, indent=2, ensure_ascii=False)


def format_report_table(report: EvalReport) -> str:
    """Fixed-width text table, one row per page plus the corpus mean."""
    width = max([len("mean")] + [len(pid) for pid, _ in report.pages]) + 2
    header = f"{'Page':<{width}}{'Text':>8}{'Block':>8}{'Pos':>8}{'Color':>8}"
    lines = [header, "-" * len(header)]
    for pid, s in report.pages:
        lines.append(
            f"{pid:<{width}}{s.text:>8.4f}{s.block:>8.4f}{s.position:>8.4f}{s.color:>8.4f}"
        )
    lines.append("-" * len(header))
    m = report.means
    lines.append(f"{'mean':<{width}}{m.text:>8.4f}{m.block:>8.4f}{m.position:>8.4f}{m.color:>8.4f}")
    return "\n".join(lines)
