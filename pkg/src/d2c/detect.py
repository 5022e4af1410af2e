"""Detector-output ingestion, class-routed fusion, and the cropped-asset repository.

Detector inference itself is out of scope here: region and element
predictions arrive as serialized files (see `parse_detection_file` for the
wire format) and are fused per a binary class routing table that sends each
category to either the global-context detector or the dense-element one.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from PIL import Image

from .errors import ParseError, ValidationError
from .geometry import BoundingBox, area, clamp_to_page

log = logging.getLogger(__name__)


class Source(str, Enum):
    """Which detector (or file) a detection came from."""

    GLOBAL_DETECTOR = "GLOBAL_DETECTOR"
    DENSE_DETECTOR = "DENSE_DETECTOR"
    FILE = "FILE"


class Route(str, Enum):
    """Routing decision for a category: keep the global detector's
    predictions or the dense detector's."""

    GLOBAL = "GLOBAL"
    DENSE = "DENSE"


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    score: float
    category: int
    label: str = ""
    source: Source = Source.FILE


@dataclass
class DetectionSet:
    """Ordered detections for one page, with source attribution."""

    page_id: str = ""
    page_size: tuple[int, int] | None = None
    detections: list[Detection] = field(default_factory=list)


def element_id(page_id: str, index: int) -> str:
    """Deterministic asset/element id: "{page_id}/elem{index}"."""
    return f"{page_id}/elem{index}" if page_id else f"elem{index}"


# --------------------------------------------------------------------------
# Wire formats


def parse_detection_file(
    data: bytes, *, page_id: str = "", page_size: tuple[int, int] | None = None
) -> DetectionSet:
    """Parse the detection JSON format: an array of
    {"category_id": int, "bbox": [x, y, width, height], "score": float}.

    Entries keep file order; unknown keys are ignored. Raises ParseError
    (with byte offset) on malformed JSON and ValidationError (naming the
    entry index) on bad entries.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"detection file is not UTF-8: {e}", offset=e.start) from e
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        byte_offset = len(text[: e.pos].encode("utf-8"))
        raise ParseError(
            f"malformed detection JSON at byte {byte_offset}: {e.msg}", offset=byte_offset
        ) from e
    if not isinstance(raw, list):
        raise ValidationError("detection file must be a JSON array")
    detections = [_detection_from_obj(entry, i) for i, entry in enumerate(raw)]
    return DetectionSet(page_id=page_id, page_size=page_size, detections=detections)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _detection_from_obj(entry, index: int) -> Detection:
    if not isinstance(entry, dict):
        raise ValidationError(f"entry {index}: expected an object")
    bbox = entry.get("bbox")
    if not isinstance(bbox, list) or len(bbox) != 4 or not all(_is_number(v) for v in bbox):
        raise ValidationError(f"entry {index}: bbox must be [x, y, width, height]")
    x, y, w, h = (float(v) for v in bbox)
    if w < 0 or h < 0:
        raise ValidationError(f"entry {index}: negative bbox dimensions {w}x{h}")
    score = entry.get("score")
    if not _is_number(score) or math.isnan(score) or not 0.0 <= score <= 1.0:
        raise ValidationError(f"entry {index}: score must be a number in [0, 1]")
    category = entry.get("category_id")
    if not isinstance(category, int) or isinstance(category, bool) or category < 0:
        raise ValidationError(f"entry {index}: category_id must be a non-negative integer")
    return Detection(BoundingBox(x, y, w, h), float(score), category)


def _num(v: float):
    """Integral coordinates serialize as ints so pixel inputs round-trip verbatim."""
    return int(v) if float(v).is_integer() else v


def render_detection_listing(ds: DetectionSet) -> str:
    """Detections in the wire format's text form, one inline bbox per entry."""
    if not ds.detections:
        return "[]"
    blocks = []
    for d in ds.detections:
        bbox = ", ".join(json.dumps(_num(v)) for v in (d.box.x, d.box.y, d.box.w, d.box.h))
        blocks.append(
            "  {\n"
            f'    "category_id": {json.dumps(d.category)},\n'
            f'    "bbox": [{bbox}],\n'
            f'    "score": {json.dumps(float(d.score))}\n'
            "  }"
        )
    return "[\n" + ",\n".join(blocks) + "\n]"


def serialize_detections(ds: DetectionSet) -> bytes:
    """Inverse of parse_detection_file (numeric fields round-trip exactly)."""
    return (render_detection_listing(ds) + "\n").encode("utf-8")


_BOX_LINE = re.compile(
    r"Box\s*(\d+)\s*:\s*"
    r"x\s*=\s*(-?\d+(?:\.\d+)?)\s*,\s*"
    r"y\s*=\s*(-?\d+(?:\.\d+)?)\s*,\s*"
    r"width\s*=\s*(\d+(?:\.\d+)?)\s*,\s*"
    r"height\s*=\s*(\d+(?:\.\d+)?)"
)


def parse_element_listing(
    text: str, *, page_id: str = "", page_size: tuple[int, int] | None = None
) -> DetectionSet:
    """Parse the plain-text element listing format, one element per line:

        Box2: x=846, y=50, width=210, height=100

    Lines that do not match are ignored (the format appears embedded in
    prose). Score defaults to 1.0 and category to 0: the listing carries
    neither.
    """
    detections = []
    for m in _BOX_LINE.finditer(text):
        x, y, w, h = (float(g) for g in m.groups()[1:])
        detections.append(Detection(BoundingBox(x, y, w, h), 1.0, 0))
    return DetectionSet(page_id=page_id, page_size=page_size, detections=detections)


# --------------------------------------------------------------------------
# Class routing and fusion


@dataclass
class ClassRoutingTable:
    """Per-category routing between the two detectors, plus category names.

    The table must cover every category appearing in a fused input; it is
    configuration data (see from_json/to_json) with `default_routing()` as
    the shipped default.
    """

    routes: dict[int, Route] = field(default_factory=dict)
    labels: dict[int, str] = field(default_factory=dict)

    def route_for(self, category: int) -> Route:
        try:
            return self.routes[category]
        except KeyError:
            raise ValidationError(f"category {category} missing from routing table") from None

    def route_for_label(self, label: str) -> Route | None:
        """Route for a category name; None when the name is unknown."""
        for cat, name in self.labels.items():
            if name == label:
                return self.routes.get(cat)
        return None

    def label_for(self, category: int) -> str:
        return self.labels.get(category, "")

    @classmethod
    def from_json(cls, data: bytes) -> "ClassRoutingTable":
        """Load a routing file: [{"category_id": int, "label": str, "route": "GLOBAL"|"DENSE"}]."""
        try:
            raw = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ParseError(f"malformed routing file: {e}") from e
        if not isinstance(raw, list):
            raise ValidationError("routing file must be a JSON array")
        table = cls()
        for i, entry in enumerate(raw):
            if not isinstance(entry, dict):
                raise ValidationError(f"routing entry {i}: expected an object")
            cat = entry.get("category_id")
            if not isinstance(cat, int) or isinstance(cat, bool) or cat < 0:
                raise ValidationError(f"routing entry {i}: category_id must be a non-negative integer")
            route = entry.get("route")
            if route not in (Route.GLOBAL.value, Route.DENSE.value):
                raise ValidationError(f"routing entry {i}: route must be GLOBAL or DENSE")
            table.routes[cat] = Route(route)
            table.labels[cat] = str(entry.get("label", ""))
        return table

    def to_json(self) -> bytes:
        rows = [
            {"category_id": cat, "label": self.labels.get(cat, ""), "route": route.value}
            for cat, route in sorted(self.routes.items())
        ]
        return (json.dumps(rows, indent=2) + "\n").encode("utf-8")


_DEFAULT_TAXONOMY = [
    # Large, context-dependent classes handled by the global detector...
    ("Navbar", Route.GLOBAL),
    ("Sidebar", Route.GLOBAL),
    ("Hero Image", Route.GLOBAL),
    ("Footer", Route.GLOBAL),
    ("Content Panel", Route.GLOBAL),
    # ...and small, dense elements handled by the dense detector.
    ("Icon", Route.DENSE),
    ("Button", Route.DENSE),
    ("Text Label", Route.DENSE),
    ("Input Field", Route.DENSE),
    ("Thumbnail", Route.DENSE),
    ("Logo", Route.DENSE),
]


def default_routing() -> ClassRoutingTable:
    """The built-in taxonomy: category ids 0-10 in declaration order."""
    table = ClassRoutingTable()
    for cat, (label, route) in enumerate(_DEFAULT_TAXONOMY):
        table.routes[cat] = route
        table.labels[cat] = label
    return table


def fuse_detections(
    global_set: DetectionSet, dense_set: DetectionSet, routing: ClassRoutingTable
) -> DetectionSet:
    """Merge the two detectors' outputs by category route.

    A detection survives iff it came from the detector its category is
    routed to. Global-routed detections come first (input order), then
    dense-routed ones; source fields are rewritten accordingly. Every
    category present in either input must have a routing entry.
    """
    if global_set.page_id != dense_set.page_id:
        raise ValidationError(
            f"page id mismatch: {global_set.page_id!r} vs {dense_set.page_id!r}"
        )
    page_size = global_set.page_size or dense_set.page_size
    if (
        global_set.page_size is not None
        and dense_set.page_size is not None
        and tuple(global_set.page_size) != tuple(dense_set.page_size)
    ):
        raise ValidationError(
            f"page size mismatch: {global_set.page_size} vs {dense_set.page_size}"
        )

    fused: list[Detection] = []
    dense_kept: list[Detection] = []
    for d in global_set.detections:
        if routing.route_for(d.category) is Route.GLOBAL:
            fused.append(_attributed(d, Source.GLOBAL_DETECTOR, routing))
    for d in dense_set.detections:
        if routing.route_for(d.category) is Route.DENSE:
            dense_kept.append(_attributed(d, Source.DENSE_DETECTOR, routing))
    fused.extend(dense_kept)
    return DetectionSet(page_id=global_set.page_id, page_size=page_size, detections=fused)


def _attributed(d: Detection, source: Source, routing: ClassRoutingTable) -> Detection:
    return replace(d, source=source, label=d.label or routing.label_for(d.category))


# --------------------------------------------------------------------------
# Cropped-asset repository


@dataclass
class AssetEntry:
    element_id: str
    page_id: str
    bbox: BoundingBox  # detector box as given
    crop: BoundingBox  # clamped to the page
    path: str  # relative to the repository root
    transparent: bool
    clamped: bool
    background_removed: str | None = None  # optional variant, filled by external tooling


@dataclass
class AssetRepository:
    """On-disk store of per-element image crops: one directory per page,
    lossless PNGs plus an index.json listing the entries."""

    root: Path
    entries: list[AssetEntry] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (element id, reason)

    def get(self, element_id: str) -> AssetEntry | None:
        for entry in self.entries:
            if entry.element_id == element_id:
                return entry
        return None

    def was_skipped(self, element_id: str) -> bool:
        return any(eid == element_id for eid, _ in self.skipped)

    def abs_path(self, entry: AssetEntry) -> Path:
        return Path(self.root) / entry.path

    def write_index(self, page_id: str) -> Path:
        """Persist the index for one page's entries."""
        page_dir = Path(self.root) / page_id
        page_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "page_id": page_id,
            "entries": [
                {
                    "element_id": e.element_id,
                    "page_id": e.page_id,
                    "bbox": [_num(e.bbox.x), _num(e.bbox.y), _num(e.bbox.w), _num(e.bbox.h)],
                    "crop": [_num(e.crop.x), _num(e.crop.y), _num(e.crop.w), _num(e.crop.h)],
                    "path": e.path,
                    "transparent": e.transparent,
                    "clamped": e.clamped,
                    "background_removed": e.background_removed,
                }
                for e in self.entries
                if e.page_id == page_id
            ],
            "skipped": [[eid, reason] for eid, reason in self.skipped],
        }
        index_path = page_dir / "index.json"
        index_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        return index_path


def crop_elements(
    image: Image.Image, det_set: DetectionSet, repo: AssetRepository
) -> AssetRepository:
    """Cut one asset per detection out of the page image and persist it.

    Crop rectangles are the detection boxes clamped to the page (clamping is
    recorded on the entry). A crop is flagged transparent when at least 10%
    of its pixels have alpha below 255. Zero-area clamped boxes are skipped
    with a recorded warning.
    """
    width, height = image.size
    if det_set.page_size is not None and tuple(det_set.page_size) != (width, height):
        raise ValidationError(
            f"image size {(width, height)} does not match page size {tuple(det_set.page_size)}"
        )
    page_dir = Path(repo.root) / det_set.page_id
    page_dir.mkdir(parents=True, exist_ok=True)

    for i, det in enumerate(det_set.detections):
        eid = element_id(det_set.page_id, i)
        crop_box = clamp_to_page(det.box, width, height)
        if area(crop_box) <= 0.0:
            reason = "zero-area crop after clamping to page bounds"
            repo.skipped.append((eid, reason))
            log.warning("skipping %s: %s", eid, reason)
            continue
        left = int(math.floor(crop_box.x))
        top = int(math.floor(crop_box.y))
        right = min(int(math.ceil(crop_box.right)), width)
        bottom = min(int(math.ceil(crop_box.bottom)), height)
        crop_img = image.crop((left, top, right, bottom))
        rel_path = f"{det_set.page_id}/elem{i}.png" if det_set.page_id else f"elem{i}.png"
        crop_img.save(Path(repo.root) / rel_path, format="PNG")
        nobg = page_dir / f"elem{i}.nobg.png"
        repo.entries.append(
            AssetEntry(
                element_id=eid,
                page_id=det_set.page_id,
                bbox=det.box,
                crop=crop_box,
                path=rel_path,
                transparent=_alpha_fraction(crop_img) >= 0.10,
                clamped=crop_box != det.box,
                background_removed=str(nobg.relative_to(repo.root)) if nobg.exists() else None,
            )
        )
    repo.write_index(det_set.page_id)
    return repo


def _alpha_fraction(img: Image.Image) -> float:
    """Fraction of pixels with alpha < 255; 0.0 for images without alpha."""
    if "A" not in img.getbands():
        return 0.0
    hist = img.getchannel("A").histogram()
    total = sum(hist)
    if total == 0:
        return 0.0
    return sum(hist[:255]) / total


def load_page_image(path: str | Path) -> Image.Image:
    return Image.open(path)
