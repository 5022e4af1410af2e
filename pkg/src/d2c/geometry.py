"""Rectangle arithmetic and overlap resolution for detected layout regions."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned rectangle in page coordinates: origin top-left, [x, y, width, height]."""

    x: float
    y: float
    w: float
    h: float

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass(frozen=True)
class ScoredBox:
    """A detected region: rectangle, confidence in [0, 1], and category id."""

    box: BoundingBox
    score: float
    category: int = 0


@dataclass(frozen=True)
class OptimizationConfig:
    """Overlap threshold plus the confidence factor a challenger must exceed
    to evict an already-retained box."""

    iou_threshold: float = 0.2
    dominance_factor: float = 1.2

    def __post_init__(self):
        if not 0.0 < self.iou_threshold < 1.0:
            raise ValidationError(f"iou_threshold must be in (0, 1), got {self.iou_threshold}")
        if not self.dominance_factor > 1.0:
            raise ValidationError(f"dominance_factor must be > 1, got {self.dominance_factor}")


def area(b: BoundingBox) -> float:
    return b.w * b.h


def intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.right, b.right) - max(a.x, b.x)
    ih = min(a.bottom, b.bottom) - max(a.y, b.y)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    return iw * ih


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; 0.0 when the union is degenerate."""
    inter = intersection_area(a, b)
    union = area(a) + area(b) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def clamp_to_page(b: BoundingBox, page_w: float, page_h: float) -> BoundingBox:
    """Clip a box to the page rectangle; may come out with zero width/height."""
    x0 = min(max(b.x, 0.0), page_w)
    y0 = min(max(b.y, 0.0), page_h)
    x1 = min(max(b.right, 0.0), page_w)
    y1 = min(max(b.bottom, 0.0), page_h)
    return BoundingBox(x0, y0, max(0.0, x1 - x0), max(0.0, y1 - y0))


def optimize_boxes(
    boxes: list[ScoredBox], cfg: OptimizationConfig = OptimizationConfig()
) -> list[ScoredBox]:
    """Resolve overlapping region detections.

    Candidates are processed in ascending area order (ties keep input order).
    Each candidate is compared against every currently retained box: an
    overlap above ``cfg.iou_threshold`` discards the candidate unless its
    confidence exceeds the retained box's by more than
    ``cfg.dominance_factor``, in which case the retained box is evicted and
    the scan continues. The output keeps processing order, is always a
    subset of the input, and no two returned boxes overlap by more than
    ``cfg.iou_threshold``.
    """
    for i, sb in enumerate(boxes):
        if math.isnan(sb.score) or not 0.0 <= sb.score <= 1.0:
            raise ValidationError(f"box {i}: score must be a number in [0, 1], got {sb.score}")
        if sb.box.w < 0 or sb.box.h < 0:
            raise ValidationError(f"box {i}: negative dimensions {sb.box.w}x{sb.box.h}")

    ordered = sorted(boxes, key=lambda sb: area(sb.box))  # stable: ties keep input order
    kept: list[ScoredBox] = []
    for cand in ordered:
        should_keep = True
        evicted: set[int] = set()
        for j, kb in enumerate(kept):
            if iou(cand.box, kb.box) > cfg.iou_threshold:
                if cand.score > kb.score * cfg.dominance_factor:
                    evicted.add(j)
                else:
                    should_keep = False
                    break
        # Evictions collected before an early stop still apply: in the scan
        # they happen the moment the dominance test passes.
        if evicted:
            kept = [kb for j, kb in enumerate(kept) if j not in evicted]
        if should_keep:
            kept.append(cand)
    return kept
