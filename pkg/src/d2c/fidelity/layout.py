"""A deterministic naive layout pass over the parsed DOM.

This is intentionally not a browser. Canonical reference pages carry
explicit coordinates in inline styles, so absolute placement does the heavy
lifting; everything else stacks vertically inside its parent at full parent
width, with 20 layout units per text-bearing block when no height is given.
For full-fidelity evaluation feed externally rendered blocks in through the
sidecar format instead (see blocks.load_blocks_json).
"""

from __future__ import annotations

import logging
import re

from ..errors import ValidationError
from ..geometry import BoundingBox, clamp_to_page
from .blocks import BlockRecord
from .color import RGB, parse_css_color
from .htmlparse import DomNode

log = logging.getLogger(__name__)

TEXT_BLOCK_HEIGHT = 20.0

# Subtrees that never render.
_SKIP_TAGS = {"head", "script", "style", "title", "meta", "link", "base"}

_LENGTH = re.compile(r"(-?\d+(?:\.\d+)?)(?:px)?$")


def parse_style(style: str, warnings: list[str]) -> dict[str, str]:
    """Split an inline style attribute into a property map. Declarations
    that are not `name: value` are skipped and recorded."""
    decls: dict[str, str] = {}
    for chunk in style.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, sep, value = chunk.partition(":")
        name, value = name.strip().casefold(), value.strip()
        if not sep or not name or not value:
            warnings.append(f"unparseable style declaration {chunk!r}")
            continue
        decls[name] = value
    return decls


def _length(decls: dict[str, str], prop: str, warnings: list[str]) -> float | None:
    raw = decls.get(prop)
    if raw is None:
        return None
    m = _LENGTH.match(raw.strip())
    if not m:
        warnings.append(f"unparseable {prop} value {raw!r}")
        return None
    return float(m.group(1))


def _color(decls: dict[str, str], prop: str, inherited: RGB, warnings: list[str]) -> RGB:
    raw = decls.get(prop)
    if raw is None:
        return inherited
    parsed = parse_css_color(raw)
    if parsed is None:
        warnings.append(f"unparseable {prop} value {raw!r}")
        return inherited
    return parsed


def layout_blocks(dom: DomNode, viewport: tuple[float, float]) -> list[BlockRecord]:
    """Lay out the tree and emit one BlockRecord per element that directly
    contains text. Fill color comes from the nearest ancestor `color` style
    (default black), background from the nearest `background-color`
    (default white); block boxes are clamped to the viewport."""
    vw, vh = viewport
    if vw <= 0 or vh <= 0:
        raise ValidationError(f"viewport must be positive, got {viewport}")
    blocks: list[BlockRecord] = []
    warnings: list[str] = []
    cursor = 0.0
    for child in dom.children:
        cursor += _place(child, 0.0, 0.0, float(vw), cursor, (0, 0, 0), (255, 255, 255),
                         (float(vw), float(vh)), blocks, warnings)
    if dom.text:
        # Text sitting directly at the top level occupies the full viewport width.
        blocks.insert(0, BlockRecord(dom.text, BoundingBox(0.0, 0.0, float(vw), TEXT_BLOCK_HEIGHT)))
    for w in warnings:
        log.warning("%s", w)
    return blocks


def _place(
    node: DomNode,
    parent_x: float,
    parent_y: float,
    parent_w: float,
    cursor: float,
    fill: RGB,
    background: RGB,
    viewport: tuple[float, float],
    blocks: list[BlockRecord],
    warnings: list[str],
) -> float:
    """Lay out one element; returns the flow height it consumes in its parent
    (0 for absolutely placed elements)."""
    if node.tag in _SKIP_TAGS:
        return 0.0
    decls = parse_style(node.style(), warnings)
    fill = _color(decls, "color", fill, warnings)
    background = _color(decls, "background-color", background, warnings)
    width = _length(decls, "width", warnings)
    height = _length(decls, "height", warnings)
    left = _length(decls, "left", warnings)
    top = _length(decls, "top", warnings)
    absolute = (
        left is not None
        or top is not None
        or decls.get("position") in ("absolute", "fixed")
    )

    if absolute:
        x = left if left is not None else 0.0
        y = top if top is not None else 0.0
    else:
        x = parent_x
        y = parent_y + cursor
    w = width if width is not None else parent_w

    inner = TEXT_BLOCK_HEIGHT if node.text else 0.0
    for child in node.children:
        inner += _place(child, x, y, w, inner, fill, background, viewport, blocks, warnings)
    h = height if height is not None else inner

    if node.text:
        box = clamp_to_page(BoundingBox(x, y, w, h), viewport[0], viewport[1])
        blocks.append(BlockRecord(node.text, box, fill, background))
    return 0.0 if absolute else h
