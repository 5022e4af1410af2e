"""The text block: the atom of fidelity scoring, plus its sidecar JSON format.

The sidecar format is the exchange point with external renderers: a real
browser can dump BlockRecords and the scoring pipeline consumes them in
place of the built-in naive layout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..errors import ParseError, ValidationError
from ..geometry import BoundingBox
from .color import RGB, parse_css_color, rgb_to_hex


@dataclass(frozen=True)
class BlockRecord:
    """A rendered text block: content, layout box, effective text color,
    and background color."""

    text: str
    box: BoundingBox
    fill: RGB = (0, 0, 0)
    background: RGB = (255, 255, 255)


def load_blocks_json(data: bytes | str) -> list[BlockRecord]:
    """Load the sidecar format: an array of
    {"text", "bbox": [x, y, w, h], "fill": "#rrggbb", "background": "#rrggbb"}."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed block JSON: {e.msg}", offset=e.pos) from e
    if not isinstance(raw, list):
        raise ValidationError("block file must be a JSON array")
    blocks = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict) or not isinstance(entry.get("text"), str):
            raise ValidationError(f"block {i}: expected an object with a text field")
        bbox = entry.get("bbox")
        if not isinstance(bbox, list) or len(bbox) != 4:
            raise ValidationError(f"block {i}: bbox must be [x, y, width, height]")
        fill = parse_css_color(str(entry.get("fill", "#000000")))
        background = parse_css_color(str(entry.get("background", "#ffffff")))
        if fill is None or background is None:
            raise ValidationError(f"block {i}: unparseable color")
        blocks.append(
            BlockRecord(
                text=entry["text"],
                box=BoundingBox(*(float(v) for v in bbox)),
                fill=fill,
                background=background,
            )
        )
    return blocks


def dump_blocks_json(blocks: list[BlockRecord]) -> str:
    rows = [
        {
            "text": b.text,
            "bbox": [b.box.x, b.box.y, b.box.w, b.box.h],
            "fill": rgb_to_hex(b.fill),
            "background": rgb_to_hex(b.background),
        }
        for b in blocks
    ]
    return json.dumps(rows, indent=2, ensure_ascii=False)
