"""Prompt assembly for the two generation stages.

Prompt wording lives in versioned template files (templates/<version>/) so
it can be swapped without code changes; the builders only fill in the
page-specific blocks.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..detect import (
    AssetRepository,
    Detection,
    DetectionSet,
    element_id,
    render_detection_listing,
)
from ..errors import ValidationError
from ..geometry import ScoredBox
from ..schema import LayoutSchema, schema_to_json

TEMPLATE_VERSION = "v1"

ImageRef = str | Path | bytes


@dataclass(frozen=True)
class Attachment:
    """An image attached to a prompt; `tag` must appear in the user text."""

    tag: str
    ref: ImageRef


@dataclass(frozen=True)
class Prompt:
    system: str
    user: str
    attachments: tuple[Attachment, ...] = ()

    def __post_init__(self):
        if not self.user:
            raise ValidationError("prompt user text must be non-empty")
        for att in self.attachments:
            if att.tag not in self.user:
                raise ValidationError(f"attachment tag {att.tag!r} not referenced in prompt text")


def load_template(name: str, template_dir: str | Path | None = None) -> string.Template:
    """Read a prompt template; `template_dir` overrides the packaged set."""
    if template_dir is not None:
        text = (Path(template_dir) / name).read_text(encoding="utf-8")
    else:
        text = (
            resources.files("d2c") / "genpipe" / "templates" / TEMPLATE_VERSION / name
        ).read_text(encoding="utf-8")
    return string.Template(text)


def _fmt(v: float):
    return int(v) if float(v).is_integer() else v


def render_region_listing(regions: list[ScoredBox]) -> str:
    """Region list in the detection-JSON text form."""
    return render_detection_listing(
        DetectionSet(detections=[Detection(r.box, r.score, r.category) for r in regions])
    )


def render_element_listing(elements: DetectionSet) -> str:
    """Element list in the plain-text "BoxN: x=.., y=.., width=.., height=.." form."""
    return "\n".join(
        f"Box{i}: x={_fmt(d.box.x)}, y={_fmt(d.box.y)}, "
        f"width={_fmt(d.box.w)}, height={_fmt(d.box.h)}"
        for i, d in enumerate(elements.detections)
    )


def _elements_section(elements: DetectionSet) -> str:
    if not elements.detections:
        return (
            "Note: no discrete elements detected on this page. "
            'Leave every "children" array and "orphans" empty.'
        )
    id_lines = "\n".join(
        f'Box{i} = "{element_id(elements.page_id, i)}"'
        for i in range(len(elements.detections))
    )
    return (
        "Below are the positions of components identified by the component detection model:\n"
        + render_element_listing(elements)
        + "\n\nComponent element ids (use these verbatim in children/orphans):\n"
        + id_lines
    )


def build_schema_prompt(
    regions: list[ScoredBox],
    elements: DetectionSet,
    *,
    screenshot: ImageRef,
    template_dir: str | Path | None = None,
) -> Prompt:
    """First-stage prompt: page areas as detection JSON, components as the
    BoxN listing, and instructions to emit the layout schema shape."""
    if elements.page_size is None:
        raise ValidationError("elements.page_size is required to build the schema prompt")
    page_w, page_h = elements.page_size
    user = load_template("schema_prompt.txt", template_dir).substitute(
        page_id=elements.page_id,
        page_width=_fmt(page_w),
        page_height=_fmt(page_h),
        regions_block=render_region_listing(regions),
        elements_section=_elements_section(elements),
    )
    return Prompt(system="", user=user, attachments=(Attachment("screenshot", screenshot),))


def _asset_block(structure: LayoutSchema, assets: AssetRepository) -> str:
    refs = [c for r in structure.regions for c in r.children] + list(structure.orphans)
    if not assets.entries and not assets.skipped:
        return "No cropped assets are available; draw every element with markup and CSS."
    lines = ["Cropped visual assets (element id -> file under the asset root):"]
    for ref in refs:
        entry = assets.get(ref.element_id)
        if entry is None:
            if assets.was_skipped(ref.element_id):
                lines.append(f"{ref.element_id} -> (no asset: crop was skipped)")
                continue
            raise ValidationError(f"element {ref.element_id!r} has no asset in the repository")
        line = f"{entry.element_id} -> {entry.path}"
        if entry.transparent:
            line += " (transparent icon)"
        if entry.background_removed:
            line += f" [background-removed: {entry.background_removed}]"
        lines.append(line)
    return "\n".join(lines)


def _orphans_section(structure: LayoutSchema) -> str:
    if not structure.orphans:
        return ""
    lines = ["Unassigned elements (they belong to no region; place them at their coordinates):"]
    for o in structure.orphans:
        b = o.box
        line = f"{o.element_id} at [{_fmt(b.x)}, {_fmt(b.y)}, {_fmt(b.w)}, {_fmt(b.h)}]"
        if o.label:
            line += f" ({o.label})"
        lines.append(line)
    return "\n".join(lines)


def build_html_prompt(
    structure: LayoutSchema,
    assets: AssetRepository,
    *,
    screenshot: ImageRef,
    template_dir: str | Path | None = None,
) -> Prompt:
    """Second-stage prompt: the canonical schema JSON as the structural
    skeleton plus the asset-id to file mapping."""
    user = load_template("html_prompt.txt", template_dir).substitute(
        schema_json=schema_to_json(structure),
        assets_block=_asset_block(structure, assets),
        orphans_section=_orphans_section(structure),
    )
    return Prompt(system="", user=user, attachments=(Attachment("screenshot", screenshot),))
