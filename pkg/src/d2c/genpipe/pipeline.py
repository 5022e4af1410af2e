"""End-to-end page generation: detections in, schema and HTML out.

Per page the pipeline runs: region optimization, class-routed fusion,
element cropping, the schema model call, schema parsing/validation, and the
HTML model call. Exactly two model calls are made per page; every
intermediate artifact is persisted under the page's work directory, so a
run against a replay cassette is a pure function of its input files.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..corpus import CorpusManifest
from ..detect import (
    AssetRepository,
    Detection,
    DetectionSet,
    ClassRoutingTable,
    crop_elements,
    default_routing,
    element_id,
    fuse_detections,
    load_page_image,
    parse_detection_file,
    serialize_detections,
)
from ..errors import (
    BackendError,
    ReplayMissError,
    SchemaFormatError,
    SchemaNotFoundError,
    StageError,
    ValidationError,
)
from ..geometry import BoundingBox, OptimizationConfig, ScoredBox, clamp_to_page, optimize_boxes
from ..schema import LayoutSchema, schema_from_obj, schema_to_json, validate_schema
from .backends import VlmBackend
from .prompts import TEMPLATE_VERSION, build_html_prompt, build_schema_prompt

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Provenance:
    backend_kind: str
    model: str
    cassette_id: str | None = None
    template_version: str = TEMPLATE_VERSION


@dataclass
class GeneratedPage:
    page_id: str
    schema: LayoutSchema
    html: str
    provenance: Provenance


@dataclass
class PipelineConfig:
    work_dir: Path
    routing: ClassRoutingTable = field(default_factory=default_routing)
    optimization: OptimizationConfig = field(default_factory=OptimizationConfig)
    template_dir: Path | None = None
    asset_root: Path | None = None  # defaults to work_dir / "assets"
    retries: int = 0  # extra attempts per model call, identical prompt


# --------------------------------------------------------------------------
# Response parsing


def extract_first_json_object(text: str):
    """Return the first parseable top-level JSON object embedded in `text`,
    tolerating fenced code blocks and surrounding prose; None if there is
    none. Balances braces while honoring string literals and escapes."""
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            c = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif c == "\\":
                    escaped = True
                elif c == '"':
                    in_string = False
            elif c == '"':
                in_string = True
            elif c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    try:
                        return json.loads(text[start : i + 1])
                    except json.JSONDecodeError:
                        break  # not valid JSON; try the next opening brace
        start = text.find("{", start + 1)
    return None


def parse_schema_response(
    text: str,
    *,
    element_boxes: dict[str, BoundingBox] | None = None,
    element_labels: dict[str, str] | None = None,
    expected_page_id: str | None = None,
    expected_page_size: tuple[int, int] | None = None,
) -> LayoutSchema:
    """Turn a model response into a validated LayoutSchema.

    Extracts the first JSON object from the response, backfills element
    boxes/labels (and page id/size) the model omitted from the detection
    inputs, and runs the structural validator. Raises SchemaNotFoundError
    when no JSON object exists and SchemaFormatError (report attached) when
    one does but is not a valid schema.
    """
    obj = extract_first_json_object(text)
    if obj is None:
        raise SchemaNotFoundError("no JSON object found in model response")
    parsed = schema_from_obj(
        obj,
        element_boxes=element_boxes,
        element_labels=element_labels,
        default_page_id=expected_page_id,
        default_page_size=expected_page_size,
    )
    report = validate_schema(parsed)
    if not report.ok:
        raise SchemaFormatError(
            "schema fails validation: " + ", ".join(sorted(set(report.codes()))),
            report=report,
        )
    return parsed


def _strip_fence(text: str) -> str:
    """Peel a single wrapping markdown code fence off a response, if any."""
    stripped = text.strip()
    if stripped.startswith("```"):
        lines = stripped.splitlines()
        if len(lines) >= 2 and lines[-1].strip() == "```":
            return "\n".join(lines[1:-1])
    return text


# --------------------------------------------------------------------------
# Orchestration


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e


def _call(backend: VlmBackend, prompt, retries: int) -> str:
    attempts = retries + 1
    for attempt in range(attempts):
        try:
            return backend.complete(prompt)
        except ReplayMissError:
            raise  # deterministic: retrying cannot help
        except BackendError:
            if attempt + 1 == attempts:
                raise
            log.warning("model call failed (attempt %d/%d), retrying", attempt + 1, attempts)
    raise AssertionError("unreachable")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _prompt_text(prompt) -> str:
    if prompt.system:
        return f"{prompt.system}\n\n{prompt.user}\n"
    return prompt.user + ("" if prompt.user.endswith("\n") else "\n")


def run_pipeline(
    screenshot: str | Path,
    detection_files: tuple[str | Path, str | Path, str | Path],
    backend: VlmBackend,
    cfg: PipelineConfig,
    *,
    page_id: str | None = None,
) -> GeneratedPage:
    """Generate one page. `detection_files` is (regions, global, dense).

    Artifacts written under <work_dir>/<page_id>/: optimized_regions.json,
    fused_elements.json, prompt_schema.txt, schema.json, prompt_html.txt,
    out.html. Any failure is re-raised as StageError naming the stage.
    """
    regions_file, global_file, dense_file = detection_files
    pid = page_id if page_id is not None else Path(screenshot).stem
    page_dir = Path(cfg.work_dir) / pid
    page_dir.mkdir(parents=True, exist_ok=True)
    asset_root = Path(cfg.asset_root) if cfg.asset_root else Path(cfg.work_dir) / "assets"

    with _stage("load_inputs"):
        image = load_page_image(screenshot)
        page_size = image.size

    with _stage("optimize_regions"):
        region_set = parse_detection_file(
            Path(regions_file).read_bytes(), page_id=pid, page_size=page_size
        )
        scored = [ScoredBox(d.box, d.score, d.category) for d in region_set.detections]
        optimized = optimize_boxes(scored, cfg.optimization)
        optimized = [
            replace(sb, box=clamp_to_page(sb.box, page_size[0], page_size[1]))
            for sb in optimized
        ]
        _write(
            page_dir / "optimized_regions.json",
            serialize_detections(
                DetectionSet(
                    pid, page_size, [Detection(sb.box, sb.score, sb.category) for sb in optimized]
                )
            ).decode("utf-8"),
        )

    with _stage("fuse_elements"):
        global_set = parse_detection_file(
            Path(global_file).read_bytes(), page_id=pid, page_size=page_size
        )
        dense_set = parse_detection_file(
            Path(dense_file).read_bytes(), page_id=pid, page_size=page_size
        )
        fused = fuse_detections(global_set, dense_set, cfg.routing)
        _write(page_dir / "fused_elements.json", serialize_detections(fused).decode("utf-8"))

    with _stage("crop_elements"):
        repo = crop_elements(image, fused, AssetRepository(asset_root))

    with _stage("build_schema_prompt"):
        schema_prompt = build_schema_prompt(
            optimized, fused, screenshot=screenshot, template_dir=cfg.template_dir
        )
        _write(page_dir / "prompt_schema.txt", _prompt_text(schema_prompt))

    with _stage("schema_model_call"):
        schema_response = _call(backend, schema_prompt, cfg.retries)

    with _stage("parse_schema_response"):
        boxes = {element_id(pid, i): d.box for i, d in enumerate(fused.detections)}
        labels = {element_id(pid, i): d.label for i, d in enumerate(fused.detections)}
        structure = parse_schema_response(
            schema_response,
            element_boxes=boxes,
            element_labels=labels,
            expected_page_id=pid,
            expected_page_size=page_size,
        )
        _write(page_dir / "schema.json", schema_to_json(structure) + "\n")

    with _stage("build_html_prompt"):
        html_prompt = build_html_prompt(
            structure, repo, screenshot=screenshot, template_dir=cfg.template_dir
        )
        _write(page_dir / "prompt_html.txt", _prompt_text(html_prompt))

    with _stage("html_model_call"):
        html_response = _call(backend, html_prompt, cfg.retries)

    with _stage("write_output"):
        html = _strip_fence(html_response)
        if not html.strip():
            raise BackendError("model returned an empty HTML document")
        _write(page_dir / "out.html", html)

    return GeneratedPage(
        page_id=pid,
        schema=structure,
        html=html,
        provenance=Provenance(backend.kind, backend.model, backend.cassette_id),
    )


def run_manifest(
    manifest: CorpusManifest,
    backend: VlmBackend,
    cfg: PipelineConfig,
    *,
    parallel: int = 1,
) -> list[GeneratedPage]:
    """Generate every page in a corpus manifest; pages are independent and
    run on up to `parallel` threads. Results keep manifest order."""

    def one(entry) -> GeneratedPage:
        if not entry.regions or not entry.global_detections or not entry.dense_detections:
            raise StageError(
                "load_inputs",
                ValidationError(
                    f"page {entry.page_id}: generation needs regions/global/dense detection files"
                ),
            )
        return run_pipeline(
            entry.screenshot,
            (entry.regions, entry.global_detections, entry.dense_detections),
            backend,
            cfg,
            page_id=entry.page_id,
        )

    if parallel <= 1:
        return [one(entry) for entry in manifest.pages]
    with ThreadPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(one, manifest.pages))
