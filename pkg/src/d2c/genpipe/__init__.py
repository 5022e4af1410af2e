"""Generation orchestration: prompt assembly, model backends with
record/replay, schema-response parsing, the end-to-end page pipeline, and
the pairwise judge."""

from .backends import (
    CassetteMode,
    HttpChatBackend,
    ReplayBackend,
    ReplayCassette,
    VlmBackend,
    fingerprint_prompt,
    http_backend_from_config,
)
from .judge import Verdict, Winner, build_judge_prompt, parse_judge_verdict
from .pipeline import (
    GeneratedPage,
    PipelineConfig,
    Provenance,
    extract_first_json_object,
    parse_schema_response,
    run_manifest,
    run_pipeline,
)
from .prompts import (
    TEMPLATE_VERSION,
    Attachment,
    Prompt,
    build_html_prompt,
    build_schema_prompt,
    load_template,
    render_element_listing,
    render_region_listing,
)

__all__ = [
    "Attachment",
    "CassetteMode",
    "GeneratedPage",
    "HttpChatBackend",
    "PipelineConfig",
    "Prompt",
    "Provenance",
    "ReplayBackend",
    "ReplayCassette",
    "TEMPLATE_VERSION",
    "Verdict",
    "VlmBackend",
    "Winner",
    "build_html_prompt",
    "build_judge_prompt",
    "build_schema_prompt",
    "extract_first_json_object",
    "fingerprint_prompt",
    "http_backend_from_config",
    "load_template",
    "parse_judge_verdict",
    "parse_schema_response",
    "render_element_listing",
    "render_region_listing",
    "run_manifest",
    "run_pipeline",
]
