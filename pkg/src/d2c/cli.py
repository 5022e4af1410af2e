"""Command-line surface binding the library into one tool.

Subcommands: optimize, fuse, schema, generate, judge, eval, stats. Every
subcommand is a thin wrapper over the corresponding library call. Exit
codes: 0 success, 1 validation failure, 2 I/O or backend failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import corpus as corpus_mod
from . import genpipe
from .detect import (
    ClassRoutingTable,
    Detection,
    DetectionSet,
    default_routing,
    fuse_detections,
    parse_detection_file,
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
from .fidelity import layout_blocks, load_blocks_json, parse_canonical_html, score_page
from .geometry import OptimizationConfig, ScoredBox, optimize_boxes
from .schema import build_schema, schema_to_json, validate_schema

_VALIDATION_ERRORS = (
    ValidationError,
    ParseError,
    SchemaNotFoundError,
    SchemaFormatError,
    MalformedVerdictError,
)
_IO_ERRORS = (BackendError, ReplayMissError, OSError)


@dataclass
class RunConfig:
    """Resolved knobs shared by the batch subcommands."""

    work_dir: Path
    backend: genpipe.VlmBackend
    routing: ClassRoutingTable
    optimization: OptimizationConfig
    parallel: int = 1
    template_dir: Path | None = None

    def __post_init__(self):
        if self.parallel < 1:
            raise ValidationError("parallelism must be >= 1")


def _page_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        size = (int(w), int(h))
    except ValueError:
        raise ValidationError(f"page size must look like 1280x2000, got {text!r}") from None
    if size[0] <= 0 or size[1] <= 0:
        raise ValidationError(f"page dimensions must be positive, got {text!r}")
    return size


def _load_routing(path: str | None) -> ClassRoutingTable:
    if path is None:
        return default_routing()
    return ClassRoutingTable.from_json(Path(path).read_bytes())


def _build_backend(args, for_record: bool = False) -> genpipe.VlmBackend:
    if args.backend == "replay":
        if not args.cassette:
            raise ValidationError("--cassette is required with the replay backend")
        return genpipe.ReplayBackend(args.cassette)
    cfg_path = getattr(args, "config", None)
    if not cfg_path:
        raise ValidationError("--config is required with the http backend")
    cfg = json.loads(Path(cfg_path).read_text(encoding="utf-8"))
    record_to = None
    if getattr(args, "record", None):
        record_to = genpipe.ReplayCassette(args.record, genpipe.CassetteMode.RECORD)
    return genpipe.http_backend_from_config(cfg, record_to=record_to)


# --------------------------------------------------------------------------
# Subcommand handlers


def _cmd_optimize(args) -> int:
    ds = parse_detection_file(Path(args.infile).read_bytes(), page_id=args.page_id)
    cfg = OptimizationConfig(iou_threshold=args.iou, dominance_factor=args.factor)
    kept = optimize_boxes([ScoredBox(d.box, d.score, d.category) for d in ds.detections], cfg)
    out = DetectionSet(
        ds.page_id, ds.page_size, [Detection(sb.box, sb.score, sb.category) for sb in kept]
    )
    Path(args.out).write_bytes(serialize_detections(out))
    print(f"kept {len(kept)} of {len(ds.detections)} boxes -> {args.out}")
    return 0


def _cmd_fuse(args) -> int:
    routing = _load_routing(args.routing)
    fused = fuse_detections(
        parse_detection_file(Path(args.global_file).read_bytes(), page_id=args.page_id),
        parse_detection_file(Path(args.dense_file).read_bytes(), page_id=args.page_id),
        routing,
    )
    Path(args.out).write_bytes(serialize_detections(fused))
    print(f"fused {len(fused.detections)} detections -> {args.out}")
    return 0


def _cmd_schema(args) -> int:
    size = _page_size(args.page_size)
    regions_ds = parse_detection_file(
        Path(args.regions).read_bytes(), page_id=args.page_id, page_size=size
    )
    elements = parse_detection_file(
        Path(args.elements).read_bytes(), page_id=args.page_id, page_size=size
    )
    regions = [ScoredBox(d.box, d.score, d.category) for d in regions_ds.detections]
    built = build_schema(regions, elements)
    report = validate_schema(built)
    Path(args.out).write_text(schema_to_json(built) + "\n", encoding="utf-8")
    if not report.ok:
        for v in report.violations:
            print(f"{v.code}: {v.message} ({v.subject})", file=sys.stderr)
        return 1
    print(f"schema with {len(built.regions)} regions, {len(built.orphans)} orphans -> {args.out}")
    return 0


def _cmd_generate(args) -> int:
    manifest = corpus_mod.load_manifest(args.manifest)
    run = RunConfig(
        work_dir=Path(args.work_dir),
        backend=_build_backend(args),
        routing=_load_routing(args.routing),
        optimization=OptimizationConfig(iou_threshold=args.iou, dominance_factor=args.factor),
        parallel=args.parallel,
        template_dir=Path(args.templates) if args.templates else None,
    )
    cfg = genpipe.PipelineConfig(
        work_dir=run.work_dir,
        routing=run.routing,
        optimization=run.optimization,
        template_dir=run.template_dir,
        retries=args.retries,
    )
    pages = genpipe.run_manifest(manifest, run.backend, cfg, parallel=run.parallel)
    for page in pages:
        print(f"{page.page_id}: {len(page.schema.regions)} regions -> "
              f"{run.work_dir / page.page_id / 'out.html'}")
    return 0


def _cmd_judge(args) -> int:
    prompt = genpipe.build_judge_prompt(
        args.reference, args.a, args.b,
        template_dir=Path(args.templates) if args.templates else None,
    )
    backend = _build_backend(args)
    verdict = genpipe.parse_judge_verdict(backend.complete(prompt))
    print(f"WINNER: METHOD {verdict.winner.value}")
    if verdict.reasoning:
        print(f"REASONING: {verdict.reasoning}")
    return 0


def _blocks_from_file(path: Path, size: tuple[int, int]):
    if path.suffix.lower() == ".json":
        return load_blocks_json(path.read_bytes())
    dom = parse_canonical_html(path.read_text(encoding="utf-8"))
    return layout_blocks(dom, size)


def _cmd_eval(args) -> int:
    if args.manifest:
        return _eval_manifest(args)
    if not (args.gen and args.gt and args.page):
        raise ValidationError("eval needs either --manifest/--gen-dir or --gen/--gt/--page")
    size = _page_size(args.page)
    scores = score_page(
        _blocks_from_file(Path(args.gen), size),
        _blocks_from_file(Path(args.gt), size),
        size,
        min_dice=args.min_dice,
    )
    print(f"Text:     {scores.text:.4f}")
    print(f"Block:    {scores.block:.4f}")
    print(f"Position: {scores.position:.4f}")
    print(f"Color:    {scores.color:.4f}")
    return 0


def _eval_manifest(args) -> int:
    if not args.gen_dir:
        raise ValidationError("--gen-dir is required with --manifest")
    if args.parallel < 1:
        raise ValidationError("parallelism must be >= 1")
    manifest = corpus_mod.load_manifest(args.manifest)
    gen_dir = Path(args.gen_dir)
    pages = [p for p in manifest.pages if p.gt_html is not None]
    if not pages:
        raise ValidationError("manifest has no pages with gt_html")

    def one(page):
        from PIL import Image

        with Image.open(page.screenshot) as img:
            size = img.size
        gen_path = gen_dir / page.page_id / "out.html"
        if not gen_path.exists():
            raise ValidationError(f"page {page.page_id}: missing generated output {gen_path}")
        gen_blocks = _blocks_from_file(gen_path, size)
        ref_blocks = _blocks_from_file(page.gt_html, size)
        return (page.page_id, score_page(gen_blocks, ref_blocks, size, min_dice=args.min_dice))

    if args.parallel > 1:
        with ThreadPoolExecutor(max_workers=args.parallel) as pool:
            per_page = list(pool.map(one, pages))
    else:
        per_page = [one(p) for p in pages]
    metadata = {
        "corpus": manifest.name,
        "template_version": genpipe.TEMPLATE_VERSION,
        "evaluated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "min_dice": args.min_dice,
    }
    report = corpus_mod.aggregate_reports(per_page, metadata=metadata)
    print(corpus_mod.format_report_table(report))
    if args.out:
        Path(args.out).write_text(corpus_mod.report_to_json(report) + "\n", encoding="utf-8")
        print(f"report -> {args.out}")
    return 0


def _cmd_stats(args) -> int:
    manifest = corpus_mod.load_manifest(args.manifest)
    routing = _load_routing(args.routing)
    annotations = [corpus_mod.annotation_from_manifest(p, routing) for p in manifest.pages]
    layout = corpus_mod.compute_layout_stats(annotations)
    bench = corpus_mod.compute_eval_stats(annotations, large_threshold=args.large_threshold)

    def row(name: str, s: corpus_mod.Summary, pct: bool = False) -> str:
        unit = "%" if pct else ""
        cells = "".join(f"{f'{v:.2f}{unit}':>11}" for v in (s.min, s.max, s.avg))
        return f"{name:<22}{cells}"

    print(f"Corpus: {manifest.name} ({len(annotations)} pages)")
    print(f"{'Metric':<22}{'Min':>11}{'Max':>11}{'Avg':>11}")
    print(row("Boxes/page", layout.boxes_per_page))
    print(row("Elements/page", layout.elements_per_page))
    print(row("Elements/box", layout.elements_per_box))
    print(row("Tokens/box", layout.tokens_per_box))
    print(row("Box-to-page ratio", layout.box_to_page_ratio, pct=True))
    print()
    print(f"Element coverage:  {bench.element_coverage:.1%}")
    print(f"Large elements:    {bench.large_elements:.1%} (threshold {args.large_threshold:.2%})")
    if args.json:
        payload = {
            "corpus": manifest.name,
            "layout": {
                name: vars(getattr(layout, name))
                for name in (
                    "boxes_per_page",
                    "elements_per_page",
                    "elements_per_box",
                    "tokens_per_box",
                    "box_to_page_ratio",
                )
            },
            "benchmark": vars(bench),
        }
        Path(args.json).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"stats -> {args.json}")
    return 0


# --------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="d2c",
        description="Design-to-code toolkit: box optimization, detection fusion, "
        "schema-guided generation, fidelity scoring, and corpus statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="resolve overlapping region boxes in a detection file")
    p.add_argument("--in", dest="infile", required=True, help="input detection JSON")
    p.add_argument("--out", required=True, help="output detection JSON")
    p.add_argument("--iou", type=float, default=0.2, help="overlap threshold (default 0.2)")
    p.add_argument("--factor", type=float, default=1.2,
                   help="confidence dominance factor (default 1.2)")
    p.add_argument("--page-id", default="", help="page id recorded in the output")
    p.set_defaults(fn=_cmd_optimize)

    p = sub.add_parser("fuse", help="fuse global- and dense-detector outputs by class route")
    p.add_argument("--global", dest="global_file", required=True, help="global detector JSON")
    p.add_argument("--dense", dest="dense_file", required=True, help="dense detector JSON")
    p.add_argument("--routing", help="routing JSON (default: built-in taxonomy)")
    p.add_argument("--out", required=True)
    p.add_argument("--page-id", default="")
    p.set_defaults(fn=_cmd_fuse)

    p = sub.add_parser("schema", help="build and validate a layout schema from detections")
    p.add_argument("--regions", required=True, help="optimized regions JSON")
    p.add_argument("--elements", required=True, help="fused elements JSON")
    p.add_argument("--page-id", required=True)
    p.add_argument("--page-size", required=True, help="WxH, e.g. 1280x2000")
    p.add_argument("--out", required=True, help="output schema JSON")
    p.set_defaults(fn=_cmd_schema)

    p = sub.add_parser("generate", help="run the full generation pipeline over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--work-dir", required=True)
    p.add_argument("--backend", choices=["replay", "http"], required=True)
    p.add_argument("--cassette", help="cassette path (replay backend)")
    p.add_argument("--config", help="backend config JSON (http backend)")
    p.add_argument("--record", help="record responses into this cassette (http backend)")
    p.add_argument("--routing", help="routing JSON (default: built-in taxonomy)")
    p.add_argument("--iou", type=float, default=0.2)
    p.add_argument("--factor", type=float, default=1.2)
    p.add_argument("--parallel", type=int, default=1, help="pages processed concurrently")
    p.add_argument("--retries", type=int, default=0,
                   help="extra attempts per model call with the identical prompt (default 0)")
    p.add_argument("--templates", help="directory overriding the packaged prompt templates")
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("judge", help="pairwise preference verdict for two candidate renders")
    p.add_argument("--reference", required=True, help="original design image")
    p.add_argument("--a", required=True, help="Method A image")
    p.add_argument("--b", required=True, help="Method B image")
    p.add_argument("--backend", choices=["replay", "http"], required=True)
    p.add_argument("--cassette")
    p.add_argument("--config")
    p.add_argument("--record")
    p.add_argument("--templates")
    p.set_defaults(fn=_cmd_judge)

    p = sub.add_parser("eval", help="fine-grained fidelity scores, one page or a manifest")
    p.add_argument("--gen", help="generated page (.html, or .json block sidecar)")
    p.add_argument("--gt", help="reference page (.html, or .json block sidecar)")
    p.add_argument("--page", help="page size WxH for single-page mode")
    p.add_argument("--manifest", help="corpus manifest (requires --gen-dir)")
    p.add_argument("--gen-dir", help="work directory holding <page_id>/out.html")
    p.add_argument("--min-dice", type=float, default=0.2,
                   help="minimum text similarity for a match (default 0.2)")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--out", help="write the JSON report here (manifest mode)")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("stats", help="dataset statistics over a corpus manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--routing", help="routing JSON used when fusing global/dense inputs")
    p.add_argument("--large-threshold", type=float, default=0.01,
                   help="area fraction above which an element counts as large (default 0.01)")
    p.add_argument("--json", help="write machine-readable stats here")
    p.set_defaults(fn=_cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        cause = e.__cause__
        return 1 if isinstance(cause, _VALIDATION_ERRORS) else 2
    except _VALIDATION_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except _IO_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except D2CError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
