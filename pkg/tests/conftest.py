"""Shared fixtures: a small deterministic corpus with screenshots, detection
files, a manifest, and scripted/recording model backends."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path

import pytest
from PIL import Image

from d2c.detect import default_routing, fuse_detections, parse_detection_file
from d2c.genpipe import ReplayCassette, VlmBackend, fingerprint_prompt
from d2c.geometry import OptimizationConfig, ScoredBox, clamp_to_page, optimize_boxes
from d2c.schema import build_schema, schema_to_json

FIXTURES = Path(__file__).parent / "fixtures"

# Reference sample of layout-segmentation output (4 page areas).
SAMPLE_REGIONS_JSON = b"""[
  {
    "category_id": 0,
    "bbox": [0, 0, 2770, 220],
    "score": 1.0
  },
  {
    "category_id": 0,
    "bbox": [0, 223, 2270, 126],
    "score": 1.0
  },
  {
    "category_id": 0,
    "bbox": [0, 385, 1930, 925],
    "score": 1.0
  },
  {
    "category_id": 0,
    "bbox": [1930, 401, 848, 925],
    "score": 1.0
  }
]
"""

# Matching sample of component-detection output.
SAMPLE_ELEMENTS_TEXT = """\
Box2: x=846, y=50, width=210, height=100
Box4: x=700, y=400, width=480, height=365
Box6: x=1962, y=403, width=105, height=105
Box8: x=2268, y=0, width=267, height=48
"""


# ---------------------------------------------------------------------------
# Fixture corpus


@dataclass
class FixturePage:
    page_id: str
    size: tuple[int, int]
    screenshot: Path
    regions: Path
    global_file: Path
    dense_file: Path


def _paint_screenshot(path: Path, size: tuple[int, int], seed: int) -> None:
    img = Image.new("RGBA", size, (255, 255, 255, 255))
    px = img.load()
    w, h = size
    for x in range(w):
        for y in range(0, min(40, h)):
            px[x, y] = (30 + seed * 20, 60, 140, 255)
    # small translucent square so one crop trips the transparency flag
    for x in range(w - 30, w - 10):
        for y in range(10, 30):
            px[x, y] = (200, 40, 40, 60)
    img.save(path, format="PNG")


def _detections_json(rows: list[tuple[int, list[float], float]]) -> bytes:
    return json.dumps(
        [{"category_id": c, "bbox": b, "score": s} for c, b, s in rows], indent=2
    ).encode("utf-8")


def build_fixture_corpus(root: Path, n_pages: int = 3) -> tuple[Path, list[FixturePage]]:
    """Write a deterministic corpus under `root`; returns (manifest path, pages)."""
    root.mkdir(parents=True, exist_ok=True)
    pages = []
    entries = []
    for i in range(n_pages):
        pid = f"page{i}"
        size = (200, 150)
        page_dir = root / pid
        page_dir.mkdir(exist_ok=True)
        shot = page_dir / "screen.png"
        _paint_screenshot(shot, size, i)
        regions = page_dir / "regions.json"
        regions.write_bytes(
            _detections_json(
                [
                    (0, [0, 0, 200, 40], 0.95),
                    (0, [0, 45, 200, 100 + i], 0.9),
                    (0, [0, 44, 200, 101], 0.5),  # near-duplicate, optimized away
                ]
            )
        )
        global_file = page_dir / "global.json"
        global_file.write_bytes(
            _detections_json(
                [
                    (2, [10, 50, 80, 60], 0.9),  # Hero Image -> kept (GLOBAL route)
                    (5, [0, 0, 10, 10], 0.4),  # Icon from global detector -> dropped
                ]
            )
        )
        dense_file = page_dir / "dense.json"
        dense_file.write_bytes(
            _detections_json(
                [
                    (5, [170, 10, 20, 20], 0.8),  # Icon -> kept (DENSE route)
                    (6, [120, 100 + i, 60, 30], 0.7),  # Button -> kept
                ]
            )
        )
        pages.append(FixturePage(pid, size, shot, regions, global_file, dense_file))
        entries.append(
            {
                "page_id": pid,
                "screenshot": str(shot.relative_to(root)),
                "regions": str(regions.relative_to(root)),
                "global": str(global_file.relative_to(root)),
                "dense": str(dense_file.relative_to(root)),
            }
        )
    manifest = root / "manifest.json"
    manifest.write_text(json.dumps({"name": "fixture", "pages": entries}, indent=2))
    return manifest, pages


def canned_schema_response(page: FixturePage) -> str:
    """A model-style schema response for a fixture page: the deterministic
    schema wrapped in prose and a code fence."""
    w, h = page.size
    region_set = parse_detection_file(
        page.regions.read_bytes(), page_id=page.page_id, page_size=page.size
    )
    scored = [ScoredBox(d.box, d.score, d.category) for d in region_set.detections]
    optimized = [
        replace(sb, box=clamp_to_page(sb.box, w, h))
        for sb in optimize_boxes(scored, OptimizationConfig())
    ]
    fused = fuse_detections(
        parse_detection_file(page.global_file.read_bytes(), page_id=page.page_id, page_size=page.size),
        parse_detection_file(page.dense_file.read_bytes(), page_id=page.page_id, page_size=page.size),
        default_routing(),
    )
    built = build_schema(optimized, fused)
    return f"Here is the layout schema:\n```json\n{schema_to_json(built)}\n```\nEvery component is nested."


def canned_html_response(page: FixturePage) -> str:
    return (
        "```html\n"
        f"<html><body><div style=\"color:#222\">generated {page.page_id}</div>"
        "</body></html>\n```"
    )


_PAGE_ID_LINE = re.compile(r"^Page id: (.+)$", re.MULTILINE)


class ScriptedBackend(VlmBackend):
    """Offline stand-in for a live model: serves canned responses keyed on
    the page id embedded in the prompt."""

    kind = "SCRIPTED"
    model = "scripted"

    def __init__(self, pages: list[FixturePage]):
        self.pages = {p.page_id: p for p in pages}
        self.calls = 0

    def complete(self, prompt) -> str:
        self.calls += 1
        if "Below are the main page areas" in prompt.user:
            m = _PAGE_ID_LINE.search(prompt.user)
            assert m, "schema prompt must carry the page id"
            return canned_schema_response(self.pages[m.group(1).strip()])
        for pid, page in self.pages.items():
            if f'"page_id": "{pid}"' in prompt.user:
                return canned_html_response(page)
        raise AssertionError("prompt does not identify a fixture page")


class RecordingBackend(VlmBackend):
    """Wraps another backend and records every exchange into a cassette."""

    kind = "RECORDING"
    model = "recording"

    def __init__(self, inner: VlmBackend, cassette: ReplayCassette):
        self.inner = inner
        self.cassette = cassette
        self.cassette_id = cassette.cassette_id

    def complete(self, prompt) -> str:
        response = self.inner.complete(prompt)
        self.cassette.record(fingerprint_prompt(prompt), response)
        return response


@pytest.fixture
def fixture_corpus(tmp_path):
    manifest, pages = build_fixture_corpus(tmp_path / "corpus")
    return manifest, pages
