"""Acceptance suite: every exit criterion as one test, at its stated
tolerance, printing one PASS line per criterion (run with -s to stream)."""

import hashlib
import json
import random
import time

import pytest

from conftest import (
    SAMPLE_REGIONS_JSON,
    FIXTURES,
    RecordingBackend,
    ScriptedBackend,
    build_fixture_corpus,
)
from test_detect import random_fusion_triple, setbuilder_fuse
from test_fidelity_scoring import block, brute_force_best_weight, random_blocks
from test_geometry import pseudocode_optimize, random_instance

from d2c.cli import main
from d2c.corpus import compute_eval_stats, compute_layout_stats
from d2c.detect import (
    DetectionSet,
    Route,
    Source,
    fuse_detections,
    parse_detection_file,
    serialize_detections,
)
from d2c.errors import MalformedVerdictError
from d2c.fidelity import (
    LabColor,
    ciede2000,
    dice,
    load_lab_pair_fixture,
    match_blocks,
    score_page,
)
from d2c.genpipe import (
    CassetteMode,
    ReplayCassette,
    Winner,
    build_judge_prompt,
    parse_judge_verdict,
    parse_schema_response,
    run_manifest,
    PipelineConfig,
)
from d2c.geometry import BoundingBox, OptimizationConfig, ScoredBox, iou, optimize_boxes
from d2c.schema import ElementRef, build_schema, schema_to_json, validate_schema
from test_corpus import hand_built_corpus, random_corpus
from test_schema import random_case as random_schema_case


def ok(criterion: str):
    print(f"ACCEPTANCE {criterion}: PASS")


def test_01_box_optimization_matches_pseudocode_oracle():
    rng = random.Random(20_01)
    cfg = OptimizationConfig()
    start = time.perf_counter()
    for _ in range(200):
        boxes = random_instance(rng, max_boxes=12)
        got = optimize_boxes(boxes, cfg)
        assert got == pseudocode_optimize(boxes, 0.2, 1.2)
        for i, a in enumerate(got):
            for b in got[i + 1 :]:
                assert iou(a.box, b.box) <= cfg.iou_threshold
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"took {elapsed:.3f}s"
    ok("01 box-optimization oracle equivalence (200 instances, <1s)")


def test_02_hand_traced_optimization_cases():
    a = ScoredBox(BoundingBox(0, 0, 10, 10), 0.9)
    b = ScoredBox(BoundingBox(0, 0, 12, 10), 0.5)
    assert optimize_boxes([a, b], OptimizationConfig(0.2, 1.2)) == [a]
    c = ScoredBox(BoundingBox(0, 0, 10, 10), 0.5)
    d = ScoredBox(BoundingBox(0, 0, 12, 10), 0.7)
    assert optimize_boxes([c, d], OptimizationConfig(0.2, 1.2)) == [d]
    ok("02 hand-traced dominance keep/discard cases")


def test_03_fusion_matches_setbuilder_oracle():
    rng = random.Random(20_03)
    start = time.perf_counter()
    for _ in range(500):
        g, d, routing = random_fusion_triple(rng)
        fused = fuse_detections(g, d, routing)
        assert [
            (x.box, x.score, x.category, x.source) for x in fused.detections
        ] == setbuilder_fuse(g, d, routing)
        for x in fused.detections:
            route = routing.routes[x.category]
            assert (route is Route.GLOBAL) == (x.source is Source.GLOBAL_DETECTOR)
            assert (route is Route.DENSE) == (x.source is Source.DENSE_DETECTOR)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"took {elapsed:.3f}s"
    ok("03 fusion set-builder equivalence + partition (500 triples, <1s)")


def test_04_ciede2000_verification_dataset_and_properties():
    start = time.perf_counter()
    cases = load_lab_pair_fixture(FIXTURES / "ciede2000_pairs.csv")
    assert len(cases) == 34
    for x, y, expected in cases:
        assert ciede2000(x, y) == pytest.approx(expected, abs=1e-4)
    rng = random.Random(20_04)
    for _ in range(10_000):
        x = LabColor(rng.uniform(0, 100), rng.uniform(-110, 110), rng.uniform(-110, 110))
        y = LabColor(rng.uniform(0, 100), rng.uniform(-110, 110), rng.uniform(-110, 110))
        assert ciede2000(x, y) == pytest.approx(ciede2000(y, x), abs=1e-12)
        assert ciede2000(x, x) == 0.0
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"took {elapsed:.3f}s"
    ok("04 CIEDE2000 34-pair dataset @1e-4 + symmetry/identity on 10k pairs (<1s)")


def test_05_dice_cases_and_symmetry():
    assert dice("abc", "abc") == 1.0
    assert dice("ab", "cd") == 0.0
    assert dice("night", "nacht") == 0.6
    rng = random.Random(20_05)
    for _ in range(10_000):
        a = "".join(rng.choice("abcdefgh ") for _ in range(rng.randint(0, 12)))
        b = "".join(rng.choice("abcdefgh ") for _ in range(rng.randint(0, 12)))
        assert dice(a, b) == dice(b, a)
    ok("05 dice anchors exact + symmetry on 10k pairs")


def test_06_matching_equals_bruteforce_optimum():
    rng = random.Random(20_06)
    for _ in range(200):
        gen = random_blocks(rng, max_n=7)
        ref = random_blocks(rng, max_n=7)
        total = sum(p.weight for p in match_blocks(gen, ref, min_dice=0.0))
        assert total == pytest.approx(brute_force_best_weight(gen, ref), abs=1e-9)
    ok("06 assignment equals brute-force optimum (sizes <=7, 200 cases)")


def test_07_score_page_identity_and_edge_cases():
    rng = random.Random(20_07)
    for _ in range(50):
        blocks = random_blocks(rng)
        scores = score_page(blocks, blocks, (100.0, 100.0))
        assert scores.as_tuple() == pytest.approx((1.0, 1.0, 1.0, 1.0), abs=1e-9)
    corner = score_page(
        [block("same", 0, 0, 0, 0)], [block("same", 100, 100, 0, 0)], (100.0, 100.0)
    )
    assert corner.position == pytest.approx(0.0, abs=1e-9)
    bw = score_page(
        [block("same", 10, 10, 10, 10, fill=(0, 0, 0))],
        [block("same", 10, 10, 10, 10, fill=(255, 255, 255))],
        (100.0, 100.0),
    )
    assert bw.color == 0.0
    ok("07 self-comparison scores 1 (50 sets), corner position 0, black/white color 0")


def test_08_replay_generation_byte_identical(tmp_path):
    manifest_path, pages = build_fixture_corpus(tmp_path / "corpus", n_pages=3)
    cassette_path = tmp_path / "cassette.json"
    recorder = RecordingBackend(
        ScriptedBackend(pages), ReplayCassette(cassette_path, CassetteMode.RECORD)
    )
    from d2c.corpus import load_manifest

    run_manifest(load_manifest(manifest_path), recorder, PipelineConfig(work_dir=tmp_path / "seed"))

    start = time.perf_counter()
    digests = []
    for run in range(5):
        work = tmp_path / f"run{run}"
        code = main(["generate", "--manifest", str(manifest_path), "--work-dir", str(work),
                     "--backend", "replay", "--cassette", str(cassette_path)])
        assert code == 0
        h = hashlib.sha256()
        for page in pages:
            h.update((work / page.page_id / "schema.json").read_bytes())
            h.update((work / page.page_id / "out.html").read_bytes())
        digests.append(h.hexdigest())
    elapsed = time.perf_counter() - start
    assert len(set(digests)) == 1, "outputs differ across replay runs"
    assert elapsed < 5.0, f"took {elapsed:.3f}s"
    ok("08 replay generation byte-identical across 5 runs (3 pages, <5s)")


def test_09_format_fidelity_round_trips():
    ds = parse_detection_file(SAMPLE_REGIONS_JSON, page_id="p")
    assert len(ds.detections) == 4
    assert ds.detections[0].box == BoundingBox(0, 0, 2770, 220)
    assert parse_detection_file(serialize_detections(ds), page_id="p").detections == ds.detections
    once = serialize_detections(ds)
    assert serialize_detections(parse_detection_file(once)) == once

    rng = random.Random(20_09)
    for _ in range(50):
        regions, elements = random_schema_case(rng)
        built = build_schema(regions, elements)
        assert parse_schema_response(schema_to_json(built)) == built
    ok("09 detection JSON + schema JSON round-trip bit-exactly")


def test_10_schema_conservation_and_violation_codes():
    rng = random.Random(20_10)
    for _ in range(500):
        regions, elements = random_schema_case(rng)
        s = build_schema(regions, elements)
        placed = [c.element_id for r in s.regions for c in r.children]
        placed += [o.element_id for o in s.orphans]
        assert sorted(placed) == sorted(
            f"p/elem{i}" for i in range(len(elements.detections))
        )

    base = build_schema(
        [ScoredBox(BoundingBox(0, 0, 50, 50), 1.0), ScoredBox(BoundingBox(0, 60, 50, 40), 1.0)],
        DetectionSet(
            "p",
            (100, 100),
            parse_detection_file(
                json.dumps(
                    [
                        {"category_id": 5, "bbox": [5, 5, 10, 10], "score": 0.9},
                        {"category_id": 5, "bbox": [5, 65, 10, 10], "score": 0.9},
                    ]
                ).encode()
            ).detections,
        ),
    )
    duplicated = build_schema(
        [ScoredBox(BoundingBox(0, 0, 50, 50), 1.0), ScoredBox(BoundingBox(0, 60, 50, 40), 1.0)],
        DetectionSet("p", (100, 100), []),
    )
    duplicated.regions[0].children = list(base.regions[0].children)
    duplicated.regions[1].children = list(base.regions[0].children)
    assert "DUPLICATE_ELEMENT" in validate_schema(duplicated).codes()

    stray = build_schema(
        [ScoredBox(BoundingBox(0, 0, 50, 50), 1.0)],
        DetectionSet("p", (100, 100), []),
    )
    stray.regions[0].children = [ElementRef("p/elemX", BoundingBox(90, 90, 5, 5))]
    assert "CHILD_OUTSIDE_PARENT" in validate_schema(stray).codes()
    ok("10 conservation on 500 random inputs + documented violation codes")


def test_11_statistics_hand_checked_and_ordered():
    layout = compute_layout_stats(hand_built_corpus())
    assert (layout.boxes_per_page.min, layout.boxes_per_page.max) == (1, 2)
    assert layout.boxes_per_page.avg == pytest.approx(4 / 3)
    assert layout.elements_per_box.avg == pytest.approx(0.5)
    assert layout.tokens_per_box.avg == pytest.approx(11.25)
    assert layout.box_to_page_ratio.min == pytest.approx(4.0)
    assert layout.box_to_page_ratio.max == pytest.approx(100.0)
    assert layout.box_to_page_ratio.avg == pytest.approx(44.75)
    bench = compute_eval_stats(hand_built_corpus(), large_threshold=0.01)
    assert bench.element_coverage == pytest.approx(2 / 3)
    assert bench.large_elements == pytest.approx(2 / 3)
    assert bench.avg_boxes_per_page == pytest.approx(4 / 3)
    assert bench.avg_elements_per_page == pytest.approx(1.0)
    assert bench.avg_elements_per_box == pytest.approx(0.5)

    rng = random.Random(20_11)
    for _ in range(100):
        stats = compute_layout_stats(random_corpus(rng))
        for name in (
            "boxes_per_page",
            "elements_per_page",
            "elements_per_box",
            "tokens_per_box",
            "box_to_page_ratio",
        ):
            s = getattr(stats, name)
            assert s.min <= s.avg <= s.max
    ok("11 hand-built corpus statistics exact + min<=avg<=max on random corpora")


def test_12_judge_format_and_verdict_grammar():
    prompt = build_judge_prompt(b"ref", b"a", b"b")
    assert "WINNER: [METHOD A or METHOD B]" in prompt.user
    assert parse_judge_verdict("WINNER: METHOD A\nREASONING: closer").winner is Winner.A
    assert parse_judge_verdict("winner: method b").winner is Winner.B
    assert parse_judge_verdict("evaluation\nWINNER: [METHOD B]\nREASONING: x").winner is Winner.B
    with pytest.raises(MalformedVerdictError):
        parse_judge_verdict("Both are fine.")
    ok("12 judge prompt verbatim format + tolerant verdict grammar")
