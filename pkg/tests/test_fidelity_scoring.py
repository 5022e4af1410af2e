import itertools
import random
import string as stringmod

import pytest
from hypothesis import given, strategies as st

from d2c.fidelity import (
    BlockRecord,
    dice,
    dump_blocks_json,
    load_blocks_json,
    match_blocks,
    score_page,
)
from d2c.geometry import BoundingBox


def brute_force_best_weight(gen, ref) -> float:
    """Oracle: exhaustive search over all one-to-one assignments."""
    n, m = len(gen), len(ref)
    if n == 0 or m == 0:
        return 0.0
    small, large = (range(n), range(m)) if n <= m else (range(m), range(n))
    best = 0.0
    for subset in itertools.permutations(large, len(list(small))):
        total = 0.0
        for i, j in zip(small, subset):
            gi, rj = (i, j) if n <= m else (j, i)
            total += dice(gen[gi].text, ref[rj].text)
        best = max(best, total)
    return best


def block(text, x=0.0, y=0.0, w=10.0, h=10.0, fill=(0, 0, 0)):
    return BlockRecord(text, BoundingBox(x, y, w, h), fill)


def random_blocks(rng: random.Random, max_n=7) -> list[BlockRecord]:
    alphabet = stringmod.ascii_lowercase[:6]
    out = []
    for _ in range(rng.randint(0, max_n)):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 6)))
        out.append(
            block(
                text,
                x=rng.uniform(0, 90),
                y=rng.uniform(0, 90),
                w=rng.uniform(1, 30),
                h=rng.uniform(1, 30),
                fill=(rng.randrange(256), rng.randrange(256), rng.randrange(256)),
            )
        )
    return out


class TestDice:
    def test_identity(self):
        assert dice("abc", "abc") == 1.0

    def test_disjoint(self):
        assert dice("ab", "cd") == 0.0

    def test_night_nacht(self):
        assert dice("night", "nacht") == 0.6

    def test_both_empty(self):
        assert dice("", "") == 1.0

    def test_one_empty(self):
        assert dice("abc", "") == 0.0
        assert dice("", "abc") == 0.0

    def test_multiset_counting(self):
        # "aab" vs "abb": intersection {a, b} counted with multiplicity = 2
        assert dice("aab", "abb") == pytest.approx(2 * 2 / 6)

    @given(st.text(max_size=20), st.text(max_size=20))
    def test_symmetric_and_bounded(self, a, b):
        v = dice(a, b)
        assert v == dice(b, a)
        assert 0.0 <= v <= 1.0

    def test_symmetry_on_many_random_pairs(self):
        rng = random.Random(31)
        for _ in range(10_000):
            a = "".join(rng.choice("abcdef") for _ in range(rng.randint(0, 8)))
            b = "".join(rng.choice("abcdef") for _ in range(rng.randint(0, 8)))
            assert dice(a, b) == dice(b, a)


class TestMatchBlocks:
    def test_identity_pairing(self):
        blocks = [block("alpha"), block("beta"), block("gamma")]
        pairs = match_blocks(blocks, blocks)
        assert [(p.gen, p.ref) for p in pairs] == [(0, 0), (1, 1), (2, 2)]
        assert all(p.weight == 1.0 for p in pairs)

    def test_permutation_invariant(self):
        gen = [block("alpha"), block("beta"), block("gamma")]
        ref = [gen[2], gen[0], gen[1]]
        pairs = match_blocks(gen, ref)
        assert {(p.gen, p.ref) for p in pairs} == {(0, 1), (1, 2), (2, 0)}

    def test_low_similarity_dropped(self):
        assert match_blocks([block("hello")], [block("zzzz")]) == []

    def test_threshold_is_inclusive(self):
        # dice("ab", "az") = 2*1/4 = 0.5 >= 0.2 kept; craft a 0.2 case: dice = 2*1/(2+8)
        pairs = match_blocks([block("ab")], [block("azzzzzzz")])
        assert len(pairs) == 1 and pairs[0].weight == pytest.approx(0.2)

    def test_empty_inputs(self):
        assert match_blocks([], [block("x")]) == []
        assert match_blocks([block("x")], []) == []

    def test_one_to_one(self):
        gen = [block("aa"), block("aa")]
        ref = [block("aa")]
        pairs = match_blocks(gen, ref)
        assert len(pairs) == 1

    def test_matches_brute_force_on_random_cases(self):
        rng = random.Random(77)
        for _ in range(200):
            gen, ref = random_blocks(rng), random_blocks(rng)
            pairs = match_blocks(gen, ref, min_dice=0.0)
            total = sum(p.weight for p in pairs)
            assert total == pytest.approx(brute_force_best_weight(gen, ref), abs=1e-9)


class TestScorePage:
    PAGE = (100.0, 100.0)

    def test_identical_pages_score_one(self):
        blocks = [block("alpha", 5, 5, 20, 10), block("beta", 5, 40, 30, 10, fill=(10, 99, 200))]
        scores = score_page(blocks, blocks, self.PAGE)
        assert scores.as_tuple() == pytest.approx((1.0, 1.0, 1.0, 1.0))

    def test_random_self_comparison_scores_one(self):
        rng = random.Random(13)
        for _ in range(100):
            blocks = random_blocks(rng)
            scores = score_page(blocks, blocks, self.PAGE)
            expected = (1.0, 1.0, 1.0, 1.0) if blocks or True else None
            assert scores.as_tuple() == pytest.approx(expected, abs=1e-9)

    def test_opposite_corners_position_zero(self):
        gen = [block("same", 0, 0, 0, 0)]
        ref = [block("same", 100, 100, 0, 0)]
        scores = score_page(gen, ref, self.PAGE)
        assert scores.position == pytest.approx(0.0, abs=1e-9)

    def test_black_vs_white_color_zero(self):
        gen = [block("same", 10, 10, 10, 10, fill=(0, 0, 0))]
        ref = [block("same", 10, 10, 10, 10, fill=(255, 255, 255))]
        scores = score_page(gen, ref, self.PAGE)
        assert scores.color == 0.0
        assert scores.text == 1.0

    def test_both_empty_scores_one(self):
        assert score_page([], [], self.PAGE).as_tuple() == (1.0, 1.0, 1.0, 1.0)

    def test_no_pairs_scores_zero(self):
        scores = score_page([block("aaaa")], [block("zzzz")], self.PAGE)
        assert scores.as_tuple() == (0.0, 0.0, 0.0, 0.0)

    def test_empty_gen_nonempty_ref_scores_zero(self):
        assert score_page([], [block("x")], self.PAGE).as_tuple() == (0.0, 0.0, 0.0, 0.0)

    def test_block_score_counts_matched_area_fraction(self):
        gen = [block("match", 0, 0, 10, 10), block("qqqq", 0, 0, 30, 10)]
        ref = [block("match", 0, 0, 10, 10)]
        scores = score_page(gen, ref, self.PAGE)
        # matched: 100 (gen) + 100 (ref); total: 100 + 300 + 100
        assert scores.block == pytest.approx(200 / 500)

    def test_scores_bounded_on_random_inputs(self):
        rng = random.Random(99)
        for _ in range(300):
            gen, ref = random_blocks(rng), random_blocks(rng)
            scores = score_page(gen, ref, self.PAGE)
            for v in scores.as_tuple():
                assert 0.0 <= v <= 1.0

    def test_invalid_page_size(self):
        with pytest.raises(Exception):
            score_page([], [], (0, 10))


class TestSidecarJson:
    def test_round_trip(self):
        blocks = [
            BlockRecord("hello", BoundingBox(1, 2, 3, 4), (255, 0, 0), (0, 0, 0)),
            BlockRecord("world", BoundingBox(0.5, 2.25, 3.0, 4.0), (1, 2, 3), (250, 251, 252)),
        ]
        assert load_blocks_json(dump_blocks_json(blocks)) == blocks

    def test_load_validates_shape(self):
        with pytest.raises(Exception):
            load_blocks_json('[{"text": 5}]')
