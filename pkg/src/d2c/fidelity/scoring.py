"""The four fine-grained fidelity scores over matched text blocks."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import ValidationError
from ..geometry import area
from .blocks import BlockRecord
from .color import ciede2000, srgb_to_lab
from .matching import MIN_PAIR_DICE, match_blocks

_SQRT2 = math.sqrt(2.0)


def _unit(v: float) -> float:
    """Pin a score into [0, 1]; summation order can leak a few ulps past 1."""
    return min(1.0, max(0.0, v))


@dataclass(frozen=True)
class FineGrainedScores:
    block: float
    text: float
    position: float
    color: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.block, self.text, self.position, self.color)


def score_page(
    gen: list[BlockRecord],
    ref: list[BlockRecord],
    page: tuple[float, float],
    *,
    min_dice: float = MIN_PAIR_DICE,
) -> FineGrainedScores:
    """Score a generated page against its reference.

    block    — symmetric matched-area coverage:
               (matched gen areas + matched ref areas) / (all gen + all ref areas)
    text     — mean character-multiset Dice over matched pairs
    position — mean of 1 - d/sqrt(2), d the distance between block centers
               with axes normalized by page width and height (floored at 0)
    color    — mean of max(0, 1 - deltaE2000(fill_gen, fill_ref) / 100)

    With no matched pairs everything scores 0, except two empty pages which
    score a perfect 1 across the board.
    """
    page_w, page_h = page
    if page_w <= 0 or page_h <= 0:
        raise ValidationError(f"page dimensions must be positive, got {page}")
    if not gen and not ref:
        return FineGrainedScores(1.0, 1.0, 1.0, 1.0)
    pairs = match_blocks(gen, ref, min_dice=min_dice)
    if not pairs:
        return FineGrainedScores(0.0, 0.0, 0.0, 0.0)

    matched_area = sum(area(gen[p.gen].box) for p in pairs) + sum(
        area(ref[p.ref].box) for p in pairs
    )
    total_area = sum(area(b.box) for b in gen) + sum(area(b.box) for b in ref)
    # No renderable area anywhere: coverage is vacuously perfect.
    block = matched_area / total_area if total_area > 0 else 1.0

    text = sum(p.weight for p in pairs) / len(pairs)

    position = 0.0
    color = 0.0
    for p in pairs:
        gcx, gcy = gen[p.gen].box.center
        rcx, rcy = ref[p.ref].box.center
        d = math.hypot((gcx - rcx) / page_w, (gcy - rcy) / page_h)
        position += max(0.0, 1.0 - d / _SQRT2)
        delta = ciede2000(srgb_to_lab(gen[p.gen].fill), srgb_to_lab(ref[p.ref].fill))
        color += max(0.0, 1.0 - delta / 100.0)
    position /= len(pairs)
    color /= len(pairs)
    return FineGrainedScores(_unit(block), _unit(text), _unit(position), _unit(color))
