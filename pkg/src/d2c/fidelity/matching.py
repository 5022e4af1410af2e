"""Optimal one-to-one block matching by text similarity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .blocks import BlockRecord
from .text import dice

MIN_PAIR_DICE = 0.2


@dataclass(frozen=True)
class MatchPair:
    gen: int
    ref: int
    weight: float


def match_blocks(
    gen: list[BlockRecord], ref: list[BlockRecord], *, min_dice: float = MIN_PAIR_DICE
) -> list[MatchPair]:
    """Maximize total text similarity over one-to-one (gen, ref) pairings,
    solved exactly on the rectangular weight matrix. Pairs scoring below
    `min_dice` are dropped afterwards so unrelated blocks never count as
    matched. Matching uses text only; position and color are scored later."""
    if not gen or not ref:
        return []
    weights = np.zeros((len(gen), len(ref)))
    for i, g in enumerate(gen):
        for j, r in enumerate(ref):
            weights[i, j] = dice(g.text, r.text)
    rows, cols = linear_sum_assignment(weights, maximize=True)
    return [
        MatchPair(int(i), int(j), float(weights[i, j]))
        for i, j in zip(rows, cols)
        if weights[i, j] >= min_dice
    ]
