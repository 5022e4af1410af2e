"""Fine-grained fidelity evaluation: block extraction from restricted HTML,
optimal block matching, and the four match scores."""

from .blocks import BlockRecord, dump_blocks_json, load_blocks_json
from .color import (
    LabColor,
    ciede2000,
    load_lab_pair_fixture,
    parse_css_color,
    rgb_to_hex,
    srgb_to_lab,
)
from .htmlparse import DomNode, parse_canonical_html
from .layout import layout_blocks
from .matching import MIN_PAIR_DICE, MatchPair, match_blocks
from .scoring import FineGrainedScores, score_page
from .text import dice

__all__ = [
    "BlockRecord",
    "DomNode",
    "FineGrainedScores",
    "LabColor",
    "MatchPair",
    "MIN_PAIR_DICE",
    "ciede2000",
    "dice",
    "dump_blocks_json",
    "layout_blocks",
    "load_blocks_json",
    "load_lab_pair_fixture",
    "match_blocks",
    "parse_canonical_html",
    "parse_css_color",
    "rgb_to_hex",
    "score_page",
    "srgb_to_lab",
]
