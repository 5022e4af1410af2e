"""Pairwise preference judging: prompt construction and verdict parsing."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from ..errors import MalformedVerdictError, ValidationError
from .prompts import Attachment, ImageRef, Prompt, load_template


class Winner(str, Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class Verdict:
    winner: Winner
    reasoning: str


def build_judge_prompt(
    reference: ImageRef,
    candidate_a: ImageRef,
    candidate_b: ImageRef,
    *,
    template_dir: str | Path | None = None,
) -> Prompt:
    """Three-image comparison prompt: the reference design, then the two
    candidates as Method A and Method B."""
    for name, ref in (("reference", reference), ("candidate_a", candidate_a),
                      ("candidate_b", candidate_b)):
        if ref is None or (isinstance(ref, (str, Path)) and not str(ref)) or ref == b"":
            raise ValidationError(f"{name} image is required")
    user = load_template("judge_prompt.txt", template_dir).substitute()
    return Prompt(
        system="",
        user=user,
        attachments=(
            Attachment("Image 1", reference),
            Attachment("Image 2", candidate_a),
            Attachment("Image 3", candidate_b),
        ),
    )


# Accepts the canonical "WINNER: METHOD A" plus the variations real models
# produce: any casing, stray whitespace, optional brackets, trailing period.
_WINNER_LINE = re.compile(
    r"^\s*winner\s*:\s*\[?\s*method\s+([ab])\s*\]?\s*\.?\s*$", re.IGNORECASE
)
_REASONING = re.compile(r"reasoning\s*:\s*(.*)\Z", re.IGNORECASE | re.DOTALL)


def parse_judge_verdict(text: str) -> Verdict:
    """Extract the winner and reasoning from a judge response.

    Scans for the first WINNER line; raises MalformedVerdictError when none
    maps to METHOD A or METHOD B.
    """
    winner: Winner | None = None
    for line in text.splitlines():
        m = _WINNER_LINE.match(line)
        if m:
            winner = Winner(m.group(1).upper())
            break
    if winner is None:
        raise MalformedVerdictError("no parseable WINNER line in judge response")
    m = _REASONING.search(text)
    reasoning = m.group(1).strip() if m else ""
    return Verdict(winner, reasoning)
