"""Character-level text similarity."""

from __future__ import annotations

from collections import Counter


def dice(a: str, b: str) -> float:
    """Sørensen-Dice coefficient over character multisets:
    2·|A ∩ B| / (|A| + |B|). Two empty strings score 1.0, exactly one
    empty scores 0.0."""
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    overlap = sum((Counter(a) & Counter(b)).values())
    return 2.0 * overlap / (len(a) + len(b))
