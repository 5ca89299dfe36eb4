"""Official vs corrected country rankings and rank-shift tables."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .exceptions import DomainError

__all__ = ["RankShiftEntry", "rank_by", "magnitude_class", "rank_shift_table"]

MINIMAL = "minimal"
MODERATE = "moderate"
LARGE = "large"


@dataclass(frozen=True)
class RankShiftEntry:
    country: str
    official_rank: int
    corrected_rank: int
    shift: int
    magnitude_class: str


def magnitude_class(shift: int) -> str:
    """minimal for |shift| <= 3, moderate for 4-5, large beyond 5."""
    size = abs(int(shift))
    if size <= 3:
        return MINIMAL
    if size <= 5:
        return MODERATE
    return LARGE


def rank_by(values: Iterable[tuple[str, float]]) -> list[tuple[str, int]]:
    """Rank countries by descending score.

    Ranks run 1..N with no gaps; equal scores are ordered by country
    identifier so the result is deterministic.
    """
    values = list(values)
    if not values:
        raise DomainError("nothing to rank")
    seen = set()
    for country, score in values:
        if country in seen:
            raise DomainError(f"duplicate country {country!r}")
        seen.add(country)
        if not math.isfinite(float(score)):
            raise DomainError(f"non-finite score for {country!r}")
    ordered = sorted(values, key=lambda cs: (-float(cs[1]), cs[0]))
    return [(country, i) for i, (country, _) in enumerate(ordered, start=1)]


def rank_shift_table(official: Sequence[tuple[str, int]],
                     corrected: Sequence[tuple[str, int]]) -> list[RankShiftEntry]:
    """Per-country shift ``official - corrected`` (positive means the country moved up)."""
    off = dict(official)
    cor = dict(corrected)
    if len(off) != len(official) or len(cor) != len(corrected):
        raise DomainError("duplicate country in ranking")
    if set(off) != set(cor):
        missing = sorted(set(off) ^ set(cor))
        raise DomainError(f"rankings cover different countries: {missing}")
    table = []
    for country, r1 in sorted(off.items(), key=lambda kv: (kv[1], kv[0])):
        r2 = cor[country]
        shift = r1 - r2
        table.append(RankShiftEntry(country, r1, r2, shift, magnitude_class(shift)))
    return table
