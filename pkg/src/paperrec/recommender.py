"""Item-based aggregation stage: combine per-paper neighbor lists.

Offline work produces one neighbor list per paper and measure; this
module answers "given these input papers, what else?" by aggregating
the inputs' lists (sum by default) and filtering the inputs themselves
plus anything outside the allowed universe.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Container, Iterable, Mapping

from .errors import EmptyInput, NoInputsResolved
from .relmat import NeighborList

AGGREGATIONS = ("min", "mean", "max", "sum")


@dataclasses.dataclass(frozen=True)
class Ranking:
    measure: str
    aggregation: str
    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        ids = [t for t, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate ids in ranking")
        for (ta, sa), (tb, sb) in zip(self.entries, self.entries[1:]):
            if sa < sb or (sa == sb and ta > tb):
                raise ValueError("ranking order violated")

    def targets(self) -> list[str]:
        return [t for t, _ in self.entries]


@dataclasses.dataclass(frozen=True)
class MeasureHandle:
    """A named relatedness measure backed by some neighbor source."""
    name: str
    lookup: Callable[[str], NeighborList | None]

    def neighbors(self, paper_id: str) -> NeighborList | None:
        return self.lookup(paper_id)


def dict_measure(name: str,
                 lists: Mapping[str, NeighborList]) -> MeasureHandle:
    return MeasureHandle(name, lists.get)


def text_measure(name: str, index, stored_n: int = 300) -> MeasureHandle:
    """Adapter over a built text index (neighbors computed on demand)."""
    def lookup(pid: str) -> NeighborList | None:
        if pid not in index.vectors:
            return None
        return index.rank_similar(pid, stored_n)
    return MeasureHandle(name, lookup)


def _sorted_entries(scores: dict[str, float]) -> tuple[tuple[str, float], ...]:
    return tuple(sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])))


def aggregate(rankings: list[Ranking], fn: str = "sum",
              require_all_for_min: bool = False) -> Ranking:
    """Combine rankings per paper: sum scores missing entries as 0;
    min/mean/max run over only the rankings that contain the paper."""
    if not rankings:
        raise EmptyInput("no rankings to aggregate")
    if fn not in AGGREGATIONS:
        raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
    present: dict[str, list[float]] = {}
    for r in rankings:
        for pid, score in r.entries:
            present.setdefault(pid, []).append(score)
    scores: dict[str, float] = {}
    for pid, vals in present.items():
        if fn == "sum":
            scores[pid] = sum(vals)
        elif fn == "max":
            scores[pid] = max(vals)
        elif fn == "min":
            if require_all_for_min and len(vals) < len(rankings):
                continue
            scores[pid] = min(vals)
        else:
            scores[pid] = sum(vals) / len(vals)
    return Ranking(rankings[0].measure, fn, _sorted_entries(scores))


def neighbor_ranking(measure: MeasureHandle, nl: NeighborList) -> Ranking:
    return Ranking(measure.name, "single", nl.entries)


def recommend_for_set(inputs: Iterable[str], measure: MeasureHandle,
                      fn: str = "sum", n: int = 20,
                      universe: Container[str] | None = None,
                      unknown: list[str] | None = None,
                      require_all_for_min: bool = False) -> Ranking:
    """Aggregate the inputs' neighbor lists, drop inputs and out-of-
    universe papers, truncate to the n best."""
    input_set = set(inputs)
    if not input_set:
        raise EmptyInput("no input ids")
    rankings: list[Ranking] = []
    for pid in sorted(input_set):
        nl = measure.neighbors(pid)
        if nl is None:
            if unknown is not None:
                unknown.append(pid)
            continue
        rankings.append(neighbor_ranking(measure, nl))
    if not rankings:
        raise NoInputsResolved(f"no input id known to {measure.name}")
    combined = aggregate(rankings, fn, require_all_for_min)
    kept = [(pid, score) for pid, score in combined.entries
            if pid not in input_set and
            (universe is None or pid in universe)]
    return Ranking(measure.name, fn, tuple(kept[:n]))
