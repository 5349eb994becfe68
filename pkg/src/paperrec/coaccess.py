"""Co-access counting over sessions, out of core, with the rush filter.

Two papers are co-accessed when one session touches both (binary per
session).  Counting runs in one or more linear passes over the session
stream: each pass tracks a contiguous chunk of the paper universe, and
on a memory-budget breach the chunk size halves and the pass restarts,
so results never depend on how many passes were needed.

The rush filter drops pairs that look like alert-list skimming: both
papers fresh in the session's (lag-adjusted) month, or both published
within a week of each other just before the session.
"""

from __future__ import annotations

import dataclasses
import heapq
from typing import Callable, Iterable, Sequence

from .errors import BudgetTooSmall
from .logkit import Kind
from .papers import PaperDates
from .relmat import BinaryIncidenceMatrix, NeighborList
from .sessionizer import Session
from .timeutil import DAY, same_month

KIND_MAP = {"download": Kind.FULL_TEXT_DOWNLOAD, "view": Kind.ABSTRACT_VIEW}

SEVEN_DAYS = 7 * DAY


@dataclasses.dataclass(frozen=True)
class CoAccessConfig:
    kind: str = "download"
    t_lag: float = 2 * DAY
    rush_filter: bool = True
    normalization: str = "none"  # "none", "row" or "column"
    topn: int = 20
    # optional stricter variant: drop accesses to papers younger than
    # this many seconds at session time (disabled by default)
    ignore_first: float | None = None

    def __post_init__(self):
        if self.kind not in KIND_MAP:
            raise ValueError(f"kind must be one of {sorted(KIND_MAP)}")
        if self.topn < 1:
            raise ValueError("topN must be >= 1")
        if self.t_lag < 0:
            raise ValueError("t_lag must be >= 0")
        if self.normalization not in ("none", "row", "column"):
            raise ValueError("normalization must be none, row or column")


def should_count_pair(session_time: float, t_i: float, t_j: float,
                      t_lag: float) -> bool:
    """False when the pair looks induced by a new-papers alert list.

    Ordered check: t_i is the paper whose neighbor table is updated.
    """
    anchor = session_time - t_lag
    if same_month(anchor, t_i) and same_month(t_i, t_j):
        return False
    if anchor - t_j <= SEVEN_DAYS and abs(t_i - t_j) <= SEVEN_DAYS:
        return False
    return True


def pair_weight(session_time: float, t_i: float, t_j: float,
                t_lag: float) -> float:
    """Session contribution to the unordered pair {i, j} under the filter.

    The counting loop is ordered (every i against every j), so a session
    natively contributes twice per unordered pair; we store half per
    passing direction, keeping the at-most-1 contract and staying exactly
    proportional to the ordered count.
    """
    return (should_count_pair(session_time, t_i, t_j, t_lag) +
            should_count_pair(session_time, t_j, t_i, t_lag)) / 2.0


def session_papers(session: Session, kind: Kind,
                   pubs: dict[str, PaperDates],
                   ignore_first: float | None = None,
                   unknown: list[int] | None = None) -> list[str]:
    """Distinct known papers of the requested kind, first-access order."""
    seen: dict[str, None] = {}
    for e in session.events:
        if e.kind is not kind or e.paper_id is None:
            continue
        pub = pubs.get(e.paper_id)
        if pub is None:
            if unknown is not None:
                unknown[0] += 1
            continue
        if ignore_first is not None and \
                session.start - pub.published < ignore_first:
            continue
        seen.setdefault(e.paper_id)
    return list(seen)


def build_session_matrix(sessions: Iterable[Session],
                         kind: str) -> BinaryIncidenceMatrix:
    """Binary session × paper incidence for the selected access kind."""
    want = KIND_MAP[kind]
    rows: list[set[str]] = []
    for s in sessions:
        rows.append({e.paper_id for e in s.events
                     if e.kind is want and e.paper_id is not None})
    papers = sorted(set().union(*rows)) if rows else []
    index = {p: j for j, p in enumerate(papers)}
    m = BinaryIncidenceMatrix(len(rows), len(papers), col_labels=papers)
    for i, pids in enumerate(rows):
        for p in pids:
            m.set(i, index[p])
    return m


@dataclasses.dataclass(frozen=True)
class CoAccessResult:
    neighbors: dict[str, NeighborList]
    unknown_accesses: int
    passes: int


class _BudgetExceeded(Exception):
    pass


SessionSource = Callable[[], Iterable[Session]]


def count_coaccesses(sessions: Sequence[Session] | SessionSource,
                     pubs: dict[str, PaperDates],
                     config: CoAccessConfig | None = None,
                     memory_budget: int | None = None) -> CoAccessResult:
    """Top-N co-accessed papers for every paper in the session stream.

    `memory_budget` caps the number of pair cells held at once; None
    means a single unbounded pass.  `sessions` may be a sequence or a
    zero-argument callable yielding a fresh stream per pass.
    """
    config = config or CoAccessConfig()
    source: SessionSource = sessions if callable(sessions) \
        else (lambda: iter(sessions))
    kind = KIND_MAP[config.kind]

    # planning pass: paper universe, per-paper session counts, unknowns
    unknown = [0]
    session_counts: dict[str, int] = {}
    for s in source():
        for pid in session_papers(s, kind, pubs, config.ignore_first, unknown):
            session_counts[pid] = session_counts.get(pid, 0) + 1
    universe = sorted(session_counts)

    results: dict[str, NeighborList] = {}
    chunk = max(1, len(universe))
    start = 0
    passes = 0
    while start < len(universe):
        tracked = set(universe[start:start + chunk])
        try:
            pairs = _counting_pass(source(), tracked, kind, pubs, config,
                                   memory_budget)
        except _BudgetExceeded:
            if chunk == 1:
                raise BudgetTooSmall(
                    f"a single paper's table does not fit in "
                    f"{memory_budget} cells")
            chunk = max(1, chunk // 2)
            continue
        passes += 1
        for pid, entries in _per_paper_top(pairs, tracked, config,
                                           session_counts).items():
            results[pid] = entries
        start += chunk
    return CoAccessResult(results, unknown[0], passes)


def _counting_pass(sessions: Iterable[Session], tracked: set[str],
                   kind: Kind, pubs: dict[str, PaperDates],
                   config: CoAccessConfig,
                   memory_budget: int | None) -> dict[tuple[str, str], float]:
    """One scan; unordered pair weights for pairs touching `tracked`."""
    pairs: dict[tuple[str, str], float] = {}
    for s in sessions:
        papers = session_papers(s, kind, pubs, config.ignore_first)
        if len(papers) < 2:
            continue
        m_s = len(papers)
        papers = sorted(papers)
        for a_idx in range(m_s):
            a = papers[a_idx]
            for b in papers[a_idx + 1:]:
                if a not in tracked and b not in tracked:
                    continue
                if config.rush_filter:
                    w = pair_weight(s.start, pubs[a].published,
                                    pubs[b].published, config.t_lag)
                    if w == 0.0:
                        continue
                else:
                    w = 1.0
                if config.normalization == "row":
                    w /= m_s
                key = (a, b)
                if key in pairs:
                    pairs[key] += w
                else:
                    pairs[key] = w
                    if memory_budget is not None and len(pairs) > memory_budget:
                        raise _BudgetExceeded
    return pairs


def _per_paper_top(pairs: dict[tuple[str, str], float], tracked: set[str],
                   config: CoAccessConfig,
                   session_counts: dict[str, int]) -> dict[str, NeighborList]:
    scores: dict[str, dict[str, float]] = {p: {} for p in tracked}
    for (a, b), w in pairs.items():
        if config.normalization == "column":
            w /= (session_counts[a] * session_counts[b]) ** 0.5
        if a in tracked:
            scores[a][b] = w
        if b in tracked:
            scores[b][a] = w
    out: dict[str, NeighborList] = {}
    for pid, table in scores.items():
        top = heapq.nsmallest(config.topn, table.items(),
                              key=lambda kv: (-kv[1], kv[0]))
        out[pid] = NeighborList(pid, tuple(top))
    return out
