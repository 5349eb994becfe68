"""Ranking metrics and the three evaluation settings.

Setting 1 holds out one reference at a time and checks whether the
remaining references recommend it back (recall at rank N).
Setting 2 evaluates freshly published papers against their future
co-citation context, with measure snapshots advancing monthly.
Setting 3 fixes one snapshot and tracks quality over the age of the
input reference, using latest-update dates as paper times.

All settings are pure functions of (corpus, window, config); identical
inputs give identical result tables.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable, Sequence, TextIO

from .citegraph import CitationGraph
from .coaccess import CoAccessConfig, count_coaccesses
from .errors import (EmptyRelevantSet, EmptyTestSet, NoInputsResolved)
from .papers import PaperDates
from .recommender import MeasureHandle, dict_measure, recommend_for_set, \
    text_measure
from .relmat import NeighborList
from .sessionizer import Session
from .textsim import Document, TextIndex
from .timeutil import DAY, month_start, months_between, shift_months

DEFAULT_RANKS = (1, 3, 5, 10, 20, 50, 100)


def precision_at(ranking: Sequence[str], relevant: set[str], k: int) -> float:
    if k < 1:
        raise ValueError("rank must be >= 1")
    top = ranking[:k]
    return sum(1 for pid in top if pid in relevant) / k


def recall_at(ranking: Sequence[str], relevant: set[str], k: int) -> float:
    if not relevant:
        raise EmptyRelevantSet("no relevant papers")
    top = ranking[:k]
    return sum(1 for pid in top if pid in relevant) / len(relevant)


def average_precision(ranking: Sequence[str], relevant: set[str]) -> float:
    """Mean of precision values at each relevant rank, over |relevant|."""
    if not relevant:
        raise EmptyRelevantSet("no relevant papers")
    hits = 0
    total = 0.0
    for i, pid in enumerate(ranking, start=1):
        if pid in relevant:
            hits += 1
            total += hits / i
    return total / len(relevant)


def _mean(values: Iterable[float]) -> float:
    values = list(values)
    return sum(values) / len(values)


@dataclasses.dataclass(frozen=True)
class EvalWindow:
    t_eval_begin: float
    t_eval_end: float
    t_gt_begin: float | None = None
    t_gt_end: float | None = None

    def __post_init__(self):
        if not self.t_eval_begin < self.t_eval_end:
            raise ValueError("t_eval_begin must precede t_eval_end")
        if self.t_gt_begin is not None:
            if self.t_gt_end is None or not self.t_gt_begin < self.t_gt_end:
                raise ValueError("t_gt_begin must precede t_gt_end")
            if self.t_eval_end > self.t_gt_begin:
                raise ValueError("ground-truth window must follow the "
                                 "evaluation window")


@dataclasses.dataclass(frozen=True)
class EvalConfig:
    measures: tuple[str, ...] = ("co-citation", "co-download")
    aggregation: str = "sum"
    stored_n: int = 300  # neighbor-list length per paper and snapshot
    ranks: tuple[int, ...] = DEFAULT_RANKS
    n_max: int = 100  # recommendation-list cap for AP settings
    age_months: int = 24
    rush_filter: bool = True
    t_lag: float = 2 * DAY


@dataclasses.dataclass(frozen=True)
class EvalRow:
    algorithm: str
    x: int  # rank N (Setting 1) or Δt in months (Settings 2-3)
    value: float
    support: int


@dataclasses.dataclass(frozen=True)
class EvalResult:
    setting: str
    rows: tuple[EvalRow, ...]
    # Setting 1 keeps the per-paper recall fractions for distribution plots
    per_paper: dict = dataclasses.field(default_factory=dict, compare=False)


def write_eval_tsv(result: EvalResult, out: TextIO) -> None:
    out.write("algorithm\tn_or_dt\tvalue\tsupport\n")
    for row in sorted(result.rows, key=lambda r: (r.algorithm, r.x)):
        out.write(f"{row.algorithm}\t{row.x}\t{row.value:.12g}\t"
                  f"{row.support}\n")


class EvalCorpus:
    """Everything the settings need: dates, citation edges, sessions, docs."""

    def __init__(self, dates: dict[str, PaperDates],
                 edges: Iterable[tuple[str, str]],
                 sessions: Sequence[Session] = (),
                 docs: Sequence[Document] = ()):
        self.dates = dates
        self.edges = tuple(edges)
        self.sessions = tuple(sessions)
        self.docs = tuple(docs)
        self.refs: dict[str, list[str]] = {}
        self.citers: dict[str, list[str]] = {}
        for citing, cited in self.edges:
            self.refs.setdefault(citing, []).append(cited)
            self.citers.setdefault(cited, []).append(citing)
        for adj in (self.refs, self.citers):
            for lst in adj.values():
                lst.sort()

    def published(self, pid: str) -> float:
        return self.dates[pid].published

    def updated(self, pid: str) -> float:
        return self.dates[pid].updated

    def graph_at(self, cut: float, inclusive: bool) -> CitationGraph:
        """Edges whose citing paper predates the cut; vertices are
        endpoints of surviving edges."""
        kept = [e for e in self.edges
                if (self.published(e[0]) <= cut if inclusive
                    else self.published(e[0]) < cut)]
        ids = {p for e in kept for p in e}
        dates = {p: self.dates[p] for p in ids if p in self.dates}
        return CitationGraph(ids, kept, dates)

    def sessions_at(self, cut: float, inclusive: bool) -> list[Session]:
        return [s for s in self.sessions
                if (s.start <= cut if inclusive else s.start < cut)]


@dataclasses.dataclass(frozen=True)
class Snapshot:
    cut: float
    measures: dict[str, MeasureHandle]
    universe: frozenset[str]


def _graph_measure(name: str, graph: CitationGraph, variant: str,
                   norm: str | None, stored_n: int) -> MeasureHandle:
    matrix = graph.cite_matrix() if variant == "cocite" else graph.ref_matrix()
    if norm:
        # axis names refer to the citation matrix C; the reference
        # matrix is its transpose
        axis = norm if variant == "cocite" else \
            {"row": "column", "column": "row"}[norm]
        matrix = matrix.normalize(axis)
    index = {pid: i for i, pid in enumerate(graph.paper_ids)}
    cache: dict[str, NeighborList] = {}

    def lookup(pid: str) -> NeighborList | None:
        if pid not in index:
            return None
        if pid not in cache:
            cache[pid] = matrix.topn_neighbors(index[pid], stored_n)
        return cache[pid]

    return MeasureHandle(name, lookup)


class MeasureFactory:
    """Builds (and caches) measure snapshots as of a cut time."""

    def __init__(self, corpus: EvalCorpus, config: EvalConfig):
        self.corpus = corpus
        self.config = config
        self._cache: dict[tuple[float, bool], Snapshot] = {}

    def snapshot(self, cut: float, inclusive: bool = True) -> Snapshot:
        key = (cut, inclusive)
        if key not in self._cache:
            self._cache[key] = self._build(cut, inclusive)
        return self._cache[key]

    def _build(self, cut: float, inclusive: bool) -> Snapshot:
        cfg = self.config
        graph = self.corpus.graph_at(cut, inclusive)
        measures: dict[str, MeasureHandle] = {}
        for name in cfg.measures:
            base, _, norm = name.partition(":")
            norm = norm or None
            if base == "co-citation":
                measures[name] = _graph_measure(name, graph, "cocite",
                                                norm, cfg.stored_n)
            elif base == "co-reference":
                measures[name] = _graph_measure(name, graph, "coref",
                                                norm, cfg.stored_n)
            elif base in ("co-download", "co-view"):
                kind = "download" if base == "co-download" else "view"
                sessions = self.corpus.sessions_at(cut, inclusive)
                result = count_coaccesses(
                    sessions, self.corpus.dates,
                    CoAccessConfig(kind=kind, t_lag=cfg.t_lag,
                                   rush_filter=cfg.rush_filter,
                                   normalization=norm or "none",
                                   topn=cfg.stored_n))
                measures[name] = dict_measure(name, result.neighbors)
            elif base in ("tfidf_meta", "tfidf_fulltext"):
                mode = "meta" if base == "tfidf_meta" else "fulltext"
                docs = [d for d in self.corpus.docs
                        if d.paper_id in self.corpus.dates and
                        (self.corpus.published(d.paper_id) <= cut if inclusive
                         else self.corpus.published(d.paper_id) < cut)]
                measures[name] = text_measure(name, TextIndex.build(docs, mode),
                                              cfg.stored_n)
            else:
                raise ValueError(f"unknown measure {name!r}")
        return Snapshot(cut, measures, frozenset(graph.paper_ids))


def _recommend_ids(inputs: list[str], handle: MeasureHandle, fn: str,
                   n: int, universe: frozenset[str]) -> list[str]:
    try:
        ranking = recommend_for_set(inputs, handle, fn=fn, n=n,
                                    universe=universe)
    except NoInputsResolved:
        return []
    return ranking.targets()


def setting1(corpus: EvalCorpus, window: EvalWindow,
             config: EvalConfig) -> EvalResult:
    """Recall of a held-out reference recommended from its siblings."""
    factory = MeasureFactory(corpus, config)
    snap = factory.snapshot(window.t_eval_begin, inclusive=False)
    test_papers = sorted(
        p for p in corpus.dates
        if window.t_eval_begin <= corpus.published(p) <= window.t_eval_end)
    if not test_papers:
        raise EmptyTestSet("no papers in the evaluation window")
    ranks = config.ranks
    rows: list[EvalRow] = []
    per_paper: dict[tuple[str, int], dict[str, float]] = {}
    for name in config.measures:
        handle = snap.measures[name]
        paper_means: dict[int, list[float]] = {n: [] for n in ranks}
        for d_k in test_papers:
            refs = [r for r in corpus.refs.get(d_k, ())
                    if corpus.published(r) < window.t_eval_begin]
            if len(refs) < 2:
                continue
            ref_recalls: dict[int, list[float]] = {n: [] for n in ranks}
            for d_j in refs:
                inputs = [r for r in refs if r != d_j]
                ids = _recommend_ids(inputs, handle, config.aggregation,
                                     max(ranks), snap.universe)
                for n in ranks:
                    ref_recalls[n].append(float(d_j in ids[:n]))
            for n in ranks:
                fraction = _mean(ref_recalls[n])
                paper_means[n].append(fraction)
                per_paper.setdefault((name, n), {})[d_k] = fraction
        for n in ranks:
            if paper_means[n]:
                rows.append(EvalRow(name, n, _mean(paper_means[n]),
                                    len(paper_means[n])))
    if not rows:
        raise EmptyTestSet("no test paper had two dated references")
    return EvalResult("setting1", tuple(rows), per_paper)


def _related_sets(corpus: EvalCorpus,
                  window: EvalWindow) -> dict[str, set[str]]:
    """Future co-citation context: for each paper, the recent papers its
    ground-truth-window citers also cite."""
    related: dict[str, set[str]] = {}
    for d_k, refs in corpus.refs.items():
        t_k = corpus.published(d_k)
        if not window.t_gt_begin <= t_k <= window.t_gt_end:
            continue
        recent = [d_j for d_j in refs
                  if window.t_eval_begin <= corpus.published(d_j)
                  <= window.t_gt_begin]
        if not recent:
            continue
        for d_i in refs:
            related.setdefault(d_i, set()).update(recent)
    for d_i, others in related.items():
        others.discard(d_i)
    return related


def setting2(corpus: EvalCorpus, window: EvalWindow,
             config: EvalConfig) -> EvalResult:
    """MAP for fresh papers, snapshots advancing monthly after publication."""
    if window.t_gt_begin is None:
        raise ValueError("setting2 needs a ground-truth window")
    factory = MeasureFactory(corpus, config)
    related = _related_sets(corpus, window)
    test_papers = sorted(
        p for p in corpus.dates
        if window.t_eval_begin <= corpus.published(p) <= window.t_eval_end)
    if not test_papers:
        raise EmptyTestSet("no papers in the evaluation window")
    aps: dict[tuple[str, int], list[float]] = {}
    for d_k in test_papers:
        rel_all = related.get(d_k)
        if not rel_all:
            continue
        t_k = corpus.published(d_k)
        t_x = month_start(t_k)
        if t_x < t_k:
            t_x = shift_months(t_x, 1)
        while t_x <= window.t_gt_begin:
            relevant = {d for d in rel_all if corpus.published(d) <= t_x}
            if relevant:
                dt = months_between(t_k, t_x)
                snap = factory.snapshot(t_x, inclusive=True)
                for name in config.measures:
                    ids = _recommend_ids([d_k], snap.measures[name],
                                         config.aggregation, config.stored_n,
                                         snap.universe)
                    ids = [p for p in ids
                           if corpus.published(p) >= window.t_eval_begin]
                    ids = ids[:config.n_max]
                    aps.setdefault((name, dt), []).append(
                        average_precision(ids, relevant))
            t_x = shift_months(t_x, 1)
    rows = tuple(EvalRow(name, dt, _mean(vals), len(vals))
                 for (name, dt), vals in sorted(aps.items()))
    if not rows:
        raise EmptyTestSet("no test paper had a nonempty related set")
    return EvalResult("setting2", rows)


def setting3(corpus: EvalCorpus, window: EvalWindow,
             config: EvalConfig) -> EvalResult:
    """MAP over reference age at one fixed snapshot t0 = t_gt_begin.

    Paper times here are latest-update dates, which drops test papers
    whose reference lists were refreshed after the window.
    """
    if window.t_gt_begin is None:
        raise ValueError("setting3 needs a ground-truth window")
    t0 = window.t_gt_begin
    factory = MeasureFactory(corpus, config)
    snap = factory.snapshot(t0, inclusive=True)
    when = corpus.updated
    test_papers = sorted(p for p in corpus.dates
                         if t0 <= when(p) <= window.t_gt_end)
    if not test_papers:
        raise EmptyTestSet("no papers in the ground-truth window")
    results: dict[tuple[str, int], list[float]] = {}
    for d_k in test_papers:
        refs = [r for r in corpus.refs.get(d_k, ()) if when(r) <= t0]
        for x in range(config.age_months):
            t_x = shift_months(t0, -x)
            t_next = shift_months(t0, -(x + 1))
            bucket = [r for r in refs if t_next < when(r) <= t_x]
            if not bucket:
                continue
            for name in config.measures:
                aps = []
                for d_i in bucket:
                    relevant = {d_j for d_j in refs
                                if when(d_j) >= t_x and d_j != d_i}
                    if not relevant:
                        continue
                    ids = _recommend_ids([d_i], snap.measures[name],
                                         config.aggregation, config.stored_n,
                                         snap.universe)
                    ids = ids[:config.n_max]
                    aps.append(average_precision(ids, relevant))
                if aps:
                    results.setdefault((name, -x), []).append(_mean(aps))
    rows = tuple(EvalRow(name, dt, _mean(vals), len(vals))
                 for (name, dt), vals in sorted(results.items()))
    if not rows:
        raise EmptyTestSet("no reference produced a target set")
    return EvalResult("setting3", rows)
