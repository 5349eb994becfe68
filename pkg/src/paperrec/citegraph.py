"""Citation graph: co-citation, co-reference, PageRank, HITS, diagnostics.

The graph holds directed citing -> cited edges.  Expressed as a binary
adjacency matrix C (rows cite columns), co-citation is the column
co-occurrence (CᵀC) and co-reference the row co-occurrence (CCᵀ); both
reuse the relmat kernel, optionally after L2 normalization of C.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Iterable, TextIO

from .errors import DegenerateGraph, UnknownPaper
from .papers import PaperDates
from .relmat import BinaryIncidenceMatrix, NeighborList

DAY = 86400.0


class CitationGraph:
    def __init__(self, paper_ids: Iterable[str],
                 edges: Iterable[tuple[str, str]],
                 dates: dict[str, PaperDates] | None = None):
        self.paper_ids = sorted(set(paper_ids))
        self._index = {pid: i for i, pid in enumerate(self.paper_ids)}
        self.dates = dates or {}
        self.out_edges: dict[str, list[str]] = {p: [] for p in self.paper_ids}
        self.in_edges: dict[str, list[str]] = {p: [] for p in self.paper_ids}
        seen: set[tuple[str, str]] = set()
        for citing, cited in edges:
            if citing == cited:
                raise ValueError(f"self-citation {citing}")
            if (citing, cited) in seen:
                raise ValueError(f"duplicate edge {citing} -> {cited}")
            if citing not in self._index or cited not in self._index:
                raise UnknownPaper(f"edge endpoint missing: {citing} -> {cited}")
            seen.add((citing, cited))
            self.out_edges[citing].append(cited)
            self.in_edges[cited].append(citing)
        for adj in (self.out_edges, self.in_edges):
            for lst in adj.values():
                lst.sort()
        self.n_edges = len(seen)

    def __contains__(self, pid: str) -> bool:
        return pid in self._index

    def _check(self, pid: str) -> None:
        if pid not in self._index:
            raise UnknownPaper(pid)

    def out_degree(self, pid: str) -> int:
        self._check(pid)
        return len(self.out_edges[pid])

    def in_degree(self, pid: str) -> int:
        self._check(pid)
        return len(self.in_edges[pid])

    def cite_matrix(self) -> BinaryIncidenceMatrix:
        """Rows are citing papers, columns cited papers (both id-ordered)."""
        m = BinaryIncidenceMatrix(len(self.paper_ids), len(self.paper_ids),
                                  col_labels=self.paper_ids)
        for citing, cited_list in self.out_edges.items():
            for cited in cited_list:
                m.set(self._index[citing], self._index[cited])
        return m

    def ref_matrix(self) -> BinaryIncidenceMatrix:
        """The transpose view: columns are citing papers."""
        m = BinaryIncidenceMatrix(len(self.paper_ids), len(self.paper_ids),
                                  col_labels=self.paper_ids)
        for citing, cited_list in self.out_edges.items():
            for cited in cited_list:
                m.set(self._index[cited], self._index[citing])
        return m

    def co_citation(self, i: str, j: str) -> float:
        """Number of papers citing both i and j (0 on the diagonal)."""
        self._check(i)
        self._check(j)
        if i == j:
            return 0.0
        return float(len(set(self.in_edges[i]) & set(self.in_edges[j])))

    def co_reference(self, i: str, j: str) -> float:
        """Number of references shared by i and j (0 on the diagonal)."""
        self._check(i)
        self._check(j)
        if i == j:
            return 0.0
        return float(len(set(self.out_edges[i]) & set(self.out_edges[j])))

    def _topn(self, matrix: BinaryIncidenceMatrix, pid: str, n: int,
              norm: str | None, norm_axis_map: dict[str, str]) -> NeighborList:
        self._check(pid)
        if norm not in (None, "none"):
            matrix = matrix.normalize(norm_axis_map[norm])
        return matrix.topn_neighbors(self._index[pid], n)

    def co_cited_topn(self, pid: str, n: int,
                      norm: str | None = None) -> NeighborList:
        # norm axis names refer to C: its rows are already this matrix's rows
        return self._topn(self.cite_matrix(), pid, n, norm,
                          {"row": "row", "column": "column"})

    def co_ref_topn(self, pid: str, n: int,
                    norm: str | None = None) -> NeighborList:
        # ref_matrix is Cᵀ, so C's rows are its columns and vice versa
        return self._topn(self.ref_matrix(), pid, n, norm,
                          {"row": "column", "column": "row"})


@dataclasses.dataclass(frozen=True)
class PageRankConfig:
    damping: float = 0.85
    tolerance: float = 1e-8
    max_iterations: int = 200
    dangling: str = "redistribute"  # or "remove"

    def __post_init__(self):
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclasses.dataclass(frozen=True)
class PageRankResult:
    scores: dict[str, float]
    iterations: int
    converged: bool
    # one entry per iteration: (L1 change, Σ scores after the sweep)
    trace: tuple[tuple[float, float], ...]


def pagerank(graph: CitationGraph,
             config: PageRankConfig | None = None) -> PageRankResult:
    """Damped link-endorsement fixed point over the citation graph.

    The rank of a paper flows along reference edges: a paper's score is
    (1-d)/n plus d times the out-degree-weighted scores of its citers.
    Dangling papers (no references) either donate their mass uniformly
    each sweep (default) or are removed up front.
    """
    config = config or PageRankConfig()
    nodes = graph.paper_ids
    if not nodes:
        raise DegenerateGraph("empty graph")
    removed: list[str] = []
    out_edges = graph.out_edges
    in_edges = graph.in_edges
    if config.dangling == "remove":
        removed = [p for p in nodes if not out_edges[p]]
        keep = set(nodes) - set(removed)
        if not keep:
            raise DegenerateGraph("dangling removal leaves no papers")
        nodes = sorted(keep)
        out_edges = {p: [q for q in out_edges[p] if q in keep] for p in nodes}
        in_edges = {p: [q for q in in_edges[p] if q in keep] for p in nodes}
    n = len(nodes)
    d = config.damping
    out_deg = {p: len(out_edges[p]) for p in nodes}
    pr = {p: 1.0 / n for p in nodes}
    trace: list[tuple[float, float]] = []
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        dangling_mass = sum(pr[p] for p in nodes if out_deg[p] == 0)
        base = (1.0 - d) / n + d * dangling_mass / n
        new = {}
        for p in nodes:
            flow = sum(pr[q] / out_deg[q] for q in in_edges[p])
            new[p] = base + d * flow
        delta = sum(abs(new[p] - pr[p]) for p in nodes)
        total = sum(new.values())
        if abs(total - 1.0) > 1e-9:
            raise AssertionError(f"rank mass drifted to {total}")
        trace.append((delta, total))
        pr = new
        if delta < config.tolerance:
            converged = True
            break
    scores = dict(pr)
    for p in removed:
        scores[p] = 0.0
    return PageRankResult(scores, iterations, converged, tuple(trace))


@dataclasses.dataclass(frozen=True)
class HitsResult:
    authority: dict[str, float]
    hub: dict[str, float]
    iterations: int
    converged: bool


def hits(graph: CitationGraph, tolerance: float = 1e-8,
         max_iterations: int = 200) -> HitsResult:
    """Mutually recursive hub/authority scores, L2-normalized each sweep.

    Sequential update: authorities are refreshed from the current hubs,
    then hubs from the fresh authorities, which makes the authority
    vector follow the power iteration of CᵀC.
    """
    nodes = graph.paper_ids
    if not nodes:
        raise DegenerateGraph("empty graph")
    if graph.n_edges == 0:
        raise DegenerateGraph("no edges; hub/authority undefined")
    n = len(nodes)
    auth = {p: 1.0 / math.sqrt(n) for p in nodes}
    hub = dict(auth)
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        new_auth = {p: sum(hub[q] for q in graph.in_edges[p]) for p in nodes}
        _l2_normalize(new_auth)
        new_hub = {p: sum(new_auth[q] for q in graph.out_edges[p])
                   for p in nodes}
        _l2_normalize(new_hub)
        delta = max(max(abs(new_auth[p] - auth[p]) for p in nodes),
                    max(abs(new_hub[p] - hub[p]) for p in nodes))
        auth, hub = new_auth, new_hub
        if delta < tolerance:
            converged = True
            break
    return HitsResult(auth, hub, iterations, converged)


def _l2_normalize(vec: dict[str, float]) -> None:
    norm = math.sqrt(sum(v * v for v in vec.values()))
    if norm == 0.0:
        raise DegenerateGraph("all-zero fixed point reached")
    for k in vec:
        vec[k] /= norm


@dataclasses.dataclass(frozen=True)
class ImportanceScores:
    paper_id: str
    pagerank: float
    hub: float
    authority: float
    in_degree: int
    out_degree: int


def importance_scores(graph: CitationGraph,
                      config: PageRankConfig | None = None,
                      ) -> list[ImportanceScores]:
    pr = pagerank(graph, config)
    ha = hits(graph)
    return [ImportanceScores(p, pr.scores[p], ha.hub[p], ha.authority[p],
                             graph.in_degree(p), graph.out_degree(p))
            for p in graph.paper_ids]


@dataclasses.dataclass(frozen=True)
class DagViolationReport:
    fraction: float
    offending_edges: tuple[tuple[str, str], ...]
    papers_with_references: int


def dag_violation_report(graph: CitationGraph) -> DagViolationReport:
    """Share of citing papers whose newest reference postdates them.

    A reference into the future signals revision-added citations (or bad
    dates).  Requires publication dates for every paper on an edge.
    """
    offending: list[tuple[str, str]] = []
    bad_papers: set[str] = set()
    with_refs = 0
    for citing in graph.paper_ids:
        refs = graph.out_edges[citing]
        if not refs:
            continue
        with_refs += 1
        t_citing = graph.dates[citing].published
        for cited in refs:
            if graph.dates[cited].published > t_citing:
                offending.append((citing, cited))
                bad_papers.add(citing)
    fraction = len(bad_papers) / with_refs if with_refs else 0.0
    return DagViolationReport(fraction, tuple(offending), with_refs)


EDGE_HEADER = ("citing_id", "cited_id")


def write_edges_tsv(graph: CitationGraph, out: TextIO) -> None:
    out.write("\t".join(EDGE_HEADER) + "\n")
    for citing in graph.paper_ids:
        for cited in graph.out_edges[citing]:
            out.write(f"{citing}\t{cited}\n")


def read_edges_tsv(inp: TextIO) -> list[tuple[str, str]]:
    edges: list[tuple[str, str]] = []
    for lineno, line in enumerate(inp):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if lineno == 0 and parts[0] == EDGE_HEADER[0]:
            continue
        if len(parts) != 2:
            raise ValueError(f"line {lineno + 1}: expected 2 columns")
        edges.append((parts[0], parts[1]))
    return edges


def load_graph(edges_inp: TextIO,
               dates: dict[str, PaperDates] | None = None,
               extra_papers: Iterable[str] = ()) -> CitationGraph:
    edges = read_edges_tsv(edges_inp)
    ids = {p for e in edges for p in e}
    ids.update(extra_papers)
    if dates:
        ids.update(dates)
    return CitationGraph(ids, edges, dates)
