"""HTTP JSON service over prebuilt stores.

The store is a directory written by the CLI: paper dates, one neighbor
TSV per measure, and optionally the text corpus for titles.  Everything
is loaded once at startup and served read-only; the API surface is
resolve / recommend / paper / random / measures.
"""

from __future__ import annotations

import dataclasses
import os
import random
import re
from typing import Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .errors import NoInputsResolved
from .ids import extract_ids, is_valid_id
from .papers import PaperDates, read_papers_tsv
from .recommender import AGGREGATIONS, dict_measure, recommend_for_set
from .relmat import NeighborList, read_neighbors_tsv
from .textsim import read_corpus_ndjson
from .timeutil import format_date

MAX_N = 100
DEFAULT_N = 20

# id-shaped fragments: near misses we report back instead of dropping
_LOOSE_RE = re.compile(r"[A-Za-z][A-Za-z.-]*/[\w.-]+|\d{4}\.\d+[\w.]*")


@dataclasses.dataclass(frozen=True)
class ResolveResult:
    recognized: tuple[str, ...]  # deduplicated, input order
    unrecognized: tuple[str, ...]
    known: dict[str, bool]

    def __post_init__(self):
        bad = [p for p in self.recognized if not is_valid_id(p)]
        if bad:
            raise ValueError(f"non-grammatical ids recognized: {bad}")


def resolve_ids(text: str, corpus_ids=frozenset()) -> ResolveResult:
    recognized = extract_ids(text)
    fragments: list[str] = []
    seen = set(recognized)
    for m in _LOOSE_RE.finditer(text):
        frag = m.group(0)
        if frag in seen or extract_ids(frag):
            continue
        seen.add(frag)
        fragments.append(frag)
    return ResolveResult(tuple(recognized), tuple(fragments),
                         {p: p in corpus_ids for p in recognized})


class RecStore:
    """Immutable bundle of everything the endpoints answer from."""

    def __init__(self, papers: dict[str, PaperDates],
                 measures: dict[str, dict[str, NeighborList]],
                 meta: dict[str, dict] | None = None,
                 default_measure: str | None = None):
        if not measures:
            raise ValueError("a store needs at least one measure")
        self.papers = papers
        self.measures = measures
        self.meta = meta or {}
        if default_measure is None:
            default_measure = "co-download" if "co-download" in measures \
                else sorted(measures)[0]
        if default_measure not in measures:
            raise ValueError(f"default measure {default_measure!r} not loaded")
        self.default_measure = default_measure
        self._sorted_ids = sorted(papers)

    @classmethod
    def load(cls, directory: str) -> "RecStore":
        papers_path = os.path.join(directory, "papers.tsv")
        neighbors_dir = os.path.join(directory, "neighbors")
        if not os.path.exists(papers_path):
            raise FileNotFoundError(f"store has no papers.tsv: {directory}")
        with open(papers_path) as fh:
            papers = read_papers_tsv(fh)
        measures: dict[str, dict[str, NeighborList]] = {}
        if os.path.isdir(neighbors_dir):
            for fname in sorted(os.listdir(neighbors_dir)):
                if not fname.endswith(".tsv"):
                    continue
                with open(os.path.join(neighbors_dir, fname)) as fh:
                    measures[fname[:-4]] = read_neighbors_tsv(fh)
        if not measures:
            raise FileNotFoundError(
                f"store has no neighbor tables under {neighbors_dir}")
        meta: dict[str, dict] = {}
        corpus_path = os.path.join(directory, "corpus.ndjson")
        if os.path.exists(corpus_path):
            with open(corpus_path) as fh:
                for doc in read_corpus_ndjson(fh):
                    meta[doc.paper_id] = {"title": doc.title,
                                          "abstract": doc.abstract}
        return cls(papers, measures, meta)

    def random_id(self, rng: random.Random) -> str:
        return rng.choice(self._sorted_ids)


class ResolveIn(BaseModel):
    text: str = ""


class RecommendIn(BaseModel):
    ids: list[str] = Field(min_length=1)
    measure: str | None = None
    aggregation: Literal["min", "mean", "max", "sum"] = "sum"
    n: int = Field(DEFAULT_N, ge=1, le=MAX_N)


def recommend_items(store: RecStore, ids: list[str], measure_name: str,
                    aggregation: str, n: int):
    """Shared by the HTTP endpoint and the CLI: one code path."""
    handle = dict_measure(measure_name, store.measures[measure_name])
    unknown: list[str] = []
    ranking = recommend_for_set(ids, handle, fn=aggregation, n=n,
                                unknown=unknown)
    return ranking, unknown


def create_app(store: RecStore, rng: random.Random | None = None) -> FastAPI:
    rng = rng or random.Random()
    app = FastAPI(title="paperrec", version="0.1")

    @app.post("/api/resolve")
    def api_resolve(body: ResolveIn):
        result = resolve_ids(body.text, store.papers.keys())
        return {
            "recognized": [{"id": p, "known": result.known[p]}
                           for p in result.recognized],
            "unrecognized": list(result.unrecognized),
        }

    @app.post("/api/recommend")
    def api_recommend(body: RecommendIn):
        measure = body.measure or store.default_measure
        if measure not in store.measures:
            raise HTTPException(404, f"measure {measure!r} is not loaded")
        try:
            ranking, unknown = recommend_items(store, body.ids, measure,
                                               body.aggregation, body.n)
        except NoInputsResolved:
            raise HTTPException(404, "none of the submitted ids has "
                                     "neighbor data in this measure")
        items = [{"rank": i, "id": pid, "score": score,
                  "title": store.meta.get(pid, {}).get("title")}
                 for i, (pid, score) in enumerate(ranking.entries, start=1)]
        return {"measure": measure, "aggregation": body.aggregation,
                "n": body.n, "items": items, "unknown_ids": unknown}

    @app.get("/api/paper/{paper_id:path}")
    def api_paper(paper_id: str):
        dates = store.papers.get(paper_id)
        if dates is None:
            raise HTTPException(404, f"unknown paper {paper_id!r}")
        meta = store.meta.get(paper_id, {})
        return {
            "id": paper_id,
            "pub_date": format_date(dates.published),
            "update_date": format_date(dates.updated),
            "title": meta.get("title"),
            "abstract": meta.get("abstract"),
            "measures": sorted(m for m, table in store.measures.items()
                               if paper_id in table),
        }

    @app.get("/api/random")
    def api_random():
        return {"id": store.random_id(rng)}

    @app.get("/api/measures")
    def api_measures():
        return {"measures": sorted(store.measures),
                "default": store.default_measure,
                "aggregations": list(AGGREGATIONS),
                "default_aggregation": "sum",
                "max_n": MAX_N, "default_n": DEFAULT_N}

    return app
