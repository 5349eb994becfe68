"""Bag-of-words similarity: reference stripping, TF·IDF, cosine ranking.

Index construction is a two-pass batch: the first pass builds the raw
token dictionary (needed by de-hyphenation) and document frequencies,
the second weighs each document.  Queries take a document's 1000
strongest terms as an unweighted term set and rank the corpus by cosine
against stored TF·IDF vectors.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import re
from collections import Counter
from typing import Iterable, TextIO

from .errors import UnknownDocument, UnknownTerm
from .ids import is_valid_id
from .relmat import NeighborList, top_n_from_scores

# Cascade for locating the reference section, ordered by dependability.
# A rule is consulted only when its predecessors fail outright or match
# ambiguously (twice or more in the second half of the text).
_HEAD = r"^\s*(\d{0,2}|[IVX]{0,4})\.?[ ]*"
_ENUM_ITEM = r"\s*(\1)%d\2.{10,700}\r?\n"
STRIP_RULES: tuple[tuple[str, re.Pattern], ...] = (
    ("references", re.compile(_HEAD + r"REFERENCES\.?\s*$", re.I | re.M)),
    ("acknowledgements", re.compile(_HEAD + r"ACKNOWLEDGE?MENTS?\s*$",
                                    re.I | re.M)),
    ("bibliography", re.compile(_HEAD + r"(Bibliograph(y|ie))\s*$",
                                re.I | re.M)),
    # typical funding sentence directly before reference sections
    ("support", re.compile(r"work.{0,20}(partly)?.{0,20}support", re.I)),
    ("enumeration", re.compile(
        r"\n" + r"\s*(|\[)1( |\. |\] ).{10,700}\r?\n" + r"(" +
        "".join(_ENUM_ITEM % k for k in range(2, 10)) +
        r"\s*(\1)10\2" + r")", re.I)),
)


def strip_references(text: str) -> tuple[str, str | None]:
    """Cut the trailing reference section; the result is a prefix."""
    for name, pattern in STRIP_RULES:
        matches = list(pattern.finditer(text))
        if not matches:
            continue
        in_second_half = [m for m in matches if m.start() * 2 >= len(text)]
        if len(in_second_half) >= 2:
            continue  # ambiguous: defer to the next rule
        return text[:matches[-1].start()], name
    return text, None


# Compact English stop list plus OCR/TeX artifact fragments; deployments
# may extend it, nothing here is ground truth.
DEFAULT_STOPWORDS = frozenset("""
a about above after again all also am an and any are as at be because been
before being below between both but by can could did do does doing down
during each et few for from further had has have having he her here hers
him his how if in into is it its itself just me more most my no nor not of
off on once only or other our ours out over own same she should so some
such than that the their theirs them then there these they this those
through to too under until up very was we were what when where which while
who whom why will with you your yours
al fig eq ref sec cf ie eg via
""".split())

_TOKEN_RE = re.compile(r"[A-Za-z]{2,}")
_HYPHEN_BREAK_RE = re.compile(r"([A-Za-z]+)-\r?\n\s*([A-Za-z]+)")


def dehyphenate(text: str, dictionary: Counter) -> str:
    """Join a line-break-hyphenated pair iff the joined form is common.

    "Common" means at least 3 occurrences in the corpus dictionary;
    otherwise both halves stay separate tokens.
    """
    def join(m: re.Match) -> str:
        joined = (m.group(1) + m.group(2)).lower()
        if dictionary[joined] >= 3:
            return m.group(1) + m.group(2)
        return m.group(1) + " " + m.group(2)

    return _HYPHEN_BREAK_RE.sub(join, text)


def raw_tokens(text: str) -> list[str]:
    return [t.lower() for t in _TOKEN_RE.findall(text)]


def tokenize(text: str, dictionary: Counter,
             stopwords: frozenset[str] = DEFAULT_STOPWORDS) -> list[str]:
    return [t for t in raw_tokens(dehyphenate(text, dictionary))
            if t not in stopwords]


@dataclasses.dataclass(frozen=True)
class Document:
    paper_id: str
    title: str
    abstract: str
    fulltext: str | None = None

    def __post_init__(self):
        if not is_valid_id(self.paper_id):
            raise ValueError(f"invalid paper id {self.paper_id!r}")

    def text(self, mode: str) -> str:
        if mode == "meta":
            return f"{self.title}\n{self.abstract}"
        if mode == "fulltext":
            body, _ = strip_references(self.fulltext or "")
            return f"{self.title}\n{self.abstract}\n{body}"
        raise ValueError(f"mode must be 'meta' or 'fulltext', got {mode!r}")


@dataclasses.dataclass
class Lexicon:
    corpus_size: int
    doc_frequency: dict[str, int]
    stopwords: frozenset[str] = DEFAULT_STOPWORDS
    dictionary: Counter = dataclasses.field(default_factory=Counter)

    def idf(self, term: str) -> float:
        n = self.doc_frequency.get(term)
        if n is None:
            raise UnknownTerm(term)
        return math.log2(self.corpus_size / n)


def tfidf_vector(tokens: Iterable[str], lexicon: Lexicon) -> dict[str, float]:
    """Sparse weights tf · log2(N/n); zero-weight terms are dropped."""
    vector: dict[str, float] = {}
    for term, tf in Counter(tokens).items():
        w = tf * lexicon.idf(term)
        if w != 0.0:
            vector[term] = w
    return vector


def cosine(u: dict[str, float], v: dict[str, float]) -> float:
    if not u or not v:
        return 0.0
    if len(v) < len(u):
        u, v = v, u
    dot = sum(w * v[t] for t, w in u.items() if t in v)
    nu = math.sqrt(sum(w * w for w in u.values()))
    nv = math.sqrt(sum(w * w for w in v.values()))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


class TextIndex:
    """TF·IDF vectors for one corpus and one mode ('meta' or 'fulltext')."""

    def __init__(self, mode: str, lexicon: Lexicon,
                 vectors: dict[str, dict[str, float]]):
        self.mode = mode
        self.lexicon = lexicon
        self.vectors = vectors

    @classmethod
    def build(cls, docs: Iterable[Document], mode: str = "meta",
              stopwords: frozenset[str] = DEFAULT_STOPWORDS) -> "TextIndex":
        docs = list(docs)
        texts = {d.paper_id: d.text(mode) for d in docs}
        dictionary: Counter = Counter()
        for text in texts.values():
            dictionary.update(raw_tokens(text))
        tokens = {pid: tokenize(text, dictionary, stopwords)
                  for pid, text in texts.items()}
        df: dict[str, int] = {}
        for toks in tokens.values():
            for term in set(toks):
                df[term] = df.get(term, 0) + 1
        lexicon = Lexicon(len(docs), df, stopwords, dictionary)
        vectors = {pid: tfidf_vector(toks, lexicon)
                   for pid, toks in tokens.items()}
        return cls(mode, lexicon, vectors)

    def query_terms(self, paper_id: str, k_query: int = 1000) -> list[str]:
        """The document's k strongest terms (deterministic tie order)."""
        vector = self.vectors.get(paper_id)
        if vector is None:
            raise UnknownDocument(paper_id)
        ranked = sorted(vector.items(), key=lambda kv: (-kv[1], kv[0]))
        return [t for t, _ in ranked[:k_query]]

    def rank_similar(self, paper_id: str, n: int,
                     k_query: int = 1000) -> NeighborList:
        """Cosine ranking against the query doc's unweighted term set."""
        terms = self.query_terms(paper_id, k_query)
        query = {t: 1.0 for t in terms}
        scores = {pid: cosine(query, vec)
                  for pid, vec in self.vectors.items() if pid != paper_id}
        return top_n_from_scores(paper_id, scores, n)

    def save(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        with open(os.path.join(directory, "meta.json"), "w") as fh:
            json.dump({"mode": self.mode,
                       "corpus_size": self.lexicon.corpus_size,
                       "papers": sorted(self.vectors)}, fh)
        with open(os.path.join(directory, "lexicon.tsv"), "w") as fh:
            fh.write("term\tdoc_frequency\n")
            for term in sorted(self.lexicon.doc_frequency):
                fh.write(f"{term}\t{self.lexicon.doc_frequency[term]}\n")
        with open(os.path.join(directory, "postings.tsv"), "w") as fh:
            fh.write("paper_id\tterm\tweight\n")
            for pid in sorted(self.vectors):
                for term in sorted(self.vectors[pid]):
                    fh.write(f"{pid}\t{term}\t"
                             f"{self.vectors[pid][term]:.12g}\n")

    @classmethod
    def load(cls, directory: str) -> "TextIndex":
        with open(os.path.join(directory, "meta.json")) as fh:
            meta = json.load(fh)
        df: dict[str, int] = {}
        with open(os.path.join(directory, "lexicon.tsv")) as fh:
            next(fh)
            for line in fh:
                term, n = line.rstrip("\n").split("\t")
                df[term] = int(n)
        vectors: dict[str, dict[str, float]] = {
            pid: {} for pid in meta.get("papers", [])}
        with open(os.path.join(directory, "postings.tsv")) as fh:
            next(fh)
            for line in fh:
                pid, term, w = line.rstrip("\n").split("\t")
                vectors.setdefault(pid, {})[term] = float(w)
        lexicon = Lexicon(meta["corpus_size"], df)
        return cls(meta["mode"], lexicon, vectors)


def read_corpus_ndjson(inp: TextIO) -> list[Document]:
    docs = []
    for line in inp:
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        docs.append(Document(obj["id"], obj.get("title", ""),
                             obj.get("abstract", ""), obj.get("fulltext")))
    return docs


def write_corpus_ndjson(docs: Iterable[Document], out: TextIO) -> None:
    for d in docs:
        record = {"id": d.paper_id, "title": d.title, "abstract": d.abstract}
        if d.fulltext is not None:
            record["fulltext"] = d.fulltext
        out.write(json.dumps(record) + "\n")
