"""Deterministic generator of desk-scale synthetic corpora.

One seeded RNG drives everything: papers with topic labels and dates, a
mostly time-respecting citation graph, token texts with reference
sections, and raw access logs in two formats with planted co-access
structure, robot noise and publication-rush sessions.  The same seed
yields byte-identical files, so tests can pin oracle values against
generated data.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import random
import zlib
from datetime import datetime, timezone
from zoneinfo import ZoneInfo

from .citegraph import CitationGraph, write_edges_tsv
from .errors import InvalidConfig
from .logkit import client_key
from .papers import PaperDates, write_papers_tsv
from .textsim import DEFAULT_STOPWORDS, Document, write_corpus_ndjson
from .timeutil import DAY, year_month

# valid old-style archive prefixes, one per topic
ARCHIVES = ("hep-th", "hep-ph", "astro-ph", "cond-mat", "gr-qc",
            "quant-ph", "nucl-th", "math-ph", "hep-lat", "nucl-ex")

HUMAN_AGENTS = (
    "Mozilla/5.0 (X11; U; Linux i686) Gecko/20040113 Firefox/0.8",
    "Mozilla/4.0 (compatible; MSIE 6.0; Windows NT 5.1)",
    "Mozilla/5.0 (Macintosh; U; PPC Mac OS X) AppleWebKit/125 Safari/125",
    "Opera/7.54 (Windows NT 5.0; U)",
    "Mozilla/5.0 (X11; U; Linux x86_64) Konqueror/3.3",
)

ROBOT_AGENTS = (
    "Googlebot/2.1 (+http://www.google.com/bot.html)",
    "msnbot/1.0 (+http://search.msn.com/msnbot.htm)",
    "Wget/1.9.1",
    "NutchCVS/0.06-dev (Nutch)",
    "Scooter/3.3",
)

_ET = ZoneInfo("America/New_York")


@dataclasses.dataclass(frozen=True)
class SynthConfig:
    seed: int = 1
    n_papers: int = 150
    n_topics: int = 4
    span_begin: float = datetime(2003, 1, 1, tzinfo=timezone.utc).timestamp()
    span_end: float = datetime(2005, 6, 1, tzinfo=timezone.utc).timestamp()
    cite_min: int = 2
    cite_max: int = 6
    n_sessions: int = 800
    affinity: float = 0.8
    robot_fraction: float = 0.08
    rush_fraction: float = 0.1
    violation_fraction: float = 0.02
    pair_session_fraction: float = 0.35  # human sessions visiting a planted pair
    update_fraction: float = 0.25

    def __post_init__(self):
        if self.n_papers < 10 or self.n_sessions < 1:
            raise InvalidConfig("need at least 10 papers and 1 session")
        if not 1 <= self.n_topics <= len(ARCHIVES):
            raise InvalidConfig(f"1..{len(ARCHIVES)} topics supported")
        if self.span_begin >= self.span_end:
            raise InvalidConfig("empty timeline span")
        if self.span_end - self.span_begin < 180 * DAY:
            raise InvalidConfig("timeline must cover at least six months")
        if not 0 <= self.cite_min <= self.cite_max:
            raise InvalidConfig("bad citation count range")
        for name in ("affinity", "robot_fraction", "rush_fraction",
                     "violation_fraction", "pair_session_fraction",
                     "update_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidConfig(f"{name} must lie in [0, 1], got {v}")
        if self.robot_fraction + self.rush_fraction > 1.0:
            raise InvalidConfig("robot and rush fractions exceed 1")


@dataclasses.dataclass
class SynthResult:
    config: SynthConfig
    papers: dict[str, PaperDates]
    topics: dict[str, int]
    edges: list[tuple[str, str]]
    docs: list[Document]
    planted_pairs: list[tuple[str, str]]
    truth_sessions: list[dict]
    stats: dict
    paths: dict[str, str]


# ------------------------------------------------------------- words

_CONSONANTS = "bcdfglmnprstvz"
_VOWELS = "aeiou"


def _word(rng: random.Random) -> str:
    n = rng.randint(2, 4)
    w = "".join(rng.choice(_CONSONANTS) + rng.choice(_VOWELS)
                for _ in range(n))
    return w


def _vocabulary(rng: random.Random, size: int) -> list[str]:
    words: list[str] = []
    seen = set(DEFAULT_STOPWORDS)
    while len(words) < size:
        w = _word(rng)
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


# ------------------------------------------------------------ papers


def _make_papers(rng: random.Random, cfg: SynthConfig):
    """Ids, publication/update dates and topic labels, in time order."""
    times = sorted(rng.uniform(cfg.span_begin, cfg.span_end - DAY)
                   for _ in range(cfg.n_papers))
    serial: dict[tuple[str, int, int], int] = {}
    papers: dict[str, PaperDates] = {}
    topics: dict[str, int] = {}
    order: list[str] = []
    for t in times:
        t = float(int(t))
        topic = rng.randrange(cfg.n_topics)
        archive = ARCHIVES[topic]
        y, m = year_month(t)
        serial_key = (archive, y, m)
        serial[serial_key] = serial.get(serial_key, 0) + 1
        pid = f"{archive}/{y % 100:02d}{m:02d}{serial[serial_key]:03d}"
        updated = t
        if rng.random() < cfg.update_fraction:
            updated = float(int(t + rng.uniform(1, 120) * DAY))
        papers[pid] = PaperDates(pid, t, updated)
        topics[pid] = topic
        order.append(pid)
    return papers, topics, order


def _make_edges(rng: random.Random, cfg: SynthConfig,
                papers: dict[str, PaperDates], topics: dict[str, int],
                order: list[str]) -> tuple[list[tuple[str, str]], int]:
    """Citations prefer the same topic, recent targets and cited papers;
    a small fraction of papers gets one time-violating edge."""
    edges: list[tuple[str, str]] = []
    in_deg: dict[str, int] = {p: 0 for p in order}
    n_violations = 0
    for rank, citing in enumerate(order):
        older = order[:rank]
        if not older:
            continue
        k = min(len(older), rng.randint(cfg.cite_min, cfg.cite_max))
        if k == 0:
            continue
        t_citing = papers[citing].published
        weights = []
        for cand in older:
            age_days = (t_citing - papers[cand].published) / DAY
            w = (1.0 + in_deg[cand]) * math.pow(2.0, -age_days / 90.0)
            if topics[cand] == topics[citing]:
                w *= 4.0
            weights.append(w)
        chosen: set[str] = set()
        for _ in range(k * 4):
            if len(chosen) == k:
                break
            chosen.add(rng.choices(older, weights=weights, k=1)[0])
        if rng.random() < cfg.violation_fraction:
            future = order[rank + 1:]
            if future:
                bad = rng.choice(future)
                if bad not in chosen:
                    chosen.add(bad)
                    n_violations += 1
        for cited in sorted(chosen):
            edges.append((citing, cited))
            in_deg[cited] += 1
    return edges, n_violations


def _plant_pairs(cfg: SynthConfig, papers: dict[str, PaperDates],
                 topics: dict[str, int],
                 order: list[str]) -> list[tuple[str, str]]:
    """Adjacent same-topic papers become ground-truth related pairs.

    Pair members are kept a month and more than a week apart so the rush
    filter never suppresses their (later) joint accesses.
    """
    pairs: list[tuple[str, str]] = []
    by_topic: dict[int, list[str]] = {}
    for pid in order:
        by_topic.setdefault(topics[pid], []).append(pid)
    for topic in sorted(by_topic):
        chain = by_topic[topic]
        i = 0
        while i + 1 < len(chain):
            a, b = chain[i], chain[i + 1]
            ta, tb = papers[a].published, papers[b].published
            if year_month(ta) != year_month(tb) and abs(ta - tb) > 8 * DAY:
                pairs.append((a, b))
                i += 2
            else:
                i += 1
    return pairs


# --------------------------------------------------------------- text


def _make_docs(rng: random.Random, cfg: SynthConfig, order: list[str],
               topics: dict[str, int],
               refs: dict[str, list[str]]) -> list[Document]:
    shared = _vocabulary(rng, 80)
    topic_vocab = [_vocabulary(rng, 60) for _ in range(cfg.n_topics)]

    def draw(topic: int, n: int) -> list[str]:
        out = []
        for _ in range(n):
            pool = topic_vocab[topic] if rng.random() < 0.7 else shared
            out.append(rng.choice(pool))
        return out

    docs = []
    for pid in order:
        topic = topics[pid]
        title = " ".join(draw(topic, rng.randint(5, 8)))
        abstract = " ".join(draw(topic, rng.randint(30, 45)))
        body = " ".join(draw(topic, rng.randint(80, 140)))
        lines = [f"[{i}] A. Author, {' '.join(draw(topic, 3))}, "
                 f"arXiv:{rid}." for i, rid in enumerate(refs.get(pid, []), 1)]
        fulltext = f"{abstract}\n{body}\nReferences\n" + "\n".join(lines)
        docs.append(Document(pid, title, abstract, fulltext))
    return docs


# ------------------------------------------------------------ sessions


def _published_before(order: list[str], papers: dict[str, PaperDates],
                      t: float) -> list[str]:
    # order is publication-sorted, so a prefix scan suffices
    out = []
    for pid in order:
        if papers[pid].published >= t:
            break
        out.append(pid)
    return out


def _make_sessions(rng: random.Random, cfg: SynthConfig,
                   papers: dict[str, PaperDates], topics: dict[str, int],
                   order: list[str],
                   planted: list[tuple[str, str]]) -> list[dict]:
    """Plan sessions as dicts: category, address, agent, events."""
    by_topic: dict[int, list[str]] = {}
    for pid in order:
        by_topic.setdefault(topics[pid], []).append(pid)
    # months eligible for rush sessions: >= 2 papers in the first half
    rush_months: dict[tuple[int, int], list[str]] = {}
    for pid in order:
        t = papers[pid].published
        y, m = year_month(t)
        if datetime.fromtimestamp(t, tz=timezone.utc).day <= 14:
            rush_months.setdefault((y, m), []).append(pid)
    rush_months = {k: v for k, v in rush_months.items() if len(v) >= 2}

    t_lo = cfg.span_begin + 45 * DAY
    sessions = []
    for idx in range(cfg.n_sessions):
        roll = rng.random()
        if roll < cfg.robot_fraction:
            category = "robot"
        elif roll < cfg.robot_fraction + cfg.rush_fraction and rush_months:
            category = "rush"
        else:
            category = "human"
        t_sess = float(int(rng.uniform(t_lo, cfg.span_end)))
        topic = rng.randrange(cfg.n_topics)
        chosen: list[str] = []
        force_download: set[str] = set()

        if category == "robot":
            avail = _published_before(order, papers, t_sess)
            if len(avail) >= 2:
                chosen = rng.sample(avail, k=min(len(avail),
                                                 rng.randint(2, 8)))
        elif category == "rush":
            y, m = rng.choice(sorted(rush_months))
            fresh = rush_months[(y, m)]
            # day 20+ keeps the two-day lag anchor inside the same month
            day = rng.randint(20, 27)
            t_sess = datetime(y, m, day, rng.randint(0, 23),
                              rng.randint(0, 59),
                              tzinfo=timezone.utc).timestamp()
            chosen = rng.sample(fresh, k=min(len(fresh), rng.randint(2, 4)))
            force_download.update(chosen)
        else:
            pair = None
            if planted and rng.random() < cfg.pair_session_fraction:
                ready = [p for p in planted
                         if papers[p[0]].published + 40 * DAY < t_sess
                         and papers[p[1]].published + 40 * DAY < t_sess]
                if ready:
                    pair = rng.choice(ready)
            if pair is not None:
                topic = topics[pair[0]]
                chosen = list(pair)
                force_download.update(pair)
                extra_n = rng.randint(0, 1)
            else:
                extra_n = rng.randint(1, 4)
            avail_topic = [p for p in by_topic.get(topic, ())
                           if papers[p].published < t_sess]
            avail_all = _published_before(order, papers, t_sess)
            for _ in range(extra_n):
                pool = avail_topic if rng.random() < cfg.affinity \
                    else avail_all
                if pool:
                    cand = rng.choice(pool)
                    if cand not in chosen:
                        chosen.append(cand)
        agent = rng.choice(ROBOT_AGENTS if category == "robot"
                           else HUMAN_AGENTS)
        address = f"10.{idx // 65536 % 256}.{idx // 256 % 256}.{idx % 256}"
        events = []
        t = t_sess
        if rng.random() < 0.15:
            events.append((t, "listing", None,
                           f"/list/{ARCHIVES[topic]}/0401"))
            t += rng.randint(5, 120)
        for pid in chosen:
            # ensure single-paper human sessions still carry two events
            want_view = rng.random() < 0.6 or \
                (len(chosen) == 1 and pid not in force_download)
            want_download = pid in force_download or rng.random() < 0.85 \
                or (len(chosen) == 1 and not want_view)
            if want_view:
                events.append((t, "view", pid, f"/abs/{pid}"))
                t += rng.randint(5, 180)
            if want_download:
                suffix = ""
                r = rng.random()
                if r < 0.1:
                    suffix = f"v{rng.randint(1, 3)}"
                elif r < 0.2:
                    suffix = ".pdf"
                events.append((t, "download", pid, f"/pdf/{pid}{suffix}"))
                t += rng.randint(5, 180)
        if not events:
            continue
        sessions.append({"category": category, "address": address,
                         "agent": agent, "topic": topic,
                         "start": events[0][0], "events": events})
    sessions.sort(key=lambda s: s["start"])
    return sessions


# ----------------------------------------------------------- emission


def _et_round_trips(ts: float) -> bool:
    """True when the fold=0 Eastern-time parse recovers this instant."""
    local = datetime.fromtimestamp(ts, tz=_ET).replace(tzinfo=None)
    back = local.replace(tzinfo=_ET, fold=0)
    return back.timestamp() == ts


def _combined_line(ts: float, address: str, agent: str, path: str,
                   size: int) -> str:
    stamp = datetime.fromtimestamp(ts, tz=timezone.utc).strftime(
        "%d/%b/%Y:%H:%M:%S +0000")
    return (f'{address} - - [{stamp}] "GET {path} HTTP/1.0" 200 {size} '
            f'"-" "{agent}"')

def _tsvlog_line(ts: float, address: str, agent: str, path: str) -> str:
    local = datetime.fromtimestamp(ts, tz=_ET).strftime("%Y-%m-%d %H:%M:%S")
    return f"{local}\t{address}\t{agent}\t{path}\t200"


def _scatter(rng: random.Random, lines: list[tuple[float, str]],
             max_skew: float = 60.0) -> list[str]:
    """Swap some close-in-time neighbors: bounded disorder for the reader."""
    out = list(lines)
    i = 0
    while i + 1 < len(out):
        if out[i + 1][0] - out[i][0] <= max_skew and rng.random() < 0.15:
            out[i], out[i + 1] = out[i + 1], out[i]
            i += 2
        else:
            i += 1
    return [line for _, line in out]


def generate(cfg: SynthConfig, out_dir: str) -> SynthResult:
    rng = random.Random(cfg.seed)
    papers, topics, order = _make_papers(rng, cfg)
    edges, n_violations = _make_edges(rng, cfg, papers, topics, order)
    refs: dict[str, list[str]] = {}
    for citing, cited in edges:
        refs.setdefault(citing, []).append(cited)
    planted = _plant_pairs(cfg, papers, topics, order)
    docs = _make_docs(rng, cfg, order, topics, refs)
    sessions = _make_sessions(rng, cfg, papers, topics, order, planted)

    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, fname) for name, fname in (
        ("papers", "papers.tsv"), ("topics", "topics.tsv"),
        ("edges", "edges.tsv"), ("corpus", "corpus.ndjson"),
        ("planted", "planted.tsv"), ("log_main", "access-main.log"),
        ("log_mirror", "access-mirror.tsv"),
        ("truth", "sessions-truth.ndjson"), ("stats", "stats.json"))}

    with open(paths["papers"], "w") as fh:
        write_papers_tsv((papers[p] for p in sorted(papers)), fh)
    with open(paths["topics"], "w") as fh:
        fh.write("id\ttopic\n")
        for pid in sorted(topics):
            fh.write(f"{pid}\t{topics[pid]}\n")
    graph = CitationGraph(order, edges, papers)
    with open(paths["edges"], "w") as fh:
        write_edges_tsv(graph, fh)
    with open(paths["corpus"], "w") as fh:
        write_corpus_ndjson(docs, fh)
    with open(paths["planted"], "w") as fh:
        fh.write("paper_a\tpaper_b\n")
        for a, b in planted:
            fh.write(f"{a}\t{b}\n")

    main_lines: list[tuple[float, str]] = []
    mirror_lines: list[tuple[float, str]] = []
    truth = []
    n_robot_lines = 0
    for sess in sessions:
        # whole sessions go to one file; anything ambiguous in Eastern
        # time stays in the offset-carrying combined log
        to_mirror = zlib.crc32(sess["address"].encode()) % 3 == 0 and \
            all(_et_round_trips(t) for t, _, _, _ in sess["events"])
        for t, kind, pid, path in sess["events"]:
            if to_mirror:
                mirror_lines.append(
                    (t, _tsvlog_line(t, sess["address"], sess["agent"],
                                     path)))
            else:
                main_lines.append(
                    (t, _combined_line(t, sess["address"], sess["agent"],
                                       path, rng.randint(900, 300000))))
            if sess["category"] == "robot":
                n_robot_lines += 1
        truth.append({
            "category": sess["category"], "topic": sess["topic"],
            "start": sess["start"],
            "client_key": client_key(sess["address"], sess["agent"]),
            "source": "tsvlog" if to_mirror else "combined",
            "events": [{"t": t, "kind": kind, "paper_id": pid}
                       for t, kind, pid, _ in sess["events"]],
        })
    main_lines.sort(key=lambda e: e[0])
    mirror_lines.sort(key=lambda e: e[0])
    with open(paths["log_main"], "w") as fh:
        fh.write("\n".join(_scatter(rng, main_lines)) + "\n")
    with open(paths["log_mirror"], "w") as fh:
        fh.write("\n".join(_scatter(rng, mirror_lines)) + "\n")
    with open(paths["truth"], "w") as fh:
        for row in truth:
            fh.write(json.dumps(row, sort_keys=True) + "\n")

    stats = {
        "n_papers": len(papers),
        "n_edges": len(edges),
        "n_violating_papers": n_violations,
        "n_papers_with_refs": len(refs),
        "n_planted_pairs": len(planted),
        "n_sessions": {c: sum(1 for s in sessions if s["category"] == c)
                       for c in ("human", "rush", "robot")},
        "n_robot_lines": n_robot_lines,
        "n_human_lines": sum(len(s["events"]) for s in sessions
                             if s["category"] != "robot"),
    }
    with open(paths["stats"], "w") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return SynthResult(cfg, papers, topics, edges, docs, planted,
                       truth, stats, paths)
