"""Command-line umbrella for the whole pipeline.

Subcommands mirror the pipeline stages: ingest raw logs, sessionize,
count co-accesses, analyze the citation graph, build text indexes,
recommend, evaluate, generate synthetic corpora, and serve HTTP.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from collections import Counter

from . import citegraph, logkit, sessionizer, synthgen
from .coaccess import CoAccessConfig, count_coaccesses
from .errors import NoInputsResolved, PaperRecError
from .evaluator import (EvalConfig, EvalCorpus, EvalWindow, setting1,
                        setting2, setting3, write_eval_tsv)
from .papers import read_papers_tsv
from .recommender import AGGREGATIONS
from .relmat import write_neighbors_tsv
from .service import RecStore, create_app, recommend_items
from .sessionizer import SessionizerConfig, filtered_sessions, \
    read_sessions_ndjson, write_sessions_ndjson
from .textsim import TextIndex, read_corpus_ndjson
from .timeutil import parse_date, parse_duration


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def cmd_ingest(args) -> int:
    classifier = None if args.no_robot_filter else logkit.default_classifier()
    skips: Counter = Counter()
    handles = [logkit.open_maybe_gzip(p) for p in args.inputs]
    try:
        streams = [logkit.ingest_lines(fh, logkit.FORMATS[args.format],
                                       classifier, skips) for fh in handles]
        merged = list(logkit.merge_streams(streams, args.merge_bound))
        with open(args.out, "w") as out:
            logkit.write_events_tsv(merged, out)
        n = len(merged)
    finally:
        for fh in handles:
            fh.close()
    skipped = " ".join(f"{k}={v}" for k, v in sorted(skips.items()))
    print(f"events={n} {skipped}".rstrip())
    return 0


def cmd_sessionize(args) -> int:
    config = SessionizerConfig(
        timeout=parse_duration(args.timeout),
        filters=tuple(args.filters.split(",")) if args.filters
        else SessionizerConfig().filters,
        max_duration=parse_duration(args.max_duration),
        max_accesses=args.max_accesses)
    drops: Counter = Counter()
    n = 0
    with open(args.events) as inp, open(args.out, "w") as out:
        for session in filtered_sessions(logkit.read_events(inp), config,
                                         drops):
            write_sessions_ndjson([session], out)
            n += 1
    dropped = " ".join(f"{k}={v}" for k, v in sorted(drops.items()))
    print(f"sessions={n} {dropped}".rstrip())
    return 0


def cmd_coaccess(args) -> int:
    with open(args.papers) as fh:
        papers = read_papers_tsv(fh)
    config = CoAccessConfig(kind=args.kind,
                            t_lag=parse_duration(args.t_lag),
                            rush_filter=not args.no_rush_filter,
                            normalization=args.normalization,
                            topn=args.topn)
    with open(args.sessions) as fh:
        sessions = list(read_sessions_ndjson(fh))
    result = count_coaccesses(sessions, papers, config,
                              memory_budget=args.budget)
    with open(args.out, "w") as out:
        write_neighbors_tsv(
            (result.neighbors[p] for p in sorted(result.neighbors)), out)
    print(f"papers={len(result.neighbors)} passes={result.passes} "
          f"unknown_accesses={result.unknown_accesses}")
    return 0


def cmd_citegraph(args) -> int:
    with open(args.papers) as fh:
        dates = read_papers_tsv(fh)
    with open(args.edges) as fh:
        graph = citegraph.load_graph(fh, dates)
    os.makedirs(args.out_dir, exist_ok=True)
    norm = None if args.normalization == "none" else args.normalization
    for name, lists in (
            ("co-citation", [graph.co_cited_topn(p, args.topn, norm)
                             for p in graph.paper_ids]),
            ("co-reference", [graph.co_ref_topn(p, args.topn, norm)
                              for p in graph.paper_ids])):
        with open(os.path.join(args.out_dir, f"{name}.tsv"), "w") as out:
            write_neighbors_tsv(lists, out)
    scores = citegraph.importance_scores(graph)
    with open(os.path.join(args.out_dir, "importance.tsv"), "w") as out:
        out.write("id\tpagerank\thub\tauthority\tin_degree\tout_degree\n")
        for row in scores:
            out.write(f"{row.paper_id}\t{row.pagerank:.12g}\t{row.hub:.12g}"
                      f"\t{row.authority:.12g}\t{row.in_degree}\t"
                      f"{row.out_degree}\n")
    report = citegraph.dag_violation_report(graph)
    print(f"papers={len(graph.paper_ids)} edges={graph.n_edges} "
          f"time_violations={report.fraction:.4f}")
    return 0


def cmd_textsim(args) -> int:
    with open(args.corpus) as fh:
        docs = read_corpus_ndjson(fh)
    index = TextIndex.build(docs, args.mode)
    index.save(args.out_dir)
    print(f"documents={len(index.vectors)} "
          f"terms={len(index.lexicon.doc_frequency)} mode={args.mode}")
    return 0


def _load_store(args) -> RecStore:
    store_dir = args.store or os.environ.get("PAPERREC_STORE")
    if not store_dir:
        raise FileNotFoundError(
            "no store: pass --store or set PAPERREC_STORE")
    return RecStore.load(store_dir)


def cmd_recommend(args) -> int:
    store = _load_store(args)
    measure = args.measure or store.default_measure
    if measure not in store.measures:
        return _fail(f"measure {measure!r} not in store "
                     f"(have: {', '.join(sorted(store.measures))})")
    try:
        ranking, unknown = recommend_items(store, args.ids, measure,
                                           args.aggregation, args.n)
    except NoInputsResolved:
        return _fail("none of the ids has neighbor data in this measure")
    if unknown:
        print(f"ignored unknown ids: {' '.join(unknown)}", file=sys.stderr)
    print("rank\tid\tscore")
    for i, (pid, score) in enumerate(ranking.entries, start=1):
        print(f"{i}\t{pid}\t{score:.12g}")
    return 0


def cmd_evaluate(args) -> int:
    with open(args.papers) as fh:
        papers = read_papers_tsv(fh)
    with open(args.edges) as fh:
        edges = citegraph.read_edges_tsv(fh)
    sessions = []
    if args.sessions:
        with open(args.sessions) as fh:
            sessions = list(read_sessions_ndjson(fh))
    docs = []
    if args.corpus:
        with open(args.corpus) as fh:
            docs = read_corpus_ndjson(fh)
    corpus = EvalCorpus(papers, edges, sessions, docs)
    window = EvalWindow(
        parse_date(args.eval_begin), parse_date(args.eval_end),
        parse_date(args.gt_begin) if args.gt_begin else None,
        parse_date(args.gt_end) if args.gt_end else None)
    config = EvalConfig(
        measures=tuple(args.measures.split(",")),
        aggregation=args.aggregation, stored_n=args.stored_n,
        ranks=tuple(int(r) for r in args.ranks.split(",")),
        n_max=args.n_max, age_months=args.age_months,
        rush_filter=not args.no_rush_filter)
    run = {1: setting1, 2: setting2, 3: setting3}[args.setting]
    result = run(corpus, window, config)
    with open(args.out, "w") as out:
        write_eval_tsv(result, out)
    print(f"setting={args.setting} rows={len(result.rows)} out={args.out}")
    return 0


def cmd_synth(args) -> int:
    values = {}
    if args.config:
        with open(args.config) as fh:
            values.update(json.load(fh))
    flag_map = {"seed": args.seed, "n_papers": args.papers,
                "n_topics": args.topics, "n_sessions": args.sessions,
                "affinity": args.affinity, "robot_fraction": args.robots,
                "rush_fraction": args.rush,
                "violation_fraction": args.violations}
    values.update({k: v for k, v in flag_map.items() if v is not None})
    if args.span_begin:
        values["span_begin"] = parse_date(args.span_begin)
    if args.span_end:
        values["span_end"] = parse_date(args.span_end)
    result = synthgen.generate(synthgen.SynthConfig(**values), args.out)
    print(f"papers={result.stats['n_papers']} "
          f"edges={result.stats['n_edges']} "
          f"sessions={sum(result.stats['n_sessions'].values())} "
          f"out={args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    store = _load_store(args)
    app = create_app(store)
    print(f"serving {len(store.papers)} papers, "
          f"measures: {', '.join(sorted(store.measures))}")
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paperrec",
        description="relatedness measures and recommendations for papers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse raw logs into canonical events")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--format", required=True, choices=sorted(logkit.FORMATS))
    p.add_argument("--out", required=True)
    p.add_argument("--no-robot-filter", action="store_true")
    p.add_argument("--merge-bound", type=float, default=3600.0,
                   help="seconds of per-file disorder tolerated")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("sessionize", help="group events into sessions")
    p.add_argument("--events", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--timeout", default="30m")
    p.add_argument("--filters", default=None,
                   help="comma list, default dedup,id_validity,caps,kind,min_size")
    p.add_argument("--max-duration", default="16h")
    p.add_argument("--max-accesses", type=int, default=300)
    p.set_defaults(func=cmd_sessionize)

    p = sub.add_parser("coaccess", help="per-paper co-access neighbor lists")
    p.add_argument("--sessions", required=True)
    p.add_argument("--papers", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", default="download", choices=("download", "view"))
    p.add_argument("--topn", type=int, default=20)
    p.add_argument("--normalization", default="none",
                   choices=("none", "row", "column"))
    p.add_argument("--no-rush-filter", action="store_true")
    p.add_argument("--t-lag", default="2d")
    p.add_argument("--budget", type=int, default=None,
                   help="max in-memory pair cells; forces multiple passes")
    p.set_defaults(func=cmd_coaccess)

    p = sub.add_parser("citegraph", help="citation measures and importance")
    p.add_argument("--edges", required=True)
    p.add_argument("--papers", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--topn", type=int, default=20)
    p.add_argument("--normalization", default="none",
                   choices=("none", "row", "column"))
    p.set_defaults(func=cmd_citegraph)

    p = sub.add_parser("textsim", help="build a TF-IDF text index")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--mode", default="meta", choices=("meta", "fulltext"))
    p.set_defaults(func=cmd_textsim)

    p = sub.add_parser("recommend", help="recommend from a store")
    p.add_argument("--store", default=None)
    p.add_argument("--ids", nargs="+", required=True)
    p.add_argument("--measure", default=None)
    p.add_argument("--aggregation", default="sum", choices=AGGREGATIONS)
    p.add_argument("--n", type=int, default=20)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("evaluate", help="run one evaluation setting")
    p.add_argument("--setting", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--papers", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--sessions", default=None)
    p.add_argument("--corpus", default=None)
    p.add_argument("--measures", default="co-citation")
    p.add_argument("--aggregation", default="sum", choices=AGGREGATIONS)
    p.add_argument("--eval-begin", required=True)
    p.add_argument("--eval-end", required=True)
    p.add_argument("--gt-begin", default=None)
    p.add_argument("--gt-end", default=None)
    p.add_argument("--ranks", default="1,3,5,10,20,50,100")
    p.add_argument("--n-max", type=int, default=100)
    p.add_argument("--age-months", type=int, default=24)
    p.add_argument("--stored-n", type=int, default=300)
    p.add_argument("--no-rush-filter", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None, help="JSON file of field values")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--papers", type=int, default=None)
    p.add_argument("--topics", type=int, default=None)
    p.add_argument("--sessions", type=int, default=None)
    p.add_argument("--affinity", type=float, default=None)
    p.add_argument("--robots", type=float, default=None)
    p.add_argument("--rush", type=float, default=None)
    p.add_argument("--violations", type=float, default=None)
    p.add_argument("--span-begin", default=None)
    p.add_argument("--span-end", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="serve the HTTP JSON API")
    p.add_argument("--store", default=None,
                   help="store directory (or set PAPERREC_STORE)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PaperRecError, FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
