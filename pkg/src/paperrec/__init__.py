"""Paper relatedness from web access logs, citations and text.

Pipeline modules, roughly in data-flow order:

- ``logkit``      raw log lines -> normalized, robot-filtered event stream
- ``sessionizer`` events -> per-client sessions (time-out heuristic)
- ``relmat``      sparse binary incidence matrices, normalization, top-N
- ``coaccess``    sessions -> co-download / co-view neighbor lists
- ``citegraph``   citation graph, co-citation/co-reference, PageRank, HITS
- ``textsim``     TF-IDF bag-of-words similarity baseline
- ``recommender`` ranking aggregation for sets of input papers
- ``evaluator``   recall / AP / MAP metrics and the three offline settings
- ``synthgen``    deterministic synthetic corpora for end-to-end checks
- ``service``     HTTP JSON API over precomputed stores
- ``cli``         umbrella command line entry point
"""

__version__ = "0.1.0"
