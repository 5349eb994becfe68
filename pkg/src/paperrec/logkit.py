"""Raw access-log ingestion: parse, classify agents, merge per-source streams.

Log lines from any configured format are normalized into AccessEvent
values with UTC timestamps and a hashed client key.  Lines that cannot
become events turn into Skip values carrying a reason; ingestion never
aborts on bad input.

Formats:

- ``canonical``  TSV: timestamp_utc_seconds, client_key, kind,
  paper_id ("-" if absent), source.  Also the output format.
- ``ndjson``     same fields as JSON objects, one per line.
- ``combined``   Apache combined log with an explicit UTC offset in the
  timestamp field.
- ``tsvlog``     legacy tab-separated layout with naive local times
  interpreted in a named zone (DST aware).
"""

from __future__ import annotations

import dataclasses
import enum
import gzip
import hashlib
import heapq
import json
import math
import re
from collections import Counter
from datetime import datetime, timezone
from typing import Callable, Iterable, Iterator, TextIO
from zoneinfo import ZoneInfo

from .errors import DisorderExceeded
from .ids import is_valid_id

MAX_LINE_BYTES = 16384  # longer lines are junk or abuse; skip without parsing


class Kind(enum.Enum):
    ABSTRACT_VIEW = "view"
    FULL_TEXT_DOWNLOAD = "download"
    LISTING = "listing"
    SEARCH = "search"
    OTHER = "other"


KIND_BY_LABEL = {k.value: k for k in Kind}

# kinds that identify a paper and therefore count toward co-access
COUNTABLE_KINDS = frozenset({Kind.ABSTRACT_VIEW, Kind.FULL_TEXT_DOWNLOAD})


@dataclasses.dataclass(frozen=True)
class AccessEvent:
    timestamp: float
    client_key: str
    kind: Kind
    paper_id: str | None
    source: str

    def __post_init__(self):
        if not math.isfinite(self.timestamp):
            raise ValueError("non-finite timestamp")
        if self.kind in COUNTABLE_KINDS and self.paper_id is None:
            raise ValueError(f"{self.kind.value} event without paper id")
        if self.paper_id is not None and not is_valid_id(self.paper_id):
            raise ValueError(f"invalid paper id {self.paper_id!r}")


@dataclasses.dataclass(frozen=True)
class Skip:
    reason: str  # "malformed", "non_paper" or "robot"


@dataclasses.dataclass(frozen=True)
class AgentClassifier:
    """Substring lists deciding Robot vs Human from the user-agent."""
    robot_patterns: tuple[str, ...]
    automation_patterns: tuple[str, ...] = ()

    def is_robot(self, user_agent: str) -> bool:
        agent = user_agent.lower()
        return any(p in agent for p in self.robot_patterns) or \
            any(p in agent for p in self.automation_patterns)


# Seed list in the style of the usual crawler catalogues.  Configuration,
# not ground truth: deployments append their own site-specific automation.
DEFAULT_ROBOT_PATTERNS = (
    "googlebot", "msnbot", "bingbot", "slurp", "teoma", "baiduspider",
    "yandex", "crawler", "spider", "robot", "scooter", "archiver",
    "ia_archiver", "heritrix", "nutch", "htdig", "wget", "curl",
    "httrack", "teleport", "webcopier", "webzip", "libwww-perl",
    "python-urllib", "python-requests", "scrapy", "mj12bot", "semrush",
    "facebookexternalhit",
)


def default_classifier() -> AgentClassifier:
    return AgentClassifier(DEFAULT_ROBOT_PATTERNS)


def classify_agent(user_agent: str, classifier: AgentClassifier) -> str:
    return "Robot" if classifier.is_robot(user_agent) else "Human"


def client_key(address: str, user_agent: str) -> str:
    """Opaque identity token; raw addresses never leave this function."""
    material = f"{address}\x1f{user_agent}".encode("utf-8", "replace")
    return hashlib.sha256(material).hexdigest()


_VERSION_SUFFIX = re.compile(r"v\d+$")

_STATIC_EXTENSIONS = (".gif", ".png", ".jpg", ".ico", ".css", ".js",
                      ".txt", ".xml")


def classify_path(path: str) -> tuple[Kind, str | None] | Skip:
    """Map a request path to an access kind plus optional paper id."""
    path = path.split("?", 1)[0].split("#", 1)[0]
    if not path.startswith("/"):
        return Skip("malformed")
    if path.lower().endswith(_STATIC_EXTENSIONS):
        return Skip("non_paper")
    parts = path[1:].split("/", 1)
    head, rest = parts[0], parts[1] if len(parts) > 1 else ""
    if head in ("abs", "pdf", "ps", "dvi"):
        pid = _VERSION_SUFFIX.sub("", rest).removesuffix(".pdf")
        if not is_valid_id(pid):
            return Skip("malformed")
        kind = Kind.ABSTRACT_VIEW if head == "abs" else Kind.FULL_TEXT_DOWNLOAD
        return kind, pid
    if head == "list":
        return Kind.LISTING, None
    if head in ("find", "search"):
        return Kind.SEARCH, None
    if head in ("", "index.html", "help", "new", "year"):
        return Kind.OTHER, None
    return Skip("non_paper")


@dataclasses.dataclass(frozen=True)
class LogFormatSpec:
    name: str
    parse: Callable[[str, "LogFormatSpec", AgentClassifier | None],
                    AccessEvent | Skip]
    tz: str | None = None  # named zone for naive local timestamps


def _parse_canonical(line: str, spec: LogFormatSpec,
                     classifier: AgentClassifier | None) -> AccessEvent | Skip:
    parts = line.split("\t")
    if len(parts) != 5:
        return Skip("malformed")
    ts, key, kind_label, pid, source = parts
    if kind_label not in KIND_BY_LABEL:
        return Skip("malformed")
    try:
        return AccessEvent(float(ts), key, KIND_BY_LABEL[kind_label],
                           None if pid == "-" else pid, source)
    except ValueError:
        return Skip("malformed")


def _parse_ndjson(line: str, spec: LogFormatSpec,
                  classifier: AgentClassifier | None) -> AccessEvent | Skip:
    try:
        obj = json.loads(line)
        return AccessEvent(float(obj["timestamp_utc_seconds"]),
                           obj["client_key"], KIND_BY_LABEL[obj["kind"]],
                           obj.get("paper_id"), obj["source"])
    except (ValueError, KeyError, TypeError):
        return Skip("malformed")


_COMBINED_RE = re.compile(
    r'^(?P<addr>\S+) \S+ \S+ \[(?P<time>[^\]]+)\] '
    r'"(?P<method>[A-Z]+) (?P<path>\S+)[^"]*" (?P<status>\d{3}) \S+'
    r'(?: "[^"]*" "(?P<agent>[^"]*)")?\s*$')


def _parse_combined(line: str, spec: LogFormatSpec,
                    classifier: AgentClassifier | None) -> AccessEvent | Skip:
    m = _COMBINED_RE.match(line)
    if m is None:
        return Skip("malformed")
    agent = m.group("agent") or ""
    if classifier is not None and classifier.is_robot(agent):
        return Skip("robot")
    if not 200 <= int(m.group("status")) < 400:
        return Skip("non_paper")
    try:
        dt = datetime.strptime(m.group("time"), "%d/%b/%Y:%H:%M:%S %z")
    except ValueError:
        return Skip("malformed")
    classified = classify_path(m.group("path"))
    if isinstance(classified, Skip):
        return classified
    kind, pid = classified
    return AccessEvent(dt.timestamp(), client_key(m.group("addr"), agent),
                       kind, pid, spec.name)


def _parse_tsvlog(line: str, spec: LogFormatSpec,
                  classifier: AgentClassifier | None) -> AccessEvent | Skip:
    parts = line.split("\t")
    if len(parts) != 5:
        return Skip("malformed")
    local, addr, agent, path, status = parts
    if classifier is not None and classifier.is_robot(agent):
        return Skip("robot")
    if not status.isdigit() or not 200 <= int(status) < 400:
        return Skip("non_paper")
    try:
        # fold=0: ambiguous DST-repeated local times resolve to the
        # earlier UTC instant
        dt = datetime.strptime(local, "%Y-%m-%d %H:%M:%S").replace(
            tzinfo=ZoneInfo(spec.tz or "UTC"), fold=0)
    except ValueError:
        return Skip("malformed")
    classified = classify_path(path)
    if isinstance(classified, Skip):
        return classified
    kind, pid = classified
    return AccessEvent(dt.timestamp(), client_key(addr, agent), kind, pid,
                       spec.name)


FORMATS: dict[str, LogFormatSpec] = {
    "canonical": LogFormatSpec("canonical", _parse_canonical),
    "ndjson": LogFormatSpec("ndjson", _parse_ndjson),
    "combined": LogFormatSpec("combined", _parse_combined),
    "tsvlog": LogFormatSpec("tsvlog", _parse_tsvlog,
                            tz="America/New_York"),
}


def parse_line(line: str, spec: LogFormatSpec,
               classifier: AgentClassifier | None = None) -> AccessEvent | Skip:
    line = line.rstrip("\r\n")
    if not line:
        return Skip("malformed")
    if len(line) > MAX_LINE_BYTES:
        return Skip("malformed")
    return spec.parse(line, spec, classifier)


def ingest_lines(lines: Iterable[str], spec: LogFormatSpec,
                 classifier: AgentClassifier | None = None,
                 skips: Counter | None = None) -> Iterator[AccessEvent]:
    """Parse a line stream, counting skipped lines by reason."""
    for line in lines:
        parsed = parse_line(line, spec, classifier)
        if isinstance(parsed, Skip):
            if skips is not None:
                skips[parsed.reason] += 1
        else:
            yield parsed


def _bounded_reorder(stream: Iterable[AccessEvent],
                     bound: float) -> Iterator[tuple[float, int, AccessEvent]]:
    """Repair local disorder up to `bound` seconds with a small heap."""
    heap: list[tuple[float, int, AccessEvent]] = []
    max_seen = -math.inf
    for seq, ev in enumerate(stream):
        if ev.timestamp < max_seen - bound:
            raise DisorderExceeded(
                f"event at {ev.timestamp} arrived {max_seen - ev.timestamp:.0f}s "
                f"after later data; disorder bound is {bound:.0f}s "
                f"(check the format's timezone rule)")
        max_seen = max(max_seen, ev.timestamp)
        heapq.heappush(heap, (ev.timestamp, seq, ev))
        while heap and heap[0][0] <= max_seen - bound:
            yield heapq.heappop(heap)
    while heap:
        yield heapq.heappop(heap)


def merge_streams(streams: Iterable[Iterable[AccessEvent]],
                  disorder_bound: float = 3600.0) -> Iterator[AccessEvent]:
    """Merge per-source streams into one globally time-ordered stream.

    Each input stream must be ordered up to `disorder_bound` seconds of
    local disorder (one source per stream).  Ties are stable: equal
    timestamps order by source label, then input order.
    """
    reordered = [_bounded_reorder(s, disorder_bound) for s in streams]
    merged = heapq.merge(
        *reordered, key=lambda item: (item[0], item[2].source, item[1]))
    for _, _, ev in merged:
        yield ev


def write_events_tsv(events: Iterable[AccessEvent], out: TextIO) -> None:
    for ev in events:
        ts = f"{ev.timestamp:.6f}".rstrip("0").rstrip(".")
        out.write(f"{ts}\t{ev.client_key}\t{ev.kind.value}\t"
                  f"{ev.paper_id or '-'}\t{ev.source}\n")


def read_events(inp: TextIO, fmt: str = "canonical") -> Iterator[AccessEvent]:
    skips: Counter = Counter()
    yield from ingest_lines(inp, FORMATS[fmt], None, skips)
    if skips:
        raise ValueError(f"normalized event file contains bad lines: {skips}")


def open_maybe_gzip(path: str) -> TextIO:
    if path.endswith(".gz"):
        return gzip.open(path, "rt", encoding="utf-8", errors="replace")
    return open(path, "r", encoding="utf-8", errors="replace")
