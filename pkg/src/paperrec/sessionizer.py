"""Group the ordered event stream into per-client sessions.

A session is a run of same-client events where consecutive gaps stay
within the timeout (30 minutes by default).  Open sessions live in an
LRU structure keyed by client, so one linear pass suffices and memory
is bounded by the number of concurrently active clients.

After cutting, a configurable filter chain cleans each session; sessions
that end up with fewer than 2 paper accesses carry no co-access signal
and are dropped.
"""

from __future__ import annotations

import dataclasses
import json
from collections import Counter, OrderedDict
from typing import Iterable, Iterator, TextIO

from .errors import UnorderedInput
from .ids import is_valid_id
from .logkit import COUNTABLE_KINDS, KIND_BY_LABEL, AccessEvent, Kind


@dataclasses.dataclass(frozen=True)
class Session:
    client_key: str
    events: tuple[AccessEvent, ...]

    def __post_init__(self):
        if not self.events:
            raise ValueError("empty session")
        if any(e.client_key != self.client_key for e in self.events):
            raise ValueError("mixed clients in one session")
        if any(a.timestamp > b.timestamp
               for a, b in zip(self.events, self.events[1:])):
            raise ValueError("events not time-ordered")

    @property
    def start(self) -> float:
        return self.events[0].timestamp

    @property
    def end(self) -> float:
        return self.events[-1].timestamp

    def paper_ids(self) -> list[str]:
        """Distinct accessed papers, in first-access order."""
        seen: dict[str, None] = {}
        for e in self.events:
            if e.paper_id is not None:
                seen.setdefault(e.paper_id)
        return list(seen)


@dataclasses.dataclass(frozen=True)
class Drop:
    reason: str  # "too_small", "too_large" or "too_long"


DEFAULT_FILTERS = ("dedup", "id_validity", "caps", "kind", "min_size")


@dataclasses.dataclass(frozen=True)
class SessionizerConfig:
    timeout: float = 1800.0
    filters: tuple[str, ...] = DEFAULT_FILTERS
    kinds: frozenset[Kind] = COUNTABLE_KINDS
    max_duration: float = 16 * 3600.0
    max_accesses: int = 300

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        unknown = set(self.filters) - set(_FILTER_STEPS)
        if unknown:
            raise ValueError(f"unknown filter steps: {sorted(unknown)}")


class Sessionizer:
    """Single-pass session cutter with an LRU of open sessions.

    `peak_open` records the high-water mark of concurrently open
    sessions, which tests compare against a brute-force oracle.
    """

    def __init__(self, config: SessionizerConfig | None = None):
        self.config = config or SessionizerConfig()
        self.peak_open = 0

    def run(self, events: Iterable[AccessEvent]) -> Iterator[Session]:
        timeout = self.config.timeout
        open_sessions: OrderedDict[str, list[AccessEvent]] = OrderedDict()
        last_t = float("-inf")
        for ev in events:
            if ev.timestamp < last_t:
                raise UnorderedInput(
                    f"timestamp regressed from {last_t} to {ev.timestamp}")
            last_t = ev.timestamp
            # expire least-recently-active clients first; stop at the
            # first one still inside the timeout window
            while open_sessions:
                key, evs = next(iter(open_sessions.items()))
                if evs[-1].timestamp >= ev.timestamp - timeout:
                    break
                del open_sessions[key]
                yield Session(key, tuple(evs))
            bucket = open_sessions.get(ev.client_key)
            if bucket is None:
                open_sessions[ev.client_key] = [ev]
            else:
                bucket.append(ev)
                open_sessions.move_to_end(ev.client_key)
            self.peak_open = max(self.peak_open, len(open_sessions))
        for key, evs in open_sessions.items():
            yield Session(key, tuple(evs))


def sessionize(events: Iterable[AccessEvent],
               config: SessionizerConfig | None = None) -> Iterator[Session]:
    return Sessionizer(config).run(events)


def _step_dedup(events, config):
    out: list[AccessEvent] = []
    for e in events:
        if out and (e.kind, e.paper_id) == (out[-1].kind, out[-1].paper_id):
            continue
        out.append(e)
    return out


def _step_id_validity(events, config):
    return [e for e in events
            if e.paper_id is not None and is_valid_id(e.paper_id)]


def _step_caps(events, config):
    if events and events[-1].timestamp - events[0].timestamp > config.max_duration:
        return Drop("too_long")
    if len(events) > config.max_accesses:
        return Drop("too_large")
    return events


def _step_kind(events, config):
    return [e for e in events if e.kind in config.kinds]


def _step_min_size(events, config):
    if len(events) < 2:
        return Drop("too_small")
    return events


_FILTER_STEPS = {
    "dedup": _step_dedup,
    "id_validity": _step_id_validity,
    "caps": _step_caps,
    "kind": _step_kind,
    "min_size": _step_min_size,
}


def apply_filters(session: Session,
                  config: SessionizerConfig) -> Session | Drop:
    events: list[AccessEvent] = list(session.events)
    for name in config.filters:
        result = _FILTER_STEPS[name](events, config)
        if isinstance(result, Drop):
            return result
        events = result
    if not events:
        return Drop("too_small")
    return Session(session.client_key, tuple(events))


def filtered_sessions(events: Iterable[AccessEvent],
                      config: SessionizerConfig | None = None,
                      drops: Counter | None = None) -> Iterator[Session]:
    config = config or SessionizerConfig()
    for session in sessionize(events, config):
        result = apply_filters(session, config)
        if isinstance(result, Drop):
            if drops is not None:
                drops[result.reason] += 1
        else:
            yield result


def concurrency_series(sessions: Iterable[Session], window: float,
                       step: float | None = None) -> list[tuple[float, int]]:
    """Sessions active per trailing window, sampled on a regular grid.

    A session counts at sample time t if it has at least one event in
    (t - window, t].
    """
    times: list[tuple[float, int]] = []
    for idx, s in enumerate(sessions):
        times.extend((e.timestamp, idx) for e in s.events)
    if not times:
        return []
    times.sort()
    step = window if step is None else step
    first, last = times[0][0], times[-1][0]
    samples: list[tuple[float, int]] = []
    in_window: Counter = Counter()
    lo = hi = 0
    t = first
    while True:
        while hi < len(times) and times[hi][0] <= t:
            in_window[times[hi][1]] += 1
            hi += 1
        while lo < hi and times[lo][0] <= t - window:
            in_window[times[lo][1]] -= 1
            if in_window[times[lo][1]] == 0:
                del in_window[times[lo][1]]
            lo += 1
        samples.append((t, len(in_window)))
        if t >= last:
            break
        t += step
    return samples


def write_sessions_ndjson(sessions: Iterable[Session], out: TextIO) -> None:
    for s in sessions:
        record = {
            "client_key": s.client_key,
            "start": s.start,
            "end": s.end,
            "accesses": [{"t": e.timestamp, "kind": e.kind.value,
                          "paper_id": e.paper_id} for e in s.events],
        }
        out.write(json.dumps(record) + "\n")


def read_sessions_ndjson(inp: TextIO) -> Iterator[Session]:
    for line in inp:
        line = line.strip()
        if not line:
            continue
        record = json.loads(line)
        events = tuple(
            AccessEvent(a["t"], record["client_key"],
                        KIND_BY_LABEL[a["kind"]], a.get("paper_id"), "-")
            for a in record["accesses"])
        yield Session(record["client_key"], events)
