"""Session cutting against a two-pass oracle, filters, concurrency."""

import io
import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paperrec.errors import UnorderedInput
from paperrec.logkit import AccessEvent, Kind
from paperrec.sessionizer import (Drop, Session, Sessionizer,
                                  SessionizerConfig, apply_filters,
                                  concurrency_series, filtered_sessions,
                                  read_sessions_ndjson, sessionize,
                                  write_sessions_ndjson)

P1, P2, P3 = "hep-th/0401001", "hep-th/0401002", "cond-mat/0401003"


def ev(ts, client="c1", kind=Kind.FULL_TEXT_DOWNLOAD, pid=P1):
    return AccessEvent(float(ts), client, kind, pid, "s")


def oracle_sessions(events, timeout):
    """Group by client, then split at gaps > timeout."""
    by_client = {}
    for e in events:
        by_client.setdefault(e.client_key, []).append(e)
    out = []
    for client, evs in by_client.items():
        run = [evs[0]]
        for e in evs[1:]:
            if e.timestamp - run[-1].timestamp > timeout:
                out.append(Session(client, tuple(run)))
                run = [e]
            else:
                run.append(e)
        out.append(Session(client, tuple(run)))
    return out


def as_sets(sessions):
    return sorted((s.client_key, tuple(e.timestamp for e in s.events))
                  for s in sessions)


class TestSessionize:
    def test_single_event_single_session(self):
        got = list(sessionize([ev(0)]))
        assert len(got) == 1 and len(got[0].events) == 1

    def test_gap_rule_boundary(self):
        cfg = SessionizerConfig(timeout=1800)
        within = list(sessionize([ev(0), ev(29 * 60)], cfg))
        assert len(within) == 1
        beyond = list(sessionize([ev(0), ev(31 * 60)], cfg))
        assert len(beyond) == 2

    def test_gap_exactly_timeout_stays_joined(self):
        got = list(sessionize([ev(0), ev(1800)], SessionizerConfig(timeout=1800)))
        assert len(got) == 1

    def test_interleaved_clients_split_apart(self):
        events = [ev(0, "a"), ev(10, "b"), ev(20, "a"), ev(30, "b")]
        got = list(sessionize(events))
        assert as_sets(got) == [("a", (0.0, 20.0)), ("b", (10.0, 30.0))]

    def test_unordered_input_raises(self):
        with pytest.raises(UnorderedInput):
            list(sessionize([ev(100), ev(50)]))

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 40), st.sampled_from("abc")),
                    max_size=30),
           st.integers(1, 15))
    def test_matches_group_and_split_oracle(self, raw, timeout):
        events = [ev(t, c) for t, c in sorted(raw, key=lambda p: p[0])]
        got = list(sessionize(events, SessionizerConfig(timeout=timeout)))
        assert as_sets(got) == as_sets(oracle_sessions(events, timeout))
        # every event lands in exactly one session
        assert sum(len(s.events) for s in got) == len(events)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 60), st.sampled_from("abcd")),
                    min_size=1, max_size=40))
    def test_session_count_non_increasing_in_timeout(self, raw):
        events = [ev(t, c) for t, c in sorted(raw, key=lambda p: p[0])]
        counts = [len(list(sessionize(events, SessionizerConfig(timeout=w))))
                  for w in (1, 5, 20, 61)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_peak_open_matches_brute_force(self):
        events = [ev(t, c) for t, c in
                  [(0, "a"), (5, "b"), (6, "c"), (40, "a"), (90, "d")]]
        timeout = 30
        szr = Sessionizer(SessionizerConfig(timeout=timeout))
        list(szr.run(events))
        last_seen, peak = {}, 0
        for e in events:
            for c in [c for c, t in last_seen.items()
                      if t < e.timestamp - timeout]:
                del last_seen[c]
            last_seen[e.client_key] = e.timestamp
            peak = max(peak, len(last_seen))
        assert szr.peak_open == peak


class TestFilters:
    def cfg(self, **kw):
        return SessionizerConfig(**kw)

    def test_consecutive_duplicates_collapse(self):
        s = Session("c1", (ev(0, kind=Kind.ABSTRACT_VIEW, pid=P1),
                           ev(1, kind=Kind.ABSTRACT_VIEW, pid=P1),
                           ev(2, pid=P2)))
        got = apply_filters(s, self.cfg())
        assert [(e.kind, e.paper_id) for e in got.events] == \
            [(Kind.ABSTRACT_VIEW, P1), (Kind.FULL_TEXT_DOWNLOAD, P2)]

    def test_non_consecutive_duplicates_survive_dedup(self):
        s = Session("c1", (ev(0, pid=P1), ev(1, pid=P2), ev(2, pid=P1)))
        got = apply_filters(s, self.cfg())
        assert len(got.events) == 3

    def test_single_countable_access_dropped(self):
        s = Session("c1", (ev(0, pid=P1),
                           ev(1, kind=Kind.SEARCH, pid=None)))
        assert apply_filters(s, self.cfg()) == Drop("too_small")

    def test_size_cap(self):
        events = tuple(ev(i, pid=(P1, P2, P3)[i % 3]) for i in range(500))
        got = apply_filters(Session("c1", events),
                            self.cfg(max_accesses=300, max_duration=1e9))
        assert got == Drop("too_large")

    def test_duration_cap(self):
        s = Session("c1", (ev(0, pid=P1), ev(17 * 3600, pid=P2)))
        assert apply_filters(s, self.cfg()) == Drop("too_long")

    def test_kind_selection_download_only(self):
        s = Session("c1", (ev(0, pid=P1), ev(1, kind=Kind.ABSTRACT_VIEW, pid=P2),
                           ev(2, pid=P2)))
        got = apply_filters(s, self.cfg(kinds=frozenset({Kind.FULL_TEXT_DOWNLOAD})))
        assert all(e.kind is Kind.FULL_TEXT_DOWNLOAD for e in got.events)
        assert len(got.events) == 2

    def test_listing_and_search_are_not_countable(self):
        s = Session("c1", (ev(0, kind=Kind.SEARCH, pid=None),
                           ev(1, kind=Kind.LISTING, pid=None),
                           ev(2, pid=P1)))
        assert apply_filters(s, self.cfg()) == Drop("too_small")

    def test_filtered_sessions_counts_drops(self):
        from collections import Counter
        drops = Counter()
        events = [ev(0, "a", pid=P1), ev(1, "a", pid=P2),
                  ev(0, "b", pid=P1)]
        kept = list(filtered_sessions(sorted(events, key=lambda e: e.timestamp),
                                      drops=drops))
        assert len(kept) == 1 and drops["too_small"] == 1


class TestConcurrency:
    def test_empty_input(self):
        assert concurrency_series([], 300) == []

    def brute_force(self, sessions, window, samples):
        out = []
        for t, _ in samples:
            n = sum(1 for s in sessions
                    if any(t - window < e.timestamp <= t for e in s.events))
            out.append((t, n))
        return out

    def test_three_overlapping_sessions_peak(self):
        sessions = [Session(c, (ev(100, c), ev(200, c)))
                    for c in ("a", "b", "c")]
        got = concurrency_series(sessions, 300)
        assert max(n for _, n in got) == 3
        assert got == self.brute_force(sessions, 300, got)

    def test_disjoint_sessions_never_overlap(self):
        sessions = [Session("a", (ev(0, "a"), ev(10, "a"))),
                    Session("b", (ev(20_000, "b"), ev(20_010, "b")))]
        got = concurrency_series(sessions, 300, step=100)
        assert set(n for _, n in got) <= {0, 1}
        assert 0 in {n for _, n in got}
        assert got == self.brute_force(sessions, 300, got)


class TestRoundTrip:
    def test_ndjson_round_trip(self):
        sessions = [Session("c1", (ev(0, pid=P1),
                                   ev(5, kind=Kind.ABSTRACT_VIEW, pid=P2))),
                    Session("c2", (ev(3, "c2", pid=P3), ev(9, "c2", pid=P1)))]
        buf = io.StringIO()
        write_sessions_ndjson(sessions, buf)
        buf.seek(0)
        back = list(read_sessions_ndjson(buf))
        assert [(s.client_key, s.start, s.end,
                 [(e.timestamp, e.kind, e.paper_id) for e in s.events])
                for s in back] == \
            [(s.client_key, s.start, s.end,
              [(e.timestamp, e.kind, e.paper_id) for e in s.events])
             for s in sessions]
