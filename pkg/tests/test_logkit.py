"""Log parsing, robot filtering and the bounded merge."""

import hashlib
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paperrec.errors import DisorderExceeded
from paperrec.logkit import (FORMATS, AccessEvent, AgentClassifier, Kind,
                             Skip, classify_agent, classify_path, client_key,
                             default_classifier, ingest_lines, merge_streams,
                             parse_line)
from paperrec.timeutil import utc_ts

CANONICAL = FORMATS["canonical"]


def ev(ts, source="s", key="k", kind=Kind.OTHER, pid=None):
    return AccessEvent(ts, key, kind, pid, source)


class TestParseCanonical:
    def test_download_line(self):
        """Hand-parsed oracle for the documented TSV layout."""
        line = "1075467600\tdeadbeef\tdownload\thep-th/0401001\tmain"
        got = parse_line(line, CANONICAL)
        assert got == AccessEvent(1075467600.0, "deadbeef",
                                  Kind.FULL_TEXT_DOWNLOAD, "hep-th/0401001",
                                  "main")

    def test_absent_paper_id(self):
        got = parse_line("100\tk\tsearch\t-\tmain", CANONICAL)
        assert got.paper_id is None and got.kind is Kind.SEARCH

    def test_empty_line_is_malformed(self):
        assert parse_line("", CANONICAL) == Skip("malformed")

    def test_megabyte_line_is_malformed(self):
        assert parse_line("A" * 1_000_000, CANONICAL) == Skip("malformed")

    def test_bad_id_is_malformed(self):
        line = "100\tk\tdownload\tnot-an-id\tmain"
        assert parse_line(line, CANONICAL) == Skip("malformed")

    def test_events_plus_skips_cover_all_lines(self):
        lines = ["100\tk\tview\thep-th/0401001\tm", "", "garbage",
                 "101\tk\tother\t-\tm", "x\ty"]
        skips = Counter()
        events = list(ingest_lines(lines, CANONICAL, skips=skips))
        assert len(events) + sum(skips.values()) == len(lines)
        assert len(events) == 2


class TestParseCombined:
    LINE = ('198.51.100.7 - - [15/Jan/2004:08:30:15 -0500] '
            '"GET /pdf/hep-th/0401001 HTTP/1.1" 200 123456 "-" "Mozilla/4.0"')

    def test_offset_converted_to_utc(self):
        got = parse_line(self.LINE, FORMATS["combined"])
        assert got.timestamp == utc_ts(2004, 1, 15, 13, 30, 15)
        assert got.kind is Kind.FULL_TEXT_DOWNLOAD
        assert got.paper_id == "hep-th/0401001"

    def test_client_key_hides_address(self):
        got = parse_line(self.LINE, FORMATS["combined"])
        assert got.client_key == hashlib.sha256(
            b"198.51.100.7\x1fMozilla/4.0").hexdigest()
        assert "198.51" not in got.client_key

    def test_robot_agent_skipped(self):
        line = self.LINE.replace("Mozilla/4.0", "Googlebot/2.1")
        got = parse_line(line, FORMATS["combined"], default_classifier())
        assert got == Skip("robot")

    def test_error_status_skipped(self):
        line = self.LINE.replace(" 200 ", " 404 ")
        assert parse_line(line, FORMATS["combined"]) == Skip("non_paper")


class TestParseTsvlog:
    def test_named_zone_conversion(self):
        line = "2004-01-15 08:30:15\t198.51.100.7\tMozilla/4.0\t/abs/hep-th/0401001\t200"
        got = parse_line(line, FORMATS["tsvlog"])
        # America/New_York is UTC-5 in January
        assert got.timestamp == utc_ts(2004, 1, 15, 13, 30, 15)
        assert got.kind is Kind.ABSTRACT_VIEW

    def test_dst_fold_takes_earlier_instant(self):
        # 2004-10-31 01:30 happened twice in America/New_York; the earlier
        # occurrence is still EDT (UTC-4)
        line = "2004-10-31 01:30:00\tip\tUA\t/abs/hep-th/0401001\t200"
        got = parse_line(line, FORMATS["tsvlog"])
        assert got.timestamp == utc_ts(2004, 10, 31, 5, 30, 0)


class TestClassify:
    def test_googlebot_is_robot(self):
        assert classify_agent("Googlebot/2.1 (+http://www.google.com/bot.html)",
                              default_classifier()) == "Robot"

    def test_empty_agent_empty_list_is_human(self):
        assert classify_agent("", AgentClassifier(())) == "Human"

    def test_fixture_agents_match_linear_scan_oracle(self):
        patterns = ("crawler", "fetch")
        clf = AgentClassifier(patterns)
        agents = ["NiceBrowser/1.0", "MegaCrawler 3", "prefetcher",
                  "Mozilla/5.0", "FETCHmaster"]
        for agent in agents:
            expect = "Robot" if any(p in agent.lower() for p in patterns) \
                else "Human"
            assert classify_agent(agent, clf) == expect

    def test_path_classification(self):
        assert classify_path("/abs/hep-th/0401001") == \
            (Kind.ABSTRACT_VIEW, "hep-th/0401001")
        assert classify_path("/pdf/hep-th/0401001v2") == \
            (Kind.FULL_TEXT_DOWNLOAD, "hep-th/0401001")
        assert classify_path("/list/hep-th/0401") == (Kind.LISTING, None)
        assert classify_path("/find?query=gravity") == (Kind.SEARCH, None)
        assert classify_path("/logo.png") == Skip("non_paper")
        assert classify_path("/abs/bogus") == Skip("malformed")


class TestMergeStreams:
    def test_two_sorted_streams_match_full_sort(self):
        a = [ev(1, "a"), ev(4, "a"), ev(9, "a")]
        b = [ev(2, "b"), ev(3, "b"), ev(10, "b")]
        got = list(merge_streams([a, b]))
        assert got == sorted(a + b, key=lambda e: e.timestamp)

    def test_single_empty_stream(self):
        assert list(merge_streams([[]])) == []

    def test_swap_within_bound_is_repaired(self):
        stream = [ev(100, "a"), ev(50, "a")]
        got = list(merge_streams([stream], disorder_bound=60))
        assert [e.timestamp for e in got] == [50, 100]

    def test_disorder_at_exact_bound_is_allowed(self):
        stream = [ev(100, "a"), ev(40, "a")]
        got = list(merge_streams([stream], disorder_bound=60))
        assert [e.timestamp for e in got] == [40, 100]

    def test_disorder_beyond_bound_raises(self):
        stream = [ev(100, "a"), ev(30, "a")]
        with pytest.raises(DisorderExceeded):
            list(merge_streams([stream], disorder_bound=60))

    def test_equal_timestamps_stable_by_source_then_input_order(self):
        a = [ev(5, "a", key="a1"), ev(5, "a", key="a2")]
        b = [ev(5, "b", key="b1")]
        got = list(merge_streams([b, a]))
        assert [e.client_key for e in got] == ["a1", "a2", "b1"]

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.lists(st.integers(0, 50), max_size=12), min_size=1,
                    max_size=4))
    def test_merge_equals_full_sort_oracle(self, stamp_lists):
        """With a bound covering the whole range, any disorder is legal."""
        streams = [[ev(float(t), f"s{i}") for t in stamps]
                   for i, stamps in enumerate(stamp_lists)]
        got = list(merge_streams(streams, disorder_bound=51))
        oracle = sorted(
            (e for s in streams for e in s),
            key=lambda e: (e.timestamp, e.source,
                           streams[int(e.source[1:])].index(e)))
        assert [e.timestamp for e in got] == [e.timestamp for e in oracle]
        assert sorted(id(e) for e in got) == \
            sorted(id(e) for s in streams for e in s)
