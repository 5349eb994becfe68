"""Paper metadata: publication and latest-update instants, TSV persistence."""

from __future__ import annotations

import dataclasses
from typing import Iterable, TextIO

from .timeutil import format_date, parse_date


@dataclasses.dataclass(frozen=True)
class PaperDates:
    paper_id: str
    published: float
    updated: float  # latest revision; equals `published` when never revised

    def __post_init__(self):
        if self.updated < self.published:
            raise ValueError(
                f"{self.paper_id}: update {self.updated} precedes "
                f"publication {self.published}")


HEADER = ("id", "pub_date", "update_date")


def write_papers_tsv(papers: Iterable[PaperDates], out: TextIO) -> None:
    out.write("\t".join(HEADER) + "\n")
    for p in papers:
        out.write(f"{p.paper_id}\t{format_date(p.published)}\t"
                  f"{format_date(p.updated)}\n")


def read_papers_tsv(inp: TextIO) -> dict[str, PaperDates]:
    papers: dict[str, PaperDates] = {}
    for lineno, line in enumerate(inp):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if lineno == 0 and parts[0] == HEADER[0]:
            continue
        if len(parts) != 3:
            raise ValueError(f"line {lineno + 1}: expected 3 columns")
        papers[parts[0]] = PaperDates(parts[0], parse_date(parts[1]),
                                      parse_date(parts[2]))
    return papers
