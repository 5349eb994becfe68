"""Paper identifier grammar and free-text id extraction.

Two identifier shapes are accepted:

- old style ``<archive>[.<subclass>]/<7 digits>``, e.g. ``hep-th/0602276``
  or ``math.GT/0309136``
- new style ``<4 digits>.<4-5 digits>``, e.g. ``0704.0001``

The synthetic corpora only emit old-style ids; new-style ids are accepted
everywhere for forward compatibility.
"""

from __future__ import annotations

import re

_OLD_STYLE = r"[a-z][a-z-]*(?:\.[A-Za-z]{2})?/\d{7}"
_NEW_STYLE = r"\d{4}\.\d{4,5}"

_FULL_RE = re.compile(rf"^(?:{_OLD_STYLE}|{_NEW_STYLE})$")
# denies letters/digits/slashes/dots at the boundary so that e.g. version
# suffixes ("hep-th/0602276v2") or longer numbers do not yield a partial hit
_SCAN_RE = re.compile(rf"(?<![\w/.])({_OLD_STYLE}|{_NEW_STYLE})(?![\w/])")


def is_valid_id(s: str) -> bool:
    """True iff ``s`` is exactly one paper identifier."""
    return bool(_FULL_RE.match(s))


def extract_ids(text: str) -> list[str]:
    """Scan free text (pasted BibTeX, reference lists, ...) for paper ids.

    Returns ids in order of first occurrence, deduplicated.
    """
    seen: set[str] = set()
    out: list[str] = []
    for m in _SCAN_RE.finditer(text):
        pid = m.group(1)
        if pid not in seen:
            seen.add(pid)
            out.append(pid)
    return out
