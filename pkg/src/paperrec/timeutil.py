"""Time helpers shared across modules: UTC month math, duration strings.

All pipeline timestamps are POSIX seconds (UTC). Calendar operations
(same-month tests, monthly evaluation grids) interpret them in UTC.
"""

from __future__ import annotations

import re
from datetime import datetime, timezone

DAY = 86400
HOUR = 3600
MINUTE = 60

_DURATION_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(s|m|min|h|d|w)?\s*$")
_UNIT_SECONDS = {
    None: 1.0,
    "s": 1.0,
    "m": 60.0,
    "min": 60.0,
    "h": 3600.0,
    "d": 86400.0,
    "w": 7 * 86400.0,
}


def parse_duration(text: str) -> float:
    """Parse ``"30m"``, ``"2d"``, ``"45"`` (seconds) ... into seconds."""
    m = _DURATION_RE.match(text)
    if not m:
        raise ValueError(f"unparseable duration: {text!r}")
    return float(m.group(1)) * _UNIT_SECONDS[m.group(2)]


def parse_date(text: str) -> float:
    """Parse an ISO date or datetime (or raw epoch seconds) to POSIX seconds.

    Naive datetimes are read as UTC.
    """
    text = text.strip()
    if re.fullmatch(r"-?\d+(\.\d+)?", text):
        return float(text)
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def format_date(ts: float) -> str:
    """POSIX seconds -> ISO-8601 UTC (date only when at midnight)."""
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    if (dt.hour, dt.minute, dt.second, dt.microsecond) == (0, 0, 0, 0):
        return dt.date().isoformat()
    return dt.replace(tzinfo=None).isoformat()


def year_month(ts: float) -> tuple[int, int]:
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    return dt.year, dt.month


def same_month(a: float, b: float) -> bool:
    """True iff both instants fall in the same UTC calendar month."""
    return year_month(a) == year_month(b)


def month_start(ts: float) -> float:
    """The first instant of the UTC calendar month containing ``ts``."""
    y, m = year_month(ts)
    return datetime(y, m, 1, tzinfo=timezone.utc).timestamp()


def shift_months(ts: float, months: int) -> float:
    """Shift a month-start timestamp by whole calendar months."""
    y, m = year_month(ts)
    total = (y * 12 + (m - 1)) + months
    return datetime(total // 12, total % 12 + 1, 1, tzinfo=timezone.utc).timestamp()


def months_between(earlier: float, later: float) -> int:
    """Whole calendar months from ``earlier``'s month to ``later``'s month."""
    ya, ma = year_month(earlier)
    yb, mb = year_month(later)
    return (yb * 12 + mb) - (ya * 12 + ma)


def utc_ts(year: int, month: int, day: int = 1, hour: int = 0,
           minute: int = 0, second: int = 0) -> float:
    return datetime(year, month, day, hour, minute, second,
                    tzinfo=timezone.utc).timestamp()
