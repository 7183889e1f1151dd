"""UTC timestamps as integer seconds since the Unix epoch."""

from __future__ import annotations

from datetime import date, datetime, timezone

Timestamp = int

DAY = 86_400
MIN_TIMESTAMP = 0  # 1970-01-01
MAX_TIMESTAMP = 7_258_118_400  # 2200-01-01

_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


def parse_timestamp(text: str) -> Timestamp:
    """Accept ``YYYY-MM-DDTHH:MM:SSZ`` or a bare ``YYYY-MM-DD`` (midnight UTC)."""
    if not isinstance(text, str):
        raise TypeError(f"timestamps must be strings, got {type(text).__name__}")
    try:
        if len(text) == 10:
            dt = datetime.combine(date.fromisoformat(text), datetime.min.time(), timezone.utc)
        else:
            dt = datetime.strptime(text, _FORMAT).replace(tzinfo=timezone.utc)
    except ValueError as exc:
        raise ValueError(f"bad timestamp {text!r}: {exc}") from None
    ts = (dt - datetime(1970, 1, 1, tzinfo=timezone.utc)).days * DAY + dt.hour * 3600 + dt.minute * 60 + dt.second
    check_range(ts)
    return ts


def format_timestamp(ts: Timestamp) -> str:
    check_range(ts)
    days, secs = divmod(ts, DAY)
    d = date.fromordinal(date(1970, 1, 1).toordinal() + days)
    h, rem = divmod(secs, 3600)
    m, s = divmod(rem, 60)
    return f"{d.isoformat()}T{h:02d}:{m:02d}:{s:02d}Z"


def check_range(ts: Timestamp) -> None:
    if type(ts) is not int:
        raise TypeError(f"timestamp must be int seconds, got {type(ts).__name__}")
    if not MIN_TIMESTAMP <= ts < MAX_TIMESTAMP:
        raise ValueError(f"timestamp {ts} outside supported range 1970..2200")
