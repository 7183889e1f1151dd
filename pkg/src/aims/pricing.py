"""Price-function engine: token price as a pure, increasing function of time.

The exponential family prices a token at ``p0 * b ** n`` where ``n`` is the
elapsed time in 365-day years.  Time is discretized to whole days, so the
price is a right-continuous step function that moves at each UTC day
boundary and freezes once the horizon is reached.

Evaluation is exact integer arithmetic.  The daily ratio ``b ** (1/365)`` is
an integer 365th root at 30 fractional digits (floor), powers of it are
taken by square-and-multiply with round-half-up after every product, whole
years use ``b`` itself exactly, and the final price is floored to 18 digits.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache

from .errors import DecimalPrecisionError, SchemaError, TimeBeforeStart
from .fixed import ONE, FixedDecimal
from .timestamps import DAY, Timestamp, format_timestamp, parse_timestamp

INTERNAL_SCALE = 30
_ONE30 = 10**INTERNAL_SCALE
_HALF30 = _ONE30 // 2

YEAR_DAYS = 365
# b must clear 1 by at least 1e-12
_MIN_BASE_EXCESS = 10**6


@dataclass(frozen=True)
class PriceFunction:
    """Exponential price schedule ``initial_price * base ** (days / 365)``."""

    initial_price: FixedDecimal
    base: FixedDecimal
    start: Timestamp
    end: Timestamp
    day_length: int = DAY
    year_length_days: int = YEAR_DAYS

    def __post_init__(self):
        if self.initial_price.raw <= 0:
            raise ValueError("initial price must be positive")
        if self.base.raw - ONE < _MIN_BASE_EXCESS:
            raise ValueError("base must exceed 1 by at least 1e-12")
        if not self.start < self.end:
            raise ValueError("start must precede end")
        if self.day_length <= 0 or self.year_length_days <= 0:
            raise ValueError("day and year lengths must be positive")

    def day_index(self, t: Timestamp) -> int:
        if t < self.start:
            raise TimeBeforeStart(t, self.start)
        return (min(t, self.end) - self.start) // self.day_length

    @property
    def horizon_days(self) -> int:
        return self.day_index(self.end)

    def price_on_day(self, d: int) -> FixedDecimal:
        return FixedDecimal(_exp_price_raw(self, d))

    def price_at(self, t: Timestamp) -> FixedDecimal:
        return self.price_on_day(self.day_index(t))

    def to_config(self) -> dict:
        return {
            "type": "exp",
            "initial_price": str(self.initial_price),
            "base": str(self.base),
            "start": format_timestamp(self.start),
            "end": format_timestamp(self.end),
        }


@dataclass(frozen=True)
class LinearPriceFunction:
    """Piecewise-linear price schedule through strictly increasing knots.

    Used to exercise the ledger against a schedule whose values are easy to
    check by hand.  Same day discretization and post-horizon freeze as the
    exponential family.
    """

    points: tuple[tuple[Timestamp, FixedDecimal], ...]
    day_length: int = DAY

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError("need at least two knots")
        for (t0, p0), (t1, p1) in zip(self.points, self.points[1:]):
            if not (t0 < t1 and p0 < p1):
                raise ValueError("knots must be strictly increasing in time and price")
        if self.points[0][1].raw <= 0:
            raise ValueError("prices must be positive")

    @property
    def start(self) -> Timestamp:
        return self.points[0][0]

    @property
    def end(self) -> Timestamp:
        return self.points[-1][0]

    @property
    def initial_price(self) -> FixedDecimal:
        return self.points[0][1]

    def day_index(self, t: Timestamp) -> int:
        if t < self.start:
            raise TimeBeforeStart(t, self.start)
        return (min(t, self.end) - self.start) // self.day_length

    @property
    def horizon_days(self) -> int:
        return self.day_index(self.end)

    def price_on_day(self, d: int) -> FixedDecimal:
        t = self.start + d * self.day_length
        times = [p[0] for p in self.points]
        i = min(bisect_right(times, t), len(times) - 1)
        (ta, pa), (tb, pb) = self.points[i - 1], self.points[i]
        return FixedDecimal(pa.raw + (pb.raw - pa.raw) * (t - ta) // (tb - ta))

    def price_at(self, t: Timestamp) -> FixedDecimal:
        return self.price_on_day(self.day_index(t))

    def to_config(self) -> dict:
        return {
            "type": "piecewise_linear",
            "points": [[format_timestamp(t), str(p)] for t, p in self.points],
        }


AnyPriceFunction = PriceFunction | LinearPriceFunction


def make_wish_function() -> PriceFunction:
    return PriceFunction(
        initial_price=FixedDecimal.parse("0.00000001"),
        base=FixedDecimal.parse("6.4428653"),
        start=parse_timestamp("2023-03-06T00:00:00Z"),
        end=parse_timestamp("2033-01-21T00:00:00Z"),
    )


def price_at(pf: AnyPriceFunction, t: Timestamp) -> FixedDecimal:
    """Token price at ``t``; raises TimeBeforeStart before the schedule opens."""
    return pf.price_at(t)


def daily_ratio(pf: PriceFunction) -> FixedDecimal:
    """``base ** (1/year_length_days)`` rounded to 18 digits (floor).

    The engine itself uses the 30-digit value from :func:`daily_ratio_raw30`.
    """
    return FixedDecimal(daily_ratio_raw30(pf.base, pf.year_length_days) // 10 ** (INTERNAL_SCALE - 18))


@lru_cache(maxsize=64)
def daily_ratio_raw30(base: FixedDecimal, year_days: int = YEAR_DAYS) -> int:
    """floor(base ** (1/year_days) * 10**30) as an integer."""
    # root of base * 10**(30*k) is the ratio scaled by 10**30
    n = base.raw * 10 ** (INTERNAL_SCALE * year_days - 18)
    return iroot(n, year_days)


def iroot(n: int, k: int) -> int:
    """Largest integer x with x**k <= n (integer Newton iteration)."""
    if n < 0 or k < 1:
        raise ValueError("iroot needs n >= 0 and k >= 1")
    if n < 2 or k == 1:
        return n
    x = 1 << -(-n.bit_length() // k)  # overestimate
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


def _mul30(a: int, b: int) -> int:
    return (a * b + _HALF30) // _ONE30


def pow30(r: int, e: int) -> int:
    """``r ** e`` at 30 fractional digits, square-and-multiply, half-up per product."""
    result = _ONE30
    while e:
        if e & 1:
            result = _mul30(result, r)
        e >>= 1
        if e:
            r = _mul30(r, r)
    return result


@lru_cache(maxsize=8192)
def _exp_price_raw(pf: PriceFunction, d: int) -> int:
    years, rem = divmod(d, pf.year_length_days)
    frac = pow30(daily_ratio_raw30(pf.base, pf.year_length_days), rem)
    num = pf.initial_price.raw * pf.base.raw**years * frac
    den = ONE**years * _ONE30
    return num // den


# -- configuration documents --------------------------------------------------


def _decimal_field(doc: dict, key: str, pointer: str) -> FixedDecimal:
    if key not in doc:
        raise SchemaError(f"{pointer}/{key}", "missing")
    val = doc[key]
    if not isinstance(val, str):
        raise SchemaError(f"{pointer}/{key}", "decimals must be JSON strings")
    try:
        return FixedDecimal.parse(val)
    except DecimalPrecisionError:
        raise
    except ValueError as exc:
        raise SchemaError(f"{pointer}/{key}", str(exc)) from None


def _time_field(doc: dict, key: str, pointer: str) -> Timestamp:
    if key not in doc:
        raise SchemaError(f"{pointer}/{key}", "missing")
    try:
        return parse_timestamp(doc[key])
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{pointer}/{key}", str(exc)) from None


def price_function_from_config(doc, pointer: str = "") -> AnyPriceFunction:
    """Build a price function from a parsed JSON config (or the string ``"wish"``)."""
    if doc == "wish":
        return make_wish_function()
    if not isinstance(doc, dict):
        raise SchemaError(pointer, "price function config must be an object or \"wish\"")
    kind = doc.get("type")
    try:
        if kind == "exp":
            return PriceFunction(
                initial_price=_decimal_field(doc, "initial_price", pointer),
                base=_decimal_field(doc, "base", pointer),
                start=_time_field(doc, "start", pointer),
                end=_time_field(doc, "end", pointer),
            )
        if kind == "piecewise_linear":
            pts = doc.get("points")
            if not isinstance(pts, list):
                raise SchemaError(f"{pointer}/points", "expected a list of [timestamp, price] pairs")
            parsed = []
            for i, pair in enumerate(pts):
                if not (isinstance(pair, list) and len(pair) == 2):
                    raise SchemaError(f"{pointer}/points/{i}", "expected [timestamp, price]")
                parsed.append((
                    _time_field({"t": pair[0]}, "t", f"{pointer}/points/{i}"),
                    _decimal_field({"p": pair[1]}, "p", f"{pointer}/points/{i}"),
                ))
            return LinearPriceFunction(points=tuple(parsed))
    except (SchemaError, DecimalPrecisionError):
        raise
    except ValueError as exc:
        raise SchemaError(pointer, str(exc)) from None
    raise SchemaError(f"{pointer}/type", f"unknown price function type {kind!r}")


def load_price_function(path) -> AnyPriceFunction:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError("", f"invalid JSON: {exc}") from None
    return price_function_from_config(doc)
