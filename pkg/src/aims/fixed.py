"""Exact scaled-integer decimals.

Every public quantity is an integer count of 1e-18 units.  Nothing in here
touches binary floating point; ``float`` inputs are rejected outright.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DecimalPrecisionError

SCALE = 18
ONE = 10**SCALE

_LITERAL = re.compile(r"^(-)?(\d+)(?:\.(\d+))?$")


@dataclass(frozen=True, order=True)
class FixedDecimal:
    """Signed decimal with exactly 18 fractional digits, stored as ``raw / 10**18``."""

    raw: int

    def __post_init__(self):
        if type(self.raw) is not int:
            raise TypeError(f"FixedDecimal raw value must be int, got {type(self.raw).__name__}")

    @classmethod
    def parse(cls, text: str) -> "FixedDecimal":
        """Parse a plain decimal literal such as ``"0.00000001"`` or ``"-12"``.

        Exponent notation, underscores and whitespace are refused, as is any
        literal carrying more than 18 fractional digits.
        """
        if not isinstance(text, str):
            raise TypeError(f"decimal literals must be strings, got {type(text).__name__}")
        m = _LITERAL.match(text)
        if m is None:
            raise ValueError(f"not a decimal literal: {text!r}")
        sign, whole, frac = m.groups()
        frac = frac or ""
        if len(frac) > SCALE:
            raise DecimalPrecisionError(
                f"{text!r} has {len(frac)} fractional digits; at most {SCALE} allowed"
            )
        raw = int(whole) * ONE + int(frac.ljust(SCALE, "0") or "0")
        return cls(-raw if sign else raw)

    @classmethod
    def from_int(cls, n: int) -> "FixedDecimal":
        return cls(n * ONE)

    def __str__(self) -> str:
        sign = "-" if self.raw < 0 else ""
        whole, frac = divmod(abs(self.raw), ONE)
        return f"{sign}{whole}.{frac:0{SCALE}d}"

    def __repr__(self) -> str:
        return f"FixedDecimal('{self}')"

    def __add__(self, other: "FixedDecimal") -> "FixedDecimal":
        if not isinstance(other, FixedDecimal):
            return NotImplemented
        return FixedDecimal(self.raw + other.raw)

    def __sub__(self, other: "FixedDecimal") -> "FixedDecimal":
        if not isinstance(other, FixedDecimal):
            return NotImplemented
        return FixedDecimal(self.raw - other.raw)

    def __neg__(self) -> "FixedDecimal":
        return FixedDecimal(-self.raw)

    def __bool__(self) -> bool:
        return self.raw != 0

    def mul_floor(self, other: "FixedDecimal") -> "FixedDecimal":
        """Product rounded toward negative infinity at scale 18."""
        return FixedDecimal(self.raw * other.raw // ONE)

    def div_floor(self, other: "FixedDecimal") -> "FixedDecimal":
        """Quotient rounded toward negative infinity at scale 18."""
        if other.raw == 0:
            raise ZeroDivisionError("FixedDecimal division by zero")
        return FixedDecimal(self.raw * ONE // other.raw)

    def is_negative(self) -> bool:
        return self.raw < 0


ZERO = FixedDecimal(0)


def fsum(values) -> FixedDecimal:
    return FixedDecimal(sum(v.raw for v in values))
