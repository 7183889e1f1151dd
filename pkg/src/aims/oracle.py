"""Slow, independent reference arithmetic for checking the engine.

Nothing here calls into the pricing, ledger or analytics code paths; only
the plain data types (FixedDecimal, Event and friends) are shared.  Prices
come from mpmath at 60 significant digits, everything else is exact
``fractions.Fraction`` arithmetic.

:func:`oracle_valuation` replays a trace under the contract's quantization
rules (price floored to 1e-18, minted coins floored to 1e-18), which it
recomputes on its own, but keeps every valuation sum and every cost-basis
split exact.  That makes engine-vs-oracle differences pure rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

from .errors import MalformedLog, TimeBeforeStart
from .fixed import FixedDecimal
from .ledger import Burn, Event, Mint, ParticipantId, Transfer
from .pricing import LinearPriceFunction, PriceFunction

DIGITS = 60
_Q = 10**18


def to_fraction(x: FixedDecimal) -> Fraction:
    return Fraction(x.raw, _Q)


def _mpf_to_fraction(x) -> Fraction:
    man, exp = x.man_exp
    return Fraction(int(man) * 2**exp) if exp >= 0 else Fraction(int(man), 2**-exp)


@lru_cache(maxsize=16)
def oracle_daily_ratio(base: FixedDecimal, year_days: int = 365):
    """``base ** (1/year_days)`` as an mpmath float at 60 digits."""
    with mpmath.workdps(DIGITS):
        return mpmath.root(mpmath.mpf(base.raw) / _Q, year_days)


def _day(pf, t: int) -> int:
    if t < pf.start:
        raise TimeBeforeStart(t, pf.start)
    return (min(t, pf.end) - pf.start) // pf.day_length


@lru_cache(maxsize=16384)
def _oracle_exp_price(pf: PriceFunction, d: int) -> Fraction:
    # b ** (d/365) = b ** years * r ** rem; p0 and b stay exact rationals
    years, rem = divmod(d, pf.year_length_days)
    with mpmath.workdps(DIGITS):
        frac = oracle_daily_ratio(pf.base, pf.year_length_days) ** rem
    return to_fraction(pf.initial_price) * to_fraction(pf.base) ** years * _mpf_to_fraction(frac)


def oracle_price(pf, t: int) -> Fraction:
    """Price at ``t`` with no fixed-point truncation (``p0 * r**d`` for the exponential family)."""
    d = _day(pf, t)
    if isinstance(pf, PriceFunction):
        return _oracle_exp_price(pf, d)
    if isinstance(pf, LinearPriceFunction):
        x = pf.start + d * pf.day_length
        for (ta, pa), (tb, pb) in zip(pf.points, pf.points[1:]):
            if ta <= x <= tb:
                return to_fraction(pa) + (to_fraction(pb) - to_fraction(pa)) * Fraction(x - ta, tb - ta)
    raise TypeError(f"unsupported price function {type(pf).__name__}")


def contract_price(pf, t: int) -> Fraction:
    """Oracle price floored to 1e-18, the resolution the contract quotes."""
    p = oracle_price(pf, t)
    return Fraction(math.floor(p * _Q), _Q)


@dataclass
class _Lot:
    origin: int
    piece: int
    owner: ParticipantId
    price: Fraction
    deposit: Fraction
    coins: Fraction
    spent: bool = False


@dataclass(frozen=True)
class OracleValuation:
    omega: Fraction
    lambda_: Fraction
    xi: Fraction
    remaining_deposits: Fraction
    lots: int


def oracle_lots(events, pf) -> list[_Lot]:
    """Brute-force FIFO lot walk over a trace."""
    lots: list[_Lot] = []
    last_at = None
    for i, ev in enumerate(events):
        if not isinstance(ev, Event) or ev.seq != i:
            raise MalformedLog(i, "seq out of place")
        if last_at is not None and ev.at < last_at:
            raise MalformedLog(i, "timestamp regression")
        last_at = ev.at
        k = ev.kind
        if isinstance(k, Mint):
            price = contract_price(pf, ev.at)
            coins = Fraction(math.floor(to_fraction(k.deposit) / price * _Q), _Q)
            lots.append(_Lot(i, i, k.owner, price, to_fraction(k.deposit), coins))
            continue
        owner = k.owner if isinstance(k, Burn) else k.sender
        need = to_fraction(k.coins)
        held = sum((lot.coins for lot in lots if lot.owner == owner), Fraction(0))
        if need > held:
            raise MalformedLog(i, "spends more than the holder owns")
        moved: list[_Lot] = []
        for lot in lots:
            if need == 0:
                break
            if lot.owner != owner or lot.coins == 0:
                continue
            take = min(need, lot.coins)
            share = lot.deposit * take / lot.coins
            moved.append(_Lot(lot.origin, i, owner, lot.price, share, take))
            lot.deposit -= share
            lot.coins -= take
            lot.spent = lot.coins == 0
            need -= take
        lots = [lot for lot in lots if not lot.spent]
        if isinstance(k, Transfer):
            for m in moved:
                m.owner = k.recipient
            lots.extend(moved)
            lots.sort(key=lambda lot: (lot.origin, lot.piece))
    return lots


def oracle_valuation(events, pf, t_m: int) -> OracleValuation:
    """Locked value, net profit and burn target straight from the defining sums."""
    lots = oracle_lots(events, pf)
    now = contract_price(pf, t_m)
    # each lot's coins are its deposit over its mint price
    omega = sum((lot.coins * now for lot in lots), Fraction(0))
    lam = sum((lot.coins * (now - lot.price) for lot in lots), Fraction(0))
    deposits = sum((lot.deposit for lot in lots), Fraction(0))
    return OracleValuation(omega, lam, omega - lam, deposits, len(lots))
