"""Locked value, net profit and burn target of a ledger snapshot.

All three sums run over the *remaining* lots (coins not yet burned).  Each
sum is accumulated exactly in raw integer units and floored to scale 18 once
at the end, so ``omega - lambda`` differs from the remaining deposits by at
most the per-lot mint rounding plus two units.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .fixed import ONE, ZERO, FixedDecimal
from .ledger import LedgerState, ParticipantId
from .timestamps import Timestamp, format_timestamp

# Equality identities hold within this relative bound, or within one
# scale-18 unit per lot (plus the two floors), whichever is larger.
ACCOUNTING_REL_TOL = (1, 10**12)


def total_locked_value(state: LedgerState, t_m: Timestamp) -> FixedDecimal:
    """Remaining coins valued at the price in force at ``t_m``."""
    price = state.price_function.price_at(t_m).raw
    return FixedDecimal(sum(lot.coins_remaining.raw for lot in state.lots) * price // ONE)


def net_profit(state: LedgerState, t_m: Timestamp) -> FixedDecimal:
    """Unrealized gain of remaining coins over what they cost to mint.

    Negative terms appear only for lots minted after ``t_m``.
    """
    price = state.price_function.price_at(t_m).raw
    return FixedDecimal(sum(lot.coins_remaining.raw * (price - lot.mint_price.raw) for lot in state.lots) // ONE)


def burn_target(state: LedgerState, t_m: Timestamp) -> FixedDecimal:
    """Value that burn activities must destroy for locked value to equal invested value."""
    return total_locked_value(state, t_m) - net_profit(state, t_m)


def remaining_deposits(state: LedgerState) -> FixedDecimal:
    return FixedDecimal(sum(lot.deposited.raw for lot in state.lots))


def within_accounting_tolerance(actual: FixedDecimal, expected: FixedDecimal, n_lots: int) -> bool:
    """``|actual - expected| <= max(expected * 1e-12, n_lots + 2 units)``."""
    diff = abs(actual.raw - expected.raw)
    num, den = ACCOUNTING_REL_TOL
    return diff * den <= abs(expected.raw) * num or diff <= n_lots + 2


@dataclass(frozen=True)
class ValuationReport:
    at: Timestamp
    price: FixedDecimal
    omega: FixedDecimal
    lambda_: FixedDecimal
    xi_target: FixedDecimal
    total_deposits: FixedDecimal
    total_supply: FixedDecimal
    reserves: FixedDecimal
    per_participant: Mapping[ParticipantId, tuple[FixedDecimal, FixedDecimal]]
    # lots minted after t_m; their profit terms are negative
    lots_after_t_m: int = 0

    def to_json(self) -> dict:
        return {
            "at": format_timestamp(self.at),
            "price": str(self.price),
            "omega": str(self.omega),
            "lambda": str(self.lambda_),
            "xi_target": str(self.xi_target),
            "total_deposits": str(self.total_deposits),
            "total_supply": str(self.total_supply),
            "reserves": str(self.reserves),
            "lots_after_t_m": self.lots_after_t_m,
            "per_participant": {
                pid.hex: {"omega": str(om), "lambda": str(la)}
                for pid, (om, la) in sorted(self.per_participant.items())
            },
        }

    CSV_HEADER = ("t_m", "omega", "lambda", "xi_target", "total_supply", "reserves", "price")

    def csv_row(self) -> tuple[str, ...]:
        return (
            format_timestamp(self.at),
            str(self.omega),
            str(self.lambda_),
            str(self.xi_target),
            str(self.total_supply),
            str(self.reserves),
            str(self.price),
        )


def valuation_report(state: LedgerState, t_m: Timestamp) -> ValuationReport:
    price = state.price_function.price_at(t_m)
    coins_by: dict[ParticipantId, int] = {}
    profit_by: dict[ParticipantId, int] = {}
    late = 0
    for lot in state.lots:
        c = lot.coins_remaining.raw
        coins_by[lot.owner] = coins_by.get(lot.owner, 0) + c
        profit_by[lot.owner] = profit_by.get(lot.owner, 0) + c * (price.raw - lot.mint_price.raw)
        if lot.minted_at > t_m and c:
            late += 1
    per = {
        pid: (FixedDecimal(coins_by[pid] * price.raw // ONE), FixedDecimal(profit_by[pid] // ONE))
        for pid in coins_by
        if coins_by[pid]
    }
    omega = total_locked_value(state, t_m)
    lam = net_profit(state, t_m)
    return ValuationReport(
        at=t_m,
        price=price,
        omega=omega,
        lambda_=lam,
        xi_target=omega - lam,
        total_deposits=remaining_deposits(state),
        total_supply=state.total_supply,
        reserves=state.reserves,
        per_participant=per,
        lots_after_t_m=late,
    )

