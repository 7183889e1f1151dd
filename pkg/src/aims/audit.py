"""Invariant checks over ledger states and recorded event logs."""

from __future__ import annotations

from .analytics import net_profit, remaining_deposits, total_locked_value, within_accounting_tolerance
from .errors import AimsError, InsufficientBalance, InvariantViolation, MalformedLog, NegativeDeposit
from .fixed import ONE, FixedDecimal
from .ledger import (
    LedgerState,
    Mint,
    apply_event,
    dump_record,
    event_to_record,
    genesis,
    read_log_records,
    record_to_event,
)
from .pricing import AnyPriceFunction


def check_state(state: LedgerState) -> None:
    """Raise InvariantViolation naming the first ledger invariant that fails."""
    seq = state.last_seq
    lot_coins = sum(lot.coins_remaining.raw for lot in state.lots)
    bal_coins = sum(b.raw for b in state.balances.values())
    if not state.total_supply.raw == lot_coins == bal_coins:
        raise InvariantViolation(
            "supply conservation",
            f"total_supply={state.total_supply} balances={FixedDecimal(bal_coins)} lots={FixedDecimal(lot_coins)}",
            seq,
        )
    per_owner: dict = {}
    for lot in state.lots:
        per_owner[lot.owner] = per_owner.get(lot.owner, 0) + lot.coins_remaining.raw
    for owner, held in per_owner.items():
        if state.balance(owner).raw != held:
            raise InvariantViolation("supply conservation", f"{owner!r} lots disagree with balance", seq)
    keys = [lot.key for lot in state.lots]
    if keys != sorted(keys) or len(set(keys)) != len(keys):
        raise InvariantViolation("lot order", "lots not strictly ordered by (origin, piece, part)", seq)
    pf = state.price_function
    for lot in state.lots:
        if lot.coins_remaining.raw < 0 or lot.deposited.raw < 0:
            raise InvariantViolation("lot non-negativity", f"lot {lot.key}", seq)
        if lot.mint_price != pf.price_at(lot.minted_at):
            raise InvariantViolation("mint price", f"lot {lot.key} priced {lot.mint_price}", seq)
        # coins * price <= deposited, give or take one unit of split rounding
        if lot.coins_remaining.raw * lot.mint_price.raw > (lot.deposited.raw + 1) * ONE:
            raise InvariantViolation("lot cost basis", f"lot {lot.key} holds more coins than its deposit buys", seq)
    if remaining_deposits(state) > state.reserves:
        raise InvariantViolation("reserves", "remaining lot deposits exceed reserves", seq)


def check_valuation(state: LedgerState, t_m: int) -> None:
    """Valuation identities at ``t_m``: locked value against profit and deposits."""
    omega = total_locked_value(state, t_m)
    lam = net_profit(state, t_m)
    deposits = remaining_deposits(state)
    if omega.raw < 0:
        raise InvariantViolation("locked value non-negativity", f"omega={omega}")
    if not within_accounting_tolerance(omega - lam, deposits, len(state.lots)):
        raise InvariantViolation("burn target identity", f"omega-lambda={omega - lam} deposits={deposits}")
    if deposits.raw > 0 and any(lot.coins_remaining.raw for lot in state.lots) and not omega > lam:
        raise InvariantViolation("locked value exceeds profit", f"omega={omega} lambda={lam}")
    if all(lot.minted_at <= t_m for lot in state.lots) and lam.raw < 0:
        raise InvariantViolation("profit non-negativity", f"lambda={lam}")


def verify_log_text(text: str, pf: AnyPriceFunction) -> LedgerState:
    """Replay a JSON Lines log and check it end to end.

    MalformedLog for anything that does not decode into a valid event
    sequence (bad bytes or JSON, unknown fields, seq gaps, time regressions),
    InvariantViolation when a decoded log disagrees with what the contract
    would have produced or asks for something it would have refused.
    """
    records = read_log_records(text)
    lines = text.split("\n")
    state = genesis(pf)
    for i, rec in enumerate(records):
        event = record_to_event(rec, i)
        if event.seq != i:
            raise MalformedLog(i, f"seq {event.seq} out of place")
        if state.log and event.at < state.log[-1].at:
            raise MalformedLog(i, "timestamp regression")
        try:
            after = apply_event(state, event)
        except MalformedLog:
            raise
        # a well-formed record the contract could never have accepted is tampering
        except InsufficientBalance as exc:
            raise InvariantViolation("supply conservation", str(exc), i) from None
        except NegativeDeposit as exc:
            raise InvariantViolation("mint non-negativity", str(exc), i) from None
        except AimsError as exc:
            raise MalformedLog(i, f"{type(exc).__name__}: {exc}") from None
        minted = after.total_supply - state.total_supply if isinstance(event.kind, Mint) else None
        state = after
        if minted is not None and "coins" in rec and rec["coins"] != str(minted):
            raise InvariantViolation("supply conservation", f"mint recorded {rec['coins']}, contract mints {minted}", i)
        check_state(state)
        if "digest" in rec and rec["digest"] != state.state_digest.hex():
            raise InvariantViolation("state digest", "recorded digest differs from replayed state", i)
        canonical = dump_record(event_to_record(
            event,
            minted if "coins" in rec else None,
            state.state_digest if "digest" in rec else None,
        ))
        if canonical != lines[i]:
            raise InvariantViolation("canonical encoding", "record is not in canonical form", i)
    if state.log:
        for t_m in sorted({state.log[-1].at, max(state.log[-1].at, pf.end)}):
            check_valuation(state, t_m)
    return state
