"""Event-sourced contract ledger: mint, burn, transfer, replay.

State is immutable; every operation returns a fresh :class:`LedgerState`
with one more event in its log.  Each deposit becomes a :class:`Lot` that
remembers its mint price and the stablecoin it cost, so valuations stay
computable after coins are burned or move between holders.

Lot bookkeeping rules:

* lots are ordered by ``(origin, piece, part)``; ``origin`` is the seq of
  the minting event, ``piece`` the seq of the transfer that moved the lot
  (equal to ``origin`` for the original) and ``part`` its position among the
  pieces that transfer moved;
* burns and transfers consume the owner's lots oldest-first;
* a partially consumed lot gives up its proportional share of the deposit
  (floored) with the taken coins and keeps the rest, nudged by at most a
  unit so that every lot keeps ``ceil(coins * mint_price) <= deposited + 1e-18``;
* pieces are never merged.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, Union

from .errors import (
    InsufficientBalance,
    InvariantViolation,
    MalformedLog,
    NegativeDeposit,
    NonMonotoneTimestamp,
    TimeBeforeStart,
)
from .fixed import ONE, ZERO, FixedDecimal
from .pricing import AnyPriceFunction
from .timestamps import Timestamp, check_range, format_timestamp, parse_timestamp


@dataclass(frozen=True, order=True)
class ParticipantId:
    """Opaque 32-byte participant identifier."""

    value: bytes

    def __post_init__(self):
        if not isinstance(self.value, bytes) or len(self.value) != 32:
            raise ValueError("participant id must be exactly 32 bytes")

    @classmethod
    def from_hex(cls, text: str) -> "ParticipantId":
        if not isinstance(text, str) or len(text) != 64 or text != text.lower():
            raise ValueError(f"participant id must be 64 lowercase hex digits: {text!r}")
        return cls(bytes.fromhex(text))

    @classmethod
    def from_label(cls, label: str) -> "ParticipantId":
        """Deterministic id for a human label (SHA-256 of its UTF-8 bytes)."""
        return cls(hashlib.sha256(label.encode("utf-8")).digest())

    @property
    def hex(self) -> str:
        return self.value.hex()

    def __repr__(self) -> str:
        return f"ParticipantId({self.hex[:12]}…)"


class Activity(str, Enum):
    DONATION = "donation"
    WISH_REDEEM = "wish_redeem"


@dataclass(frozen=True)
class Mint:
    owner: ParticipantId
    deposit: FixedDecimal


@dataclass(frozen=True)
class Burn:
    owner: ParticipantId
    coins: FixedDecimal
    activity: Activity


@dataclass(frozen=True)
class Transfer:
    sender: ParticipantId
    recipient: ParticipantId
    coins: FixedDecimal


EventKind = Union[Mint, Burn, Transfer]


@dataclass(frozen=True)
class Event:
    seq: int
    at: Timestamp
    kind: EventKind


@dataclass(frozen=True)
class Lot:
    origin: int
    piece: int
    owner: ParticipantId
    minted_at: Timestamp
    mint_price: FixedDecimal
    deposited: FixedDecimal
    coins_remaining: FixedDecimal
    part: int = 0

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.origin, self.piece, self.part)


@dataclass(frozen=True)
class LedgerState:
    price_function: AnyPriceFunction
    lots: tuple[Lot, ...] = ()
    balances: Mapping[ParticipantId, FixedDecimal] = field(default_factory=lambda: MappingProxyType({}))
    total_supply: FixedDecimal = ZERO
    reserves: FixedDecimal = ZERO
    log: tuple[Event, ...] = ()
    # running hash over every event record, so the digest commits to history
    log_hash: bytes = bytes(32)

    @property
    def last_seq(self) -> int | None:
        return self.log[-1].seq if self.log else None

    @property
    def last_at(self) -> Timestamp | None:
        return self.log[-1].at if self.log else None

    def balance(self, owner: ParticipantId) -> FixedDecimal:
        return self.balances.get(owner, ZERO)

    def lots_of(self, owner: ParticipantId) -> list[Lot]:
        return [lot for lot in self.lots if lot.owner == owner]

    @cached_property
    def state_digest(self) -> bytes:
        return hashlib.sha256(canonical_state_bytes(self)).digest()


def genesis(pf: AnyPriceFunction) -> LedgerState:
    return LedgerState(price_function=pf)


# -- canonical encodings -------------------------------------------------------


def canonical_state_bytes(state: LedgerState) -> bytes:
    """Byte string hashed into the state digest.

    Compact JSON, keys sorted, decimals as scale-18 strings, timestamps as
    ISO-8601 UTC, participant ids as lowercase hex, zero balances omitted.
    ``log_hash`` chains SHA-256 over the compact record of every event, so
    two states with equal holdings but different histories never collide.
    """
    doc = {
        "balances": {pid.hex: str(bal) for pid, bal in sorted(state.balances.items()) if bal.raw},
        "last_seq": state.last_seq,
        "log_hash": state.log_hash.hex(),
        "lots": [
            {
                "coins_remaining": str(lot.coins_remaining),
                "deposited": str(lot.deposited),
                "mint_price": str(lot.mint_price),
                "minted_at": format_timestamp(lot.minted_at),
                "origin": lot.origin,
                "owner": lot.owner.hex,
                "part": lot.part,
                "piece": lot.piece,
            }
            for lot in state.lots
        ],
        "reserves": str(state.reserves),
        "total_supply": str(state.total_supply),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode("ascii")


# -- operations ----------------------------------------------------------------


def _append(state: LedgerState, event: Event) -> dict:
    record = dump_record(event_to_record(event)).encode("ascii")
    return {"log": state.log + (event,), "log_hash": hashlib.sha256(state.log_hash + record).digest()}


def _check_time(state: LedgerState, at: Timestamp) -> None:
    check_range(at)
    if at < state.price_function.start:
        raise TimeBeforeStart(at, state.price_function.start)
    if state.log and at < state.log[-1].at:
        raise NonMonotoneTimestamp(at, state.log[-1].at)


def _next_seq(state: LedgerState) -> int:
    return len(state.log)


def _with_balance(balances, owner, delta: int):
    new = dict(balances)
    bal = new.get(owner, ZERO).raw + delta
    if bal:
        new[owner] = FixedDecimal(bal)
    else:
        new.pop(owner, None)
    return new


def mint(state: LedgerState, owner: ParticipantId, deposit: FixedDecimal, at: Timestamp):
    """Deposit stablecoin at the current price; returns ``(new_state, coins)``.

    ``coins = floor(deposit / price_at(at))`` at scale 18.  A zero deposit
    still records a (zero) lot.
    """
    if deposit.raw < 0:
        raise NegativeDeposit(f"deposit must be non-negative, got {deposit}")
    _check_time(state, at)
    price = state.price_function.price_at(at)
    coins = deposit.div_floor(price)
    seq = _next_seq(state)
    lot = Lot(
        origin=seq,
        piece=seq,
        owner=owner,
        minted_at=at,
        mint_price=price,
        deposited=deposit,
        coins_remaining=coins,
    )
    balances = _with_balance(state.balances, owner, coins.raw)
    new = LedgerState(
        price_function=state.price_function,
        lots=state.lots + (lot,),
        balances=MappingProxyType(balances),
        total_supply=state.total_supply + coins,
        reserves=state.reserves + deposit,
        **_append(state, Event(seq, at, Mint(owner, deposit))),
    )
    return new, coins


def _cost(coins: int, price: int) -> int:
    """Deposit units needed to have bought ``coins`` at ``price`` (ceiling)."""
    return -(-coins * price // ONE)


def _split_deposit(deposit: int, coins: int, taken: int, price: int) -> int:
    """Deposit carried away by ``taken`` of a lot's ``coins``.

    Proportional share, floored, then clamped so that both halves keep
    ``cost(coins) <= deposit + 1``.  Such a value always exists when the whole
    lot satisfies the bound.
    """
    share = deposit * taken // coins
    lo = max(0, _cost(taken, price) - 1)
    hi = min(deposit, deposit - _cost(coins - taken, price) + 1)
    return min(max(share, lo), hi)


def _take_fifo(lots: tuple[Lot, ...], owner: ParticipantId, coins: int):
    """Split ``coins`` raw units off the owner's lots, oldest first.

    Returns ``(kept, taken)``: the lot tuple with the owner's lots reduced,
    and the consumed portions (same origin and mint price, proportional
    deposit) in FIFO order.
    """
    kept: list[Lot] = []
    taken: list[Lot] = []
    need = coins
    for lot in lots:
        if need == 0 or lot.owner != owner:
            kept.append(lot)
            continue
        have = lot.coins_remaining.raw
        if have == 0:
            kept.append(lot)
            continue
        if have <= need:
            taken.append(lot)
            need -= have
            continue
        moved_dep = _split_deposit(lot.deposited.raw, have, need, lot.mint_price.raw)
        taken.append(replace(lot, coins_remaining=FixedDecimal(need), deposited=FixedDecimal(moved_dep)))
        kept.append(replace(
            lot,
            coins_remaining=FixedDecimal(have - need),
            deposited=FixedDecimal(lot.deposited.raw - moved_dep),
        ))
        need = 0
    if need:
        raise InvariantViolation("supply conservation", f"lots of {owner!r} hold less than its balance")
    return tuple(kept), taken


def _check_amount(state: LedgerState, owner: ParticipantId, coins: FixedDecimal) -> None:
    if coins.raw < 0:
        raise InsufficientBalance(f"coin amount must be non-negative, got {coins}")
    bal = state.balance(owner)
    if coins > bal:
        raise InsufficientBalance(f"{owner!r} holds {bal}, cannot spend {coins}")


def burn(state: LedgerState, owner: ParticipantId, coins: FixedDecimal, activity: Activity, at: Timestamp) -> LedgerState:
    """Destroy ``coins`` of ``owner``'s tokens via a burn activity.

    Reserves are untouched: destroyed coins are not redeemed for stablecoin.
    """
    _check_time(state, at)
    activity = Activity(activity)
    _check_amount(state, owner, coins)
    kept, _ = _take_fifo(state.lots, owner, coins.raw)
    seq = _next_seq(state)
    return LedgerState(
        price_function=state.price_function,
        lots=kept,
        balances=MappingProxyType(_with_balance(state.balances, owner, -coins.raw)),
        total_supply=state.total_supply - coins,
        reserves=state.reserves,
        **_append(state, Event(seq, at, Burn(owner, coins, activity))),
    )


def transfer(state: LedgerState, sender: ParticipantId, recipient: ParticipantId, coins: FixedDecimal, at: Timestamp) -> LedgerState:
    """Move coins between holders; cost basis travels with the coins."""
    _check_time(state, at)
    _check_amount(state, sender, coins)
    seq = _next_seq(state)
    kept, taken = _take_fifo(state.lots, sender, coins.raw)
    moved = [replace(lot, owner=recipient, piece=seq, part=j) for j, lot in enumerate(taken)]
    lots = tuple(sorted(kept + tuple(moved), key=lambda lot: lot.key))
    balances = _with_balance(state.balances, sender, -coins.raw)
    balances = _with_balance(balances, recipient, coins.raw)
    return LedgerState(
        price_function=state.price_function,
        lots=lots,
        balances=MappingProxyType(balances),
        total_supply=state.total_supply,
        reserves=state.reserves,
        **_append(state, Event(seq, at, Transfer(sender, recipient, coins))),
    )


def apply_event(state: LedgerState, event: Event) -> LedgerState:
    if event.seq != _next_seq(state):
        raise MalformedLog(event.seq, f"expected seq {_next_seq(state)}")
    if state.log and event.at < state.log[-1].at:
        raise MalformedLog(event.seq, "timestamp regression")
    k = event.kind
    if isinstance(k, Mint):
        return mint(state, k.owner, k.deposit, event.at)[0]
    if isinstance(k, Burn):
        return burn(state, k.owner, k.coins, k.activity, event.at)
    if isinstance(k, Transfer):
        return transfer(state, k.sender, k.recipient, k.coins, event.at)
    raise MalformedLog(event.seq, f"unknown event kind {type(k).__name__}")


def replay(log: Iterable[Event], pf: AnyPriceFunction) -> LedgerState:
    """Rebuild state from an event log; MalformedLog names the first bad seq."""
    state = genesis(pf)
    for i, event in enumerate(log):
        if event.seq != i:
            raise MalformedLog(i, f"seq {event.seq} out of place")
        if state.log and event.at < state.log[-1].at:
            raise MalformedLog(event.seq, "timestamp regression")
        state = apply_event(state, event)
    return state


# -- JSON Lines event log ------------------------------------------------------


def event_to_record(event: Event, coins: FixedDecimal | None = None, digest: bytes | None = None) -> dict:
    rec: dict = {"seq": event.seq, "at": format_timestamp(event.at)}
    k = event.kind
    if isinstance(k, Mint):
        rec.update(kind="mint", owner=k.owner.hex, deposit=str(k.deposit))
        if coins is not None:
            rec["coins"] = str(coins)
    elif isinstance(k, Burn):
        rec.update(kind="burn", owner=k.owner.hex, coins=str(k.coins), activity=k.activity.value)
    else:
        rec.update(kind="transfer", **{"from": k.sender.hex, "to": k.recipient.hex}, coins=str(k.coins))
    if digest is not None:
        rec["digest"] = digest.hex()
    return rec


def dump_record(rec: dict) -> str:
    return json.dumps(rec, separators=(",", ":"), ensure_ascii=True)


_KIND_FIELDS = {
    "mint": {"owner", "deposit"},
    "burn": {"owner", "coins", "activity"},
    "transfer": {"from", "to", "coins"},
}
_OPTIONAL = {"mint": {"coins", "digest"}, "burn": {"digest"}, "transfer": {"digest"}}


def record_to_event(rec, line_no: int) -> Event:
    """Decode one log record; any defect is MalformedLog at ``line_no``."""
    if not isinstance(rec, dict):
        raise MalformedLog(line_no, "record is not a JSON object")
    try:
        seq = rec["seq"]
        if type(seq) is not int:
            raise ValueError("seq must be an integer")
        kind = rec["kind"]
        if kind not in _KIND_FIELDS:
            raise ValueError(f"unknown kind {kind!r}")
        extra = set(rec) - {"seq", "at", "kind"} - _KIND_FIELDS[kind] - _OPTIONAL[kind]
        if extra:
            raise ValueError(f"unexpected fields {sorted(extra)}")
        at = parse_timestamp(rec["at"])
        if kind == "mint":
            body = Mint(ParticipantId.from_hex(rec["owner"]), FixedDecimal.parse(rec["deposit"]))
        elif kind == "burn":
            body = Burn(ParticipantId.from_hex(rec["owner"]), FixedDecimal.parse(rec["coins"]), Activity(rec["activity"]))
        else:
            body = Transfer(
                ParticipantId.from_hex(rec["from"]),
                ParticipantId.from_hex(rec["to"]),
                FixedDecimal.parse(rec["coins"]),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedLog(line_no, f"{type(exc).__name__}: {exc}") from None
    return Event(seq, at, body)


def write_log(path, events: Iterable[Event], pf: AnyPriceFunction) -> LedgerState:
    """Write the JSON Lines log, annotating each record with its outcome.

    Mint records carry the coins they produced and every record carries the
    hex digest of the state after it.  Returns the final state.
    """
    state = genesis(pf)
    lines = []
    for event in events:
        before = state.total_supply
        state = apply_event(state, event)
        coins = state.total_supply - before if isinstance(event.kind, Mint) else None
        lines.append(dump_record(event_to_record(event, coins, state.state_digest)))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(line + "\n" for line in lines))
    return state


def read_log_records(text: str) -> list[dict]:
    """Split newline-terminated JSON Lines text into decoded records."""
    if text == "":
        return []
    lines = text.split("\n")
    if lines[-1] != "":
        raise MalformedLog(len(lines) - 1, "missing trailing newline")
    records = []
    for i, line in enumerate(lines[:-1]):
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise MalformedLog(i, f"invalid JSON: {exc.msg}") from None
    return records
