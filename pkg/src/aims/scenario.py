"""Scenario files: declarative deposit/burn/transfer schedules and seeded agents.

A scenario document is UTF-8 JSON::

    {
      "price_function": "wish" | {price function config},
      "participants": ["alice", "bob"],
      "start": "2023-03-06T00:00:00Z",        # optional, defaults to the schedule start
      "horizon": "2033-01-21T00:00:00Z",
      "sampling": "day" | "week" | "month",
      "seed": 7,                              # required when "agents" is non-empty
      "schedule": [
        {"at": "...", "action": "deposit",  "participant": "alice", "amount": "1.0"},
        {"at": "...", "action": "burn",     "participant": "alice", "coins": "10", "activity": "donation"},
        {"at": "...", "action": "transfer", "from": "alice", "to": "bob", "coins": "5"}
      ],
      "agents": [
        {"participant": "bob",
         "deposit_probability": "0.02", "deposit_min": "1", "deposit_max": "250",
         "burn_probability": "0.005", "burn_fraction": "0.5",
         "transfer_probability": "0.002", "transfer_fraction": "0.25"}
      ]
    }

Agents act once per day, from ``start`` to ``horizon``, in declaration
order, after any scheduled actions sharing that timestamp.  Each agent-day
consumes exactly six SplitMix64 outputs, in this order: deposit roll,
deposit amount, burn roll, burn activity, transfer roll, transfer target.
A roll succeeds when ``u < floor(probability * 2**64)``.  Deposit amounts are
``deposit_min + (u mod (span + 1)) * 0.000001`` with ``span`` the number of
micro-units between min and max.  Burns and transfers move
``floor(balance * fraction)`` coins and are skipped when that is zero.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from . import ledger
from .analytics import ValuationReport, remaining_deposits, valuation_report, within_accounting_tolerance
from .errors import ActionFailed, AimsError, DecimalPrecisionError, InvariantViolation, SchemaError
from .fixed import ONE, ZERO, FixedDecimal
from .ledger import Activity, LedgerState, ParticipantId
from .pricing import AnyPriceFunction, price_function_from_config
from .timestamps import DAY, Timestamp, format_timestamp, parse_timestamp

MASK64 = (1 << 64) - 1
MICRO = 10**12  # one 0.000001 step in raw units

SAMPLINGS = ("day", "week", "month")
SERIES_HEADER = ("timestamp", "price", "total_supply", "reserves", "omega", "lambda", "xi_target")


class SplitMix64:
    """Vigna's SplitMix64 generator; 64-bit state, one output per step."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


def _threshold(p: FixedDecimal) -> int:
    return p.raw * (1 << 64) // ONE


@dataclass(frozen=True)
class Action:
    at: Timestamp
    kind: str  # deposit | burn | transfer
    participant: str
    amount: FixedDecimal
    activity: Activity | None = None
    recipient: str | None = None


@dataclass(frozen=True)
class AgentSpec:
    participant: str
    deposit_probability: FixedDecimal = ZERO
    deposit_min: FixedDecimal = ZERO
    deposit_max: FixedDecimal = ZERO
    burn_probability: FixedDecimal = ZERO
    burn_fraction: FixedDecimal = ZERO
    transfer_probability: FixedDecimal = ZERO
    transfer_fraction: FixedDecimal = ZERO


@dataclass(frozen=True)
class Scenario:
    price_function: AnyPriceFunction
    participants: tuple[str, ...]
    start: Timestamp
    horizon: Timestamp
    sampling: str = "day"
    schedule: tuple[Action, ...] = ()
    agents: tuple[AgentSpec, ...] = ()
    seed: int | None = None

    def ids(self) -> dict[str, ParticipantId]:
        return {label: ParticipantId.from_label(label) for label in self.participants}


# -- parsing -------------------------------------------------------------------


def _dec(node: dict, key: str, ptr: str, *, default=None) -> FixedDecimal:
    if key not in node:
        if default is not None:
            return default
        raise SchemaError(f"{ptr}/{key}", "missing")
    val = node[key]
    if not isinstance(val, str):
        raise SchemaError(f"{ptr}/{key}", "decimals must be JSON strings")
    try:
        return FixedDecimal.parse(val)
    except DecimalPrecisionError as exc:
        raise DecimalPrecisionError(f"{ptr}/{key}: {exc}") from None
    except ValueError as exc:
        raise SchemaError(f"{ptr}/{key}", str(exc)) from None


def _ts(node: dict, key: str, ptr: str) -> Timestamp:
    if key not in node:
        raise SchemaError(f"{ptr}/{key}", "missing")
    try:
        return parse_timestamp(node[key])
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{ptr}/{key}", str(exc)) from None


def _label(node: dict, key: str, ptr: str, declared: set[str]) -> str:
    val = node.get(key)
    if not isinstance(val, str):
        raise SchemaError(f"{ptr}/{key}", "expected a participant label")
    if val not in declared:
        raise SchemaError(f"{ptr}/{key}", f"undeclared participant {val!r}")
    return val


def _check_keys(node: dict, allowed: set[str], ptr: str) -> None:
    extra = sorted(set(node) - allowed)
    if extra:
        raise SchemaError(f"{ptr}/{extra[0]}", "unknown field")


def _probability(node: dict, key: str, ptr: str) -> FixedDecimal:
    p = _dec(node, key, ptr, default=ZERO)
    if not ZERO <= p <= FixedDecimal(ONE):
        raise SchemaError(f"{ptr}/{key}", "probability must lie in [0, 1]")
    return p


def parse_scenario(document: bytes | str) -> Scenario:
    """Validate a scenario document; errors carry a JSON pointer to the bad node."""
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError("", f"not UTF-8: {exc}") from None
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("", "scenario must be a JSON object")
    _check_keys(doc, {"price_function", "participants", "start", "horizon", "sampling", "seed", "schedule", "agents"}, "")

    pf = price_function_from_config(doc.get("price_function", "wish"), "/price_function")

    labels = doc.get("participants")
    if not isinstance(labels, list) or not all(isinstance(x, str) and x for x in labels):
        raise SchemaError("/participants", "expected a list of non-empty labels")
    if len(set(labels)) != len(labels):
        raise SchemaError("/participants", "duplicate participant label")
    declared = set(labels)

    start = _ts(doc, "start", "") if "start" in doc else pf.start
    if start < pf.start:
        raise SchemaError("/start", "start precedes the price function start")
    horizon = _ts(doc, "horizon", "")
    if horizon < start:
        raise SchemaError("/horizon", "horizon precedes start")

    sampling = doc.get("sampling", "day")
    if sampling not in SAMPLINGS:
        raise SchemaError("/sampling", f"expected one of {', '.join(SAMPLINGS)}")

    seed = doc.get("seed")
    if seed is not None and (type(seed) is not int or not 0 <= seed <= MASK64):
        raise SchemaError("/seed", "seed must be an unsigned 64-bit integer")

    raw_schedule = doc.get("schedule", [])
    if not isinstance(raw_schedule, list):
        raise SchemaError("/schedule", "expected a list")
    actions = []
    last_at = None
    for i, node in enumerate(raw_schedule):
        ptr = f"/schedule/{i}"
        if not isinstance(node, dict):
            raise SchemaError(ptr, "expected an object")
        at = _ts(node, "at", ptr)
        if last_at is not None and at < last_at:
            raise SchemaError(f"{ptr}/at", "schedule is not sorted by time")
        if not start <= at <= horizon:
            raise SchemaError(f"{ptr}/at", "action outside [start, horizon]")
        last_at = at
        kind = node.get("action")
        if kind == "deposit":
            _check_keys(node, {"at", "action", "participant", "amount"}, ptr)
            actions.append(Action(at, kind, _label(node, "participant", ptr, declared), _dec(node, "amount", ptr)))
        elif kind == "burn":
            _check_keys(node, {"at", "action", "participant", "coins", "activity"}, ptr)
            try:
                activity = Activity(node.get("activity"))
            except ValueError:
                raise SchemaError(f"{ptr}/activity", "expected donation or wish_redeem") from None
            actions.append(Action(at, kind, _label(node, "participant", ptr, declared), _dec(node, "coins", ptr), activity))
        elif kind == "transfer":
            _check_keys(node, {"at", "action", "from", "to", "coins"}, ptr)
            actions.append(Action(
                at, kind, _label(node, "from", ptr, declared), _dec(node, "coins", ptr),
                recipient=_label(node, "to", ptr, declared),
            ))
        else:
            raise SchemaError(f"{ptr}/action", f"unknown action {kind!r}")

    raw_agents = doc.get("agents", [])
    if not isinstance(raw_agents, list):
        raise SchemaError("/agents", "expected a list")
    agents = []
    for i, node in enumerate(raw_agents):
        ptr = f"/agents/{i}"
        if not isinstance(node, dict):
            raise SchemaError(ptr, "expected an object")
        _check_keys(node, {f for f in AgentSpec.__dataclass_fields__}, ptr)
        spec = AgentSpec(
            participant=_label(node, "participant", ptr, declared),
            deposit_probability=_probability(node, "deposit_probability", ptr),
            deposit_min=_dec(node, "deposit_min", ptr, default=ZERO),
            deposit_max=_dec(node, "deposit_max", ptr, default=ZERO),
            burn_probability=_probability(node, "burn_probability", ptr),
            burn_fraction=_probability(node, "burn_fraction", ptr),
            transfer_probability=_probability(node, "transfer_probability", ptr),
            transfer_fraction=_probability(node, "transfer_fraction", ptr),
        )
        if spec.deposit_min.raw < 0 or spec.deposit_max < spec.deposit_min:
            raise SchemaError(f"{ptr}/deposit_max", "need 0 <= deposit_min <= deposit_max")
        if spec.deposit_min.raw % MICRO or spec.deposit_max.raw % MICRO:
            raise SchemaError(f"{ptr}/deposit_min", "deposit bounds must be multiples of 0.000001")
        agents.append(spec)
    if agents and seed is None:
        raise SchemaError("/seed", "seed is mandatory when agents are declared")

    return Scenario(
        price_function=pf,
        participants=tuple(labels),
        start=start,
        horizon=horizon,
        sampling=sampling,
        schedule=tuple(actions),
        agents=tuple(agents),
        seed=seed,
    )


# -- execution -----------------------------------------------------------------


def sample_times(start: Timestamp, horizon: Timestamp, sampling: str) -> list[Timestamp]:
    """Sampling grid from ``start`` to ``horizon``; the horizon always closes it."""
    if sampling == "month":
        times = [start]
        d = date.fromordinal(date(1970, 1, 1).toordinal() + start // DAY)
        while True:
            y, m = (d.year + 1, 1) if d.month == 12 else (d.year, d.month + 1)
            d = date(y, m, 1)
            t = (d.toordinal() - date(1970, 1, 1).toordinal()) * DAY
            if t > horizon:
                break
            times.append(t)
    else:
        step = DAY if sampling == "day" else 7 * DAY
        times = list(range(start, horizon + 1, step))
    if times[-1] != horizon:
        times.append(horizon)
    return times


@dataclass(frozen=True)
class TimeSeries:
    rows: tuple[ValuationReport, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        for r in self.rows:
            w.writerow((
                format_timestamp(r.at), r.price, r.total_supply, r.reserves, r.omega, r.lambda_, r.xi_target,
            ))
        return buf.getvalue()


@dataclass(frozen=True)
class RunResult:
    state: LedgerState
    series: TimeSeries
    log: tuple[ledger.Event, ...]


def _execute(state: LedgerState, action: Action, ids) -> LedgerState:
    owner = ids[action.participant]
    if action.kind == "deposit":
        return ledger.mint(state, owner, action.amount, action.at)[0]
    if action.kind == "burn":
        return ledger.burn(state, owner, action.amount, action.activity, action.at)
    return ledger.transfer(state, owner, ids[action.recipient], action.amount, action.at)


def _agent_day(scenario: Scenario, rng: SplitMix64, t: Timestamp, state: LedgerState, ids, on_action):
    """One day of agent activity; returns the new state."""
    for agent in scenario.agents:
        u_dep, u_amt, u_burn, u_act, u_xfer, u_tgt = (rng.next_u64() for _ in range(6))
        me = agent.participant
        if u_dep < _threshold(agent.deposit_probability):
            span = (agent.deposit_max.raw - agent.deposit_min.raw) // MICRO
            amount = FixedDecimal(agent.deposit_min.raw + (u_amt % (span + 1)) * MICRO)
            state = on_action(state, Action(t, "deposit", me, amount))
        if u_burn < _threshold(agent.burn_probability):
            coins = state.balance(ids[me]).mul_floor(agent.burn_fraction)
            if coins.raw:
                activity = Activity.DONATION if u_act % 2 == 0 else Activity.WISH_REDEEM
                state = on_action(state, Action(t, "burn", me, coins, activity=activity))
        peers = [p for p in scenario.participants if p != me]
        if u_xfer < _threshold(agent.transfer_probability) and peers:
            coins = state.balance(ids[me]).mul_floor(agent.transfer_fraction)
            if coins.raw:
                state = on_action(state, Action(t, "transfer", me, coins, recipient=peers[u_tgt % len(peers)]))
    return state


def check_row(row: ValuationReport, state: LedgerState, previous: ValuationReport | None, pf) -> None:
    if row.omega - row.lambda_ != row.xi_target:
        raise InvariantViolation("burn target identity", f"row {format_timestamp(row.at)}")
    if not within_accounting_tolerance(row.xi_target, remaining_deposits(state), len(state.lots)):
        raise InvariantViolation("burn target identity", f"row {format_timestamp(row.at)} xi={row.xi_target}")
    if previous is not None:
        pd, cd = pf.day_index(previous.at), pf.day_index(row.at)
        if cd > pd and not row.price > previous.price:
            raise InvariantViolation("price monotonicity", f"row {format_timestamp(row.at)}")
        if cd == pd and row.price != previous.price:
            raise InvariantViolation("price plateau", f"row {format_timestamp(row.at)}")


def run(scenario: Scenario, seed: int | None = None) -> RunResult:
    """Execute a scenario; identical (scenario, seed) give identical results.

    ``seed`` overrides the document's seed.  Ledger rejections surface as
    ActionFailed carrying the index of the action in execution order.
    """
    seed = scenario.seed if seed is None else seed
    if scenario.agents and seed is None:
        raise SchemaError("/seed", "seed is mandatory when agents are declared")
    pf = scenario.price_function
    ids = scenario.ids()
    rng = SplitMix64(seed or 0)
    state = ledger.genesis(pf)

    # merge schedule, agent days and samples in time order
    agent_days = range(scenario.start, scenario.horizon + 1, DAY) if scenario.agents else range(0)
    samples = sample_times(scenario.start, scenario.horizon, scenario.sampling)
    pending = list(scenario.schedule)
    timeline = sorted({*(a.at for a in pending), *agent_days, *samples})
    sample_set = set(samples)
    agent_set = set(agent_days)

    rows: list[ValuationReport] = []
    counter = 0

    def on_action(st: LedgerState, action: Action) -> LedgerState:
        nonlocal counter
        index = counter
        counter += 1
        try:
            return _execute(st, action, ids)
        except InvariantViolation:
            raise
        except AimsError as exc:
            raise ActionFailed(index, exc) from exc

    sched_i = 0
    for t in timeline:
        while sched_i < len(pending) and pending[sched_i].at == t:
            state = on_action(state, pending[sched_i])
            sched_i += 1
        if t in agent_set:
            state = _agent_day(scenario, rng, t, state, ids, on_action)
        if t in sample_set:
            row = valuation_report(state, t)
            check_row(row, state, rows[-1] if rows else None, pf)
            rows.append(row)
    return RunResult(state, TimeSeries(tuple(rows)), state.log)


def write_outputs(result: RunResult, scenario: Scenario, out_dir) -> None:
    """Write events.jsonl, series.csv, report.json and digest.txt into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    final = ledger.write_log(out / "events.jsonl", result.log, scenario.price_function)
    if final.state_digest != result.state.state_digest:
        raise InvariantViolation("replay determinism", "replayed digest differs from live digest")
    (out / "series.csv").write_text(result.series.to_csv(), encoding="utf-8", newline="\n")
    report = valuation_report(result.state, scenario.horizon).to_json()
    report["participants"] = {label: pid.hex for label, pid in scenario.ids().items()}
    report["digest"] = result.state.state_digest.hex()
    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
    )
    (out / "digest.txt").write_text(result.state.state_digest.hex() + "\n", encoding="utf-8", newline="\n")
