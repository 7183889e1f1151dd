import random
from pathlib import Path

import pytest

from aims import ledger
from aims.fixed import FixedDecimal
from aims.ledger import Activity, ParticipantId
from aims.pricing import make_wish_function
from aims.timestamps import DAY

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = Path(__file__).resolve().parent / "golden"
DEMO_SCENARIO = ROOT / "scenarios" / "wish_demo.json"

MICRO = 10**12


@pytest.fixture(scope="session")
def wish():
    return make_wish_function()


def pid(n: int) -> ParticipantId:
    return ParticipantId.from_label(f"participant-{n}")


def random_trace(rng: random.Random, pf, n_events: int, n_people: int = 5, *, until=None):
    """Build a valid random trace through the engine; returns (state, events).

    Deposits are whole micro-units in [0.000001, 10000]; burns and transfers
    spend a random share of the actor's balance.
    """
    people = [pid(i) for i in range(n_people)]
    until = pf.end + 200 * DAY if until is None else until
    t = pf.start
    state = ledger.genesis(pf)
    for _ in range(n_events):
        t = min(until, t + rng.choice((0, 3600, DAY, 7 * DAY, 30 * DAY, rng.randrange(1, 90 * DAY))))
        who = rng.choice(people)
        bal = state.balance(who).raw
        roll = rng.random()
        if bal == 0 or roll < 0.5:
            amount = FixedDecimal(rng.randrange(1, 10_000 * 10**6 + 1) * MICRO)
            state, _ = ledger.mint(state, who, amount, t)
        elif roll < 0.75:
            coins = FixedDecimal(bal if rng.random() < 0.2 else rng.randrange(0, bal + 1))
            act = rng.choice((Activity.DONATION, Activity.WISH_REDEEM))
            state = ledger.burn(state, who, coins, act, t)
        else:
            coins = FixedDecimal(bal if rng.random() < 0.2 else rng.randrange(0, bal + 1))
            state = ledger.transfer(state, who, rng.choice(people), coins, t)
    return state, list(state.log)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
