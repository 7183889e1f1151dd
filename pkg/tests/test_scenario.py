import json
from fractions import Fraction

import pytest

from aims.errors import ActionFailed, DecimalPrecisionError, SchemaError
from aims.fixed import ONE, FixedDecimal
from aims.oracle import oracle_price
from aims.scenario import SERIES_HEADER, SplitMix64, parse_scenario, run, sample_times, write_outputs
from aims.timestamps import DAY, parse_timestamp

from .conftest import DEMO_SCENARIO


def doc(**extra):
    base = {
        "price_function": "wish",
        "participants": ["alice"],
        "horizon": "2023-03-10T00:00:00Z",
        "schedule": [{"at": "2023-03-06T00:00:00Z", "action": "deposit", "participant": "alice", "amount": "1.0"}],
    }
    base.update(extra)
    return json.dumps(base).encode()


def test_splitmix64_reference_vector():
    rng = SplitMix64(1234567)
    assert [rng.next_u64() for _ in range(5)] == [
        6457827717110365317,
        3203168211198807973,
        9817491932198370423,
        4593380528125082431,
        16408922859458223821,
    ]


def test_minimal_document():
    sc = parse_scenario(doc())
    assert len(sc.schedule) == 1
    assert sc.schedule[0].amount == FixedDecimal.parse("1")
    assert sc.sampling == "day"


def test_unsorted_schedule_points_at_offender():
    sched = [
        {"at": "2023-03-08T00:00:00Z", "action": "deposit", "participant": "alice", "amount": "1"},
        {"at": "2023-03-09T00:00:00Z", "action": "deposit", "participant": "alice", "amount": "1"},
        {"at": "2023-03-07T00:00:00Z", "action": "deposit", "participant": "alice", "amount": "1"},
    ]
    with pytest.raises(SchemaError) as err:
        parse_scenario(doc(schedule=sched))
    assert err.value.pointer == "/schedule/2/at"


def test_nineteen_digit_decimal():
    sched = [{"at": "2023-03-06T00:00:00Z", "action": "deposit", "participant": "alice",
              "amount": "0.1234567890123456789"}]
    with pytest.raises(DecimalPrecisionError):
        parse_scenario(doc(schedule=sched))


@pytest.mark.parametrize("patch, pointer", [
    ({"participants": ["bob"]}, "/schedule/0/participant"),
    ({"sampling": "hour"}, "/sampling"),
    ({"colour": "red"}, "/colour"),
    ({"agents": [{"participant": "alice", "deposit_probability": "0.1"}]}, "/seed"),
    ({"start": "2020-01-01"}, "/start"),
])
def test_schema_errors(patch, pointer):
    with pytest.raises(SchemaError) as err:
        parse_scenario(doc(**patch))
    assert err.value.pointer == pointer


def test_float_amount_rejected():
    sched = [{"at": "2023-03-06T00:00:00Z", "action": "deposit", "participant": "alice", "amount": 1.0}]
    with pytest.raises(SchemaError) as err:
        parse_scenario(doc(schedule=sched))
    assert err.value.pointer == "/schedule/0/amount"


def test_sampling_grids():
    start = parse_timestamp("2023-03-06")
    end = parse_timestamp("2023-06-10")
    assert sample_times(start, end, "day")[-1] == end
    weeks = sample_times(start, end, "week")
    assert weeks[1] - weeks[0] == 7 * DAY and weeks[-1] == end
    months = sample_times(start, end, "month")
    assert months == [start, *(parse_timestamp(f"2023-0{m}-01") for m in (4, 5, 6)), end]


def test_zero_action_wish_series():
    sc = parse_scenario(json.dumps({
        "participants": [], "horizon": "2034-01-21T00:00:00Z", "sampling": "day",
    }))
    result = run(sc)
    prices = [r.price for r in result.series.rows]
    assert str(prices[0]) == "0.000000010000000000"
    terminal = Fraction(prices[-1].raw, ONE)
    assert abs(terminal - Fraction("1.00000005841")) / Fraction("1.00000005841") <= Fraction(5, 1000)
    assert terminal == Fraction(int(oracle_price(sc.price_function, sc.price_function.end) * ONE), ONE)
    rises = [b > a for a, b in zip(prices, prices[1:])]
    assert all(b >= a for a, b in zip(prices, prices[1:]))
    # one plateau onset: strictly rising, then flat for good
    onset = rises.index(False)
    assert all(rises[:onset]) and not any(rises[onset:])
    assert result.series.rows[onset].at == sc.price_function.end


def test_deposit_at_start_identity():
    result = run(parse_scenario(doc()))
    row = result.series.rows[0]
    assert row.omega == row.lambda_ + FixedDecimal.parse("1.0")
    assert row.lambda_.raw == 0


def test_failed_action_carries_index():
    sched = [
        {"at": "2023-03-06T00:00:00Z", "action": "deposit", "participant": "alice", "amount": "1"},
        {"at": "2023-03-07T00:00:00Z", "action": "burn", "participant": "alice", "coins": "1000000000",
         "activity": "donation"},
    ]
    with pytest.raises(ActionFailed) as err:
        run(parse_scenario(doc(schedule=sched)))
    assert err.value.index == 1


def test_ten_agent_determinism(tmp_path):
    sc = parse_scenario(DEMO_SCENARIO.read_bytes())
    assert len(sc.agents) == 10
    a, b = run(sc), run(sc)
    assert a.state.state_digest == b.state.state_digest
    write_outputs(a, sc, tmp_path / "a")
    write_outputs(b, sc, tmp_path / "b")
    for name in ("events.jsonl", "series.csv", "report.json", "digest.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    other = run(sc, seed=1)
    assert other.state.state_digest != a.state.state_digest


def test_series_csv_shape():
    sc = parse_scenario(doc(sampling="week"))
    result = run(sc)
    lines = result.series.to_csv().splitlines()
    assert lines[0] == ",".join(SERIES_HEADER)
    assert len(lines) == 1 + len(result.series.rows)
    assert not any(c in "eE" for c in "".join(lines[1:]))
