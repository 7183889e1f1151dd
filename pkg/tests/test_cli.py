import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from aims.cli import main
from aims.fixed import ONE
from aims.oracle import oracle_price
from aims.timestamps import parse_timestamp

from .conftest import DEMO_SCENARIO, GOLDEN


def call(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def demo_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("demo")
    assert main(["simulate", "--scenario", str(DEMO_SCENARIO), "--out", str(out)]) == 0
    return out


def test_price_at_start(capsys):
    assert call(capsys, "price", "--at", "2023-03-06T00:00:00Z") == (0, "0.000000010000000000\n", "")


def test_price_plateau(capsys):
    _, a, _ = call(capsys, "price", "--at", "2033-06-01")
    _, b, _ = call(capsys, "price", "--at", "2033-01-21")
    assert a == b == "0.999787412817937570\n"


def test_price_series_yearly(capsys, wish):
    code, out, _ = call(capsys, "price", "--series", "--step", "365")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["timestamp", "price"]
    assert len(rows[1:]) == 10
    for ts, price in rows[1:]:
        o = oracle_price(wish, parse_timestamp(ts))
        bound = max(o * Fraction(1, 10**12), Fraction(1, ONE))
        assert abs(Fraction(price) - o) <= bound


def test_price_config_and_env(capsys, tmp_path, monkeypatch, wish):
    cfg = dict(wish.to_config(), initial_price="2")
    path = tmp_path / "pf.json"
    path.write_text(json.dumps(cfg))
    assert call(capsys, "price", "--config", str(path), "--at", "2023-03-06")[1] == "2.000000000000000000\n"
    monkeypatch.setenv("AIMS_CONFIG", str(path))
    assert call(capsys, "price", "--at", "2023-03-06")[1] == "2.000000000000000000\n"


@pytest.mark.parametrize("argv", [
    ["price", "--at", "2020-01-01"],
    ["price", "--at", "yesterday"],
    ["price"],
    ["price", "--config", "/nonexistent.json", "--at", "2024-01-01"],
    ["price", "--series", "--step", "0"],
    ["bogus"],
])
def test_price_bad_input(capsys, argv):
    code, out, err = call(capsys, *argv)
    assert code == 1 and out == ""
    if argv[0] != "bogus":
        line = err.strip()
        assert "\n" not in line and "error" in json.loads(line)


def test_golden_daily_series(capsys):
    _, out, _ = call(capsys, "price", "--series", "--step", "1")
    assert out.encode() == (GOLDEN / "wish_daily.csv").read_bytes()


def test_simulate_writes_outputs(demo_run):
    for name in ("events.jsonl", "series.csv", "report.json", "digest.txt"):
        assert (demo_run / name).stat().st_size > 0
    report = json.loads((demo_run / "report.json").read_text())
    assert report["digest"] == (demo_run / "digest.txt").read_text().strip()


def test_simulate_golden_digest(demo_run):
    assert (demo_run / "digest.txt").read_text() == (GOLDEN / "wish_demo.digest").read_text()


def test_simulate_same_seed_twice(tmp_path, demo_run):
    assert main(["simulate", "--scenario", str(DEMO_SCENARIO), "--out", str(tmp_path), "--seed", "20230306"]) == 0
    for name in ("events.jsonl", "series.csv", "report.json", "digest.txt"):
        assert (tmp_path / name).read_bytes() == (demo_run / name).read_bytes()


def test_simulate_missing_file(capsys, tmp_path):
    code, _, err = call(capsys, "simulate", "--scenario", str(tmp_path / "nope.json"), "--out", str(tmp_path))
    assert code == 1 and "cannot read scenario" in err


def test_verify_ok(capsys, demo_run):
    code, out, _ = call(capsys, "verify", "--log", str(demo_run / "events.jsonl"))
    assert code == 0
    assert json.loads(out)["digest"] == (demo_run / "digest.txt").read_text().strip()


def test_verify_edited_mint(capsys, tmp_path, demo_run):
    lines = (demo_run / "events.jsonl").read_text().splitlines(keepends=True)
    rec = json.loads(lines[0])
    rec["deposit"] = "2.000000000000000000"
    lines[0] = json.dumps(rec, separators=(",", ":")) + "\n"
    bad = tmp_path / "bad.jsonl"
    bad.write_text("".join(lines))
    code, _, err = call(capsys, "verify", "--log", str(bad))
    assert code == 2
    assert json.loads(err)["invariant"] == "supply conservation"


def test_verify_overspending_burn(capsys, tmp_path, demo_run):
    lines = (demo_run / "events.jsonl").read_text().splitlines(keepends=True)
    i = next(i for i, line in enumerate(lines) if '"kind":"burn"' in line)
    rec = json.loads(lines[i])
    rec["coins"] = "9" * 30 + ".000000000000000000"
    lines[i] = json.dumps(rec, separators=(",", ":")) + "\n"
    bad = tmp_path / "over.jsonl"
    bad.write_text("".join(lines))
    code, _, err = call(capsys, "verify", "--log", str(bad))
    assert code == 2
    assert json.loads(err)["invariant"] == "supply conservation"


def test_verify_truncated(capsys, tmp_path, demo_run):
    text = (demo_run / "events.jsonl").read_text()
    bad = tmp_path / "cut.jsonl"
    bad.write_text(text[: text.index("\n", 500) - 20] + "\n")
    code, _, err = call(capsys, "verify", "--log", str(bad))
    assert code == 1
    assert json.loads(err)["error"] == "MalformedLog"


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "aims", "price", "--at", "2024-03-05"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout == "0.000000064428653000\n"
