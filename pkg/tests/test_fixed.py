from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from aims.errors import DecimalPrecisionError
from aims.fixed import ONE, FixedDecimal


@pytest.mark.parametrize(
    "text, raw",
    [
        ("0.00000001", 10**10),
        ("1", ONE),
        ("1.000000", ONE),
        ("-2.5", -25 * 10**17),
        ("0.000000000000000001", 1),
        ("6.4428653", 64428653 * 10**11),
    ],
)
def test_parse(text, raw):
    assert FixedDecimal.parse(text).raw == raw


@pytest.mark.parametrize("text", ["", "1.", ".5", "1e-8", "1_000", " 1", "abc", "--1", "+1"])
def test_parse_rejects_non_literals(text):
    with pytest.raises(ValueError):
        FixedDecimal.parse(text)


def test_nineteen_fractional_digits_rejected():
    with pytest.raises(DecimalPrecisionError):
        FixedDecimal.parse("0.1234567890123456789")


def test_floats_refused():
    with pytest.raises(TypeError):
        FixedDecimal.parse(0.1)
    with pytest.raises(TypeError):
        FixedDecimal(1.0)


def test_format_is_scale_18_without_exponent():
    assert str(FixedDecimal.parse("0.00000001")) == "0.000000010000000000"
    assert str(FixedDecimal.parse("-0.5")) == "-0.500000000000000000"
    assert str(FixedDecimal(0)) == "0.000000000000000000"


@given(st.integers(min_value=-(10**40), max_value=10**40))
def test_roundtrip(raw):
    x = FixedDecimal(raw)
    assert FixedDecimal.parse(str(x)) == x


@given(
    st.integers(min_value=-(10**30), max_value=10**30),
    st.integers(min_value=1, max_value=10**30),
)
def test_div_floor_matches_rational_floor(a, b):
    got = FixedDecimal(a).div_floor(FixedDecimal(b))
    exact = Fraction(a, b) * ONE
    assert got.raw == exact.numerator // exact.denominator


@given(st.integers(min_value=-(10**30), max_value=10**30), st.integers(min_value=-(10**30), max_value=10**30))
def test_mul_floor_matches_rational_floor(a, b):
    exact = Fraction(a * b, ONE)
    assert FixedDecimal(a).mul_floor(FixedDecimal(b)).raw == exact.numerator // exact.denominator


def test_ordering_and_arithmetic():
    a, b = FixedDecimal.parse("1.5"), FixedDecimal.parse("0.25")
    assert a + b == FixedDecimal.parse("1.75")
    assert a - b == FixedDecimal.parse("1.25")
    assert b < a and -a < b
    assert not FixedDecimal(0)
