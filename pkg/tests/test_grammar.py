"""Expression grammar: parsing, printing, round trips, error positions."""

import random

import pytest

from hhokit.errors import ExpressionError
from hhokit.grammar import format_diffpoly, format_ratfunc, parse, parse_scalar

from genutil import rand_diffpoly, rand_ratfunc


def test_names_and_jets():
    assert parse("u1_x3") == parse("u1_x * 0 + u1_x3")
    assert str(parse("u2_xx")) == "u2_xx"
    assert str(parse("p1_x12")) == "p1_x12"


def test_rationals_and_powers():
    assert parse("3/4") == parse("6/8")
    assert parse("(u1 + u2)^2") == parse("u1^2 + 2*u1*u2 + u2^2")
    assert parse("2^3") == parse("8")


def test_unary_signs():
    assert parse("-u1 + u1").is_zero
    assert parse("--u1") == parse("u1")
    assert parse("3 - -2") == parse("5")


def test_division_restrictions():
    parse("u1/u2")
    with pytest.raises(ExpressionError):
        parse("1/p1")
    with pytest.raises(ExpressionError):
        parse("u1/u1_x")


def test_error_positions():
    with pytest.raises(ExpressionError) as err:
        parse("u1 + $")
    assert err.value.col == 6
    with pytest.raises(ExpressionError) as err:
        parse("u1 + ")
    with pytest.raises(ExpressionError) as err:
        parse("u0")
    with pytest.raises(ExpressionError) as err:
        parse("r1_x")
    with pytest.raises(ExpressionError) as err:
        parse("u1 u2")
    assert err.value.col == 4


def test_exponent_must_be_integer():
    with pytest.raises(ExpressionError):
        parse("u1^u2")
    with pytest.raises(ExpressionError):
        parse("u1^(2)")


def test_roundtrip_fixed_examples():
    for text in [
        "p1_x3 + 2/3*u1*p1_x + 1/3*u1_x*p1",
        "(u1 + u2)/(u1 - u2)*p1",
        "u1_x^2*p2_xx - 7/5*u2*r1",
        "(c1*u2 + c3*u3 + c8)*u1 + c10*u3 - c1*u4 - c2",
        "0",
    ]:
        e = parse(text)
        assert parse(format_diffpoly(e)) == e


def test_roundtrip_random():
    rng = random.Random(3)
    for _ in range(200):
        e = rand_diffpoly(rng, nvars=3, slots=2)
        assert parse(format_diffpoly(e)) == e


def test_roundtrip_scalar_random():
    rng = random.Random(4)
    for _ in range(100):
        r = rand_ratfunc(rng, 3)
        assert parse_scalar(format_ratfunc(r)) == r


def test_parse_scalar_rejects_jets():
    with pytest.raises(ExpressionError):
        parse_scalar("u1_x")
