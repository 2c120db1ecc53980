from fractions import Fraction

import pytest

from nestsolve.sums import canonicalize
from nestsolve.syntax import ParseError, expr_to_str, parse_expr as E, parse_value

from golden import COUPLED_OUT, EPS_RHS, EXPANSION_M2, SIMPLE_PARTICULAR, SIMPLE_SOLUTION

SAMPLES = [SIMPLE_SOLUTION, SIMPLE_PARTICULAR, EXPANSION_M2, *EPS_RHS,
           *[s for row in COUPLED_OUT for s in row],
           "Sum(k,1,N, 1/(k+1)*Sum(j,1,k, S[1](j)/j))", "Prod(k,1,N, (k+2)/(3*k))",
           "S[-2,1](N) - 2^N*S[1](N)", "Sum(k,1,N, Prod(j,1,k, 1/j))"]


@pytest.mark.parametrize("text", SAMPLES)
def test_round_trip(text):
    e = E(text)
    s = expr_to_str(e)
    assert E(s) == e
    assert expr_to_str(E(s)) == s
    c = canonicalize(e)
    assert E(expr_to_str(c)) == c


def test_values():
    assert parse_value("-163/12") == Fraction(-163, 12)
    assert parse_value("5") == 5


@pytest.mark.parametrize("text,pos", [("S[0](N)", 0), ("N+*2", 2), ("(N+1", 4)])
def test_errors_carry_position(text, pos):
    with pytest.raises(ParseError) as e:
        E(text)
    assert e.value.pos == pos


def test_bound_variable_is_local():
    assert E("Sum(k,1,N, 1/k)").evaluate(4) == E("Sum(j,1,N, 1/j)").evaluate(4)
