from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nestsolve.algebra import RationalFunction
from nestsolve.sums import (Expr, HarmonicSum, S, canonicalize, detect_harmonic, evaluate, hyper,
                            nested_sum, quasi_shuffle_product, shift)
from nestsolve.syntax import parse_expr as E

from golden import SIMPLE_SOLUTION


def h_direct(word, n):
    """Harmonic sum straight from the definition."""
    if not word:
        return Fraction(1)
    a, rest = word[0], word[1:]
    total = Fraction(0)
    for i in range(1, n + 1):
        sign = (-1) ** i if a < 0 else 1
        total += Fraction(sign, i ** abs(a)) * h_direct(rest, i)
    return total


def test_evaluate():
    assert evaluate(S(1), 3) == Fraction(11, 6)
    assert E(SIMPLE_SOLUTION).evaluate(1) == 5
    assert E(SIMPLE_SOLUTION).evaluate(3) == Fraction(169, 36)
    assert E("S[-2,1](N)").evaluate(3) == h_direct((-2, 1), 3)


def test_shift_examples():
    assert shift(S(1), 1) == S(1) + E("1/(N+1)")
    assert canonicalize(shift(S(2), 2)) == canonicalize(E("S[2](N) + 1/(N+1)^2 + 1/(N+2)^2"))
    want = E("S[1,1](N) + S[1](N)/(N+1) + 1/(N+1)^2")
    got = shift(E("S[1,1](N)"), 1)
    assert got == want
    for n in range(1, 11):
        assert got.evaluate(n) == h_direct((1, 1), n + 1)


def test_quasi_shuffle_examples():
    assert quasi_shuffle_product(S(1), S(1)) == 2 * E("S[1,1](N)") - S(2)
    assert quasi_shuffle_product(S(1), S(2)) == E("S[1,2](N) + S[2,1](N) - S[3](N)")
    assert quasi_shuffle_product(S(3), 1) == S(3)
    for n in range(1, 11):
        assert quasi_shuffle_product(S(1), S(2)).evaluate(n) == h_direct((1,), n) * h_direct((2,), n)
    with pytest.raises(TypeError):
        quasi_shuffle_product(S(1) + S(2), S(1))


def test_canonicalize_basis_examples():
    a = E("-Sum(i,1,N,Sum(j,1,i,1/(j*(1+j))))/(N+1)")
    c = canonicalize(a)
    assert c == canonicalize(E("1/(N+1)^2 + S[1](N)/(N+1) - 1"))
    assert all(c.evaluate(n) == a.evaluate(n) for n in range(1, 16))
    assert canonicalize(E("-Sum(i,1,N,1)/(N+1)")) == E("-N/(N+1)")
    f = E("(2*N+1)/(N*(N+1))")
    assert canonicalize(f) == f


def test_lower_bound_normalized():
    c = canonicalize(E("Sum(k,3,N,1/k)"))
    assert c == E("S[1](N) - 3/2")
    assert all(c.evaluate(n) == sum(Fraction(1, k) for k in range(3, n + 1)) for n in range(2, 12))


def test_detect_harmonic():
    assert detect_harmonic(E("Sum(i,1,N,1/i)")) == HarmonicSum((1,))
    assert detect_harmonic(E("Sum(i,1,N,(-1)^i/i^2)")) == HarmonicSum((-2,))
    assert detect_harmonic(E("Sum(i,1,N,i)")) is None


def test_product_telescopes():
    assert canonicalize(E("Prod(k,1,N,(k+1)/k)")) == E("N+1")


def test_independent_monomials():
    forms = [canonicalize(E(s)) for s in ("S[1](N)^2", "S[2](N)", "S[1,1](N)")]
    keys = [frozenset(f.terms) for f in forms]
    assert len({k for k in keys}) == 3
    assert keys[1] != keys[2] and keys[0] != keys[1]


# random expressions

words = st.lists(st.sampled_from([1, 2, -1, -2, 3]), min_size=1, max_size=3).filter(
    lambda w: sum(abs(a) for a in w) <= 4).map(tuple)
coef = st.tuples(st.integers(-4, 4), st.integers(1, 4)).map(
    lambda t: RationalFunction.const(t[0]) / RationalFunction.from_coeffs([t[1], 1]))


@st.composite
def expressions(draw, depth=3):
    out = Expr.from_rf(draw(coef))
    for _ in range(draw(st.integers(1, 3))):
        kind = draw(st.sampled_from(["S", "sum", "prod"] if depth > 1 else ["S"]))
        c = draw(coef)
        if kind == "S":
            atom = S(*draw(words))
        elif kind == "sum":
            atom = nested_sum(1, draw(expressions(depth=depth - 1)))
        else:
            a, b = draw(st.integers(1, 3)), draw(st.integers(1, 3))
            atom = hyper(1, RationalFunction.from_coeffs([a, 1]) / RationalFunction.from_coeffs([b, 1]))
        out = out + atom * Expr.from_rf(c)
    return out


@settings(max_examples=40, deadline=None)
@given(expressions(), st.integers(0, 3))
def test_shift_property(e, k):
    s = shift(e, k)
    for n in range(0, 21 - k):
        assert s.evaluate(n) == e.evaluate(n + k)


@settings(max_examples=40, deadline=None)
@given(expressions())
def test_canonicalize_sound_and_idempotent(e):
    c = canonicalize(e)
    assert canonicalize(c) == c
    for n in range(1, 16):
        assert c.evaluate(n) == e.evaluate(n)


@settings(max_examples=60, deadline=None)
@given(words, words)
def test_quasi_shuffle_property(a, b):
    p = quasi_shuffle_product(HarmonicSum(a), HarmonicSum(b))
    for n in range(0, 21):
        assert p.evaluate(n) == h_direct(a, n) * h_direct(b, n)
