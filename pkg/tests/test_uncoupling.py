import random
from fractions import Fraction

import pytest

from nestsolve.algebra import RationalFunction
from nestsolve.epsilon import LaurentExpansion as L, RhsTooShallow, generate_expansion, linear_combination
from nestsolve.sums import canonicalize
from nestsolve.syntax import parse_expr as E, parse_ratfun as R
from nestsolve.uncoupling import CoupledDifferenceSystem, analyze, solve_coupled, to_first_order, uncouple
from nestsolve.verify import unroll_system

import golden as g
from planted import planted_system

EPS = RationalFunction.var("eps")


def system(*mats):
    return CoupledDifferenceSystem([[[R(c) for c in row] for row in M] for M in mats])


def unit_ratio(op, ref):
    """The common factor op_i / ref_i, or None if there is none."""
    if len(op) != len(ref):
        return None
    ratios = {a / b for a, b in zip(op, ref) if b}
    if any(a and not b for a, b in zip(op, ref)) or len(ratios) != 1:
        return None
    return ratios.pop()


def test_first_order_unchanged():
    s = g.coupled_system()
    t = to_first_order(s)
    assert t.matrices == s.matrices


def test_companion_embedding():
    # I(N+2) - I(N+1) - N I(N) = 0 as a 1x1 system of order 2
    s = system([["N"]], [["1"]], [["-1"]])
    t = to_first_order(s)
    assert t.size == 2 and t.order == 1
    form = uncouple(s)
    assert len(form.blocks) == 1 and len(form.blocks[0].operator) == 3
    assert unit_ratio(form.blocks[0].operator, [R("N"), R("1"), R("-1")]) is not None


def test_golden_pivot_operator():
    form = uncouple(g.coupled_system())
    assert form.pivots() == [0]
    ratio = unit_ratio(form.blocks[0].operator, list(g.eps_equation().coefficients))
    assert ratio is not None and ratio != 0
    assert set(form.backsub) == {0, 1, 2}


def test_golden_plan():
    form = uncouple(g.coupled_system())
    plan = analyze(form, [-2, -2, -2])
    assert plan.as_list(form.names) == [[["I1", 3, -2]], [-2, -2, -2], []]


def test_diagonal():
    form = uncouple(system([["-N", "0"], ["0", "-2"]], [["1", "0"], ["0", "1"]]))
    assert form.pivots() == [0, 1]
    assert all(len(b.operator) == 2 for b in form.blocks)
    plan = analyze(form, [0, 0])
    assert [m for _, m, _, _ in plan.pivots] == [1, 1]


def test_swap():
    form = uncouple(system([["0", "-1"], ["-1", "0"]], [["1", "0"], ["0", "1"]]))
    assert form.pivots() == [0]
    assert unit_ratio(form.blocks[0].operator, [R("-1"), R("0"), R("1")]) is not None


def test_singular_leading_matrix():
    # I1(N) - I2(N) = r1 and I2(N+1) - I2(N) = r2
    s = system([["1", "-1"], ["0", "-1"]], [["0", "0"], ["0", "1"]])
    form = uncouple(s)
    rhs = [L(0, [E("S[1](N)")]), L(0, [E("1/(N+1)")])]
    q = form.pivots()[0]
    out = solve_coupled(s, rhs, {q: {0: {0: 0}}}, [0, 0], 0)
    assert out[1].coefficient(0) == E("S[1](N)")
    assert out[0].coefficient(0) == E("2*S[1](N)")
    assert len(form.blocks) == 1


def test_row_permutation_invariance():
    s = g.coupled_system()
    ref = uncouple(s).blocks[0].operator
    for perm in ([1, 0, 2], [2, 1, 0], [1, 2, 0]):
        p = CoupledDifferenceSystem([[A[i] for i in perm] for A in s.matrices])
        form = uncouple(p)
        assert form.pivots()[0] == 0
        assert unit_ratio(form.blocks[0].operator, ref) is not None


# an eps^-1 coupling through I1(N+1): I2 needs one more order of I1

COUPLING = (["-1", "0"], ["0", "1"]), (["1", "0"], ["-1/eps", "0"])


def coupling_inputs():
    s = system(*COUPLING)
    # planted I1 = eps^-2 S1(N) + eps^-1 N, I2 = r2 + I1(N+1)/eps
    rhs = [L(-3, [E("0"), E("1/(N+1)"), E("1")]), L(-3, [E("1"), E("0")])]
    ivs = {0: {-3: {0: 0}, -2: {0: 0}, -1: {0: 0}}}
    return s, rhs, ivs


def test_eps_coupling_plan():
    s, _, _ = coupling_inputs()
    form = uncouple(s)
    plan = analyze(form, [-2, -2])
    assert plan.pivots[0][2] == -1
    assert plan.as_list(form.names)[0] == [["I1", 1, -1]]


def test_eps_coupling_solution():
    s, rhs, ivs = coupling_inputs()
    out = solve_coupled(s, rhs, ivs, [-2, -2], -3)
    assert out[0].coefficient(-2) == E("S[1](N)")
    assert out[1].coefficient(-3) == canonicalize(E("1 + S[1](N) + 1/(N+1)"))
    assert out[1].coefficient(-2) == E("N+1")


def test_eps_coupling_shallow_order_insufficient():
    # with I1 known only through eps^-2 the eps^-2 coefficient of I2 is not
    # determined; with eps^-1 it is
    s, rhs, ivs = coupling_inputs()
    form = uncouple(s)
    shallow = L(-3, [E("0"), E("S[1](N)")], truncation=-2)
    deep = L(-3, [E("0"), E("S[1](N)"), E("N")], truncation=-1)
    terms = lambda I1: [(R("1/eps"), I1, 1), (R("1"), rhs[1], 0)]
    with pytest.raises(RhsTooShallow):
        linear_combination(terms(shallow), -2)
    assert linear_combination(terms(deep), -2).coefficient(-2) == E("N+1")
    assert 1 in form.backsub


def test_golden_solution():
    out = solve_coupled(g.coupled_system(), g.coupled_rhs(), g.coupled_ivs(), [-2, -2, -2], -3,
                        min_index=1)
    for i, row in enumerate(g.COUPLED_OUT):
        for j, s in zip((-3, -2), row):
            assert out[i].coefficient(j) == canonicalize(E(s))
    assert out[1].coefficient(-3) == E("4/3") and out[1].coefficient(-2) == E("-2")


def test_scalar_system_matches_expansion():
    e = g.eps_equation()
    s = CoupledDifferenceSystem([[[c]] for c in e.coefficients])
    out = solve_coupled(s, [e.rhs], {0: g.EPS_IVS}, [-2], -3, min_index=1)
    x = generate_expansion(e, g.EPS_IVS, (-3, -2), min_index=1)
    assert [out[0].coefficient(j) for j in (-3, -2)] == [x.coefficient(j) for j in (-3, -2)]


# pivot relation on forward-unrolled values, no solving involved

def _series_value(coef, values, j):
    """eps^j coefficient of coef(eps) * sum_k values[k] eps^k."""
    if not coef:
        return Fraction(0)
    v = coef.eps_valuation()
    lo = min(values)
    count = j - v - lo + 1
    if count <= 0:
        return Fraction(0)
    ser = (coef * EPS ** (-v)).eps_series(count)
    return sum((c.const_value() * values.get(j - v - t, 0) for t, c in enumerate(ser) if c), Fraction(0))


def _eval_form(form, n, j, pivots, rhs):
    total = Fraction(0)
    for (kind, i, s), coef in form.items():
        c = coef.subs("N", n)
        if kind == "P":
            vals = {o: pivots[o][n + s][i] for o in pivots}
        else:
            vals = {o: rhs[i].coefficient(o).evaluate(n + s) for o in rhs[i].orders()}
        total += _series_value(c, vals, j)
    return total


@pytest.mark.parametrize("seed", range(4))
def test_pivot_relation_on_unrolled_values(seed):
    rng = random.Random(100 + seed)
    s, rhs, Y = planted_system(rng, 2 + seed % 2)
    n = s.size
    init = {j: {0: [Y[c].coefficient(j).evaluate(0) for c in range(n)]} for j in (-1, 0)}
    tab = unroll_system(s.matrices, rhs, init, (-1, 0), 25, 0)
    form = uncouple(s)
    checked = 0
    for b in form.blocks:
        op = {("P", b.index, t): a for t, a in enumerate(b.operator) if a}
        # an order j involves the unrolled orders up to j - (lowest valuation)
        low = min(c.eps_valuation() for f in (op, b.recipe) for c in f.values() if c)
        for j in (-1, 0):
            if j - low > 0:
                continue
            for nn in range(1, 21):
                assert _eval_form(op, nn, j, tab, rhs) == _eval_form(b.recipe, nn, j, tab, rhs)
                checked += 1
    assert checked >= 20


def test_trim_low_orders_pointwise():
    from nestsolve.uncoupling import _trim
    # zero for N >= 1 without being canonically zero
    ghost = E("Prod(k,1,N,k-1)")
    x = L(-2, [ghost, E("S[1](N)")], truncation=-1)
    assert _trim(x, -1, -1, "I1", 1, 10).coefficient(-1) == E("S[1](N)")
    with pytest.raises(ValueError):
        _trim(x, -1, -1, "I1", 0, 10)
