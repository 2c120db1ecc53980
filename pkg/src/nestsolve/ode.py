"""Linear ODE systems in x to difference systems for the power-series
coefficients I(N) of x^N."""

import logging
from dataclasses import dataclass
from fractions import Fraction

from .algebra import RING, RationalFunction, integer_normalizer, poly_lcm
from .epsilon import RhsTooShallow, linear_combination
from .uncoupling import CoupledDifferenceSystem, analyze, solve_coupled, uncouple

log = logging.getLogger(__name__)

ZERO = RationalFunction.const(0)
ONE = RationalFunction.const(1)
NV = RationalFunction.var("N")
EPSV = RationalFunction.var("eps")


class BoundaryInconsistent(ValueError):
    def __init__(self, index, row=None):
        where = f" (equation {row + 1})" if row is not None else ""
        super().__init__(f"initial values violate the boundary equation at x^{index}{where}")
        self.index = index
        self.row = row


@dataclass
class CoupledDifferentialSystem:
    """sum_k A_k D_x^k Y(x) = rhat(x); rhs[i] holds the coefficients of x^N
    of rhat_i as a LaurentExpansion in eps (or None)."""
    matrices: list
    rhs: list = None
    names: list = None

    def __post_init__(self):
        self.matrices = [[[c if isinstance(c, RationalFunction) else RationalFunction.const(c)
                           for c in row] for row in A] for A in self.matrices]
        n = len(self.matrices[0])
        for A in self.matrices:
            for row in A:
                for c in row:
                    if not c.free_of("N"):
                        raise ValueError("differential system entries may not depend on N")
        if self.names is None:
            self.names = [f"I{i + 1}" for i in range(n)]

    @property
    def size(self):
        return len(self.matrices[0])


@dataclass
class Boundary:
    """sum coef(eps) * I_c(idx) = sum coef(eps) * rhat_i(idx) from x^power."""
    row: int
    power: int
    lhs: dict       # (component, index) -> RationalFunction(eps)
    rhs: dict       # (rhs, index) -> RationalFunction(eps)


@dataclass
class Conversion:
    system: CoupledDifferenceSystem
    rhs_forms: list     # per row: {("R", i, s): coef} over the rhat_i coefficient sequences
    boundary: list
    multipliers: list   # row multipliers used to clear denominators
    valid_from: int     # first N where every rhs shift is a valid index


def _x_parts(p):
    """{power of x: polynomial in eps} of a polynomial in (eps, x)."""
    out = {}
    for (eN, ex, ee), c in p.terms():
        if eN:
            raise ValueError("unexpected N in a differential coefficient")
        out[ex] = out.get(ex, RING.zero) + RING({(0, 0, ee): c})
    return {k: RationalFunction(v, RING.one, reduced=True) for k, v in out.items() if v}


def _falling(t, k):
    f = ONE
    for j in range(k):
        f = f * (NV + (t - j))
    return f


def term_to_operator(a, k):
    """Fragment {shift t: coefficient(eps,N)} of a(eps,x) * D^k I(x) at x^N:
    the coefficient of I(N+t)."""
    a = a if isinstance(a, RationalFunction) else RationalFunction.const(a)
    if not a.is_poly():
        raise ValueError("clear denominators first")
    out = {}
    for p, c in _x_parts(a.num).items():
        t = k - p
        v = c * _falling(t, k)
        w = out.get(t, ZERO) + v
        if w:
            out[t] = w
        else:
            out.pop(t, None)
    return out


def ode_to_recurrence(sys):
    """Coefficient comparison at x^N, one global shift per equation so that
    every unknown appears with a nonnegative shift."""
    n = sys.size
    rows = []
    forms = []
    boundary = []
    mults = []
    for r in range(n):
        entries = [A[r][c] for A in sys.matrices for c in range(n) if A[r][c]]
        m = poly_lcm([e.den for e in entries])
        mr = RationalFunction(m, RING.one)
        t = integer_normalizer([(e * mr).num for e in entries])
        mr = mr * RationalFunction.const(t)
        log.debug("row %d multiplied by %s", r + 1, mr)
        mults.append(mr)
        frag = {}
        for k, A in enumerate(sys.matrices):
            for c in range(n):
                if A[r][c]:
                    for s, v in term_to_operator(A[r][c] * mr, k).items():
                        frag[(c, s)] = frag.get((c, s), ZERO) + v
        frag = {key: v for key, v in frag.items() if v}
        rfrag = {-p: v for p, v in _x_parts(mr.num).items()}
        sigma = -min(s for _, s in frag)
        rows.append({(c, s + sigma): v.shift(sigma) for (c, s), v in frag.items()})
        forms.append({("R", r, s + sigma): v for s, v in rfrag.items()})
        # x^M for M < sigma: equations with some negative indices
        for M in range(sigma):
            lhs = {}
            for (c, s), v in frag.items():
                idx = M + s
                if idx >= 0:
                    val = v.subs("N", M)
                    if val:
                        lhs[(c, idx)] = lhs.get((c, idx), ZERO) + val
            rhs = {(r, M + s): v for s, v in rfrag.items() if M + s >= 0}
            boundary.append(Boundary(r, M, lhs, rhs))
    order = max(s for row in rows for _, s in row)
    mats = [[[ZERO] * n for _ in range(n)] for _ in range(order + 1)]
    for r, row in enumerate(rows):
        for (c, s), v in row.items():
            mats[s][r][c] = v
    valid = max([0] + [-s for f in forms for (_, _, s) in f])
    return Conversion(CoupledDifferenceSystem(mats, None, list(sys.names)), forms, boundary, mults, valid)


def converted_rhs(conv, rhs, upto):
    """rhs expansions r'_i(N) of the difference system from the x^N
    coefficients of rhat_i."""
    out = []
    for f, u in zip(conv.rhs_forms, upto):
        terms = []
        for (_, i, s), c in f.items():
            if rhs[i] is None:
                raise RhsTooShallow(u, f"r{i + 1}")
            terms.append((c, rhs[i], s))
        out.append(linear_combination(terms, u) if terms else None)
    return out


def _laurent_value(E, n):
    return {j: E.coefficient(j).evaluate(n) for j in E.orders()}


def _product_coefficient(coef, v, j):
    """eps^j coefficient of coef(eps) * sum_k v[k] eps^k (v zero below its
    lowest order)."""
    vc = coef.eps_valuation()
    lo = min(v)
    count = j - vc - lo + 1
    if count <= 0:
        return Fraction(0)
    ser = (coef * EPSV ** (-vc)).eps_series(count)
    total = Fraction(0)
    for t, ct in enumerate(ser):
        k = j - vc - t
        if ct and k in v:
            total += ct.const_value() * v[k]
    return total


def check_boundary(conv, values, rhs, orders):
    """Check the boundary equations order by order wherever every value is
    known.  ``values(c, idx)`` returns {order: value} or None.  Returns the
    checked (row, power, highest order) triples."""
    o, u = orders
    checked = []
    for b in conv.boundary:
        terms = []
        for (c, idx), coef in b.lhs.items():
            v = values(c, idx)
            if v is None:
                break
            terms.append((coef, v))
        else:
            for (i, idx), coef in b.rhs.items():
                if rhs[i] is None:
                    break
                try:
                    terms.append((-coef, _laurent_value(rhs[i], idx)))
                except ArithmeticError:
                    break
            else:
                top = min([u] + [coef.eps_valuation() + max(v) for coef, v in terms])
                for j in range(o, top + 1):
                    if sum(_product_coefficient(coef, v, j) for coef, v in terms) != 0:
                        raise BoundaryInconsistent(b.power, b.row)
                checked.append((b.row, b.power, top))
    return checked


def solve_coupled_ode(sys, ivs, targets, start, min_index=0, check_window=15):
    """Laurent coefficients of the power-series coefficients of all
    components; ``ivs`` is {component: {order: {N: value}}}."""
    conv = ode_to_recurrence(sys)

    def given(c, idx):
        return {j: tab[idx] for j, tab in ivs.get(c, {}).items() if idx in tab} or None

    # supplied values alone may already contradict a boundary equation
    check_boundary(conv, given, sys.rhs, (start, min(targets)))
    dsys = conv.system
    form = uncouple(dsys)
    plan = analyze(form, targets)
    depth = [w if w is not None else start for w in plan.rhs_depth[: dsys.size]]
    need = [None] * dsys.size
    for f, w in zip(conv.rhs_forms, depth):
        for (_, i, s), c in f.items():
            j = w - c.eps_valuation()
            need[i] = j if need[i] is None else max(need[i], j)
    for i, j in enumerate(need):
        if j is not None and (sys.rhs is None or sys.rhs[i] is None or sys.rhs[i].truncation < j):
            raise RhsTooShallow(j, f"r{i + 1}")
    rp = converted_rhs(conv, sys.rhs, depth)
    res = solve_coupled(dsys, rp, ivs, targets, start, max(min_index, conv.valid_from),
                        check_window, form=form)
    if not isinstance(res, list):
        return res

    def values(c, idx):
        known = given(c, idx)
        if known:
            return known
        if idx < max(min_index, conv.valid_from):
            return None
        return _laurent_value(res[c], idx)

    check_boundary(conv, values, sys.rhs, (start, min(targets)))
    return res


__all__ = ["Boundary", "BoundaryInconsistent", "Conversion", "CoupledDifferentialSystem",
           "check_boundary", "converted_rhs", "ode_to_recurrence", "solve_coupled_ode",
           "term_to_operator"]
