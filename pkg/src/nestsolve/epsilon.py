"""Order-by-order Laurent coefficients of recurrence solutions in eps."""

from dataclasses import dataclass
from fractions import Fraction

from .algebra import RationalFunction
from .recurrence import (Inconclusive, NotNestedSum, RecurrenceEquation, Solved,
                         solution_space, solve_recurrence)
from .algebra import nonneg_integer_roots
from .sums import Expr, ZERO_E, canonicalize
from .verify import DEFAULT_CHECK_WINDOW, SelfCheckFailed, unroll_eps

EPS = RationalFunction.var("eps")


class RhsTooShallow(ValueError):
    def __init__(self, needed, name=None):
        who = f" of {name}" if name else ""
        super().__init__(f"rhs{who} must be expanded up to eps-order {needed}")
        self.needed = needed
        self.name = name


class LaurentExpansion:
    """eps^o C_o + ... + eps^u C_u + O(eps^(u+1)) with Expr coefficients."""

    def __init__(self, start, coefficients, truncation=None, canonical=True):
        self.start = int(start)
        coeffs = [Expr.coerce(c) for c in coefficients]
        if canonical:
            coeffs = [canonicalize(c) for c in coeffs]
        self.coefficients = coeffs
        self.truncation = self.start + len(coeffs) - 1 if truncation is None else int(truncation)
        if self.truncation < self.start + len(coeffs) - 1:
            self.coefficients = coeffs[: self.truncation - self.start + 1]

    @classmethod
    def zero(cls, start, truncation):
        return cls(start, [], truncation)

    def coefficient(self, j):
        if j > self.truncation:
            raise RhsTooShallow(j)
        k = j - self.start
        if k < 0 or k >= len(self.coefficients):
            return ZERO_E
        return self.coefficients[k]

    def orders(self):
        return range(self.start, self.truncation + 1)

    def shift_order(self, s):
        return LaurentExpansion(self.start + s, self.coefficients, self.truncation + s, canonical=False)

    def truncate(self, u):
        return LaurentExpansion(self.start, self.coefficients[: max(0, u - self.start + 1)],
                                min(u, self.truncation), canonical=False)

    def shift(self, k):
        return LaurentExpansion(self.start, [c.shift(k) for c in self.coefficients],
                                self.truncation)

    def evaluate(self, n):
        return {j: self.coefficient(j).evaluate(n) for j in self.orders()}

    def __eq__(self, o):
        if not isinstance(o, LaurentExpansion) or o.truncation != self.truncation:
            return False
        lo = min(self.start, o.start)
        return all(self.coefficient(j) == o.coefficient(j) for j in range(lo, self.truncation + 1))

    def __hash__(self):
        return hash((self.truncation, tuple(self.coefficient(j) for j in self.orders())))

    def __str__(self):
        parts = []
        for j in self.orders():
            c = self.coefficient(j)
            if c:
                parts.append(f"eps^({j})*({c})")
        parts.append(f"O(eps^({self.truncation + 1}))")
        return " + ".join(parts)

    __repr__ = __str__


@dataclass
class EpsRecurrence:
    coefficients: tuple
    rhs: LaurentExpansion

    def __post_init__(self):
        self.coefficients = tuple(c if isinstance(c, RationalFunction) else RationalFunction.const(c)
                                  for c in self.coefficients)
        if not any(self.coefficients):
            raise ValueError("all coefficients vanish")


def normalize_epsilon(eq):
    """Multiply by eps^s so every coefficient is pole free at eps = 0 and
    some coefficient survives eps = 0."""
    s = -min(c.eps_valuation() for c in eq.coefficients if c)
    if s == 0:
        return eq, 0
    f = EPS**s
    return EpsRecurrence([c * f for c in eq.coefficients], eq.rhs.shift_order(s)), s


def _series(eq, count):
    return [c.eps_series(count) if c else None for c in eq.coefficients]


def _leading(eq):
    out = [c.eval_eps_zero() if c else RationalFunction.const(0) for c in eq.coefficients]
    while len(out) > 1 and not out[-1]:
        out.pop()
    return out


def constant_term_recurrence(eq, order=None):
    eq, _ = normalize_epsilon(eq)
    o = eq.rhs.start if order is None else order
    return RecurrenceEquation(_leading(eq), eq.rhs.coefficient(o))


def peel_order(eq, known, j):
    """Recurrence for C_j once C_o..C_{j-1} (``known``) are fixed."""
    eq, _ = normalize_epsilon(eq)
    lead = _leading(eq)
    depth = max(j - known.start + 1, 1)
    ser = _series(eq, depth)
    rhs = eq.rhs.coefficient(j)
    for k in range(1, depth):
        prev = known.coefficient(j - k)
        if not prev:
            continue
        for i, s in enumerate(ser):
            if s is not None and s[k]:
                rhs = rhs - prev.shift(i).scale(s[k])
    return RecurrenceEquation(lead, canonicalize(rhs))


def initial_value_demand(eq):
    """(first index mu', count d') of the initial values per order."""
    eq, _ = normalize_epsilon(eq)
    lead = _leading(eq)
    dd = len(lead) - 1
    if dd == 0:
        return 0, 0
    space = solution_space(RecurrenceEquation(lead))
    mu = space.valid_from
    R = nonneg_integer_roots(lead[-1]) if not lead[-1].is_const() else set()
    if R:
        mu = max(mu, 1 + max(R))
    return mu, dd


def generate_expansion(eq, ivs, window, min_index=0, check_window=DEFAULT_CHECK_WINDOW):
    """Laurent coefficients C_o..C_u of the solution, or the failure object
    (NotNestedSum / Inconclusive) of the first order that fails."""
    o, u = window
    eqn, s = normalize_epsilon(eq)
    if eqn.rhs.truncation < u:
        raise RhsTooShallow(u - s)
    for j in range(eqn.rhs.start, o):
        if eqn.rhs.coefficient(j):
            raise ValueError(f"rhs has a nonzero eps^{j - s} term below the requested start order")
    known = LaurentExpansion(o, [], o - 1)
    starts = []
    for j in range(o, u + 1):
        peq = peel_order(eqn, known, j)
        res = solve_recurrence(peq, ivs.get(j, {}), min_index, check_window, order=j)
        if not isinstance(res, Solved):
            res.order = j
            return res
        starts.append(res.window[0] if res.window else min_index)
        known = LaurentExpansion(o, known.coefficients + [res.expression], j, canonical=False)
    _self_check(eqn, known, ivs, window, max(starts), check_window)
    return known


def _self_check(eq, exp, ivs, window, start, check_window):
    o, u = window
    lead = _leading(eq)
    dd = len(lead) - 1
    table = {}
    for j in range(o, u + 1):
        row = {}
        for n in range(start, start + dd):
            v = ivs.get(j, {}).get(n)
            row[n] = Fraction(v) if v is not None else exp.coefficient(j).evaluate(n)
        table[j] = row
    if dd == 0:
        return
    up = start + dd - 1 + check_window
    got = unroll_eps(eq.coefficients, eq.rhs, table, window, up, start)
    for j in range(o, u + 1):
        c = exp.coefficient(j)
        for n in range(start, up + 1):
            if c.evaluate(n) != got[j][n]:
                raise SelfCheckFailed(f"eps-order {j}", n)


def linear_combination(terms, upto, start=None):
    """sum of coef(eps,N) * E(N+shift) for (coef, E, shift) in ``terms``,
    expanded from ``start`` up to order ``upto``."""
    prepared = []
    for coef, E, sh in terms:
        if not coef:
            continue
        v = coef.eps_valuation()
        count = upto - v - E.start + 1
        if count > 0:
            prepared.append((v, (coef * EPS ** (-v)).eps_series(count), E, sh))
    if start is None:
        start = min((v + E.start for v, _, E, _ in prepared), default=upto + 1)
    out = []
    for j in range(start, upto + 1):
        acc = ZERO_E
        for v, ser, E, sh in prepared:
            count = j - v - E.start + 1
            for t in range(max(count, 0)):
                jj = j - v - t
                if ser[t]:
                    acc = acc + E.coefficient(jj).shift(sh).scale(ser[t])
        out.append(canonicalize(acc))
    return LaurentExpansion(start, out, upto, canonical=False)


__all__ = ["EpsRecurrence", "Inconclusive", "LaurentExpansion", "NotNestedSum", "RhsTooShallow",
           "constant_term_recurrence", "generate_expansion", "initial_value_demand",
           "linear_combination", "normalize_epsilon", "peel_order"]
