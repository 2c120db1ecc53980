"""Scalar linear recurrences sum_i a_i(N) I(N+i) = r(N) with nested-sum rhs.

The homogeneous operator is split into first-order right factors
(S - r_1), (S - r_2), ... by repeated hypergeometric-solution search; each
factor contributes one basis solution with one more summation quantifier.
Variation of constants through the same chain gives a particular solution.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product as iproduct
from math import comb
from typing import Optional

from .algebra import (ONE, ZERO, RING, N as NPOLY, RationalFunction,
                      dense_coeffs, factor_poly, integer_normalizer, linear_roots, nonneg_integer_roots,
                      nullspace, poly_lcm, rank, solve_linear, to_qq)
from .sums import (Expr, ZERO_E, canonicalize, hyper, nested_sum,
                   pole_bound)
from .verify import DEFAULT_CHECK_WINDOW, SelfCheckFailed, unroll

NVAR = RationalFunction.var("N")


class InsufficientInitialValues(ValueError):
    def __init__(self, needed, order=None):
        lo, hi = needed
        where = f" at eps-order {order}" if order is not None else ""
        super().__init__(f"initial values needed for N={lo}..{hi}{where}")
        self.needed = needed
        self.order = order


class NotFactorized(ValueError):
    pass


@dataclass
class RecurrenceEquation:
    coefficients: tuple
    rhs: Expr = field(default_factory=lambda: ZERO_E)

    def __post_init__(self):
        coeffs = [c if isinstance(c, RationalFunction) else RationalFunction.const(c)
                  for c in self.coefficients]
        if not any(coeffs):
            raise ValueError("all coefficients vanish")
        while not coeffs[-1]:
            coeffs.pop()
        self.coefficients = tuple(coeffs)
        self.rhs = Expr.coerce(self.rhs)

    @property
    def order(self):
        return len(self.coefficients) - 1

    def homogeneous(self):
        return RecurrenceEquation(self.coefficients)

    def residual(self, f, n):
        """sum_i a_i(n) f(n+i) - rhs(n) for an evaluable f."""
        acc = -self.rhs.evaluate(n)
        for i, a in enumerate(self.coefficients):
            if a:
                acc += a(n) * f.evaluate(n + i)
        return acc


@dataclass
class SolutionSpace:
    basis: list
    particular: Optional[Expr]
    valid_from: int
    chain: tuple = ()
    remainder: tuple = ()


@dataclass
class Solved:
    expression: Expr
    constants: list
    valid_from: int
    window: tuple = ()
    space: Optional[SolutionSpace] = None


@dataclass
class NotNestedSum:
    witness: dict
    reason: str = ""
    order: Optional[int] = None
    component: Optional[str] = None


@dataclass
class Inconclusive:
    remainder: tuple
    reason: str = ""
    order: Optional[int] = None
    component: Optional[str] = None


# operator helpers

def clear_denominators(coeffs):
    """Primitive integer polynomial coefficients (positive leading
    coefficient) plus the rational multiplier used."""
    den = poly_lcm([c.den for c in coeffs if c])
    polys = [(c * RationalFunction(den, RING.one, reduced=True)).num if c else RING.zero
             for c in coeffs]
    g = RING.zero
    for p in polys:
        if p:
            g = p if not g else g.gcd(p)
    polys = [p.exquo(g) if p else p for p in polys]
    t = integer_normalizer([p for p in polys if p])
    if next(p for p in reversed(polys) if p).LC < 0:
        t = -t
    polys = [p.mul_ground(to_qq(t)) for p in polys]
    mult = RationalFunction(den, g) * t
    return [RationalFunction(p, RING.one, reduced=True) for p in polys], mult


def normalize_operator(coeffs):
    return tuple(clear_denominators(list(coeffs))[0])


def apply_operator(coeffs, e):
    e = Expr.coerce(e)
    out = ZERO_E
    for i, a in enumerate(coeffs):
        if a:
            out = out + e.shift(i).scale(a)
    return canonicalize(out)


def right_divide(coeffs, r):
    """(q, R) with L = q o (S - r) + R, R a rational function (order 0)."""
    d = len(coeffs) - 1
    q = [ZERO] * d
    q[d - 1] = coeffs[d]
    for i in range(d - 1, 0, -1):
        q[i - 1] = coeffs[i] + q[i] * r.shift(i)
    rem = coeffs[0] + q[0] * r
    return q, rem


# polynomial solutions

def _falling(j):
    """Coefficients of the falling factorial n(n-1)...(n-j+1)."""
    p = [Fraction(1)]
    for t in range(j):
        new = [Fraction(0)] * (len(p) + 1)
        for i, c in enumerate(p):
            new[i + 1] += c
            new[i] -= c * t
        p = new
    return p


def polynomial_solutions(coeffs):
    """Basis of polynomial solutions of sum_i a_i(N) y(N+i) = 0."""
    polys, _ = clear_denominators(list(coeffs))
    d = len(polys) - 1
    dense = [dense_coeffs(p) for p in polys]
    # Delta-form b_j = sum_i C(i,j) a_i
    b = []
    for j in range(d + 1):
        acc = RING.zero
        for i in range(j, d + 1):
            if polys[i]:
                acc += polys[i].num * comb(i, j)
        b.append(acc)
    degs = [(p.degree(NPOLY) - j if p else None) for j, p in enumerate(b)]
    e = max(v for v in degs if v is not None)
    ind = [Fraction(0)]
    for j, p in enumerate(b):
        if degs[j] == e:
            lc = dense_coeffs(p)[-1]
            ff = _falling(j)
            if len(ff) > len(ind):
                ind += [Fraction(0)] * (len(ff) - len(ind))
            for k, c in enumerate(ff):
                ind[k] += lc * c
    while len(ind) > 1 and ind[-1] == 0:
        ind.pop()
    if len(ind) == 1:
        roots = set()
    else:
        roots = nonneg_integer_roots(RationalFunction.from_coeffs(ind))
    if not roots:
        return []
    D = max(roots)
    # images L(N^t) for t = 0..D
    cols = []
    for t in range(D + 1):
        img = [Fraction(0)]
        for i in range(d + 1):
            if not dense[i]:
                continue
            sh = _shift_power(t, i)
            prod_ = _poly_mul(dense[i], sh)
            if len(prod_) > len(img):
                img += [Fraction(0)] * (len(prod_) - len(img))
            for k, c in enumerate(prod_):
                img[k] += c
        cols.append(img)
    height = max(len(c) for c in cols)
    A = [[cols[t][k] if k < len(cols[t]) else Fraction(0) for t in range(D + 1)]
         for k in range(height)]
    A = [row for row in A if any(row)]
    basis = nullspace(A, D + 1, Fraction(0), Fraction(1))
    out = []
    for v in basis:
        out.append(RationalFunction.from_coeffs(v))
    # reduced echelon shape gives a deterministic basis; sort by degree
    out.sort(key=lambda p: (p.num.degree(NPOLY), str(p)))
    return out


@lru_cache(maxsize=4096)
def _shift_power(t, i):
    # coefficients of (N+i)^t
    return [Fraction(comb(t, k) * i ** (t - k)) for k in range(t + 1)]


def _poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


# hypergeometric solutions

def _monic_divisors(p):
    _, facs = factor_poly(p)
    lin = []
    for f, e in facs:
        lc = f.LC
        lin.append((f.quo_ground(lc), e))
    out = []
    for exps in iproduct(*[range(e + 1) for _, e in lin]):
        q = RING.one
        for (f, _), k in zip(lin, exps):
            if k:
                q = q * f**k
        out.append(q)
    return out


def _cert_key(r):
    nd, dd = r.num.degree(NPOLY), r.den.degree(NPOLY)
    return (max(nd, dd), nd + dd, tuple(dense_coeffs(r.num)), tuple(dense_coeffs(r.den)))


def hypergeometric_solutions(coeffs):
    """All certificates r(N) (y(N+1) = r(N) y(N)) found by Petkovsek's
    monic-factor search, sorted by the deterministic tie-break order."""
    return list(_hyper_cached(normalize_operator(coeffs)))


@lru_cache(maxsize=1024)
def _hyper_cached(polys):
    d = len(polys) - 1
    if d < 1 or not polys[0]:
        return ()
    a = [p.num for p in polys]
    shifted_lead = a[d].compose(NPOLY, NPOLY - (d - 1))
    certs = {}
    for A in _monic_divisors(a[0]):
        Ash = [A.compose(NPOLY, NPOLY + j) for j in range(d)]
        for B in _monic_divisors(shifted_lead):
            Bsh = [B.compose(NPOLY, NPOLY + j) for j in range(d)]
            alpha = []
            for i in range(d + 1):
                p = a[i]
                if p:
                    for j in range(i):
                        p = p * Ash[j]
                    for j in range(i, d):
                        p = p * Bsh[j]
                alpha.append(p)
            m = max(p.degree(NPOLY) for p in alpha if p)
            zc = [Fraction(0)] * (d + 1)
            for i, p in enumerate(alpha):
                if p and p.degree(NPOLY) == m:
                    zc[i] = dense_coeffs(p)[-1]
            zroots, _ = linear_roots(RationalFunction.from_coeffs(zc).num)
            for Z, _ in zroots:
                if Z == 0:
                    continue
                op = [RationalFunction(p.mul_ground(to_qq(Z**i)), RING.one, reduced=True)
                      if p else ZERO for i, p in enumerate(alpha)]
                for C in polynomial_solutions(op):
                    r = (RationalFunction(A, B) * Z) * (C.shift(1) / C)
                    certs[r] = True
    return tuple(sorted(certs, key=_cert_key))


def factor_dalembert(coeffs):
    """(chain [r_1, r_2, ...], remainder operator) with
    L = remainder o (S - r_k) o ... o (S - r_1) up to a rational left factor."""
    return _factor_cached(normalize_operator(coeffs))


@lru_cache(maxsize=1024)
def _factor_cached(op):
    chain = []
    op = list(op)
    while len(op) > 1:
        cands = _hyper_cached(normalize_operator(op))
        if not cands:
            break
        r = cands[0]
        q, rem = right_divide(op, r)
        if rem:
            raise AssertionError(f"certificate {r} is not a right factor")
        chain.append(r)
        op = list(normalize_operator(q))
    return tuple(chain), tuple(op)


# d'Alembertian solutions

def _lower_bound(h):
    roots = set()
    for p in (h.num, h.den):
        if not p.is_ground:
            roots |= nonneg_integer_roots(p)
    return max(1, 1 + max(roots)) if roots else 1


def _lift(r, z):
    """y with y(N+1) - r(N) y(N) = z(N); for z = None the hypergeometric
    solution itself."""
    h = r.shift(-1)
    lh = _lower_bound(h)
    H = canonicalize(hyper(lh, h))
    if z is None:
        return H
    if not z:
        return ZERO_E
    Hinv = canonicalize(hyper(lh, h.inverse()))
    summand = canonicalize(z.shift(-1) * Hinv)
    lower = max(lh, pole_bound(summand) + 1, 1)
    return canonicalize(H * nested_sum(lower, summand))


def _solve_chain(chain, remainder, f):
    if not chain:
        if len(remainder) == 1:
            return [], canonicalize(f.scale(remainder[0].inverse()))
        return [], (ZERO_E if not f else None)
    basis_z, part_z = _solve_chain(chain[1:], remainder, f)
    r = chain[0]
    basis = [_lift(r, None)] + [_lift(r, z) for z in basis_z]
    part = _lift(r, part_z) if part_z is not None else None
    return basis, part


def particular_solution(chain, rhs, remainder=None):
    """Variation of constants through the factor chain; the operator is
    remainder o (S - r_k) o ... o (S - r_1)."""
    remainder = remainder if remainder is not None else (ONE,)
    if len(remainder) > 1:
        raise NotFactorized("operator is not completely factorized")
    return _solve_chain(tuple(chain), tuple(remainder), canonicalize(Expr.coerce(rhs)))[1]


def _expand_chain(chain, remainder):
    """Coefficients of remainder o (S - r_k) o ... o (S - r_1)."""
    op = list(remainder)
    for r in reversed(chain):
        # op o (S - r): sum_i c_i S^i (S - r) = sum_i c_i (S^{i+1} - r(N+i) S^i)
        new = [ZERO] * (len(op) + 1)
        for i, c in enumerate(op):
            new[i + 1] = new[i + 1] + c
            new[i] = new[i] - c * r.shift(i)
        op = new
    return op


def solution_space(eq, check=25):
    """Basis of d'Alembertian solutions and a particular solution (if the
    operator factors completely or the rhs is zero) with validity index."""
    coeffs = list(eq.coefficients)
    chain, rem = factor_dalembert(coeffs)
    # the chain solves  expanded(chain) y = f; relate to the input operator
    expanded = _expand_chain(chain, rem)
    ratio = _operator_ratio(coeffs, expanded)
    f = canonicalize(eq.rhs.scale(ratio))
    basis, part = _solve_chain(chain, rem, f)
    mu = _initial_mu(coeffs, basis, part)
    mu = _verify_mu(eq, basis, part, mu, check)
    return SolutionSpace(basis, part, mu, chain, rem)


def _operator_ratio(coeffs, expanded):
    # expanded = t * coeffs for a rational t; return t
    for a, b in zip(coeffs, expanded):
        if a:
            t = b / a
            break
    for a, b in zip(coeffs, expanded):
        if a * t != b:
            raise AssertionError("factor chain does not reproduce the operator")
    return t


def _initial_mu(coeffs, basis, part):
    roots = set()
    for a in coeffs:
        if a:
            for p in (a.num, a.den):
                if not p.is_ground:
                    roots |= nonneg_integer_roots(p)
    mu = 1 + max(roots) if roots else 0
    for e in basis + ([part] if part is not None else []):
        mu = max(mu, pole_bound(e) + 1)
    return mu


def _verify_mu(eq, basis, part, mu, check):
    hom = eq.homogeneous()
    for _ in range(64):
        bad = None
        for n in range(mu, mu + check + 1):
            try:
                for b in basis:
                    if hom.residual(b, n) != 0:
                        bad = n
                        break
                if bad is None and part is not None and eq.residual(part, n) != 0:
                    bad = n
            except (ArithmeticError, KeyError):
                bad = n
            if bad is not None:
                break
        if bad is None:
            return _extend_down(eq, hom, basis, part, mu)
        mu = bad + 1
    raise SelfCheckFailed("solution basis", mu)


def _extend_down(eq, hom, basis, part, mu):
    # the pole bound is conservative by one for sums and products (empty at
    # N = lower - 1); accept lower indices that check exactly
    while mu > 0:
        n = mu - 1
        try:
            if any(hom.residual(b, n) != 0 for b in basis):
                break
            if part is not None and eq.residual(part, n) != 0:
                break
        except (ArithmeticError, KeyError):
            break
        mu = n
    return mu


# initial values

def _window(ivs, d, mu, min_index=0):
    start = max(mu, min_index)
    if d == 0:
        return start
    keys = sorted(k for k in ivs if k >= start)
    for k in keys:
        if all(k + i in ivs for i in range(d)):
            return k
    return None


def match_initial_values(space, ivs, a_d, order=None, min_index=0, eq_order=None):
    """Combine basis and particular solution to match the initial values."""
    d = eq_order if eq_order is not None else len(space.basis)
    ivs = {int(k): Fraction(v) for k, v in dict(ivs).items()}
    R = nonneg_integer_roots(a_d) if a_d and not a_d.is_const() else set()
    mu1 = max(1 + max(R), space.valid_from) if R else space.valid_from
    start = _window(ivs, d, mu1, min_index)
    if start is None:
        lo = max(mu1, min_index)
        raise InsufficientInitialValues((lo, lo + d - 1), order)
    if space.particular is None:
        return Inconclusive(space.remainder, "no particular solution: operator not completely factorized")
    window = list(range(start, start + d))
    m = len(space.basis)
    A = [[b.evaluate(n) for b in space.basis] for n in window]
    rhs = [ivs[n] - space.particular.evaluate(n) for n in window]
    if m == 0:
        sol = [] if all(v == 0 for v in rhs) else None
    elif rank(A, m) < m:
        return Inconclusive(space.remainder, "basis evaluations are dependent on the window")
    else:
        sol = solve_linear(A, rhs)
    full = m == d
    if sol is None:
        if full:
            n = window[0]
            return NotNestedSum({"index": n, "expected": str(ivs[n])}, "initial values inconsistent")
        return Inconclusive(space.remainder, "initial values not matched by the d'Alembertian solutions")
    expr = space.particular
    for c, b in zip(sol, space.basis):
        expr = expr + b * c
    expr = canonicalize(expr)
    for n in sorted(ivs):
        if n >= start and n not in window:
            v = expr.evaluate(n)
            if v != ivs[n]:
                if full:
                    return NotNestedSum({"index": n, "expected": str(ivs[n]), "got": str(v)},
                                        "surplus initial value does not match")
                return Inconclusive(space.remainder, f"surplus initial value at N={n} not matched")
    return Solved(expr, list(sol), start, (start, start + d - 1), space)


def _shift_down(eq):
    t = 0
    while not eq.coefficients[t]:
        t += 1
    if t == 0:
        return eq, 0
    coeffs = [c.shift(-t) for c in eq.coefficients[t:]]
    return RecurrenceEquation(coeffs, canonicalize(eq.rhs.shift(-t))), t


def solve_recurrence(eq, ivs, min_index=0, check_window=DEFAULT_CHECK_WINDOW, order=None):
    """Theorem-1 style decision: Solved, NotNestedSum or Inconclusive."""
    eq = RecurrenceEquation(eq.coefficients, canonicalize(Expr.coerce(eq.rhs)))
    eq, t = _shift_down(eq)
    min_index = max(min_index, t)
    ivs = {int(k): Fraction(v) for k, v in dict(ivs).items()}
    d = eq.order
    if d == 0:
        expr = canonicalize(eq.rhs.scale(eq.coefficients[0].inverse()))
        mu = _initial_mu(eq.coefficients, [], expr)
        space = SolutionSpace([], expr, mu)
        res = match_initial_values(space, ivs, None, order, min_index, 0)
    else:
        space = solution_space(eq)
        res = match_initial_values(space, ivs, eq.coefficients[-1], order, min_index, d)
    if isinstance(res, Solved):
        _self_check(eq, res, ivs, check_window)
    return res


def _self_check(eq, res, ivs, window):
    d = eq.order
    start = res.window[0]
    expr = res.expression
    for n in range(start, start + d + 11):
        if eq.residual(expr, n) != 0:
            raise SelfCheckFailed("recurrence residual", n)
    if d == 0:
        return
    last = max(ivs)
    table = unroll(eq.coefficients, eq.rhs, {n: ivs[n] for n in range(start, start + d)},
                   max(last, start + d - 1) + window, start)
    for n, v in table.items():
        if expr.evaluate(n) != v:
            raise SelfCheckFailed("unrolled sequence", n)
