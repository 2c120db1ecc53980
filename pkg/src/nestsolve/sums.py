"""Nested hypergeometric sum expressions.

An :class:`Expr` is a finite linear combination, with coefficients in Q(N),
of monomials.  A monomial is a sorted tuple of atoms:

* :class:`HarmonicSum` - S_{(a1,x1),...,(ak,xk)}(N) = sum_{i=1}^N x1^i/i^a1 S_{...}(i)
* :class:`HyperProduct` - prod_{k=lower}^N h(k)
* :class:`NestedSum` - sum_{k=lower}^N F(k) for an Expr F

Bound variables are always stored as ``N``; ``F`` in ``NestedSum(l, F)`` means
the function k -> F(k).  The canonical form keeps only harmonic sums and
normalized products prod_{k=1}^N h(k), with at most one sum per monomial.
"""

from fractions import Fraction
from functools import lru_cache
from math import floor

from .algebra import (ONE, ZERO, PoleAtPoint, RationalFunction, dense_coeffs,
                      factor_poly, linear_roots, nonneg_integer_roots,
                      poly_from_values, solve_linear, to_qq as _qq,
                      N as _NPOLY, RING)

NVAR = RationalFunction.var("N")


class UnsupportedShape(Exception):
    """A summand falls outside the (generalized) harmonic subclass."""


# atoms

class HarmonicSum:
    __slots__ = ("indices", "_hash")

    def __init__(self, indices):
        idx = []
        for t in indices:
            a, x = (t, 1) if isinstance(t, int) else t
            if isinstance(t, int) and a < 0:
                a, x = -a, -1
            x = Fraction(x)
            if a < 1 or x == 0:
                raise ValueError(f"bad harmonic index {t}")
            idx.append((int(a), x))
        if not idx:
            raise ValueError("empty harmonic index vector")
        self.indices = tuple(idx)
        self._hash = hash(("S", self.indices))

    def __eq__(self, o):
        return isinstance(o, HarmonicSum) and o.indices == self.indices

    def __hash__(self):
        return self._hash

    @property
    def weight(self):
        return sum(a for a, _ in self.indices)

    def is_standard(self):
        return all(x in (1, -1) for _, x in self.indices)

    def signed(self):
        return tuple(a if x == 1 else -a for a, x in self.indices)

    def key(self):
        return (0, len(self.indices), tuple((a, x.numerator, x.denominator) for a, x in self.indices))

    def __repr__(self):
        return f"HarmonicSum({self.indices})"


class HyperProduct:
    __slots__ = ("lower", "factor", "_hash")

    def __init__(self, lower, factor):
        self.lower = int(lower)
        self.factor = factor
        self._hash = hash(("P", self.lower, factor))

    def __eq__(self, o):
        return isinstance(o, HyperProduct) and o.lower == self.lower and o.factor == self.factor

    def __hash__(self):
        return self._hash

    def is_geometric(self):
        return self.lower == 1 and self.factor.is_const()

    def key(self):
        return (1, self.lower) + self.factor.sort_key()

    def __repr__(self):
        return f"HyperProduct({self.lower}, {self.factor})"


class NestedSum:
    __slots__ = ("lower", "summand", "_hash")

    def __init__(self, lower, summand):
        self.lower = int(lower)
        self.summand = summand
        self._hash = hash(("Sum", self.lower, summand))

    def __eq__(self, o):
        return isinstance(o, NestedSum) and o.lower == self.lower and o.summand == self.summand

    def __hash__(self):
        return self._hash

    def key(self):
        return (2, self.lower, self.summand.sort_key())

    def __repr__(self):
        return f"NestedSum({self.lower}, {self.summand!r})"


@lru_cache(maxsize=None)
def atom_key(a):
    return a.key()


def mono_key(m):
    return tuple(atom_key(a) for a in m)


@lru_cache(maxsize=200000)
def mono_mul(m1, m2):
    if not m1:
        return m2
    if not m2:
        return m1
    hyp = {}
    rest = []
    for a in m1 + m2:
        if isinstance(a, HyperProduct):
            hyp[a.lower] = hyp[a.lower] * a.factor if a.lower in hyp else a.factor
        else:
            rest.append(a)
    for lo, h in hyp.items():
        if not h.is_one():
            rest.append(HyperProduct(lo, h))
    return tuple(sorted(rest, key=atom_key))


# expressions

class Expr:
    """Q(N)-linear combination of monomials in sum/product atoms."""

    __slots__ = ("terms", "_hash", "_key")

    def __init__(self, terms=None):
        terms = terms or {}
        items = [(m, c) for m, c in terms.items() if c]
        if len(items) > 1:
            items.sort(key=lambda mc: mono_key(mc[0]))
        self.terms = dict(items)
        self._hash = None
        self._key = None

    @classmethod
    def const(cls, c):
        return cls({(): RationalFunction.const(c)})

    @classmethod
    def from_rf(cls, f):
        return cls({(): f})

    @classmethod
    def atom(cls, a):
        return cls({(a,): ONE})

    @staticmethod
    def coerce(o):
        if isinstance(o, Expr):
            return o
        if isinstance(o, RationalFunction):
            return Expr.from_rf(o)
        if isinstance(o, (int, Fraction)):
            return Expr.const(o)
        return NotImplemented

    def __add__(self, o):
        o = Expr.coerce(o)
        if o is NotImplemented:
            return o
        if not o.terms:
            return self
        if not self.terms:
            return o
        t = dict(self.terms)
        for m, c in o.terms.items():
            t[m] = t[m] + c if m in t else c
        return Expr(t)

    __radd__ = __add__

    def __neg__(self):
        return Expr({m: -c for m, c in self.terms.items()})

    def __sub__(self, o):
        o = Expr.coerce(o)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def scale(self, f):
        if not f:
            return ZERO_E
        if f == 1:
            return self
        return Expr({m: c * f for m, c in self.terms.items()})

    def __mul__(self, o):
        if isinstance(o, (RationalFunction, int, Fraction)):
            return self.scale(o if isinstance(o, RationalFunction) else RationalFunction.const(o))
        o = Expr.coerce(o)
        if o is NotImplemented:
            return o
        if len(o.terms) == 1 and () in o.terms:
            return self.scale(o.terms[()])
        if len(self.terms) == 1 and () in self.terms:
            return o.scale(self.terms[()])
        t = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in o.terms.items():
                m = mono_mul(m1, m2)
                c = c1 * c2
                t[m] = t[m] + c if m in t else c
        return Expr(t)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Expr):
            if not o.is_rational():
                raise TypeError("division by a non-rational expression")
            o = o.as_rational()
        if not isinstance(o, RationalFunction):
            o = RationalFunction.const(o)
        return self.scale(o.inverse())

    def __pow__(self, e):
        if e < 0:
            raise ValueError("negative power of an expression")
        out = ONE_E
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, o):
        if isinstance(o, (int, Fraction, RationalFunction)):
            o = Expr.coerce(o)
        if not isinstance(o, Expr):
            return NotImplemented
        return self.terms == o.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self.terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def sort_key(self):
        if self._key is None:
            self._key = tuple((mono_key(m), c.sort_key()) for m, c in self.terms.items())
        return self._key

    def is_rational(self):
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def as_rational(self):
        if not self.is_rational():
            raise ValueError("expression is not rational")
        return self.terms.get((), ZERO)

    def atoms(self):
        return {a for m in self.terms for a in m}

    def coefficient(self, mono):
        return self.terms.get(tuple(mono), ZERO)

    def shift(self, k: int):
        if k == 0 or not self.terms:
            return self
        out = {}
        pieces = []
        for m, c in self.terms.items():
            cs = c.shift(k)
            if not m:
                out[()] = out[()] + cs if () in out else cs
                continue
            t = Expr({(): cs})
            for a in m:
                t = t * atom_shift(a, k)
            pieces.append(t)
        res = Expr(out)
        for p in pieces:
            res = res + p
        return res

    def evaluate(self, n: int):
        acc = Fraction(0)
        for m, c in self.terms.items():
            v = c(n)
            if v:
                for a in m:
                    v *= atom_value(a, n)
                    if not v:
                        break
            acc += v
        return acc

    def __call__(self, n):
        return self.evaluate(n)

    def map_coefficients(self, fn):
        return Expr({m: fn(c) for m, c in self.terms.items()})

    def __repr__(self):
        return f"Expr({self!s})"

    def __str__(self):
        from .syntax import expr_to_str
        return expr_to_str(self)


ZERO_E = Expr()
ONE_E = Expr.const(1)


def S(*indices):
    """Harmonic sum expression, e.g. S(1, -2) or S((1, Fraction(1, 2)))."""
    return Expr.atom(HarmonicSum(indices))


def geometric(x):
    x = Fraction(x)
    if x == 1:
        return ONE_E
    return Expr.atom(HyperProduct(1, RationalFunction.const(x)))


def hyper(lower, factor):
    return Expr.atom(HyperProduct(lower, factor))


def nested_sum(lower, summand):
    summand = Expr.coerce(summand)
    if not summand:
        return ZERO_E
    return Expr.atom(NestedSum(lower, summand))


def evaluate(e, n):
    return Expr.coerce(e).evaluate(n)


def shift(e, k):
    return Expr.coerce(e).shift(k)


# shifting atoms

def _word_expr(word):
    return Expr.atom(HarmonicSum(word)) if word else ONE_E


@lru_cache(maxsize=100000)
def atom_shift(a, k):
    """Expr equal to atom(N+k), with every quantifier still running to N."""
    if isinstance(a, HarmonicSum):
        (e, x), rest = a.indices[0], a.indices[1:]
        inner = _word_expr(rest)
        out = Expr.atom(a)
        g = geometric(x)
        if k > 0:
            for i in range(1, k + 1):
                c = RationalFunction.const(x**i) / (NVAR + i) ** e
                out = out + g * inner.shift(i) * c
        else:
            for i in range(0, -k):
                c = RationalFunction.const(x**-i) / (NVAR - i) ** e
                out = out - g * inner.shift(-i) * c
        return out
    if isinstance(a, HyperProduct):
        f = ONE
        if k > 0:
            for i in range(1, k + 1):
                f = f * a.factor.shift(i)
            return Expr.atom(a).scale(f)
        for i in range(0, -k):
            f = f * a.factor.shift(-i)
        return Expr.atom(a).scale(f.inverse())
    if isinstance(a, NestedSum):
        out = Expr.atom(a)
        if k > 0:
            for i in range(1, k + 1):
                out = out + a.summand.shift(i)
        else:
            for i in range(0, -k):
                out = out - a.summand.shift(-i)
        return out
    raise TypeError(a)


# evaluating atoms (memoized prefix tables)

_TABLES = {}


def clear_tables():
    _TABLES.clear()


def atom_value(a, n):
    if n < 0:
        raise PoleAtPoint(n, "negative argument")
    tab = _TABLES.get(a)
    if tab is None:
        if len(_TABLES) > 50000:
            _TABLES.clear()
        tab = _TABLES[a] = []
    while len(tab) <= n:
        m = len(tab)
        prev = tab[m - 1] if m else None
        if isinstance(a, HarmonicSum):
            if m == 0:
                v = Fraction(0)
            else:
                (e, x), rest = a.indices[0], a.indices[1:]
                t = x**m / Fraction(m) ** e
                if rest:
                    t *= atom_value(HarmonicSum(rest), m)
                v = prev + t
        elif isinstance(a, HyperProduct):
            if m < a.lower:
                v = Fraction(1)
            else:
                base = prev if m > 0 else Fraction(1)
                v = base * a.factor(m)
        else:
            if m < a.lower:
                v = Fraction(0)
            else:
                base = prev if m > 0 else Fraction(0)
                v = base + a.summand.evaluate(m)
        tab.append(v)
    return tab[n]


# quasi-shuffle

@lru_cache(maxsize=None)
def stuffle(w1, w2):
    """Quasi-shuffle of index words as a tuple of (word, integer coefficient)."""
    if not w1:
        return ((w2, 1),)
    if not w2:
        return ((w1, 1),)
    a, A = w1[0], w1[1:]
    b, B = w2[0], w2[1:]
    res = {}
    for w, c in stuffle(A, w2):
        res[(a,) + w] = res.get((a,) + w, 0) + c
    for w, c in stuffle(w1, B):
        res[(b,) + w] = res.get((b,) + w, 0) + c
    ab = (a[0] + b[0], a[1] * b[1])
    for w, c in stuffle(A, B):
        res[(ab,) + w] = res.get((ab,) + w, 0) - c
    return tuple((w, c) for w, c in sorted(res.items()) if c)


def _word(a):
    # HarmonicSum, an Expr holding exactly one, or the unit 1
    if isinstance(a, HarmonicSum):
        return a.indices
    e = Expr.coerce(a)
    if e == ONE_E:
        return ()
    if len(e.terms) == 1:
        (m, c), = e.terms.items()
        if c.is_one() and len(m) == 1 and isinstance(m[0], HarmonicSum):
            return m[0].indices
    raise TypeError(f"not a harmonic sum: {a}")


def quasi_shuffle_product(a, b):
    """Product of two harmonic sums as a combination of single sums."""
    wa, wb = _word(a), _word(b)
    out = ZERO_E
    for w, c in stuffle(wa, wb):
        out = out + _word_expr(w) * c
    return out


def reduce_products(e):
    """Expand every product of harmonic sums by the quasi-shuffle."""
    if all(sum(isinstance(a, HarmonicSum) for a in m) <= 1 for m in e.terms):
        return e
    out = {}
    for m, c in e.terms.items():
        sums = [a for a in m if isinstance(a, HarmonicSum)]
        if len(sums) <= 1:
            out[m] = out[m] + c if m in out else c
            continue
        rest = tuple(a for a in m if not isinstance(a, HarmonicSum))
        words = {sums[0].indices: 1}
        for s in sums[1:]:
            nxt = {}
            for w, cw in words.items():
                for w2, c2 in stuffle(w, s.indices):
                    nxt[w2] = nxt.get(w2, 0) + cw * c2
            words = {w: v for w, v in nxt.items() if v}
        for w, cw in words.items():
            mm = mono_mul(rest, (HarmonicSum(w),))
            v = c * cw
            out[mm] = out[mm] + v if mm in out else v
    return Expr(out)


# hypergeometric products

def normalize_hyper(lower, h):
    """prod_{k=lower}^N h(k) as r(N) * prod_{k=1}^N h'(k) with h' reduced so
    that linear factors are k+alpha, 0 <= alpha < 1."""
    if h.is_one():
        return ONE_E
    if h.variables() - {"N"}:
        return hyper(lower, h)
    for p in (h.num, h.den):
        if not p.is_ground and any(r >= lower for r in nonneg_integer_roots(p)):
            return hyper(lower, h)
    coeff = ONE
    if lower <= 0:
        for k in range(lower, 1):
            coeff = coeff * h(k)
        lower = 1
    cn, fn = factor_poly(h.num)
    if h.den == 1:
        cd, fd = Fraction(1), []
    else:
        cd, fd = factor_poly(h.den)
    c = cn / cd
    red = ONE
    for facs, sgn in ((fn, 1), (fd, -1)):
        for f, e in facs:
            ex = sgn * e
            fr = RationalFunction(f, RING.one, reduced=True)
            if f.degree(_NPOLY) == 1:
                a0, b = dense_coeffs(f)
                c *= b**ex
                beta = a0 / b
                j = floor(beta)
                alpha = beta - j
                base = NVAR + alpha
                if j >= 0:
                    t = ONE
                    for i in range(1, j + 1):
                        t = t * (NVAR + alpha + i) / (lower - 1 + alpha + i)
                else:
                    t = ONE
                    for i in range(1, -j + 1):
                        t = t * (lower - 1 + beta + i) / (NVAR + beta + i)
                head = Fraction(1)
                for k in range(1, lower):
                    head *= k + alpha
                coeff = coeff * (t / head) ** ex
                red = red * base**ex
            else:
                head = Fraction(1)
                for k in range(1, lower):
                    head *= fr(k)
                coeff = coeff * RationalFunction.const(head) ** (-ex)
                red = red * fr**ex
    coeff = coeff * RationalFunction.const(c) ** (-(lower - 1))
    red = red * c
    if red.is_one():
        return Expr.from_rf(coeff)
    return Expr({(HyperProduct(1, red),): coeff})


# canonical form

@lru_cache(maxsize=100000)
def canonicalize(e, strict=False):
    """Canonical form: sums over harmonic-type summands are resolved into
    harmonic sums and rational parts, products are normalized and products
    of sums expanded by the quasi-shuffle."""
    e = Expr.coerce(e)
    out = ZERO_E
    for m, c in e.terms.items():
        t = Expr.from_rf(c)
        for a in m:
            t = reduce_products(t * canonical_atom(a, strict))
        out = out + t
    return out


def is_canonical_atom(a):
    if isinstance(a, HarmonicSum):
        return True
    if isinstance(a, HyperProduct):
        return a.lower == 1 and normalize_hyper(1, a.factor) == Expr.atom(a)
    return False


@lru_cache(maxsize=100000)
def canonical_atom(a, strict=False):
    if isinstance(a, HarmonicSum):
        return Expr.atom(a)
    if isinstance(a, HyperProduct):
        r = normalize_hyper(a.lower, a.factor)
        if strict and not all(is_canonical_atom(b) for b in r.atoms()):
            raise UnsupportedShape(f"product {a}")
        return r
    F = canonicalize(a.summand, strict)
    if not F:
        return ZERO_E
    try:
        T = antidifference(F)
    except UnsupportedShape:
        if strict:
            raise
        return Expr.atom(NestedSum(a.lower, F))
    M = max(a.lower - 1, pole_bound(T), 0)
    tail = sum((F.evaluate(k) for k in range(a.lower, M + 1)), Fraction(0))
    return T + Expr.const(tail - T.evaluate(M))


def pole_bound(e):
    """Largest nonnegative integer pole of any coefficient (or -1)."""
    best = -1
    for m, c in e.terms.items():
        if not c.den.is_ground:
            r = nonneg_integer_roots(c.den)
            if r:
                best = max(best, max(r))
        for a in m:
            if isinstance(a, NestedSum):
                best = max(best, a.lower - 1, pole_bound(a.summand))
            elif isinstance(a, HyperProduct) and not a.factor.is_const():
                best = max(best, a.lower - 1)
    return best


def detect_harmonic(e):
    """HarmonicSum for expressions of the shape sum_{i=1}^N x^i/i^a * (inner),
    else None."""
    e = Expr.coerce(e)
    if len(e.terms) != 1:
        return None
    (m, c), = e.terms.items()
    if not c.is_one() or len(m) != 1:
        return None
    a = m[0]
    if isinstance(a, HarmonicSum):
        return a
    if not isinstance(a, NestedSum) or a.lower != 1:
        return None
    F = a.summand
    if len(F.terms) != 1:
        return None
    (fm, fc), = F.terms.items()
    dc = dense_coeffs(fc.den)
    if fc.num != 1 or len(dc) < 2 or any(dc[:-1]) or dc[-1] != 1:
        return None
    weight = len(dc) - 1
    x = Fraction(1)
    inner = ()
    for b in fm:
        if isinstance(b, HyperProduct) and b.is_geometric():
            x *= b.factor.const_value()
        else:
            if inner:
                return None
            h = detect_harmonic(Expr.atom(b))
            if h is None:
                return None
            inner = h.indices
    return HarmonicSum(((weight, x),) + inner)


# antidifference

def _term_parts(m):
    x = Fraction(1)
    word = ()
    for a in m:
        if isinstance(a, HyperProduct) and a.is_geometric():
            x *= a.factor.const_value()
        elif isinstance(a, HarmonicSum) and not word:
            word = a.indices
        else:
            raise UnsupportedShape(f"atom {a!r}")
    return x, word


def antidifference(F):
    """T with T(N) - T(N-1) = F(N) for canonical F built from rational
    functions, geometric factors and single harmonic sums."""
    out = ZERO_E
    for m, c in F.terms.items():
        x, word = _term_parts(m)
        out = out + _antidiff(c, x, word)
    return out


def partial_fractions(c):
    """(polynomial part, [(root, multiplicity m, beta)]) with
    c = poly + sum beta/(N-root)^m; raises on nonlinear denominators."""
    if c.variables() - {"N"}:
        raise UnsupportedShape("coefficient depends on more than N")
    if c.den == 1:
        return c, []
    q, r = c.num.div(c.den)
    roots, rest = linear_roots(c.den)
    if rest:
        raise UnsupportedShape(f"irreducible denominator factor {rest[0][0]}")
    out = []
    for rho, e in roots:
        lin = _NPOLY - _qq(rho)
        D = c.den.exquo(lin**e)
        rs = dense_coeffs(r.compose(_NPOLY, _NPOLY + _qq(rho)))
        ds = dense_coeffs(D.compose(_NPOLY, _NPOLY + _qq(rho)))
        ser = []
        for k in range(e):
            acc = rs[k] if k < len(rs) else Fraction(0)
            for j in range(1, k + 1):
                if j < len(ds):
                    acc -= ds[j] * ser[k - j]
            ser.append(acc / ds[0])
        for i, s in enumerate(ser):
            if s:
                out.append((rho, e - i, s))
    return RationalFunction(q, RING.one, reduced=True), out


def _gp_antidiff(p, x):
    """Q = q(N) x^N with Q(N) - Q(N-1) = p(N) x^N."""
    coeffs = dense_coeffs(p)
    d = len(coeffs) - 1
    if x == 1:
        vals = [Fraction(0)]
        for n in range(1, d + 2):
            vals.append(vals[-1] + p(n))
        return Expr.from_rf(poly_from_values(vals))
    A, b = [], []
    for n in range(d + 1):
        A.append([Fraction(n) ** i - Fraction(n - 1) ** i / x for i in range(d + 1)])
        b.append(p(n))
    q = solve_linear(A, b)
    return geometric(x) * RationalFunction.from_coeffs(q)


@lru_cache(maxsize=100000)
def _antidiff(c, x, word):
    poly, fracs = partial_fractions(c)
    T = ZERO_E
    if poly:
        T = T + _antidiff_poly(poly, x, word)
    ints = [(r, m, b) for r, m, b in fracs if r.denominator == 1]
    others = [(r, m, b) for r, m, b in fracs if r.denominator != 1]
    if others:
        if word or x != 1:
            raise UnsupportedShape("non-integer pole with a sum or geometric factor")
        T = T + Expr.from_rf(_telescope(others))
    for r, m, b in ints:
        T = T + _antidiff_frac(-int(r), m, b, x, word)
    return T


def _antidiff_poly(p, x, word):
    Q = _gp_antidiff(p, x)
    if not word:
        return Q
    (a1, x1), rest = word[0], word[1:]
    res = Q * _word_expr(word)
    G = Q.shift(-1) * geometric(x1) * _word_expr(rest) * (ONE / NVAR**a1)
    return res - antidifference(G)


def _antidiff_frac(j, m, beta, x, word):
    # term beta * x^N / (N+j)^m * S_word(N)
    if j == 0:
        return Expr.atom(HarmonicSum(((m, x),) + word)) * beta
    Sw = _word_expr(word).shift(-j)
    G = geometric(x) * Sw * (RationalFunction.const(beta * x ** (-j)) / NVAR**m)
    return antidifference(G).shift(j)


def _telescope(fracs):
    groups = {}
    for r, m, b in fracs:
        jj = -r
        t = floor(jj)
        alpha = jj - t
        groups.setdefault((alpha, m), []).append((t, b))
    out = ZERO
    for (alpha, m), members in groups.items():
        if sum(b for _, b in members) != 0:
            raise UnsupportedShape("non-telescoping rational summand")
        g = lambda s: ONE / (NVAR + alpha + s) ** m
        for t, b in members:
            if t > 0:
                for i in range(1, t + 1):
                    out = out + g(i) * b
            else:
                for i in range(0, -t):
                    out = out - g(-i) * b
    return out
