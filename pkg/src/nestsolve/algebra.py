"""Exact rational functions over Q in the variables N, x, eps.

Polynomials are sympy sparse polynomials in ``QQ[N,x,eps]`` (graded lex with
eps < x < N).  A :class:`RationalFunction` keeps a reduced numerator and a
monic denominator, so structural equality is mathematical equality.
"""

from fractions import Fraction
from functools import lru_cache
from math import gcd

from sympy import QQ, ZZ, divisors, grlex
from sympy.polys.rings import ring

RING, N, X, EPS = ring("N,x,eps", QQ, grlex)
ZRING = ring("N,x,eps", ZZ, grlex)[0]
VARS = ("N", "x", "eps")
_GEN = {"N": N, "x": X, "eps": EPS}
_IDX = {"N": 0, "x": 1, "eps": 2}


class DivisionByZero(ZeroDivisionError):
    pass


class PoleAtZero(ArithmeticError):
    """eps -> 0 hits a pole; normalize by a power of eps first."""


class PoleAtPoint(ArithmeticError):
    def __init__(self, value, what=""):
        super().__init__(f"pole at N={value}" + (f" in {what}" if what else ""))
        self.value = value


class ZeroPolynomial(ValueError):
    pass


def to_fraction(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


def to_qq(c):
    if isinstance(c, Fraction):
        return QQ(c.numerator, c.denominator)
    return QQ(c)


def _as_poly(v):
    if isinstance(v, (int, Fraction)):
        return RING(to_qq(v))
    return v


def _reduce(num, den):
    if not num:
        return RING.zero, RING.one
    if den.is_ground:
        c = den.LC
        return (num.quo_ground(c), RING.one) if c != 1 else (num, den)
    p, q = num.cancel(den)
    c = q.LC
    if c != 1:
        p, q = p.quo_ground(c), q.quo_ground(c)
    return p, q


class RationalFunction:
    """Reduced quotient num/den with monic den."""

    __slots__ = ("num", "den", "_hash", "_dense")

    def __init__(self, num=0, den=None, reduced=False):
        num = _as_poly(num)
        den = RING.one if den is None else _as_poly(den)
        if not den:
            raise DivisionByZero("zero denominator")
        if not reduced:
            num, den = _reduce(num, den)
        self.num = num
        self.den = den
        self._hash = None
        self._dense = None

    # constructors
    @classmethod
    def const(cls, c):
        return cls(RING(to_qq(Fraction(c))), RING.one, reduced=True)

    @classmethod
    def var(cls, name):
        return cls(_GEN[name], RING.one, reduced=True)

    @classmethod
    def from_coeffs(cls, coeffs, var="N"):
        """Polynomial sum c_i var^i from a low-to-high coefficient list."""
        g = _GEN[var]
        p = RING.zero
        for i, c in enumerate(coeffs):
            if c:
                p += to_qq(Fraction(c)) * g**i
        return cls(p, RING.one, reduced=True)

    # predicates and accessors
    def is_zero(self):
        return not self.num

    def is_one(self):
        return self.den == 1 and self.num == 1

    def is_poly(self):
        return self.den == 1

    def is_const(self):
        return self.den == 1 and self.num.is_ground

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ValueError(f"{self} is not constant")
        return to_fraction(self.num.LC) if self.num else Fraction(0)

    def variables(self):
        out = set()
        for p in (self.num, self.den):
            for m in p.monoms():
                for i, e in enumerate(m):
                    if e:
                        out.add(VARS[i])
        return out

    def free_of(self, var):
        return var not in self.variables()

    def degree(self, var="N"):
        g = _GEN[var]
        return self.num.degree(g), self.den.degree(g)

    # arithmetic
    @staticmethod
    def _coerce(o):
        if isinstance(o, RationalFunction):
            return o
        if isinstance(o, (int, Fraction)):
            return RationalFunction.const(o)
        return NotImplemented

    def __add__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return o
        if not o.num:
            return self
        if not self.num:
            return o
        if self.den == o.den:
            if self.den == 1:
                return RationalFunction(self.num + o.num, RING.one, reduced=True)
            return RationalFunction(self.num + o.num, self.den)
        return RationalFunction(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den, reduced=True)

    def __sub__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return o
        if not self.num or not o.num:
            return ZERO
        if o.is_const():
            c = o.num.LC
            return self if c == 1 else RationalFunction(self.num.mul_ground(c), self.den, reduced=True)
        if self.is_const():
            return o * self
        if self.den == 1 and o.den == 1:
            return RationalFunction(self.num * o.num, RING.one, reduced=True)
        return RationalFunction(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def inverse(self):
        if not self.num:
            raise DivisionByZero("inverse of the zero function")
        return RationalFunction(self.den, self.num)

    def __truediv__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return o
        if not o.num:
            raise DivisionByZero("division by the zero function")
        if o.is_const():
            return RationalFunction(self.num.quo_ground(o.num.LC), self.den, reduced=True)
        return self * o.inverse()

    def __rtruediv__(self, o):
        return self._coerce(o) * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return RationalFunction(self.num**e, self.den**e, reduced=True)

    def __eq__(self, o):
        if isinstance(o, RationalFunction):
            return self.num == o.num and self.den == o.den
        if isinstance(o, (int, Fraction)):
            return self.den == 1 and self.num == to_qq(Fraction(o))
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def sort_key(self):
        return (str(self.num), str(self.den))

    # structural operations
    def shift(self, k: int, var="N"):
        if k == 0 or var not in self.variables():
            return self
        return _shift(self, k, var)

    def subs(self, var, value):
        g = _GEN[var]
        v = value if isinstance(value, RationalFunction) else None
        if v is None:
            q = to_qq(Fraction(value))
            num, den = self.num.subs(g, q), self.den.subs(g, q)
            if not den:
                raise PoleAtPoint(value, str(self))
            return RationalFunction(num, den)
        # substitute a rational function: homogenize over the variable degree
        dn = max(self.num.degree(g), self.den.degree(g), 0)
        num = _compose_rf(self.num, g, v, dn)
        den = _compose_rf(self.den, g, v, dn)
        return num / den

    def eval_eps_zero(self):
        den0 = self.den.subs(EPS, 0)
        if not den0:
            raise PoleAtZero(str(self))
        return RationalFunction(self.num.subs(EPS, 0), den0)

    def _dense_N(self):
        if self._dense is None:
            if self.variables() - {"N"}:
                raise ValueError(f"{self} depends on more than N")
            self._dense = (dense_coeffs(self.num), dense_coeffs(self.den))
        return self._dense

    def __call__(self, n):
        """Exact value at N = n (only for functions of N alone)."""
        nc, dc = self._dense_N()
        d = _horner(dc, n)
        if d == 0:
            raise PoleAtPoint(n, str(self))
        return _horner(nc, n) / d

    def eps_valuation(self):
        if not self.num:
            raise ValueError("valuation of zero")
        return _poly_val(self.num, 2) - _poly_val(self.den, 2)

    def eps_series(self, count: int):
        """Coefficients of eps^0..eps^(count-1) as rational functions of the
        remaining variables; requires nonnegative eps-valuation."""
        if not self.num:
            return [ZERO] * count
        vn, vd = _poly_val(self.num, 2), _poly_val(self.den, 2)
        if vn < vd:
            raise PoleAtZero(str(self))
        nc = _split_eps(self.num, vd)
        dc = _split_eps(self.den, vd)
        d0 = RationalFunction(dc.get(0, RING.zero), RING.one)
        out = []
        for k in range(count):
            acc = RationalFunction(nc.get(k, RING.zero), RING.one, reduced=True)
            for j in range(1, k + 1):
                if j in dc and out[k - j]:
                    acc = acc - RationalFunction(dc[j], RING.one, reduced=True) * out[k - j]
            out.append(acc / d0)
        return out

    def __bool__(self):
        return bool(self.num)

    def __repr__(self):
        return f"RationalFunction({rf_str(self)!r})"

    def __str__(self):
        return rf_str(self)


ZERO = RationalFunction(RING.zero, RING.one, reduced=True)
ONE = RationalFunction(RING.one, RING.one, reduced=True)


@lru_cache(maxsize=65536)
def _shift(f, k, var):
    g = _GEN[var]
    num = f.num.compose(g, g + k)
    den = f.den.compose(g, g + k) if f.den != 1 else f.den
    return RationalFunction(num, den, reduced=True)


def _compose_rf(p, g, v, deg):
    # p(v) as a rational function
    out = ZERO
    idx = RING.gens.index(g)
    by_power = {}
    for m, c in p.terms():
        e = m[idx]
        rest = list(m)
        rest[idx] = 0
        by_power.setdefault(e, RING.zero)
        by_power[e] += RING({tuple(rest): c})
    for e, q in by_power.items():
        out = out + RationalFunction(q, RING.one, reduced=True) * v**e
    return out


def _poly_val(p, i):
    return min(m[i] for m in p.monoms())


def _split_eps(p, shift):
    out = {}
    for m, c in p.terms():
        e = m[2] - shift
        out.setdefault(e, RING.zero)
        out[e] += RING({(m[0], m[1], 0): c})
    return out


def _horner(coeffs, n):
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * n + c
    return acc


def shift_N(f, k):
    return f.shift(k, "N")


def eval_eps_zero(f):
    return f.eval_eps_zero()


# univariate helpers in N

def dense_coeffs(p, var="N"):
    """Low-to-high Fraction coefficients of a polynomial in one variable."""
    if isinstance(p, RationalFunction):
        if not p.is_poly():
            raise ValueError("not a polynomial")
        p = p.num
    i = _IDX[var]
    if not p:
        return []
    deg = p.degree(_GEN[var])
    out = [Fraction(0)] * (deg + 1)
    for m, c in p.terms():
        if any(e for j, e in enumerate(m) if j != i):
            raise ValueError("polynomial depends on another variable")
        out[m[i]] += to_fraction(c)
    return out


def poly_from_values(values, start=0):
    """Interpolating polynomial through (start+i, values[i])."""
    pts = [(Fraction(start + i), Fraction(v)) for i, v in enumerate(values)]
    # Newton divided differences
    coef = [v for _, v in pts]
    n = len(pts)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (pts[i][0] - pts[i - j][0])
    poly = [Fraction(0)]
    for i in range(n - 1, -1, -1):
        # poly = poly * (N - x_i) + coef[i]
        xi = pts[i][0]
        new = [Fraction(0)] * (len(poly) + 1)
        for k, c in enumerate(poly):
            new[k + 1] += c
            new[k] -= c * xi
        new[0] += coef[i]
        poly = new
    while len(poly) > 1 and poly[-1] == 0:
        poly.pop()
    return RationalFunction.from_coeffs(poly)


def _integer_coeffs(coeffs):
    den = 1
    for c in coeffs:
        den = den * c.denominator // gcd(den, c.denominator)
    return [int(c * den) for c in coeffs]


def nonneg_integer_roots(p):
    """All n >= 0 with p(n) = 0 for a nonzero univariate polynomial p(N)."""
    if isinstance(p, RationalFunction):
        p = p.num
    coeffs = dense_coeffs(p)
    if not coeffs or all(c == 0 for c in coeffs):
        raise ZeroPolynomial("nonneg_integer_roots of the zero polynomial")
    ints = _integer_coeffs(coeffs)
    roots = set()
    t = 0
    while ints[t] == 0:
        t += 1
    if t:
        roots.add(0)
    ints = ints[t:]
    if len(ints) == 1:
        return roots
    lead, c0 = ints[-1], abs(ints[0])
    bound = 1 + max(abs(Fraction(c, lead)) for c in ints[:-1])
    if bound < 20000:
        cands = (n for n in range(1, int(bound) + 1) if c0 % n == 0)
    else:
        cands = (n for n in divisors(c0) if n <= bound)
    for n in cands:
        acc = 0
        for c in reversed(ints):
            acc = acc * n + c
        if acc == 0:
            roots.add(n)
    return roots


def factor_poly(p):
    """(content, [(primitive integer factor, multiplicity)]) of a polynomial."""
    if isinstance(p, RationalFunction):
        p = p.num
    return _factor_cached(p)


@lru_cache(maxsize=16384)
def _factor_cached(p):
    c, facs = p.factor_list()
    out = []
    content = to_fraction(c)
    for f, e in facs:
        den, fz = f.clear_denoms()
        fz = fz.set_ring(ZRING)
        cont, prim = fz.primitive()
        if prim.LC < 0:
            prim, cont = -prim, -cont
        content *= (Fraction(int(cont), int(den))) ** e
        out.append((prim.set_ring(RING), e))
    out.sort(key=lambda fe: (sum(fe[0].degree(g) for g in RING.gens), str(fe[0])))
    return content, out


def linear_roots(p):
    """Rational roots with multiplicities plus the leftover nonlinear factors."""
    c, facs = factor_poly(p)
    roots, rest = [], []
    for f, e in facs:
        if f.degree(N) == 1 and f.degree(X) == 0 and f.degree(EPS) == 0:
            a, b = dense_coeffs(f)
            roots.append((-a / b, e))
        else:
            rest.append((f, e))
    return roots, rest


def poly_lcm(polys):
    out = RING.one
    for p in polys:
        out = out.lcm(p)
    return out


def integer_normalizer(polys):
    """Positive rational t such that t*p is integral and primitive over all polys."""
    den, g = 1, 0
    for p in polys:
        for c in p.coeffs():
            f = to_fraction(c)
            den = den * f.denominator // gcd(den, f.denominator)
    for p in polys:
        for c in p.coeffs():
            g = gcd(g, int(to_fraction(c) * den))
    if g == 0:
        return Fraction(1)
    return Fraction(den, g)


# printing

_NAMES = {"N": "N", "x": "x", "eps": "eps"}


def poly_str(p, names=None):
    names = names or _NAMES
    if not p:
        return "0"
    parts = []
    for m, c in p.terms():
        c = to_fraction(c)
        mono = []
        for v, e in zip(VARS, m):
            if e == 1:
                mono.append(names[v])
            elif e > 1:
                mono.append(f"{names[v]}^{e}")
        sign = "-" if c < 0 else "+"
        c = abs(c)
        if mono:
            body = "*".join(mono) if c == 1 else f"{c}*" + "*".join(mono)
        else:
            body = str(c)
        parts.append((sign, body))
    s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        s += f" {sign} {body}"
    return s


def _is_monomial(p):
    return len(p.terms()) == 1


@lru_cache(maxsize=65536)
def _rf_str(f, names):
    names = dict(names)
    if not f.num:
        return "0"
    cn, fn = factor_poly(f.num)
    if f.den == 1:
        cd, fd = Fraction(1), []
    else:
        cd, fd = factor_poly(f.den)
    c = cn / cd
    sign = "-" if c < 0 else ""
    c = abs(c)

    def fac(q, e):
        s = poly_str(q, names)
        if not _is_monomial(q) or (e > 1 and q.LC != 1):
            s = f"({s})"
        return s if e == 1 else f"{s}^{e}"

    top = [fac(q, e) for q, e in fn]
    if c.numerator != 1 or not top:
        top.insert(0, str(c.numerator))
    bot = [fac(q, e) for q, e in fd]
    if c.denominator != 1:
        bot.insert(0, str(c.denominator))
    if len(top) == 1 and not bot and not sign and fn and fn[0][1] == 1 and c.numerator == 1:
        return poly_str(fn[0][0], names)
    s = sign + "*".join(top)
    if bot:
        b = "*".join(bot)
        s += "/" + (b if len(bot) == 1 else f"({b})")
    return s


def rf_str(f, names=None):
    return _rf_str(f, tuple(sorted((names or _NAMES).items())))


# generic dense linear algebra over a field (Fraction or RationalFunction)

def _is_zero(v):
    return v == 0


def row_reduce(rows, ncols=None):
    """Reduced row echelon form; returns (rows, pivot columns)."""
    rows = [list(r) for r in rows]
    if not rows:
        return [], []
    ncols = len(rows[0]) if ncols is None else ncols
    piv = []
    r = 0
    for c in range(ncols):
        sel = None
        for i in range(r, len(rows)):
            if not _is_zero(rows[i][c]):
                sel = i
                break
        if sel is None:
            continue
        rows[r], rows[sel] = rows[sel], rows[r]
        inv = 1 / rows[r][c] if isinstance(rows[r][c], Fraction) else rows[r][c].inverse()
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and not _is_zero(rows[i][c]):
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        piv.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], piv


def nullspace(A, ncols, zero, one):
    """Basis of {v : A v = 0}."""
    red, piv = row_reduce(A, ncols) if A else ([], [])
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        v = [zero] * ncols
        v[f] = one
        for row, p in zip(red, piv):
            v[p] = -row[f]
        basis.append(v)
    return basis


def solve_linear(A, b):
    """One solution of A v = b (free variables zero) or None if inconsistent."""
    n = len(A[0]) if A else 0
    aug = [list(r) + [bi] for r, bi in zip(A, b)]
    red, piv = row_reduce(aug, n + 1)
    if n in piv:
        return None
    zero = b[0] - b[0] if b else Fraction(0)
    v = [zero] * n
    for row, p in zip(red, piv):
        v[p] = row[n]
    return v


def rank(A, ncols=None):
    return len(row_reduce(A, ncols)[1]) if A else 0
