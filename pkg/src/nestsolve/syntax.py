"""Text syntax for rational functions and sum expressions.

Grammar (``^`` for powers)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' exponent)?
    primary := INT | NAME | '(' expr ')'
             | 'S' '[' ints (';' rationals)? ']' '(' VAR ('+'|'-' INT)? ')'
             | 'Sum' '(' NAME ',' INT ',' VAR ',' expr ')'
             | 'Prod' '(' NAME ',' INT ',' VAR ',' expr ')'

``(c)^N`` with a constant c denotes the geometric product c^N.
"""

import re
from fractions import Fraction

from .algebra import DivisionByZero, RationalFunction, rf_str
from .sums import (Expr, HarmonicSum, HyperProduct, NestedSum, ONE_E,
                   geometric, nested_sum)

EPS_NAMES = ("eps", "epsilon", "ε")
BOUND_NAMES = ("k", "j", "i", "l", "m", "n")


class ParseError(ValueError):
    def __init__(self, msg, pos, text=""):
        super().__init__(f"{msg} at position {pos}")
        self.msg = msg
        self.pos = pos
        self.text = text


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-zε_][A-Za-z0-9_]*)|(\S))")


def _tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        start = m.start(m.lastindex)
        if m.group(1):
            toks.append(("int", m.group(1), start))
        elif m.group(2):
            toks.append(("name", m.group(2), start))
        else:
            toks.append(("op", m.group(3), start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


def _bound_name(depth):
    return BOUND_NAMES[depth] if depth < len(BOUND_NAMES) else f"k{depth}"


class _Parser:
    def __init__(self, text, allow_sums=True):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.allow_sums = allow_sums

    # token helpers
    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, tok[2], self.text)

    def expect(self, val):
        t = self.next()
        if t[1] != val:
            self.error(f"expected '{val}'", t)
        return t

    def expect_name(self):
        t = self.next()
        if t[0] != "name":
            self.error("expected a name", t)
        return t[1]

    def signed_int(self):
        neg = False
        if self.peek()[1] in "+-" and self.peek()[0] == "op":
            neg = self.next()[1] == "-"
        t = self.next()
        if t[0] != "int":
            self.error("expected an integer", t)
        return -int(t[1]) if neg else int(t[1])

    def rational(self):
        v = Fraction(self.signed_int())
        if self.peek()[1] == "/":
            self.next()
            d = self.signed_int()
            if d == 0:
                self.error("zero denominator")
            v /= d
        return v

    # grammar
    def parse(self, var):
        v = self.expr(var)
        if self.peek()[0] != "end":
            self.error("unexpected token")
        return v

    def expr(self, var):
        v = self.term(var)
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.next()
            w = self.term(var)
            v = self.combine(v, op[1], w, op)
        return v

    def term(self, var):
        v = self.unary(var)
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.next()
            w = self.unary(var)
            v = self.combine(v, op[1], w, op)
        return v

    def unary(self, var):
        t = self.peek()
        if t[0] == "op" and t[1] in ("+", "-"):
            self.next()
            v = self.unary(var)
            return -v if t[1] == "-" else v
        return self.power(var)

    def power(self, var):
        base_tok = self.peek()
        v = self.primary(var)
        if self.peek()[1] != "^":
            return v
        op = self.next()
        paren = self.peek()[1] == "("
        if paren:
            self.next()
        t = self.peek()
        if t[0] == "name":
            self.next()
            if t[1] != var:
                self.error(f"exponent must be the variable {var}", t)
            if not (isinstance(v, RationalFunction) and v.is_const() and v):
                self.error("only nonzero constants may be raised to the power of the variable", base_tok)
            out = geometric(v.const_value())
        else:
            e = self.signed_int()
            try:
                if isinstance(v, Expr):
                    if e < 0:
                        self.error("negative power of a sum expression", op)
                    out = v**e
                else:
                    out = v**e
            except DivisionByZero:
                self.error("zero raised to a negative power", op)
        if paren:
            self.expect(")")
        return out

    def primary(self, var):
        t = self.next()
        if t[0] == "int":
            return RationalFunction.const(int(t[1]))
        if t[0] == "op" and t[1] == "(":
            v = self.expr(var)
            self.expect(")")
            return v
        if t[0] == "name":
            name = t[1]
            if name == "S" and self.peek()[1] == "[":
                return self.harmonic(var, t)
            if name in ("Sum", "Prod") and self.peek()[1] == "(":
                return self.quantifier(name, var, t)
            if name == var:
                return RationalFunction.var("N")
            if name in EPS_NAMES:
                return RationalFunction.var("eps")
            if name == "x" and var != "x":
                return RationalFunction.var("x")
            self.error(f"unknown symbol '{name}'", t)
        self.error("unexpected token", t)

    def harmonic(self, var, start):
        if not self.allow_sums:
            self.error("sum expression where a rational function is expected", start)
        self.expect("[")
        idx = [self.signed_int()]
        while self.peek()[1] == ",":
            self.next()
            idx.append(self.signed_int())
        xs = None
        if self.peek()[1] == ";":
            self.next()
            xs = [self.rational()]
            while self.peek()[1] == ",":
                self.next()
                xs.append(self.rational())
            if len(xs) != len(idx):
                self.error("index and weight lists differ in length")
        self.expect("]")
        self.expect("(")
        t = self.next()
        if t[0] != "name" or t[1] != var:
            self.error(f"harmonic sum argument must be {var}", t)
        off = 0
        if self.peek()[1] in ("+", "-"):
            sgn = 1 if self.next()[1] == "+" else -1
            off = sgn * self.signed_int()
        self.expect(")")
        try:
            if xs is None:
                h = HarmonicSum(idx)
            else:
                h = HarmonicSum(list(zip(idx, xs)))
        except ValueError as exc:
            self.error(str(exc), start)
        return Expr.atom(h).shift(off)

    def quantifier(self, kind, var, start):
        if not self.allow_sums:
            self.error("sum expression where a rational function is expected", start)
        self.expect("(")
        bvar = self.expect_name()
        if bvar in (var, "x") or bvar in EPS_NAMES:
            self.error(f"bound variable '{bvar}' clashes", start)
        self.expect(",")
        lower = self.signed_int()
        if lower < 0:
            self.error("lower bound must be nonnegative", start)
        self.expect(",")
        t = self.next()
        if t[0] != "name" or t[1] != var:
            self.error(f"upper bound must be {var}", t)
        self.expect(",")
        body = self.expr(bvar)
        self.expect(")")
        if kind == "Prod":
            if not isinstance(body, RationalFunction):
                self.error("product factor must be a rational function", start)
            if body.variables() - {"N"}:
                self.error("product factor may depend on the bound variable only", start)
            if not body:
                self.error("zero product factor", start)
            return Expr.atom(HyperProduct(lower, body)) if not body.is_one() else ONE_E
        body = Expr.coerce(body)
        if any(c.variables() - {"N"} for c in body.terms.values()):
            self.error("summand may depend on the bound variable only", start)
        return nested_sum(lower, body)

    def combine(self, a, op, b, tok):
        try:
            if isinstance(a, RationalFunction) and isinstance(b, RationalFunction):
                if op == "+":
                    return a + b
                if op == "-":
                    return a - b
                if op == "*":
                    return a * b
                return a / b
            for v in (a, b):
                if isinstance(v, RationalFunction) and v.variables() - {"N"}:
                    self.error("eps or x inside a sum expression", tok)
            a, b = Expr.coerce(a), Expr.coerce(b)
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if not b.is_rational():
                self.error("division by a sum expression", tok)
            return a / b.as_rational()
        except DivisionByZero:
            self.error("division by zero", tok)


def parse_expr(text, var="N"):
    """Parse a sum expression; rational results are returned as Expr too."""
    v = _Parser(text).parse(var)
    if isinstance(v, RationalFunction):
        if v.variables() - {"N"}:
            raise ParseError("eps or x in a sum expression", 0, text)
        return Expr.from_rf(v)
    return v


def parse_ratfun(text, variables=("N", "eps", "x")):
    v = _Parser(text, allow_sums=False).parse("N" if "N" in variables else "_")
    extra = v.variables() - set(variables)
    if extra:
        raise ParseError(f"unexpected variable(s) {sorted(extra)}", 0, text)
    return v


def parse_value(text):
    """Exact rational constant."""
    v = _Parser(text, allow_sums=False).parse("_")
    if not v.is_const():
        raise ParseError("expected a rational constant", 0, text)
    return v.const_value()


# printing

def _names(var):
    return {"N": var, "x": "x", "eps": "eps"}


def _frac(x):
    return str(x)


def atom_to_str(a, var="N", depth=0):
    if isinstance(a, HarmonicSum):
        if a.is_standard():
            return "S[" + ",".join(str(i) for i in a.signed()) + f"]({var})"
        return ("S[" + ",".join(str(i) for i, _ in a.indices) + ";"
                + ",".join(_frac(x) for _, x in a.indices) + f"]({var})")
    b = _bound_name(depth)
    if isinstance(a, HyperProduct):
        if a.is_geometric():
            return f"({a.factor.const_value()})^{var}"
        return f"Prod({b},{a.lower},{var}, {rf_str(a.factor, _names(b))})"
    if isinstance(a, NestedSum):
        return f"Sum({b},{a.lower},{var}, {expr_to_str(a.summand, b, depth + 1)})"
    raise TypeError(a)


def mono_to_str(m, var="N", depth=0):
    parts = []
    i = 0
    while i < len(m):
        j = i
        while j < len(m) and m[j] == m[i]:
            j += 1
        s = atom_to_str(m[i], var, depth)
        parts.append(s if j - i == 1 else f"{s}^{j - i}")
        i = j
    return "*".join(parts)


def expr_to_str(e, var="N", depth=0):
    if not e.terms:
        return "0"
    out = []
    for m, c in e.terms.items():
        cs = rf_str(c, _names(var))
        if not m:
            s = cs
        else:
            ms = mono_to_str(m, var, depth)
            if c.is_one():
                s = ms
            elif (-c).is_one():
                s = "-" + ms
            else:
                s = f"({cs})*{ms}" if _top_level_sum(cs) else f"{cs}*{ms}"
        out.append(s)
    text = out[0]
    for s in out[1:]:
        text += f" - {s[1:]}" if s.startswith("-") else f" + {s}"
    return text


def _top_level_sum(s):
    depth = 0
    for i, ch in enumerate(s):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif depth == 0 and ch in "+-" and i > 0:
            return True
    return False


def ratfun_to_str(f):
    return rf_str(f)
