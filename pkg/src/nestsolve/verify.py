"""Independent oracles: exact forward unrolling and pointwise comparison."""

from fractions import Fraction

from .algebra import PoleAtPoint, RationalFunction, rank, solve_linear

DEFAULT_CHECK_WINDOW = 15


class SingularLeading(ArithmeticError):
    def __init__(self, index):
        super().__init__(f"leading coefficient vanishes at N={index}")
        self.index = index


class SelfCheckFailed(AssertionError):
    def __init__(self, what, index):
        super().__init__(f"self-check failed for {what} at N={index}")
        self.what = what
        self.index = index


def _value(f, n):
    if isinstance(f, RationalFunction):
        return f(n)
    if callable(f):
        return f(n)
    return Fraction(f)


def unroll(coefficients, rhs, ivs, up_to, start=None):
    """Values I(n) for n up to ``up_to`` of sum_i a_i(n) I(n+i) = rhs(n),
    starting from d consecutive initial values at ``start``."""
    coeffs = list(coefficients)
    while coeffs and not coeffs[-1]:
        coeffs.pop()
    d = len(coeffs) - 1
    if d < 0:
        raise ValueError("all coefficients vanish")
    ivs = {int(k): Fraction(v) for k, v in dict(ivs).items()}
    if start is None:
        start = min(ivs)
    table = {}
    for n in range(start, start + d):
        if n not in ivs:
            raise KeyError(f"missing initial value at N={n}")
        table[n] = ivs[n]
    n = start
    while n + d <= up_to:
        lead = coeffs[d](n)
        if lead == 0:
            raise SingularLeading(n)
        acc = _value(rhs, n) if rhs is not None else Fraction(0)
        for i in range(d):
            if coeffs[i]:
                acc -= coeffs[i](n) * table[n + i]
        table[n + d] = acc / lead
        n += 1
    return table


def _series_table(coeffs, count):
    return [c.eps_series(count) if c else [None] * count for c in coeffs]


def _eps_shift(coeffs):
    vals = [c.eps_valuation() for c in coeffs if c]
    s = -min(vals)
    if s == 0:
        return coeffs, 0
    f = RationalFunction.var("eps") ** s
    return [c * f for c in coeffs], s


def unroll_eps(coefficients, rhs, ivs, window, up_to, start):
    """Unroll an eps-recurrence order by order.

    ``rhs`` has ``coefficient(j)`` (an expression evaluable at n) and ``ivs``
    maps order -> {index: value}.  Returns {order: {index: value}}."""
    o, u = window
    coeffs, s = _eps_shift(list(coefficients))
    count = u - o + 1
    ser = _series_table(coeffs, count)
    lead = [c[0] if c[0] is not None else None for c in ser]
    dd = max(i for i, c in enumerate(lead) if c)
    d = len(coeffs) - 1
    out = {}
    for jj, j in enumerate(range(o, u + 1)):
        reach = up_to + (u - j) * (d - dd)
        tab = {}
        for n in range(start, start + dd):
            tab[n] = Fraction(ivs[j][n])
        rj = rhs.coefficient(j - s)
        n = start
        while n + dd <= reach:
            a = lead[dd](n)
            if a == 0:
                raise SingularLeading(n)
            acc = rj.evaluate(n) if rj is not None else Fraction(0)
            for i in range(dd):
                if lead[i]:
                    acc -= lead[i](n) * tab[n + i]
            for k in range(1, jj + 1):
                lower = out[j - k]
                for i in range(d + 1):
                    c = ser[i][k]
                    if c:
                        acc -= c(n) * lower[n + i]
            tab[n + dd] = acc / a
            n += 1
        out[j] = tab
    return out


def unroll_system(matrices, rhs, initial, window, up_to, start):
    """Unroll sum_i A_i(eps,N) Y(N+i) = R(N) jointly over eps-orders.

    ``rhs[r]`` has ``coefficient(j)``; ``initial[j][n]`` is the vector Y_j(n)
    for n in start..start+d-1.  Returns {order: {n: vector}}."""
    d = len(matrices) - 1
    size = len(matrices[0])
    o, u = window
    count = u - o + 1
    # normalize rows so every entry is pole free at eps=0
    shifts = []
    rows = []
    for r in range(size):
        entries = [matrices[i][r][c] for i in range(d + 1) for c in range(size)]
        vals = [e.eps_valuation() for e in entries if e]
        s = -min(vals)
        f = RationalFunction.var("eps") ** s
        shifts.append(s)
        rows.append([[(matrices[i][r][c] * f).eps_series(count) if matrices[i][r][c] else None
                      for c in range(size)] for i in range(d + 1)])
    out = {j: {} for j in range(o, u + 1)}
    for j in range(o, u + 1):
        for n in range(start, start + d):
            out[j][n] = [Fraction(v) for v in initial[j][n]]
    n = start
    while n + d <= up_to:
        lead = [[rows[r][d][c][0](n) if rows[r][d][c] is not None and rows[r][d][c][0] else Fraction(0)
                 for c in range(size)] for r in range(size)]
        if _rank_deficient(lead):
            raise SingularLeading(n)
        for jj, j in enumerate(range(o, u + 1)):
            b = []
            for r in range(size):
                rc = rhs[r].coefficient(j - shifts[r]) if rhs[r] is not None else None
                acc = rc.evaluate(n) if rc is not None else Fraction(0)
                for i in range(d + 1):
                    for c in range(size):
                        ser = rows[r][i][c]
                        if ser is None:
                            continue
                        for k in range(0, jj + 1):
                            if i == d and k == 0:
                                continue
                            if ser[k]:
                                acc -= ser[k](n) * out[j - k][n + i][c]
                b.append(acc)
            sol = solve_linear(lead, b)
            out[j][n + d] = sol
        n += 1
    return out


def _rank_deficient(M):
    return rank(M) < len(M)


def pointwise_equal(a, b, indices):
    """(True, None) or (False, first index where a(n) != b(n))."""
    for n in indices:
        va = a.evaluate(n) if hasattr(a, "evaluate") else _value(a, n)
        vb = b.evaluate(n) if hasattr(b, "evaluate") else _value(b, n)
        if va != vb:
            return False, n
    return True, None


__all__ = ["DEFAULT_CHECK_WINDOW", "PoleAtPoint", "SelfCheckFailed", "SingularLeading",
           "pointwise_equal", "unroll", "unroll_eps", "unroll_system"]
