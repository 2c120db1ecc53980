"""Uncoupling of first-order linear difference systems over Q(eps,N) and
order bookkeeping for their Laurent-series solutions.

Linear forms are dicts mapping symbols to RationalFunction coefficients:
``("P", i, s)`` stands for the pivot value I_i(N+s) and ``("R", i, s)`` for
the rhs value r_i(N+s)."""

import logging
from dataclasses import dataclass, field

from .algebra import RationalFunction, nullspace, solve_linear
from .epsilon import (EpsRecurrence, LaurentExpansion, RhsTooShallow,
                      generate_expansion, initial_value_demand, linear_combination)
from .recurrence import Inconclusive, NotNestedSum
from .verify import DEFAULT_CHECK_WINDOW, SelfCheckFailed

log = logging.getLogger(__name__)

ZERO = RationalFunction.const(0)
ONE = RationalFunction.const(1)


def _rf(c):
    return c if isinstance(c, RationalFunction) else RationalFunction.const(c)


@dataclass
class CoupledDifferenceSystem:
    """sum_i A_i Y(N+i) = (r_1(N),...,r_n(N))."""
    matrices: list
    rhs: list = None
    names: list = None

    def __post_init__(self):
        self.matrices = [[[_rf(c) for c in row] for row in A] for A in self.matrices]
        n = len(self.matrices[0])
        if any(len(A) != n or any(len(r) != n for r in A) for A in self.matrices):
            raise ValueError("matrices must all be square of the same size")
        if self.names is None:
            self.names = [f"I{i + 1}" for i in range(n)]
        if self.rhs is not None and len(self.rhs) != n:
            raise ValueError("rhs length differs from the system size")

    @property
    def size(self):
        return len(self.matrices[0])

    @property
    def order(self):
        return len(self.matrices) - 1


# linear forms

def form_add(a, b, scale=ONE):
    out = dict(a)
    for k, v in b.items():
        w = out.get(k, ZERO) + v * scale
        if w:
            out[k] = w
        else:
            out.pop(k, None)
    return out


def form_scale(a, c):
    if not c:
        return {}
    return {k: v * c for k, v in a.items()}


def form_shift(a, k=1):
    return {(kind, i, s + k): v.shift(k) for (kind, i, s), v in a.items()}


def form_str(a, names=None, rhs_names=None):
    from .algebra import rf_str
    parts = []
    for (kind, i, s), v in sorted(a.items(), key=lambda t: t[0]):
        nm = (names[i] if names else f"I{i + 1}") if kind == "P" else \
             (rhs_names[i] if rhs_names else f"r{i + 1}")
        arg = "N" if s == 0 else f"N+{s}"
        parts.append(f"({rf_str(v)})*{nm}({arg})")
    return " + ".join(parts) if parts else "0"


def to_first_order(sys):
    """Companion embedding Z(N) = (Y(N),...,Y(N+d-1)) of an order-d system."""
    d, n = sys.order, sys.size
    if d <= 1:
        return sys
    m = n * d
    A0 = [[ZERO] * m for _ in range(m)]
    A1 = [[ZERO] * m for _ in range(m)]
    for r in range(n):
        for i in range(d):
            for c in range(n):
                A0[r][i * n + c] = sys.matrices[i][r][c]
        for c in range(n):
            A1[r][(d - 1) * n + c] = sys.matrices[d][r][c]
    # Z_b(N+1) - Z_{b+1}(N) = 0
    for b in range(d - 1):
        for c in range(n):
            r = n + b * n + c
            A1[r][b * n + c] = ONE
            A0[r][(b + 1) * n + c] = -ONE
    names = [nm if b == 0 else f"{nm}[+{b}]" for b in range(d) for nm in sys.names]
    rhs = None
    if sys.rhs is not None:
        rhs = list(sys.rhs) + [None] * (m - n)
    return CoupledDifferenceSystem([A0, A1], rhs, names)


# uncoupling

@dataclass
class PivotBlock:
    index: int
    operator: list          # a_0..a_m acting on I_index
    recipe: dict            # rhs form over R symbols and earlier pivots
    factor: RationalFunction = ONE   # content removed from the raw relation


@dataclass
class UncoupledForm:
    size: int
    blocks: list
    backsub: dict           # component -> form
    names: list
    constraints: list = field(default_factory=list)

    def pivots(self):
        return [b.index for b in self.blocks]


def _rhs_forms(n):
    return [{("R", i, 0): ONE} for i in range(n)]


def _regularize(A0, A1, G, seeds):
    """Make the shift matrix A1 invertible by trading rows for their algebraic
    consequences; every algebraic relation found is appended to ``seeds``."""
    n = len(A0)
    for _ in range(n + 1):
        null = nullspace([list(col) for col in zip(*A1)], n, ZERO, ONE)
        if not null:
            return A0, A1, G
        lam = null[0]
        u = [sum((lam[r] * A0[r][c] for r in range(n)), ZERO) for c in range(n)]
        g = {}
        for r in range(n):
            if lam[r]:
                g = form_add(g, G[r], lam[r])
        if not any(u):
            if g:
                raise ValueError("the system imposes a relation on the rhs alone")
            raise ValueError("the system is underdetermined")
        seeds.append((u, g))
        i = max(r for r in range(n) if lam[r])
        A1 = [row[:] for row in A1]
        A0 = [row[:] for row in A0]
        G = list(G)
        A1[i] = [c.shift(1) for c in u]
        A0[i] = [ZERO] * n
        G[i] = form_shift(g)
    raise ValueError("could not regularize the leading matrix")


def _reduce(c, K, echelon):
    c = list(c)
    for piv, row, rk in echelon:
        f = c[piv]
        if f:
            c = [a - f * b for a, b in zip(c, row)]
            K = form_add(K, rk, -f)
    return c, K


def _insert(echelon, c, K):
    piv = next(i for i, v in enumerate(c) if v)
    inv = c[piv].inverse()
    c = [v * inv for v in c]
    K = form_scale(K, inv)
    new = []
    for p, row, rk in echelon:
        f = row[piv]
        if f:
            row = [a - f * b for a, b in zip(row, c)]
            rk = form_add(rk, K, -f)
        new.append((p, row, rk))
    new.append((piv, c, K))
    return new


def _content(values):
    """Factor f with every value/f a polynomial and the gcd of numerators 1."""
    nums = [v.num for v in values if v]
    dens = [v.den for v in values if v]
    g = nums[0]
    for p in nums[1:]:
        g = g.gcd(p)
    l = dens[0]
    for p in dens[1:]:
        l = l.lcm(p)
    f = RationalFunction(g, l)
    return f


def _normalize_relation(rel, q):
    """Split ``rel`` = 0 into (operator on I_q, recipe) with content removed."""
    m = max(s for (kind, i, s) in rel if kind == "P" and i == q)
    op = [ZERO] * (m + 1)
    recipe = {}
    for (kind, i, s), v in rel.items():
        if kind == "P" and i == q:
            op[s] = v
        else:
            recipe[(kind, i, s)] = -v
    f = _content(op + list(recipe.values()))
    lead = (op[-1] / f).num
    if lead.LC < 0:
        f = -f
    op = [c / f for c in op]
    recipe = {k: v / f for k, v in recipe.items()}
    return op, recipe, f


def uncouple(sys):
    """Gaussian elimination with shifts on a first-order system.

    Returns an UncoupledForm: one scalar recurrence per pivot block and every
    component expressed through pivot shifts and rhs shifts."""
    sys = to_first_order(sys)
    n = sys.size
    if sys.order == 0:
        A0, A1 = sys.matrices[0], [[ZERO] * n for _ in range(n)]
    else:
        A0, A1 = sys.matrices
    seeds = []
    A0, A1, G = _regularize(A0, A1, _rhs_forms(n), seeds)
    # Y(N+1) = M Y(N) + A1^{-1} G
    M = [[ZERO] * n for _ in range(n)]
    H = [dict() for _ in range(n)]
    for c in range(n):
        col = solve_linear(A1, [-A0[r][c] for r in range(n)])
        for r in range(n):
            M[r][c] = col[r]
    unit = [[ONE if r == c else ZERO for c in range(n)] for r in range(n)]
    inv_cols = [solve_linear(A1, [unit[r][k] for r in range(n)]) for k in range(n)]
    for r in range(n):
        for k in range(n):
            if inv_cols[k][r]:
                H[r] = form_add(H[r], G[k], inv_cols[k][r])
    echelon = []
    for u, g in seeds:
        c, K = _reduce(u, g, echelon)
        if any(c):
            echelon = _insert(echelon, c, K)
    blocks = []
    while len(echelon) < n:
        q = None
        for i in range(n):
            e = [ONE if j == i else ZERO for j in range(n)]
            c, _ = _reduce(e, {}, echelon)
            if any(c):
                q = i
                break
        c = [ONE if j == q else ZERO for j in range(n)]
        K = {("P", q, 0): ONE}
        while True:
            rc, rK = _reduce(c, K, echelon)
            if not any(rc):
                op, recipe, f = _normalize_relation(rK, q)
                log.debug("pivot %s: removed content %s", sys.names[q], f)
                blocks.append(PivotBlock(q, op, recipe, f))
                break
            echelon = _insert(echelon, rc, rK)
            cs = [v.shift(1) for v in c]
            c = [sum((cs[i] * M[i][j] for i in range(n)), ZERO) for j in range(n)]
            K = form_shift(K)
            for i in range(n):
                if cs[i]:
                    K = form_add(K, H[i], -cs[i])
    backsub = {}
    for piv, row, rk in echelon:
        backsub[piv] = rk
    return UncoupledForm(n, blocks, backsub, list(sys.names))


# order bookkeeping

@dataclass
class OrderPlan:
    pivots: list        # [(component, initial-value count, solve-to order nu, first index)]
    rhs_depth: list     # w_i per rhs (None if r_i never enters)
    constraints: list

    def as_list(self, names):
        return [[[names[i], m, nu] for i, m, nu, _ in self.pivots],
                list(self.rhs_depth), list(self.constraints)]


def _val(c):
    return c.eps_valuation()


def _eps_norm(op):
    return -min(_val(c) for c in op if c)


def analyze(form, targets):
    """Solve-to orders of the pivots, rhs expansion depths and initial-value
    demand for the targets u_1..u_n."""
    n = form.size
    targets = list(targets) + [targets[-1]] * (n - len(targets)) if len(targets) < n else list(targets)
    need = {}
    w = [None] * n

    def bump_rhs(k, j):
        if k < n:
            w[k] = j if w[k] is None else max(w[k], j)

    pivots = {b.index for b in form.blocks}
    for b in form.blocks:
        need[b.index] = targets[b.index]
    for i, f in form.backsub.items():
        if i in pivots:
            continue
        for (kind, k, s), c in f.items():
            j = targets[i] - _val(c)
            if kind == "P":
                need[k] = max(need[k], j)
            else:
                bump_rhs(k, j)
    plan = []
    for b in reversed(form.blocks):
        nu = need[b.index]
        s0 = _eps_norm(b.operator)
        for (kind, k, s), c in b.recipe.items():
            j = nu - s0 - _val(c)
            if kind == "P":
                need[k] = max(need[k], j)
            else:
                bump_rhs(k, j)
        mu, dd = initial_value_demand(EpsRecurrence(b.operator, LaurentExpansion(0, [])))
        plan.append((b.index, dd, nu, mu))
    plan.reverse()
    return OrderPlan(plan, w, list(form.constraints))


# solving

def _as_terms(f, pivots_exp, rhs):
    terms = []
    for (kind, k, s), c in f.items():
        E = pivots_exp[k] if kind == "P" else rhs[k]
        if E is None:
            continue
        terms.append((c, E, s))
    return terms


def _trim(E, o, u, what, first, check_window):
    # nested sums over non-splitting products need not cancel to a canonical
    # zero, so terms below the start order are tested on the valid window
    for j in range(E.start, min(o, E.truncation + 1)):
        c = E.coefficient(j)
        if c and any(c.evaluate(n) for n in range(first, first + check_window + 1)):
            raise ValueError(f"{what} has a nonzero eps^{j} term below the start order {o}")
    return LaurentExpansion(o, [E.coefficient(j) for j in range(o, u + 1)], u, canonical=False)


def solve_coupled(sys, rhs, ivs, targets, start, min_index=0, check_window=DEFAULT_CHECK_WINDOW,
                  form=None):
    """Laurent expansions of all components up to their targets, or the
    failure object (with ``component`` and ``order`` set) of the first pivot
    that fails."""
    n0 = sys.size
    form = form or uncouple(sys)
    n = form.size
    targets = list(targets)
    if n > n0:
        targets += [max(targets)] * (n - n0)
    rhs = list(rhs) + [None] * (n - len(rhs))
    plan = analyze(form, targets)
    # a missing rhs is identically zero
    for k, wk in enumerate(plan.rhs_depth):
        if wk is not None and rhs[k] is not None and rhs[k].truncation < wk:
            raise RhsTooShallow(wk, f"r{k + 1}")
    solved = {}
    first = min_index
    for b, (q, dd, nu, mu) in zip(form.blocks, plan.pivots):
        s0 = _eps_norm(b.operator)
        terms = _as_terms(b.recipe, solved, rhs)
        rexp = linear_combination(terms, nu - s0)
        res = generate_expansion(EpsRecurrence(b.operator, rexp), ivs.get(q, {}), (start, nu),
                                 min_index, check_window)
        if isinstance(res, (NotNestedSum, Inconclusive)):
            res.component = form.names[q]
            return res
        solved[q] = res
        first = max(first, mu)
    out = []
    for i in range(n0):
        if i in solved:
            E = solved[i]
            out.append(LaurentExpansion(start, [E.coefficient(j) for j in range(start, targets[i] + 1)],
                                        targets[i], canonical=False))
            continue
        terms = _as_terms(form.backsub[i], solved, rhs)
        E = linear_combination(terms, targets[i])
        out.append(_trim(E, start, targets[i], form.names[i], first, check_window))
    round_trip(sys, out, rhs[:n0], first, check_window)
    return out


def round_trip(sys, sol, rhs, first, check_window=DEFAULT_CHECK_WINDOW):
    """Substitute the expansions into the system and compare with the rhs,
    order by order, at N = first..first+check_window."""
    n = sys.size
    for r in range(n):
        terms = []
        upto = None
        for i, A in enumerate(sys.matrices):
            for c in range(n):
                a = A[r][c]
                if a:
                    terms.append((a, sol[c], i))
                    lim = sol[c].truncation + _val(a)
                    upto = lim if upto is None else min(upto, lim)
        if upto is None:
            continue
        if rhs[r] is not None:
            upto = min(upto, rhs[r].truncation)
        lhs = linear_combination(terms, upto)
        for j in range(lhs.start, upto + 1):
            got = lhs.coefficient(j)
            want = rhs[r].coefficient(j) if rhs[r] is not None else None
            for nn in range(first, first + check_window + 1):
                a = got.evaluate(nn)
                b = want.evaluate(nn) if want is not None else 0
                if a != b:
                    raise SelfCheckFailed(f"row {r + 1}, eps-order {j}", nn)


__all__ = ["CoupledDifferenceSystem", "OrderPlan", "PivotBlock", "UncoupledForm", "analyze",
           "form_add", "form_scale", "form_shift", "form_str", "round_trip", "solve_coupled",
           "to_first_order", "uncouple"]
