"""nestsolve analyze|solve|verify <file> [solution] [--orders a..b]
[--check-window W] [--json]

Exit codes: 0 success, 1 not a nested sum (or verification failed),
2 parse error, 3 inconclusive, 4 insufficient inputs, 5 internal
self-check failure."""

import argparse
import json
import os
import sys
from importlib import resources

from .epsilon import (EpsRecurrence, LaurentExpansion, RhsTooShallow, _leading, generate_expansion,
                      initial_value_demand, normalize_epsilon)
from .ode import BoundaryInconsistent, CoupledDifferentialSystem, converted_rhs, ode_to_recurrence, \
    solve_coupled_ode
from .recurrence import (InsufficientInitialValues, NotNestedSum, RecurrenceEquation,
                         Solved, solution_space, solve_recurrence)
from .syntax import ParseError, expr_to_str, parse_expr, parse_ratfun, parse_value
from .uncoupling import CoupledDifferenceSystem, analyze, round_trip, solve_coupled, uncouple
from .verify import DEFAULT_CHECK_WINDOW, SelfCheckFailed, SingularLeading, unroll, unroll_eps

EXIT_OK, EXIT_NOT_NESTED, EXIT_PARSE, EXIT_INCONCLUSIVE, EXIT_INPUTS, EXIT_SELFCHECK = range(6)
KINDS = ("recurrence", "eps-recurrence", "coupled-difference", "coupled-differential")


class ProblemError(ValueError):
    """Structurally malformed problem or solution file."""


# problem files

class Problem:
    def __init__(self, doc):
        if not isinstance(doc, dict):
            raise ProblemError("problem file must be a JSON object")
        self.doc = doc
        self.kind = doc.get("kind")
        if self.kind not in KINDS:
            raise ProblemError(f"unknown kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        self.unknowns = list(doc.get("unknowns") or ["I"])
        self.min_index = int(doc.get("min_index", 0))
        self.start = doc.get("order_start")
        self.ivs = self._initial_values(doc.get("initial_values", []))
        t = doc.get("targets")
        if isinstance(t, dict):
            t = [t[u] for u in self.unknowns]
        elif isinstance(t, int):
            t = [t] * len(self.unknowns)
        self.targets = None if t is None else [int(v) for v in t]
        if self.kind in ("recurrence", "eps-recurrence"):
            if len(self.unknowns) != 1:
                raise ProblemError("a recurrence has exactly one unknown")
            self.coefficients = [_ratfun(s, f"coefficients[{i}]", self.kind)
                                 for i, s in enumerate(_need(doc, "coefficients"))]
            if self.kind == "recurrence":
                r = doc.get("rhs", "0")
                self.rhs = _expr(r, "rhs")
            else:
                self.rhs = _laurent(_need(doc, "rhs"), "rhs")
        else:
            mats = _need(doc, "matrices")
            n = len(self.unknowns)
            self.matrices = []
            for k, A in enumerate(mats):
                if len(A) != n or any(len(row) != n for row in A):
                    raise ProblemError(f"matrices[{k}] must be {n}x{n}")
                self.matrices.append([[_ratfun(s, f"matrices[{k}][{r}][{c}]", self.kind)
                                       for c, s in enumerate(row)] for r, row in enumerate(A)])
            rhs = doc.get("rhs") or [None] * n
            if len(rhs) != n:
                raise ProblemError(f"rhs must have {n} entries")
            self.rhs = [None if r is None else _laurent(r, f"rhs[{i}]") for i, r in enumerate(rhs)]

    def _initial_values(self, items):
        out = {}
        for i, it in enumerate(items):
            try:
                u = it.get("unknown", self.unknowns[0])
                if u not in self.unknowns:
                    raise ProblemError(f"initial_values[{i}]: unknown {u!r}")
                c = self.unknowns.index(u)
                order = int(it.get("order", 0))
                out.setdefault(c, {}).setdefault(order, {})[int(it["index"])] = _value(
                    it["value"], f"initial_values[{i}].value")
            except KeyError as exc:
                raise ProblemError(f"initial_values[{i}] lacks {exc}") from None
        return out

    def window(self, orders=None):
        """(start order, targets) with an --orders override."""
        start, targets = self.start, self.targets
        if orders is not None:
            start, top = orders
            targets = [top] * len(self.unknowns)
        if start is None and self.kind == "eps-recurrence":
            start = self.rhs.start
        if start is None:
            raise ProblemError("order_start missing (or pass --orders)")
        if targets is None:
            raise ProblemError("targets missing (or pass --orders)")
        return int(start), targets


def _need(doc, key):
    if key not in doc:
        raise ProblemError(f"missing field {key!r}")
    return doc[key]


def _located(fn, text, where):
    if not isinstance(text, (str, int)):
        raise ProblemError(f"{where}: expected a string")
    try:
        return fn(str(text))
    except ParseError as exc:
        exc.where = where
        raise


# variables each kind may use in its coefficients
COEFF_VARS = {"recurrence": {"N"}, "eps-recurrence": {"N", "eps"}, "coupled-difference": {"N", "eps"},
              "coupled-differential": {"x", "eps"}}


def _ratfun(text, where, kind):
    f = _located(parse_ratfun, text, where)
    bad = sorted(f.variables() - COEFF_VARS[kind])
    if bad:
        raise ProblemError(f"{where}: {', '.join(bad)} may not appear in a {kind} coefficient")
    return f


def _expr(text, where):
    return _located(parse_expr, text, where)


def _value(text, where):
    return _located(parse_value, text, where)


def _laurent(obj, where):
    if isinstance(obj, LaurentExpansion):
        return obj
    try:
        start = int(obj["order_start"])
        end = int(obj.get("order_end", start + len(obj["coefficients"]) - 1))
        coeffs = [_expr(s, f"{where}.coefficients[{i}]") for i, s in enumerate(obj["coefficients"])]
    except (KeyError, TypeError):
        raise ProblemError(f"{where}: expected {{order_start, order_end, coefficients}}") from None
    if end < start + len(coeffs) - 1:
        coeffs = coeffs[: end - start + 1]
    return LaurentExpansion(start, coeffs, end)


def laurent_doc(E):
    return {"order_start": E.start, "order_end": E.truncation,
            "coefficients": [expr_to_str(E.coefficient(j)) for j in E.orders()]}


def shipped_problems():
    """Names of the example problems bundled with the package."""
    root = resources.files("nestsolve") / "problems"
    return sorted(f.name[:-5] for f in root.iterdir() if f.name.endswith(".json"))


def problem_path(path):
    """``path`` itself, or the bundled problem of that name."""
    if os.path.exists(path):
        return path
    name = os.path.basename(path)
    name = name[:-5] if name.endswith(".json") else name
    if name in shipped_problems():
        return str(resources.files("nestsolve") / "problems" / f"{name}.json")
    return path


def load_problem(path):
    try:
        with open(problem_path(path)) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.pos, "") from None
    return Problem(doc)


# analyze

def _difference_system(p):
    if p.kind == "coupled-difference":
        return CoupledDifferenceSystem(p.matrices, p.rhs, p.unknowns), None
    conv = ode_to_recurrence(CoupledDifferentialSystem(p.matrices, p.rhs, p.unknowns))
    return conv.system, conv


def cmd_analyze(p, orders=None):
    if p.kind == "recurrence":
        eq = RecurrenceEquation(p.coefficients, p.rhs)
        space_from = solution_space(eq).valid_from if eq.order else 0
        return {"kind": p.kind, "pivots": [{"unknown": p.unknowns[0], "initial_values": eq.order,
                                            "first_index": max(space_from, p.min_index)}],
                "rhs_depth": [], "constraints": []}
    if p.kind == "eps-recurrence":
        start, targets = p.window(orders)
        mu, dd = initial_value_demand(EpsRecurrence(p.coefficients, p.rhs))
        _, s = normalize_epsilon(EpsRecurrence(p.coefficients, p.rhs))
        return {"kind": p.kind,
                "pivots": [{"unknown": p.unknowns[0], "initial_values": dd, "order": targets[0],
                            "first_index": max(mu, p.min_index)}],
                "rhs_depth": [targets[0] - s], "constraints": [],
                "summary": [[[p.unknowns[0], dd, targets[0]]], [targets[0] - s], []]}
    start, targets = p.window(orders)
    dsys, conv = _difference_system(p)
    form = uncouple(dsys)
    plan = analyze(form, targets)
    depth = plan.rhs_depth[: dsys.size]
    constraints = []
    if conv is not None:
        need = [None] * dsys.size
        for f, w in zip(conv.rhs_forms, depth):
            if w is None:
                continue
            for (_, i, s), c in f.items():
                j = w - c.eps_valuation()
                need[i] = j if need[i] is None else max(need[i], j)
        depth = need
        constraints = [f"x^{b.power} in equation {b.row + 1}" for b in conv.boundary]
    pivots = [{"unknown": form.names[i], "initial_values": m, "order": nu,
               "first_index": max(mu, p.min_index)} for i, m, nu, mu in plan.pivots]
    return {"kind": p.kind, "pivots": pivots, "rhs_depth": depth, "constraints": constraints,
            "summary": [[[q["unknown"], q["initial_values"], q["order"]] for q in pivots],
                        depth, constraints]}


def analyze_text(rep):
    parts = []
    for q in rep["pivots"]:
        s = f"pivot {q['unknown']}, {q['initial_values']} initial values"
        if "order" in q:
            s += f", order {q['order']}"
        parts.append(s + f" from N={q['first_index']}")
    text = "; ".join(parts)
    if rep["rhs_depth"]:
        text += "; rhs depth (" + ",".join("-" if w is None else str(w) for w in rep["rhs_depth"]) + ")"
    if rep["constraints"]:
        text += "; boundary constraints: " + ", ".join(rep["constraints"])
    return text


# solve

class Failure(Exception):
    def __init__(self, code, doc):
        super().__init__(doc.get("message", ""))
        self.code = code
        self.doc = doc


def _failure(res):
    code = EXIT_NOT_NESTED if isinstance(res, NotNestedSum) else EXIT_INCONCLUSIVE
    doc = {"status": "not-nested-sum" if code == EXIT_NOT_NESTED else "inconclusive",
           "reason": res.reason, "order": res.order, "component": res.component}
    if isinstance(res, NotNestedSum):
        doc["witness"] = res.witness
    raise Failure(code, doc)


def cmd_solve(p, orders=None, check_window=DEFAULT_CHECK_WINDOW):
    out = {"kind": p.kind, "check_window": check_window}
    if p.kind == "recurrence":
        eq = RecurrenceEquation(p.coefficients, p.rhs)
        res = solve_recurrence(eq, p.ivs.get(0, {}).get(0, {}), p.min_index, check_window)
        if not isinstance(res, Solved):
            _failure(res)
        out["solution"] = {p.unknowns[0]: expr_to_str(res.expression)}
        out["constants"] = [str(c) for c in res.constants]
        out["first_index"] = res.window[0] if res.window else res.valid_from
    elif p.kind == "eps-recurrence":
        start, targets = p.window(orders)
        res = generate_expansion(EpsRecurrence(p.coefficients, p.rhs), p.ivs.get(0, {}),
                                 (start, targets[0]), p.min_index, check_window)
        if not isinstance(res, LaurentExpansion):
            _failure(res)
        out["solution"] = {p.unknowns[0]: _orders_doc(res)}
        out["first_index"] = max(initial_value_demand(EpsRecurrence(p.coefficients, p.rhs))[0],
                                 p.min_index)
    else:
        start, targets = p.window(orders)
        if p.kind == "coupled-difference":
            res = solve_coupled(CoupledDifferenceSystem(p.matrices, p.rhs, p.unknowns), p.rhs,
                                p.ivs, targets, start, p.min_index, check_window)
        else:
            res = solve_coupled_ode(CoupledDifferentialSystem(p.matrices, p.rhs, p.unknowns),
                                    p.ivs, targets, start, p.min_index, check_window)
        if not isinstance(res, list):
            _failure(res)
        out["solution"] = {u: _orders_doc(E) for u, E in zip(p.unknowns, res)}
        out["first_index"] = _coupled_first_index(p)
    out["status"] = "solved"
    out["verification"] = "passed"
    return out


def _coupled_first_index(p):
    first = p.min_index
    for tab in p.ivs.values():
        for row in tab.values():
            if row:
                first = max(first, min(row))
    return first


def _orders_doc(E):
    return {str(j): expr_to_str(E.coefficient(j)) for j in E.orders()}


def solution_text(doc):
    lines = []
    for u, v in doc["solution"].items():
        if isinstance(v, str):
            lines.append(f"{u}(N) = {v}")
        else:
            lines.append(f"{u}(N) = " + " + ".join(f"eps^({j})*({e})" for j, e in v.items())
                         + f" + O(eps^({max(int(j) for j in v) + 1}))")
    return "\n".join(lines)


# verify

def cmd_verify(p, sol, check_window=DEFAULT_CHECK_WINDOW):
    """Compare a solution document with the unroll oracle.  Returns a report
    with status pass/fail and the first counterexample."""
    if not isinstance(sol, dict) or "solution" not in sol:
        raise ProblemError("solution document lacks 'solution'")
    S = sol["solution"]
    rep = {"check_window": check_window}
    try:
        if p.kind == "recurrence":
            expr = _expr(S[p.unknowns[0]], "solution")
            _verify_recurrence(p, expr, sol, check_window, rep)
        elif p.kind == "eps-recurrence":
            E = _solution_laurent(S[p.unknowns[0]], p.unknowns[0])
            _verify_eps(p, E, sol, check_window, rep)
        else:
            Es = [_solution_laurent(S[u], u) for u in p.unknowns]
            _verify_coupled(p, Es, sol, check_window, rep)
    except KeyError as exc:
        raise ProblemError(f"solution lacks an entry for {exc}") from None
    rep.setdefault("status", "pass")
    return rep


def _solution_laurent(d, name):
    if not isinstance(d, dict) or not d:
        raise ProblemError(f"solution for {name} must map orders to expressions")
    orders = sorted(int(j) for j in d)
    lo, hi = orders[0], orders[-1]
    return LaurentExpansion(lo, [_expr(d.get(str(j), "0"), f"solution.{name}[{j}]")
                                 for j in range(lo, hi + 1)], hi)


def _fail(rep, index, what, unknown=None, order=None, expected=None, got=None):
    rep["status"] = "fail"
    ce = {"index": index, "what": what}
    if unknown is not None:
        ce["unknown"] = unknown
    if order is not None:
        ce["order"] = order
    if expected is not None:
        ce["expected"] = str(expected)
        ce["got"] = str(got)
    rep["counterexample"] = ce
    return rep


def _verify_recurrence(p, expr, sol, W, rep):
    ivs = p.ivs.get(0, {}).get(0, {})
    d = len(p.coefficients) - 1
    while d > 0 and not p.coefficients[d]:
        d -= 1
    start = int(sol.get("first_index", min(ivs) if ivs else p.min_index))
    for n in sorted(ivs):
        if n >= start and expr.evaluate(n) != ivs[n]:
            return _fail(rep, n, "initial value", p.unknowns[0], expected=ivs[n], got=expr.evaluate(n))
    init = {n: ivs[n] if n in ivs else expr.evaluate(n) for n in range(start, start + d)}
    up = start + d - 1 + W
    rep["indices"] = [start, up]
    try:
        table = unroll(p.coefficients, p.rhs, init, up, start)
    except SingularLeading as exc:
        return _fail(rep, exc.index, "singular leading coefficient")
    for n in range(start, up + 1):
        v = expr.evaluate(n)
        if v != table[n]:
            return _fail(rep, n, "unrolled sequence", p.unknowns[0], expected=table[n], got=v)
    return rep


def _verify_eps(p, E, sol, W, rep):
    ivs = p.ivs.get(0, {})
    eq = EpsRecurrence(p.coefficients, p.rhs)
    eqn, s = normalize_epsilon(eq)
    dd = len(_leading(eqn)) - 1
    o, u = E.start, E.truncation
    start = int(sol.get("first_index", p.min_index))
    for j in range(o, u + 1):
        for n, v in sorted(ivs.get(j, {}).items()):
            if n >= start and E.coefficient(j).evaluate(n) != v:
                return _fail(rep, n, "initial value", p.unknowns[0], j, v, E.coefficient(j).evaluate(n))
    table = {j: {n: ivs.get(j, {}).get(n, E.coefficient(j).evaluate(n)) for n in range(start, start + dd)}
             for j in range(o, u + 1)}
    up = start + dd - 1 + W
    rep["indices"] = [start, up]
    try:
        got = unroll_eps(eq.coefficients, eq.rhs, table, (o, u), up, start)
    except SingularLeading as exc:
        return _fail(rep, exc.index, "singular leading coefficient")
    except RhsTooShallow as exc:
        raise Failure(EXIT_INPUTS, {"status": "insufficient-inputs", "message": str(exc)})
    for j in range(o, u + 1):
        for n in range(start, up + 1):
            v = E.coefficient(j).evaluate(n)
            if v != got[j][n]:
                return _fail(rep, n, "unrolled sequence", p.unknowns[0], j, got[j][n], v)
    return rep


def _verify_coupled(p, Es, sol, W, rep):
    start = int(sol.get("first_index", _coupled_first_index(p)))
    for c, tab in p.ivs.items():
        for j, row in tab.items():
            if Es[c].start <= j <= Es[c].truncation:
                for n, v in sorted(row.items()):
                    if n >= start and Es[c].coefficient(j).evaluate(n) != v:
                        return _fail(rep, n, "initial value", p.unknowns[c], j, v,
                                     Es[c].coefficient(j).evaluate(n))
    dsys, conv = _difference_system(p)
    rhs = p.rhs
    if conv is not None:
        depth = [min(E.truncation for E in Es)] * dsys.size
        rhs = converted_rhs(conv, p.rhs, [max(d, -10**6) for d in depth])
        start = max(start, conv.valid_from)
    rep["indices"] = [start, start + W]
    try:
        round_trip(dsys, Es, rhs, start, W)
    except SelfCheckFailed as exc:
        return _fail(rep, exc.index, exc.what)
    return rep


# entry point

def _orders_arg(text):
    try:
        a, b = text.split("..")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a..b, e.g. -3..-2") from None


def _window_default():
    v = os.environ.get("NESTSOLVE_CHECK_WINDOW")
    if v is None:
        return DEFAULT_CHECK_WINDOW
    try:
        w = int(v)
    except ValueError:
        raise SystemExit(f"NESTSOLVE_CHECK_WINDOW must be an integer, got {v!r}")
    return w


def _emit_error(code, doc, as_json):
    doc = dict(doc)
    doc.setdefault("exit_code", code)
    if as_json or "message" not in doc:
        sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")
    else:
        sys.stderr.write(f"error: {doc['message']}\n" + json.dumps(doc, sort_keys=True) + "\n")
    return code


def main(argv=None):
    ap = argparse.ArgumentParser(prog="nestsolve", description="Nested-sum solutions of linear "
                                 "recurrences and coupled systems with eps-expansions.")
    ap.add_argument("command", choices=("analyze", "solve", "verify"))
    ap.add_argument("file")
    ap.add_argument("solution", nargs="?", help="solution document (verify only)")
    ap.add_argument("--orders", type=_orders_arg, help="eps-orders a..b to compute")
    ap.add_argument("--check-window", type=int, default=None)
    ap.add_argument("--json", action="store_true", help="machine-readable output")
    # negative ranges such as -3..-2 would otherwise read as options
    rest = list(sys.argv[1:] if argv is None else argv)
    argv = []
    while rest:
        a = rest.pop(0)
        if a == "--orders" and rest:
            a = f"--orders={rest.pop(0)}"
        argv.append(a)
    args = ap.parse_args(argv)
    W = args.check_window if args.check_window is not None else _window_default()
    if W < 1:
        return _emit_error(EXIT_PARSE, {"error": "usage", "message": "check window must be >= 1"}, True)
    try:
        p = load_problem(args.file)
        if args.command == "analyze":
            rep = cmd_analyze(p, args.orders)
            print(json.dumps(rep, sort_keys=True) if args.json else analyze_text(rep))
            return EXIT_OK
        if args.command == "solve":
            doc = cmd_solve(p, args.orders, W)
            print(json.dumps(doc, sort_keys=True, indent=1) if args.json else solution_text(doc))
            return EXIT_OK
        if not args.solution:
            return _emit_error(EXIT_PARSE, {"error": "usage", "message": "verify needs a solution file"},
                               True)
        with open(args.solution) as fh:
            try:
                sol = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON in solution: {exc.msg}", exc.pos, "") from None
        rep = cmd_verify(p, sol, W)
        if args.json:
            print(json.dumps(rep, sort_keys=True))
        elif rep["status"] == "pass":
            lo, hi = rep.get("indices", [None, None])
            print(f"pass (N={lo}..{hi}, check window {W})")
        else:
            ce = rep["counterexample"]
            print(f"fail at N={ce['index']}: {ce['what']}")
        return EXIT_OK if rep["status"] == "pass" else EXIT_NOT_NESTED
    except ParseError as exc:
        doc = {"error": "parse", "message": str(exc), "position": exc.pos}
        if getattr(exc, "where", None):
            doc["field"] = exc.where
        return _emit_error(EXIT_PARSE, doc, args.json)
    except ProblemError as exc:
        return _emit_error(EXIT_PARSE, {"error": "parse", "message": str(exc)}, args.json)
    except OSError as exc:
        return _emit_error(EXIT_PARSE, {"error": "io", "message": str(exc)}, args.json)
    except Failure as exc:
        if exc.code in (EXIT_NOT_NESTED, EXIT_INCONCLUSIVE):
            print(json.dumps(exc.doc, sort_keys=True) if args.json else
                  f"{exc.doc['status']}: {exc.doc.get('reason', '')}")
        return _emit_error(exc.code, exc.doc, args.json)
    except RhsTooShallow as exc:
        return _emit_error(EXIT_INPUTS, {"error": "rhs-too-shallow", "message": str(exc),
                                         "needed": exc.needed, "rhs": exc.name}, args.json)
    except InsufficientInitialValues as exc:
        return _emit_error(EXIT_INPUTS, {"error": "insufficient-initial-values", "message": str(exc),
                                         "needed": list(exc.needed), "order": exc.order}, args.json)
    except BoundaryInconsistent as exc:
        return _emit_error(EXIT_INPUTS, {"error": "boundary-inconsistent", "message": str(exc),
                                         "power": exc.index}, args.json)
    except SelfCheckFailed as exc:
        return _emit_error(EXIT_SELFCHECK, {"error": "self-check", "message": str(exc),
                                            "index": exc.index}, args.json)


if __name__ == "__main__":
    sys.exit(main())
