"""Worked-example data shared by the golden and acceptance tests."""

from fractions import Fraction

from nestsolve.epsilon import EpsRecurrence, LaurentExpansion
from nestsolve.ode import CoupledDifferentialSystem
from nestsolve.recurrence import RecurrenceEquation
from nestsolve.syntax import parse_expr, parse_ratfun
from nestsolve.uncoupling import CoupledDifferenceSystem

R = parse_ratfun
E = parse_expr

SIMPLE_COEFFS = ["-2*(N+1)*(N+2)^2", "-(N+2)*(-6*N^2-28*N-32)", "-6*N^3-50*N^2-136*N-120",
                 "-(-N-2)*(N+4)*(2*N+8)"]
SIMPLE_RHS = "-4*(N+2)/(3*(N+3))"
SIMPLE_IVS = {1: Fraction(5), 2: Fraction(130, 27), 3: Fraction(169, 36)}
SIMPLE_SOLUTION = "(59*N^2+120*N+49)/(9*(N+1)^2) - 2*(N+3)*S[1](N)/(3*(N+1))"
SIMPLE_BASIS = ["-1/(N+1)", "-N/(N+1)", "1/(N+1)^2 + S[1](N)/(N+1)"]
SIMPLE_PARTICULAR = "2*(N^2+N-1)/(3*(N+1)^2) - 2*(N+2)*S[1](N)/(3*(N+1))"
SIMPLE_CONSTANTS = (Fraction(-49, 9), Fraction(-41, 9), Fraction(-2, 3))

EPS_COEFFS = ["-2*(N+1)*(N+2)*(2+eps+N)", "-(N+2)*(-32-7*eps+2*eps^2-28*N-5*eps*N-6*N^2)",
              "-(120+3*eps-14*eps^2-eps^3+136*N+13*eps*N-4*eps^2*N+50*N^2+4*eps*N^2+6*N^3)",
              "(2-eps+N)*(4+eps+N)*(8+eps+2*N)"]
EPS_RHS = ["-4*(N+2)/(3*(N+3))",
           "-2*(2*N+7)*S[1](N)/(3*(N+3)) - 2*(4*N^4+35*N^3+101*N^2+105*N+25)/(3*(N+1)*(N+2)*(N+3)^2)"]
EPS_IVS = {-3: {1: Fraction(5), 2: Fraction(130, 27), 3: Fraction(169, 36)},
           -2: {1: Fraction(-163, 12), 2: Fraction(-695, 54), 3: Fraction(-395, 32)}}
EXPANSION_M3 = SIMPLE_SOLUTION
EXPANSION_M2 = ("-2*(20*N^3+58*N^2+57*N+22)/(3*(N+1)^3) + 2*(N+2)*(2*N-1)*S[1](N)/(3*(N+1)^2)"
                " - S[1](N)^2/(N+1) - S[2](N)/(N+1)")

A0 = [["N+1", "0", "0"],
      ["eps*(3*eps+2)", "-2*(3*eps+1)", "-2*(-1+eps-2*N)"],
      ["-eps*(3*eps+2)", "2*(3+3*eps+2*N)", "2*(eps+1)"]]
A1 = [["-2-eps-N", "2", "0"],
      ["-2*eps*(3*eps+2)", "2*(5*eps+2)", "4*(-1+eps-N)"],
      ["0", "-2*(4+eps+2*N)", "0"]]
COUPLED_RHS = [["-4*(N+3)/(3*(N+2))",
                "2*(6*N^3+29*N^2+45*N+21)/(3*(N+1)*(N+2)^2) - 2*(2*N+3)*S[1](N)/(3*(N+2))"],
               ["-8/3", "4*(3*N+1)/(3*(N+1)) - 8*S[1](N)/3"],
               ["8/3", "-4*(3*N+1)/(3*(N+1)) + 8*S[1](N)/3"]]
COUPLED_OUT = [["4*(3*N^2+6*N+4)/(3*(N+1)^2) + 4*S[1](N)/(3*(N+1))", EXPANSION_M2],
               ["4/3", "-2"],
               ["8/3", "-4*(4*N^2+7*N+2)/(3*(N+1)^2) + 4*(N+2)*S[1](N)/(3*(N+1))"]]

ODE_A0 = [["-(1+eps-x)/((x-1)*x)", "2/((x-1)*x)", "0"],
          ["eps*(3*eps+2)*(x-2)/(4*(x-1)*x)", "-(-2-5*eps+x+3*eps*x)/(2*(x-1)*x)",
           "-(-2*eps-x+eps*x)/(2*(x-1)*x)"],
          ["-eps*(3*eps+2)/(4*(x-1))", "-(2+eps-3*x-3*eps*x)/(2*(x-1)*x)", "(eps+1)/(2*(x-1))"]]
# the second and third rows carry D I3 and D I2 respectively
ODE_A1 = [["1", "0", "0"], ["0", "0", "1"], ["0", "1", "0"]]
ODE_ROW_SCALE = [1, 4, 4]


def simple_equation():
    return RecurrenceEquation([R(c) for c in SIMPLE_COEFFS], E(SIMPLE_RHS))


def eps_equation():
    return EpsRecurrence([R(c) for c in EPS_COEFFS], LaurentExpansion(-3, [E(s) for s in EPS_RHS]))


def coupled_system():
    return CoupledDifferenceSystem([[[R(c) for c in row] for row in A0],
                                    [[R(c) for c in row] for row in A1]])


def coupled_rhs():
    return [LaurentExpansion(-3, [E(s) for s in row]) for row in COUPLED_RHS]


def coupled_ivs():
    return {0: EPS_IVS}


def ode_rhs():
    """x^N coefficients rhat_i(N) whose converted rhs equals the difference
    system's rhs: c_i*(rhat_i(N-1) - rhat_i(N)) = r_i(N), rhat_i(-1) = 0."""
    from nestsolve.sums import Expr, nested_sum
    out = []
    for c, row in zip(ODE_ROW_SCALE, COUPLED_RHS):
        coeffs = []
        for s in row:
            e = E(s)
            coeffs.append((-(Expr.const(e.evaluate(0)) + nested_sum(1, e))) * Fraction(1, c))
        out.append(LaurentExpansion(-3, coeffs))
    return out


def ode_system(with_rhs=True):
    return CoupledDifferentialSystem([[[R(c) for c in row] for row in ODE_A0],
                                      [[R(c) for c in row] for row in ODE_A1]],
                                     ode_rhs() if with_rhs else None)
