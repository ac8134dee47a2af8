"""Utility design: the rule ``f`` each agent is paid per resource.

Includes the LP-optimal one-round design, its closed form on b-covering rules,
the marginal-contribution, Shapley and constant baselines, the
anarchy-optimal recursion, the Pareto-optimal recursion on set covering and
the frontier it traces, and the linear extension of a design over a basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import lp
from .efficiency import welfare_extended
from .errors import NonMonotoneSolution, NumericalFailure, ValidationError
from .game import DEFAULT_NMAX, UtilityRule, WelfareRule

CHI_STAR = 1.0 / (math.e - 1.0)   # smallest achievable anarchy parameter on set covering
THRESHOLD_SNAP = 1e-12


@dataclass(frozen=True)
class DesignResult:
    f: UtilityRule
    beta: float
    method: str
    params: dict = field(default_factory=dict)
    notes: tuple = ()

    @property
    def guarantee(self) -> float:
        return 1.0 / self.beta

    def to_dict(self) -> dict:
        return {"method": self.method, "beta": self.beta, "guarantee": self.guarantee,
                "params": dict(sorted(self.params.items())), "f": list(self.f.values),
                "notes": list(self.notes)}


def _check_c(c: float) -> float:
    c = float(c)
    if not 0.0 <= c <= 1.0:
        raise ValidationError(f"curvature must lie in [0, 1], got {c}")
    return c


# -- LP-optimal one-round design ----------------------------------------------

def _design_rows(w: WelfareRule, Y: int, Z: int) -> list:
    """Constraint rows over variables [beta, f(2), ..., f(Y+1)]."""
    y_top = max(Y + 1, w.n_max)
    wv = welfare_extended(w, max(y_top, Z))
    nv = Y + 1
    rows = []
    for y in range(1, y_top + 1):
        base = np.zeros(nv)
        base[0] = wv[y]
        # minus sum_{i<=y} f(i); f(1) = 1 moves to the right-hand side
        for i in range(2, min(y, Y + 1) + 1):
            base[i - 1] -= 1.0
        if y > Y + 1:
            base[Y] -= y - Y - 1
        nxt = min(y + 1, Y + 1)
        for z in range(0, Z + 1):
            row = base.copy()
            row[nxt - 1] += z
            rows.append((row, ">=", wv[z] + 1.0))
    # the constant tail f(j) = f(Y+1) must stay feasible as y grows with z = 0
    slope = wv[-1] - wv[-2]
    tail = np.zeros(nv)
    tail[0] = slope
    tail[Y] = -1.0
    rows.append((tail, ">=", 0.0))
    return rows


def optimal_utility_lp(w: WelfareRule, Y: int = 40, Z: int = 40, strict: bool = False,
                       check_convergence: bool = False) -> DesignResult:
    """Minimize beta over utility rules with f(1) = 1 for one-round play.

    beta and f are rebuilt in rational arithmetic from the simplex basis. A
    second pass then minimizes the total of f at that beta; if it cannot be
    certified the first vertex is kept. For an arbitrary submodular table the
    value is a guarantee for that rule alone.
    """
    if abs(w.values[1] - 1.0) > 1e-9:
        raise ValidationError("design LP needs w(1) = 1")
    if not w.is_submodular():
        raise ValidationError("design LP expects a submodular welfare rule")
    if Y < 1 or Z < 1:
        raise ValidationError("truncation bounds must be >= 1")
    rows = _design_rows(w, Y, Z)
    nv = Y + 1
    p1 = lp.LpProblem.from_rows(np.eye(nv)[0], rows, "min")
    first = lp.solve_or_raise(p1)
    # the tail of f amplifies rounding in beta geometrically, so the vertex is
    # rebuilt in rational arithmetic from the simplex basis
    notes = []
    try:
        vertex = lp.exact_vertex(p1, first)
        beta_exact = vertex.value
        fx = list(vertex.x)
    except NumericalFailure as exc:
        notes.append(f"exact vertex reconstruction failed: {exc}")
        vertex, beta_exact, fx = None, Fraction(first.value), [Fraction(v) for v in first.x]
    second_pass = 0.0
    if vertex is not None:
        # second pass: smallest total f at the optimal beta
        cap = np.zeros(nv)
        cap[0] = 1.0
        obj2 = np.ones(nv)
        obj2[0] = 0.0
        p2 = lp.LpProblem.from_rows(obj2, rows + [(cap, "<=", float(beta_exact))], "min")
        try:
            second = lp.solve(p2)
            if second.status == "optimal":
                v2 = lp.exact_vertex(p2, second, rhs={len(rows): beta_exact})
                if v2.certified and v2.x[0] == beta_exact:
                    fx = list(v2.x)
                    second_pass = 1.0
        except NumericalFailure:
            pass
    beta = float(beta_exact)
    fvals = np.concatenate([[1.0], [max(float(v), 0.0) for v in fx[1:]]])
    f = UtilityRule(tuple(fvals), label="one-round-optimal")
    if max(Y + 1, w.n_max) > f.n_max:
        f = f.extended(max(Y + 1, w.n_max))
    # second_pass = 0 means the first vertex is kept; when the optimal face is a
    # single point (b-covering rules) the knife-edge second LP has nothing to add
    params = {"Y": float(Y), "Z": float(Z), "second_pass": second_pass,
              "exact": float(vertex is not None)}
    if check_convergence:
        wider = optimal_utility_lp(w, 2 * Y, 2 * Z, strict=False)
        params["beta_doubled"] = wider.beta
        if abs(wider.beta - beta) > 1e-9:
            notes.append("beta changed when truncation bounds were doubled")
    if not f.is_non_increasing(1e-9):
        msg = "LP utility rule is not non-increasing; truncation bounds are likely too small"
        result = DesignResult(f, beta, "one-round-optimal", params, tuple(notes + [msg]))
        if strict:
            raise NonMonotoneSolution(msg, result)
        return result
    return DesignResult(f, beta, "one-round-optimal", params, tuple(notes))


def optimal_recursive_check(w: WelfareRule, beta: float, Y: int = 40, Z: int = 40) -> UtilityRule:
    """Smallest f feasible for a given beta, built one entry at a time.

    f(y+1) is the largest of (sum_{i<=y} f(i) + w(z) - beta w(y)) / z over
    1 <= z <= Z, clamped at 0. An increasing result signals beta is too small.
    """
    if beta < 1.0:
        raise ValidationError("beta must be >= 1")
    wv = welfare_extended(w, max(Y, Z))
    z = np.arange(1, Z + 1)
    f = [1.0]
    total = 1.0
    for y in range(1, Y + 1):
        cand = (total + wv[z] - beta * wv[y]) / z
        nxt = max(0.0, float(cand.max()))
        f.append(nxt)
        total += nxt
    return UtilityRule(tuple(f), label=f"recursive(beta={beta:g})")


# -- closed forms on b-covering rules -------------------------------------------

def bcovering_beta(b: int, c: float) -> float:
    c = _check_c(c)
    if b < 1:
        raise ValidationError("b must be >= 1")
    B = ((b + 1) / b) ** b
    return B / (B - c)


def bcovering_optimal_f(b: int, c: float, N: int = DEFAULT_NMAX) -> DesignResult:
    c = _check_c(c)
    if b < 1 or N < 1:
        raise ValidationError("need b >= 1 and N >= 1")
    beta = bcovering_beta(b, c)
    B = (b + 1) / b
    # both branches meet at j = b+1; the flat one is used there to avoid round-off below 0
    vals = [(1 - beta) * B ** (j - 1) + beta if j <= b else (1 - c) * beta for j in range(1, N + 1)]
    head = (1 - beta) * B ** b + beta
    if abs(head - (1 - c) * beta) > 1e-9:
        raise ValidationError("closed-form branches disagree at j = b+1")
    f = UtilityRule(tuple(vals), label=f"f^b(b={b},c={c:g})")
    return DesignResult(f, beta, "bcovering-optimal", {"b": float(b), "c": c})


def optimal_one_round_curvature(c: float) -> float:
    return 1.0 - _check_c(c) / 2.0


def greedy_guarantee(c: float) -> float:
    return 1.0 / (1.0 + _check_c(c))


# -- baselines --------------------------------------------------------------------

def mc_utility(w: WelfareRule) -> UtilityRule:
    """Marginal contribution ``w(j) - w(j-1)``."""
    d = np.maximum(w.increments(), 0.0)
    return UtilityRule(tuple(d), label="marginal-contribution")


def shapley_utility(w: WelfareRule) -> UtilityRule:
    """Equal split ``w(j) / j``."""
    j = np.arange(1, w.n_max + 1)
    return UtilityRule(tuple(w.array[1:] / j), label="shapley")


def constant_utility(N: int) -> UtilityRule:
    if N < 1:
        raise ValidationError("N must be >= 1")
    return UtilityRule((1.0,) * N, label="constant")


# -- anarchy-optimal recursion -------------------------------------------------------

def poa_rho(b: int) -> float:
    """``(1 - b^b e^-b / b!)^-1``, evaluated in log space."""
    if b < 1:
        raise ValidationError("b must be >= 1")
    t = math.exp(b * math.log(b) - b - math.lgamma(b + 1))
    return 1.0 / (1.0 - t)


def _poa_tail(b: int, rho: float, t: int) -> float:
    """f(t+1) for t >= b as (rho-1) * sum_{m>=1} prod_{i<=m} b/(t+i).

    Running the recursion forward past b multiplies rounding error by t/b at
    every step; this series is the same quantity without that blow-up.
    """
    total, term = 0.0, 1.0
    for m in range(1, 1_000_000):
        term *= b / (t + m)
        total += term
        if term < 1e-18 * total:
            break
    return (rho - 1.0) * total


def poa_optimal_f(b: int, N: int = DEFAULT_NMAX) -> DesignResult:
    """Utility rule optimizing the price of anarchy on a b-covering rule of curvature 1."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    rho = poa_rho(b)
    f = [1.0]
    for j in range(1, N):
        if j < b:
            f.append((j * f[-1] - rho * j) / b + 1.0)
        else:
            f.append(_poa_tail(b, rho, j))
    rule = UtilityRule(tuple(f), label=f"f^poa(b={b})")
    return DesignResult(rule, rho, "poa-optimal", {"b": float(b), "rho": rho})


def poa_forward(b: int, N: int) -> list:
    """The recursion run forward naively (accurate only for small j)."""
    rho = poa_rho(b)
    f = [1.0]
    for j in range(1, N):
        f.append((j * f[-1] - rho * min(j, b)) / b + 1.0)
    return f


# -- Pareto-optimal rules on set covering -----------------------------------------------

def _check_chi(chi: float) -> bool:
    """True when chi sits on the threshold 1/(e-1)."""
    if not math.isfinite(chi):
        raise ValidationError("chi must be finite")
    if abs(chi - CHI_STAR) <= THRESHOLD_SNAP:
        return True
    if chi < CHI_STAR:
        raise ValidationError(f"chi {chi} is below the achievable threshold 1/(e-1)")
    return False


def _pareto_exact(chi: float, N: int) -> list:
    x = Fraction(chi)
    f = [Fraction(1)]
    for j in range(1, N):
        f.append(max(j * f[-1] - x, Fraction(0)))
    return f


def pareto_utility(chi: float, N: int = DEFAULT_NMAX) -> UtilityRule:
    """f(1) = 1, f(j+1) = max(j f(j) - chi, 0), in exact rational arithmetic."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    if _check_chi(float(chi)):
        vals = [1.0] + [_poa_tail(1, 1.0 + CHI_STAR, j) for j in range(1, N)]
    else:
        vals = [float(v) for v in _pareto_exact(float(chi), N)]
    return UtilityRule(tuple(vals), label=f"f^chi(chi={chi:g})")


def pareto_closed_form(chi: float, N: int) -> list:
    """``max((j-1)! (1 - chi sum_{tau<j} 1/tau!), 0)`` in exact arithmetic."""
    x = Fraction(chi)
    out = []
    partial = Fraction(0)
    for j in range(1, N + 1):
        if j >= 2:
            partial += Fraction(1, math.factorial(j - 1))
        out.append(float(max(math.factorial(j - 1) * (1 - x * partial), Fraction(0))))
    return out


@dataclass(frozen=True)
class FrontierResult:
    Q: float
    value: float
    diverged: bool
    partial_value: float
    terms: int


def pareto_frontier(Q: float, J: int = 200) -> FrontierResult:
    """Best one-round efficiency on set covering given anarchy guarantee Q.

    Sums j = 0..J of max(j! (1 - chi sum_{tau=1..j} 1/tau!), 0) with
    chi = (1-Q)/Q. At Q = 1 - 1/e the series diverges (terms decay like 1/j),
    so the frontier value is 0; ``partial_value`` keeps the truncated sum.
    """
    q_hi = 1.0 - 1.0 / math.e
    if not (0.5 - 1e-12 <= Q <= q_hi + 1e-12):
        raise ValidationError(f"Q must lie in [1/2, 1-1/e], got {Q}")
    if J < 0:
        raise ValidationError("J must be >= 0")
    chi = (1.0 - Q) / Q
    at_threshold = chi <= CHI_STAR + THRESHOLD_SNAP
    if at_threshold:
        terms = [1.0] + [_poa_tail(1, 1.0 + CHI_STAR, j) for j in range(1, J + 1)]
    else:
        terms = [float(v) for v in _pareto_exact(chi, J + 1)]
    rising = 0
    growth = False
    for prev, cur in zip(terms, terms[1:]):
        rising = rising + 1 if cur > prev else 0
        if rising >= 2:
            growth = True
            break
    partial = 1.0 / (math.fsum(terms) + 1.0)
    diverged = at_threshold or growth
    return FrontierResult(Q, 0.0 if diverged else partial, diverged, partial, len(terms))


# -- linear extension over a basis --------------------------------------------------------

def linear_design(basis: Sequence, coefficients: Sequence[float]) -> DesignResult:
    """``f = sum_b alpha_b f_b``; the guarantee is the worst over contributing b."""
    if len(basis) != len(coefficients) or not basis:
        raise ValidationError("basis and coefficients must be nonempty and equal in length")
    rules = [d.f if isinstance(d, DesignResult) else d for d in basis]
    n = rules[0].n_max
    if any(r.n_max != n for r in rules):
        raise ValidationError("basis utility rules must share the same N")
    alpha = np.asarray(coefficients, dtype=float)
    if np.any(alpha < 0) or not np.isfinite(alpha).all():
        raise ValidationError("basis coefficients must be finite and >= 0")
    vals = sum(a * np.asarray(r.values) for a, r in zip(alpha, rules))
    if abs(vals[0] - 1.0) > 1e-9:
        raise ValidationError(f"combined rule has f(1) = {vals[0]:.6g}, expected 1")
    betas = [d.beta for d, a in zip(basis, alpha) if a > 0 and isinstance(d, DesignResult)]
    beta = max(betas) if betas else float("nan")
    return DesignResult(UtilityRule(tuple(vals), label="linear-design"), beta, "linear",
                        {"terms": float(int(np.count_nonzero(alpha)))})
