"""Efficiency of games and of (welfare rule, utility rule) pairs.

Exact values for concrete games come from exhaustive enumeration. Class-level
values come from linear programs or from closed forms on set covering.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import lp
from .dynamics import DEFAULT_BRANCH_CAP, DEFAULT_TOL, enumerate_outcomes
from .errors import DegenerateError, TooLarge, TruncationExceeded, ValidationError
from .game import (JointAction, ResourceGame, UtilityRule, WelfareRule, all_profiles, profile_counts,
                   profile_welfare, welfare)

ENUM_CAP = 5_000_000
NASH_TOL = 1e-12  # floor for floating-point noise in equilibrium checks


@dataclass(frozen=True)
class EfficiencyReport:
    metric: str            # "pob" or "poa"
    value: float
    witness_worst: JointAction
    witness_opt: JointAction
    worst_welfare: float
    opt_welfare: float
    exact: bool = True
    k: int | None = None
    n_outcomes: int = 0

    def to_dict(self) -> dict:
        return {
            "metric": self.metric, "value": self.value, "k": self.k, "exact": self.exact,
            "witness_worst": list(self.witness_worst), "witness_opt": list(self.witness_opt),
            "worst_welfare": self.worst_welfare, "opt_welfare": self.opt_welfare,
            "n_outcomes": self.n_outcomes,
        }


# -- exhaustive ---------------------------------------------------------------

def optimal_welfare(game: ResourceGame, cap: int = ENUM_CAP) -> tuple:
    """Exact maximum welfare and the lexicographically first maximizer."""
    best_val, best = -np.inf, None
    for chunk in all_profiles(game, cap):
        w = profile_welfare(game, chunk)
        k = int(np.argmax(w))
        if w[k] > best_val + 1e-12 * max(1.0, abs(best_val)) or best is None:
            best_val, best = float(w[k]), tuple(int(v) for v in chunk[k])
    return best_val, best


def _ratio(worst: float, opt: float) -> float:
    if opt <= 0:
        raise DegenerateError("optimal welfare is zero; efficiency undefined")
    return min(1.0, max(0.0, worst / opt))


def pob_exhaustive(game: ResourceGame, k: int = 1, tol: float = DEFAULT_TOL,
                   branch_cap: int = DEFAULT_BRANCH_CAP, order=None, cap: int = ENUM_CAP) -> EfficiencyReport:
    """Worst welfare over every k-round walk outcome, relative to the optimum."""
    opt, a_opt = optimal_welfare(game, cap)
    walk = enumerate_outcomes(game, k, tol, branch_cap, order)
    vals = [(welfare(game, a), a) for a in walk.outcomes]
    worst, a_worst = min(vals)
    return EfficiencyReport("pob", _ratio(worst, opt), a_worst, a_opt, worst, opt,
                            not walk.truncated, k, len(walk.outcomes))


def nash_set(game: ResourceGame, tol: float = NASH_TOL, cap: int = ENUM_CAP) -> list:
    """All pure Nash equilibria (lexicographic order)."""
    found = []
    rows = np.arange(game.n_resources)
    for chunk in all_profiles(game, cap):
        counts = profile_counts(game, chunk)
        ok = np.ones(chunk.shape[0], dtype=bool)
        for i, inc in enumerate(game.incidence):
            used = inc.any(axis=0)
            base = counts - inc[chunk[:, i]]
            gain = game.utility_table[rows[None, :], base + 1]
            if np.isnan(gain[:, used]).any():
                raise TruncationExceeded("utility rule not tabulated at a reachable count")
            gain = np.where(used[None, :], gain, 0.0)
            U = gain @ inc.T
            cur = U[np.arange(U.shape[0]), chunk[:, i]]
            ok &= cur >= U.max(axis=1) - tol
        found.extend(tuple(int(v) for v in row) for row in chunk[ok])
    return found


def poa_exact(game: ResourceGame, tol: float = NASH_TOL, cap: int = ENUM_CAP) -> EfficiencyReport:
    opt, a_opt = optimal_welfare(game, cap)
    ne = nash_set(game, tol, cap)
    if not ne:
        raise DegenerateError("no pure Nash equilibrium found")
    worst, a_worst = min((welfare(game, a), a) for a in ne)
    return EfficiencyReport("poa", _ratio(worst, opt), a_worst, a_opt, worst, opt, True, None, len(ne))


# -- helpers for rule tables on an extended range -------------------------------

def welfare_extended(w: WelfareRule, top: int) -> np.ndarray:
    """``w(0..top)``; past the table the last increment is repeated."""
    vals = w.array
    if top <= w.n_max:
        return vals[: top + 1].copy()
    slope = vals[-1] - vals[-2]
    tail = vals[-1] + slope * np.arange(1, top - w.n_max + 1)
    return np.concatenate([vals, tail])


def utility_extended(f: UtilityRule, top: int) -> np.ndarray:
    """``f(0..top)`` with f(0) = 0; past the table the last value is repeated."""
    vals = f.array
    if top <= f.n_max:
        return vals[: top + 1].copy()
    return np.concatenate([vals, np.full(top - f.n_max, vals[-1])])


# -- one-round efficiency of a rule pair ------------------------------------------

@dataclass(frozen=True)
class DualLpReport:
    beta: float
    y: int
    z: int
    Y: int
    Z: int
    converged: bool

    @property
    def pob(self) -> float:
        return 1.0 / self.beta


def _dual_grid(w: WelfareRule, f: UtilityRule, Y: int, Z: int) -> tuple:
    top = max(Y, Z)
    wv = welfare_extended(w, top)
    fv = utility_extended(f, Y + 1)
    if np.any(wv[1:] <= 0):
        raise DegenerateError("welfare vanishes at a positive count")
    H = float(np.max(wv[1:] / np.arange(1, top + 1)))
    csum = np.cumsum(fv)[1: Y + 1]                      # sum_{i<=y} f(i), y = 1..Y
    fmin = np.minimum.accumulate(fv[1:])[1: Y + 1]      # min_{i<=y+1} f(i)
    z = np.arange(Z + 1)
    vals = (H * (csum[:, None] - z[None, :] * fmin[:, None]) + wv[z][None, :]) / wv[1: Y + 1, None]
    idx = np.unravel_index(int(np.argmax(vals)), vals.shape)
    return float(vals[idx]), int(idx[0]) + 1, int(idx[1])


def pob_dual_lp_report(w: WelfareRule, f: UtilityRule, Y: int | None = None, Z: int | None = None,
                       check_convergence: bool = True) -> DualLpReport:
    if abs(w.values[1] - 1.0) > 1e-9 or abs(f.values[0] - 1.0) > 1e-9:
        raise ValidationError("one-round characterization needs w(1) = 1 and f(1) = 1")
    default = 4 * max(w.n_max, f.n_max)
    Y = default if Y is None else int(Y)
    Z = default if Z is None else int(Z)
    if Y < 1 or Z < 0:
        raise ValidationError("truncation bounds need Y >= 1 and Z >= 0")
    beta, y, z = _dual_grid(w, f, Y, Z)
    converged = True
    if check_convergence:
        beta2, _, _ = _dual_grid(w, f, 2 * Y, 2 * Z)
        converged = abs(beta2 - beta) < 1e-9
    return DualLpReport(beta, y, z, Y, Z, converged)


def pob_dual_lp(w: WelfareRule, f: UtilityRule, Y: int | None = None, Z: int | None = None) -> float:
    """``beta`` of the tractable dual characterization; one-round efficiency is ``1/beta``.

    The program has the single variable beta and one lower bound per (y, z),
    so its optimum is the largest of those bounds.
    """
    return pob_dual_lp_report(w, f, Y, Z).beta


def primal_lp_problem(w: WelfareRule, f: UtilityRule, n: int) -> tuple:
    """Resource-type LP for ``n`` agents; returns ``(problem, types)``.

    A type assigns each agent one of: unused (0), best-response action only (1),
    optimal action only (2), both (3).
    """
    wv = welfare_extended(w, n)
    fv = utility_extended(f, n)
    types = list(itertools.product(range(4), repeat=n))
    obj, eq = [], []
    br_rows = np.zeros((n, len(types)))
    for t, p in enumerate(types):
        br = [1 if s in (1, 3) else 0 for s in p]
        op = [1 if s in (2, 3) else 0 for s in p]
        obj.append(wv[sum(op)])
        eq.append(wv[sum(br)])
        before = 0
        for i in range(n):
            br_rows[i, t] = (br[i] - op[i]) * fv[before + 1]
            before += br[i]
    rows = [(eq, "=", 1.0)] + [(br_rows[i], ">=", 0.0) for i in range(n)]
    return lp.LpProblem.from_rows(obj, rows, sense="max"), types


def pob_primal_lp(w: WelfareRule, f: UtilityRule, n: int) -> float:
    """One-round efficiency over all ``n``-agent games built from (w, f)."""
    if not 1 <= n <= 3:
        raise ValidationError("the resource-type LP is limited to 1 <= n <= 3 agents")
    problem, _ = primal_lp_problem(w, f, n)
    sol = lp.solve_or_raise(problem)
    return 1.0 / sol.value


def pob_setcover_formula(f: UtilityRule, N: int | None = None) -> float:
    """Closed-form one-round efficiency on set covering, truncated at N."""
    if abs(f.values[0] - 1.0) > 1e-9:
        raise ValidationError("set-covering formula needs f(1) = 1")
    N = f.n_max if N is None else int(N)
    fv = utility_extended(f, N)[1:]
    return 1.0 / (float(fv.sum()) - float(fv.min()) + 1.0)


# -- price of anarchy -----------------------------------------------------------------

def poa_lp_problem(w: WelfareRule, f: UtilityRule, N1: int) -> tuple:
    wv = welfare_extended(w, N1)
    fv = utility_extended(f, N1 + 1)
    triples = [(y, x, z) for y in range(N1 + 1) for x in range(N1 + 1) for z in range(N1 + 1)
               if 1 <= y + x + z <= N1]
    obj = [wv[z + x] for y, x, z in triples]
    ne_row = [y * fv[y + x] - z * fv[y + x + 1] for y, x, z in triples]
    eq_row = [wv[y + x] for y, x, z in triples]
    problem = lp.LpProblem.from_rows(obj, [(ne_row, ">=", 0.0), (eq_row, "=", 1.0)], sense="max")
    return problem, triples


def poa_lp(w: WelfareRule, f: UtilityRule, N1: int) -> float:
    """Price of anarchy over games with at most N1 agents, for non-increasing f."""
    if N1 < 1:
        raise ValidationError("N1 must be >= 1")
    fv = utility_extended(f, N1 + 1)[1:]
    if np.any(np.diff(fv) > 1e-12):
        raise ValidationError("price-of-anarchy program requires a non-increasing utility rule")
    problem, _ = poa_lp_problem(w, f, N1)
    sol = lp.solve(problem)
    if sol.status == "unbounded":
        return 0.0
    if sol.status != "optimal":
        raise DegenerateError(f"price-of-anarchy program is {sol.status}")
    return 1.0 / sol.value


def poa_setcover_formula(f: UtilityRule, n: int) -> float:
    """Closed-form price of anarchy on set covering with n agents."""
    if abs(f.values[0] - 1.0) > 1e-9:
        raise ValidationError("set-covering formula needs f(1) = 1")
    if n < 1:
        raise ValidationError("n must be >= 1")
    fv = utility_extended(f, n)
    worst = 0.0
    for j in range(1, n):
        worst = max(worst, (j + 1) * fv[j + 1] - 1.0, j * fv[j] - fv[j + 1], j * fv[j + 1])
    return 1.0 / (1.0 + worst)
