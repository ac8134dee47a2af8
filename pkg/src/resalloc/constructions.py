"""Worst-case game families with a known efficiency value or upper bound.

A group of identical resources used by the same actions behaves exactly like
one resource whose scale is the group size, so every "resource set" below is a
single scaled resource. Sizes are exact by default; ``rounding=True`` realizes
them as whole numbers at unit ``v`` and reports the relative rounding error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .design import mc_utility, poa_optimal_f, shapley_utility
from .errors import DegenerateError, ValidationError
from .game import Resource, ResourceGame, UtilityRule, WelfareRule, b_covering, set_covering

BOUND_KINDS = ("pob_upper", "poa_value", "pob_value")


@dataclass(frozen=True)
class ConstructionSpec:
    family: str
    params: dict
    claimed_bound: float
    bound_kind: str
    notes: tuple = field(default=())

    def __post_init__(self):
        if self.bound_kind not in BOUND_KINDS:
            raise ValidationError(f"bound kind must be one of {BOUND_KINDS}")
        if not 0.0 <= self.claimed_bound <= 1.0 + 1e-12:
            raise ValidationError("claimed bound must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(sorted(self.params.items())),
                "claimed_bound": self.claimed_bound, "bound_kind": self.bound_kind,
                "notes": list(self.notes)}


def _size(value: float, rounding: bool, how=round) -> float:
    return float(how(value)) if rounding else float(value)


def _rel_error(exact: list, used: list) -> float:
    return max((abs(u - e) / e for e, u in zip(exact, used) if e > 0), default=0.0)


def _build(welfare, utility, resources, actions, spec) -> tuple:
    game = ResourceGame(welfare, utility, tuple(resources), tuple(actions),
                        {"construction": spec.to_dict()})
    return game, spec


# -- one-round curvature bound ----------------------------------------------------

def two_agent_curvature_game(c: float, f2: float, x: float = 1.0, first: int = 0,
                             rounding: bool = False) -> tuple:
    """Two agents on sets R1, R2, R3 with |R1| = |R2| = x and |R3| = f2 * x.

    Welfare is b-covering with b = 1 and curvature c, paid out with f = (1, f2).
    The case is picked from f2: (a) f2 < 1 - c, (b) 1 - c <= f2 <= 1, (c) f2 > 1;
    boundaries go to (b). ``first`` chooses which player index takes the
    first-mover role, so that either play order meets the construction.
    """
    c = float(c)
    f2 = float(f2)
    if not 0.0 <= c <= 1.0:
        raise ValidationError("curvature must lie in [0, 1]")
    if not (math.isfinite(f2) and f2 >= 0):
        raise ValidationError("f2 must be finite and >= 0")
    if x < 1 or first not in (0, 1):
        raise ValidationError("x must be >= 1 and first must be 0 or 1")
    if f2 < 1.0 - c:
        case = "a"
    elif f2 <= 1.0:
        case = "b"
    else:
        case = "c"
    r3 = _size(f2 * x, rounding)
    sizes = [float(x), float(x), r3]
    err = _rel_error([x, x, f2 * x], sizes)
    w = b_covering(1, c, n_max=2)
    f = UtilityRule((1.0, f2), label="two-agent")
    res = [Resource("w", "f", s) for s in sizes]
    lead = ((), (0,), (1,))
    if case == "c":
        follow = ((), (0,), (2,))
    else:
        follow = ((), (2,), (0,))
    actions = [lead, follow] if first == 0 else [follow, lead]
    spec = ConstructionSpec("two-agent", {"c": c, "f2": f2, "x": float(x), "first": float(first),
                                          "rounding_error": err},
                            1.0 - c / 2.0, "pob_upper", (f"case {case}",))
    return _build({"w": w}, {"f": f}, res, actions, spec)


def ci_chain_game(n: int, c: float) -> tuple:
    """Chain of n agents under marginal-contribution utilities.

    Agent j either takes its chain resource ``both_j`` (the last agent takes
    ``r_n``) or takes ``opt_j`` together with its predecessor's ``both_{j-1}``.
    The ``opt`` resources carry the b = 1 rule scaled by c.
    """
    n = int(n)
    c = float(c)
    if n < 2:
        raise ValidationError("chain needs n >= 2")
    if not 0.0 <= c <= 1.0:
        raise ValidationError("curvature must lie in [0, 1]")
    w = b_covering(1, c, n_max=max(n, 2))
    f = mc_utility(w)
    # resources: opt_1..opt_n, both_1..both_{n-1}, r_n
    opt = list(range(n))
    both = list(range(n, 2 * n - 1))
    last = 2 * n - 1
    res = [Resource("w", "f", c) for _ in opt] + [Resource("w", "f", 1.0) for _ in range(n)]
    actions = []
    for j in range(n):
        br = (both[j],) if j < n - 1 else (last,)
        op = (opt[j],) if j == 0 else (opt[j], both[j - 1])
        actions.append(((), br, op))
    ratio = n / ((n - 1) * (1 + c) + c)
    spec = ConstructionSpec("ci-chain", {"n": float(n), "c": c}, min(1.0, ratio), "pob_upper")
    return _build({"w": w}, {"f": f}, res, actions, spec)


# -- set covering ---------------------------------------------------------------------

def setcover_stack_game(n: int, f: UtilityRule, v: float = 1.0, rounding: bool = False) -> tuple:
    """All agents may stack on R1 or spread to their own set R_{i+1}.

    |R1| = v and |R_{i+1}| = v * f(i) for i < n; the last agent has only R1.
    Every step of the all-stack walk is a tie, so stacking is reachable in one
    round and the ratio is 1 / (sum_{i<n} f(i) + 1).
    """
    n = int(n)
    if n < 1:
        raise ValidationError("n must be >= 1")
    if abs(f.values[0] - 1.0) > 1e-9:
        raise ValidationError("stack game needs f(1) = 1")
    if not f.is_non_increasing(1e-12):
        raise ValidationError("stack game needs a non-increasing utility rule")
    exact = [float(v)] + [v * f.at(i) for i in range(1, n)]
    sizes = [_size(s, rounding) for s in exact]
    if sizes[0] <= 0:
        raise DegenerateError("unit v rounds to an empty first set")
    err = _rel_error(exact, sizes)
    w = set_covering(n_max=max(n, 1))
    res = [Resource("w", "f", s) for s in sizes]
    actions = []
    for i in range(n):
        if i < n - 1:
            actions.append(((), (0,), (i + 1,)))
        else:
            actions.append(((), (0,)))
    total = sum(sizes)
    spec = ConstructionSpec("stack", {"n": float(n), "v": float(v), "rounding_error": err},
                            sizes[0] / total, "pob_value")
    return _build({"w": w}, {"f": f.extended(max(n, f.n_max))}, res, actions, spec)


def poa_design_bad_game(n: int, b: int = 1, v: float = 1000.0) -> tuple:
    """Stack-or-spread game under the anarchy-optimal rule for b-covering with c = 1.

    |R1| = v and |R_{j+1}| = floor(v * f(j)); stacking on R1 is reachable in
    one round because each spread option is never worth more than joining R1.
    """
    n = int(n)
    b = int(b)
    if n < 1 or b < 1:
        raise ValidationError("n and b must be >= 1")
    fpoa = poa_optimal_f(b, max(n + 1, b + 1)).f
    sizes = [float(v)] + [float(math.floor(v * fpoa.at(j))) for j in range(1, n + 1)]
    if any(s <= 0 for s in sizes[1:]):
        raise DegenerateError("unit v too small: a spread set rounds to zero")
    err = _rel_error([v] + [v * fpoa.at(j) for j in range(1, n + 1)], sizes)
    w = b_covering(b, 1.0, n_max=max(n, b + 1))
    res = [Resource("w", "f", s) for s in sizes]
    actions = [((), (0,), (i + 1,)) for i in range(n)]
    stacked = sizes[0] * w(min(n, w.n_max))
    spread = sum(sizes[1:])
    spec = ConstructionSpec("poa-bad", {"n": float(n), "b": float(b), "v": float(v), "rounding_error": err},
                            min(1.0, stacked / spread), "pob_upper")
    return _build({"w": w}, {"f": fpoa}, res, actions, spec)


# -- supermodular ----------------------------------------------------------------------

def supermodular_stack_game(n: int, w: WelfareRule, f: UtilityRule | None = None) -> tuple:
    """n agents, each choosing its own resource r_{i+1} or the shared r_1.

    With f(1) = 1 every agent is indifferent at its turn, so the spread outcome
    is reachable; stacking on r_1 is optimal. Ratio n / w(n).
    """
    n = int(n)
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not w.is_supermodular():
        raise ValidationError("supermodular stack game needs a supermodular welfare rule")
    if abs(w.values[1] - 1.0) > 1e-9:
        raise ValidationError("welfare rule must satisfy w(1) = 1")
    if w.n_max < n:
        raise ValidationError("welfare rule must be tabulated up to n")
    f = shapley_utility(w) if f is None else f
    if abs(f.values[0] - 1.0) > 1e-9:
        raise ValidationError("utility rule must satisfy f(1) = 1")
    res = [Resource("w", "f", 1.0) for _ in range(n + 1)]
    actions = [((), (i + 1,), (0,)) for i in range(n)]
    spec = ConstructionSpec("supermodular", {"n": float(n)}, n / w(n), "pob_value")
    return _build({"w": w}, {"f": f}, res, actions, spec)
