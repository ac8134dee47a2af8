"""Welfare rules, utility rules and resource allocation games.

A game is a finite set of resources, each carrying a welfare rule ``w`` and a
utility rule ``f`` (both tabulated on load counts) plus a nonnegative scale,
and one action list per player. Every action is a set of resource indices and
action 0 is always the empty action.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import NotSubmodular, TruncationExceeded, ValidationError

DEFAULT_NMAX = 64
RULE_TOL = 1e-12

JointAction = tuple  # one action index per player


def _is_finite_seq(values) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class WelfareRule:
    """Resource welfare ``w(0..N)``.

    ``kind`` is an optional class flag ("submodular" or "supermodular"); when
    set, the table is checked against it.
    """

    values: tuple
    label: str = ""
    kind: str | None = None

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 2:
            raise ValidationError("welfare rule needs at least w(0) and w(1)")
        if not _is_finite_seq(vals):
            raise ValidationError("welfare values must be finite")
        if vals[0] != 0.0:
            raise ValidationError("welfare rule must have w(0) = 0")
        if any(v <= 0.0 for v in vals[1:]):
            raise ValidationError("welfare rule must be positive for j >= 1")
        if self.kind not in (None, "submodular", "supermodular"):
            raise ValidationError(f"unknown welfare class {self.kind!r}")
        if self.kind == "submodular" and not self.is_submodular():
            raise NotSubmodular(f"welfare rule {self.label!r} flagged submodular but is not")
        if self.kind == "supermodular" and not self.is_supermodular():
            raise ValidationError(f"welfare rule {self.label!r} flagged supermodular but is not")

    @property
    def n_max(self) -> int:
        return len(self.values) - 1

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.asarray(self.values, dtype=float)
        arr.flags.writeable = False
        return arr

    def __call__(self, j: int) -> float:
        if j < 0 or j > self.n_max:
            raise TruncationExceeded(f"count {j} outside welfare table 0..{self.n_max}")
        return self.values[j]

    def increments(self) -> np.ndarray:
        """``w(j) - w(j-1)`` for j = 1..N."""
        return np.diff(self.array)

    def is_submodular(self, tol: float = 1e-10) -> bool:
        d = self.increments()
        return bool(np.all(d >= -tol) and np.all(np.diff(d) <= tol))

    def is_supermodular(self, tol: float = 1e-10) -> bool:
        d = self.increments()
        return bool(np.all(d >= -tol) and np.all(np.diff(d) >= -tol))

    def scaled(self, t: float) -> "WelfareRule":
        return WelfareRule(tuple(t * v for v in self.values), self.label, self.kind)


@dataclass(frozen=True)
class UtilityRule:
    """Per-agent utility ``f(1..N)``; ``values[0]`` is ``f(1)``."""

    values: tuple
    label: str = ""

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValidationError("utility rule needs at least f(1)")
        if not _is_finite_seq(vals):
            raise ValidationError("utility values must be finite")
        if any(v < 0.0 for v in vals):
            raise ValidationError("utility rule must be nonnegative")

    @property
    def n_max(self) -> int:
        return len(self.values)

    @cached_property
    def array(self) -> np.ndarray:
        """``f(0..N)`` with the convention ``f(0) = 0``."""
        arr = np.concatenate(([0.0], np.asarray(self.values, dtype=float)))
        arr.flags.writeable = False
        return arr

    def __call__(self, j: int) -> float:
        if j == 0:
            return 0.0
        if j < 0 or j > self.n_max:
            raise TruncationExceeded(f"count {j} outside utility table 1..{self.n_max}")
        return self.values[j - 1]

    def at(self, j: int) -> float:
        """Like calling the rule, but extends the table by its last value."""
        if j > self.n_max:
            return self.values[-1]
        return self(j)

    def extended(self, n: int) -> "UtilityRule":
        if n <= self.n_max:
            return UtilityRule(self.values[:n], self.label)
        return UtilityRule(self.values + (self.values[-1],) * (n - self.n_max), self.label)

    def is_non_increasing(self, tol: float = 1e-10) -> bool:
        return bool(np.all(np.diff(self.values) <= tol))

    def is_non_decreasing(self, tol: float = 1e-10) -> bool:
        return bool(np.all(np.diff(self.values) >= -tol))


# -- standard welfare rules ---------------------------------------------------

def b_covering(b: int, c: float, n_max: int = DEFAULT_NMAX) -> WelfareRule:
    """Slope 1 up to ``b`` agents, slope ``1 - c`` afterwards."""
    if b < 1 or n_max <= b:
        raise ValidationError(f"b-covering needs 1 <= b < N (got b={b}, N={n_max})")
    if not 0.0 <= c <= 1.0:
        raise ValidationError(f"curvature must lie in [0, 1], got {c}")
    vals = [float(j) if j <= b else b + (1.0 - c) * (j - b) for j in range(n_max + 1)]
    return WelfareRule(tuple(vals), label=f"b_covering(b={b},c={c:g})", kind="submodular")


def set_covering(n_max: int = DEFAULT_NMAX) -> WelfareRule:
    return WelfareRule((0.0,) + (1.0,) * n_max, label="set_covering", kind="submodular")


def additive(n_max: int = DEFAULT_NMAX) -> WelfareRule:
    return WelfareRule(tuple(float(j) for j in range(n_max + 1)), label="additive", kind="submodular")


def detection_rule(detect_prob: float, n_max: int = DEFAULT_NMAX) -> WelfareRule:
    """Normalized detection probability ``(1 - (1-D)^j) / D`` so that w(1) = 1."""
    if not 0.0 < detect_prob < 1.0:
        raise ValidationError("detection probability must lie in (0, 1)")
    q = 1.0 - detect_prob
    vals = tuple((1.0 - q ** j) / detect_prob for j in range(n_max + 1))
    return WelfareRule(vals, label=f"detection(D={detect_prob:g})", kind="submodular")


def curvature(w: WelfareRule) -> float:
    """``1 - (w(N) - w(N-1)) / w(1)``: the last tabulated increment stands in for the limit.

    Exact for rules that are affine beyond N-1 (b-covering rules with b < N).
    """
    if w.n_max < 2:
        raise ValidationError("curvature needs N >= 2")
    if not w.is_submodular():
        raise NotSubmodular(f"curvature undefined: {w.label or 'rule'} is not submodular")
    c = 1.0 - (w.values[-1] - w.values[-2]) / w.values[1]
    return min(1.0, max(0.0, c))


def basis_decompose(w: WelfareRule, n: int | None = None) -> np.ndarray:
    """Nonnegative weights on the b-covering rules of curvature ``curvature(w)``.

    Entry ``b-1`` holds the weight of ``b_covering(b, c)`` for b = 1..N-1; their
    combination reproduces ``w`` on 0..N-1.
    """
    n = w.n_max if n is None else n
    if n < 2 or n > w.n_max:
        raise ValidationError(f"decomposition horizon must satisfy 2 <= N <= {w.n_max}")
    if abs(w.values[1] - 1.0) > 1e-9:
        raise ValidationError("basis decomposition needs a normalized rule, w(1) = 1")
    c = curvature(w)
    if c <= 0.0:
        raise ValidationError("zero curvature: decomposition divides by c")
    vals = w.array
    b = np.arange(1, n)
    alpha = (2 * vals[b] - vals[b - 1] - vals[b + 1]) / c
    alpha[np.abs(alpha) < RULE_TOL] = 0.0
    if np.any(alpha < 0):
        raise NotSubmodular("negative basis weight: rule is not submodular")
    return alpha


def steepness(w: WelfareRule) -> float:
    """``max_j w(j) / j`` over the table."""
    j = np.arange(1, w.n_max + 1)
    return float(np.max(w.array[1:] / j))


# -- games --------------------------------------------------------------------

@dataclass(frozen=True)
class Resource:
    welfare: str
    utility: str
    scale: float = 1.0


@dataclass(frozen=True, eq=False)
class ResourceGame:
    """Players, resources and per-player action lists.

    ``actions[i][k]`` is a sorted tuple of resource indices; ``actions[i][0]``
    is the empty action.
    """

    welfare_rules: Mapping[str, WelfareRule]
    utility_rules: Mapping[str, UtilityRule]
    resources: tuple
    actions: tuple
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "welfare_rules", dict(self.welfare_rules))
        object.__setattr__(self, "utility_rules", dict(self.utility_rules))
        object.__setattr__(self, "resources", tuple(self.resources))
        acts = tuple(tuple(tuple(sorted(set(int(r) for r in a))) for a in player)
                     for player in self.actions)
        object.__setattr__(self, "actions", acts)
        self._validate()

    def _validate(self):
        if not self.actions:
            raise ValidationError("a game needs at least one player")
        n_res = len(self.resources)
        for r, res in enumerate(self.resources):
            if res.welfare not in self.welfare_rules:
                raise ValidationError(f"resource {r}: unknown welfare rule {res.welfare!r}")
            if res.utility not in self.utility_rules:
                raise ValidationError(f"resource {r}: unknown utility rule {res.utility!r}")
            if not (math.isfinite(res.scale) and res.scale >= 0):
                raise ValidationError(f"resource {r}: scale must be finite and >= 0")
        for i, player in enumerate(self.actions):
            if not player or player[0] != ():
                raise ValidationError(f"player {i}: action 0 must be the empty action")
            for k, act in enumerate(player[1:], start=1):
                if not act:
                    raise ValidationError(f"player {i}: empty action repeated at index {k}")
                if act[0] < 0 or act[-1] >= n_res:
                    raise ValidationError(f"player {i}, action {k}: resource index out of range")

    @property
    def n_players(self) -> int:
        return len(self.actions)

    @property
    def n_resources(self) -> int:
        return len(self.resources)

    @property
    def scales(self) -> np.ndarray:
        return np.array([res.scale for res in self.resources], dtype=float)

    def empty_profile(self) -> JointAction:
        return (0,) * self.n_players

    # Tables indexed [resource, count]. Entries past a rule's horizon are NaN so
    # that reaching them can be reported as a truncation error.
    @cached_property
    def welfare_table(self) -> np.ndarray:
        top = self.n_players
        tab = np.full((self.n_resources, top + 1), np.nan)
        for r, res in enumerate(self.resources):
            w = self.welfare_rules[res.welfare].array
            m = min(top, len(w) - 1)
            tab[r, : m + 1] = res.scale * w[: m + 1]
        return tab

    @cached_property
    def utility_table(self) -> np.ndarray:
        top = self.n_players
        tab = np.full((self.n_resources, top + 1), np.nan)
        for r, res in enumerate(self.resources):
            f = self.utility_rules[res.utility].array
            m = min(top, len(f) - 1)
            tab[r, : m + 1] = res.scale * f[: m + 1]
        return tab

    @cached_property
    def potential_table(self) -> np.ndarray:
        return np.cumsum(self.utility_table, axis=1)

    @cached_property
    def incidence(self) -> tuple:
        """Per player, a 0/1 matrix (actions x resources)."""
        out = []
        for player in self.actions:
            m = np.zeros((len(player), self.n_resources), dtype=np.int64)
            for k, act in enumerate(player):
                m[k, list(act)] = 1
            m.flags.writeable = False
            out.append(m)
        return tuple(out)

    def with_utility_rules(self, rules: Mapping[str, UtilityRule]) -> "ResourceGame":
        merged = dict(self.utility_rules)
        merged.update(rules)
        return ResourceGame(self.welfare_rules, merged, self.resources, self.actions, self.metadata)

    def with_scales(self, scales: Sequence[float]) -> "ResourceGame":
        res = tuple(Resource(r.welfare, r.utility, float(s)) for r, s in zip(self.resources, scales))
        return ResourceGame(self.welfare_rules, self.utility_rules, res, self.actions, self.metadata)


def check_joint_action(game: ResourceGame, a: Sequence[int]) -> JointAction:
    a = tuple(int(x) for x in a)
    if len(a) != game.n_players:
        raise ValidationError(f"joint action has {len(a)} entries, game has {game.n_players} players")
    for i, k in enumerate(a):
        if not 0 <= k < len(game.actions[i]):
            raise ValidationError(f"player {i}: action index {k} out of range")
    return a


def load_count(game: ResourceGame, a: Sequence[int]) -> np.ndarray:
    """Number of players using each resource under ``a``."""
    a = check_joint_action(game, a)
    counts = np.zeros(game.n_resources, dtype=np.int64)
    for i, k in enumerate(a):
        counts += game.incidence[i][k]
    return counts


def _lookup(table: np.ndarray, counts: np.ndarray, what: str) -> np.ndarray:
    vals = table[np.arange(table.shape[0]), counts]
    if np.isnan(vals).any():
        r = int(np.flatnonzero(np.isnan(vals))[0])
        raise TruncationExceeded(f"{what} rule of resource {r} is not tabulated at count {counts[r]}")
    return vals


def welfare(game: ResourceGame, a: Sequence[int]) -> float:
    counts = load_count(game, a)
    return float(_lookup(game.welfare_table, counts, "welfare").sum())


def utility(game: ResourceGame, i: int, a: Sequence[int]) -> float:
    a = check_joint_action(game, a)
    act = game.actions[i][a[i]]
    if not act:
        return 0.0
    counts = load_count(game, a)
    idx = np.asarray(act)
    vals = game.utility_table[idx, counts[idx]]
    if np.isnan(vals).any():
        raise TruncationExceeded(f"utility rule not tabulated at the counts reached by player {i}")
    return float(vals.sum())


def all_profiles(game: ResourceGame, cap: int) -> Iterable[np.ndarray]:
    """Yield the product action space in chunks of rows (lexicographic order)."""
    sizes = [len(p) for p in game.actions]
    total = math.prod(sizes)
    if total > cap:
        from .errors import TooLarge

        raise TooLarge(f"product action space has {total} profiles, cap is {cap}")
    chunk = max(1, min(total, 1 << 16))
    radix = np.array([math.prod(sizes[i + 1:]) for i in range(len(sizes))], dtype=np.int64)
    sizes_arr = np.array(sizes, dtype=np.int64)
    for start in range(0, total, chunk):
        flat = np.arange(start, min(total, start + chunk), dtype=np.int64)
        yield (flat[:, None] // radix[None, :]) % sizes_arr[None, :]


def profile_counts(game: ResourceGame, profiles: np.ndarray) -> np.ndarray:
    counts = np.zeros((profiles.shape[0], game.n_resources), dtype=np.int64)
    for i, inc in enumerate(game.incidence):
        counts += inc[profiles[:, i]]
    return counts


def profile_welfare(game: ResourceGame, profiles: np.ndarray, counts: np.ndarray | None = None) -> np.ndarray:
    if counts is None:
        counts = profile_counts(game, profiles)
    vals = game.welfare_table[np.arange(game.n_resources)[None, :], counts]
    if np.isnan(vals).any():
        raise TruncationExceeded("welfare rule not tabulated at a reachable count")
    return vals.sum(axis=1)
