"""Best responses, round-robin walks and the reachable outcome set.

A walk starts from the all-empty joint action; at every step one player (by
default players 0..n-1 in turn) switches to a best response. ``enumerate_outcomes``
follows every tie branch and collects the set of joint actions reachable after
``k`` rounds, each with one witness trajectory.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import TruncationExceeded, ValidationError
from .game import JointAction, ResourceGame, check_joint_action, load_count

DEFAULT_TOL = 1e-9
DEFAULT_BRANCH_CAP = 10**6
TIE_MODES = ("first-index", "worst-welfare", "enumerate-all")


@dataclass(frozen=True)
class TiePolicy:
    mode: str = "first-index"
    tolerance: float = DEFAULT_TOL
    branch_cap: int = DEFAULT_BRANCH_CAP

    def __post_init__(self):
        if self.mode not in TIE_MODES:
            raise ValidationError(f"tie mode must be one of {TIE_MODES}")
        if not (math.isfinite(self.tolerance) and self.tolerance >= 0):
            raise ValidationError("tie tolerance must be finite and >= 0")
        if self.branch_cap < 1:
            raise ValidationError("branch cap must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    """Joint actions a(0..T) and the player that moved at each step."""

    profiles: tuple
    movers: tuple

    @property
    def final(self) -> JointAction:
        return self.profiles[-1]

    def __len__(self) -> int:
        return len(self.profiles)


@dataclass(frozen=True)
class WalkOutcome:
    outcomes: tuple            # sorted joint actions
    witnesses: dict            # outcome -> Trajectory
    branch_count: int
    truncated: bool
    k: int
    schedule: tuple = field(default=())

    def __contains__(self, a) -> bool:
        return tuple(a) in self.witnesses


def _schedule(game: ResourceGame, k: int, order: Sequence[int] | None) -> tuple:
    if k < 1:
        raise ValidationError("number of rounds must be >= 1")
    if order is None:
        order = range(game.n_players)
    order = tuple(int(i) for i in order)
    if not order or any(not 0 <= i < game.n_players for i in order):
        raise ValidationError("play order must list valid player indices")
    return order * k


def action_utilities(game: ResourceGame, i: int, a: Sequence[int], counts: np.ndarray | None = None) -> np.ndarray:
    """Utility of every action of player ``i`` with the others held at ``a``."""
    if counts is None:
        counts = load_count(game, a)
    inc = game.incidence[i]
    base = counts - inc[a[i]]
    gain = game.utility_table[np.arange(game.n_resources), base + 1]
    used = inc.any(axis=0)
    if np.isnan(gain[used]).any():
        raise TruncationExceeded(f"utility rule not tabulated at a count reachable by player {i}")
    gain = np.where(used, gain, 0.0)
    return inc @ gain


def _ties(values: np.ndarray, tol: float) -> np.ndarray:
    return np.flatnonzero(values >= values.max() - tol)


def best_responses(game: ResourceGame, i: int, a: Sequence[int], tol: float = DEFAULT_TOL) -> tuple:
    a = check_joint_action(game, a)
    return tuple(int(k) for k in _ties(action_utilities(game, i, a), tol))


def _welfare_after(game: ResourceGame, i: int, a: JointAction, counts: np.ndarray, choices) -> np.ndarray:
    base = counts - game.incidence[i][a[i]]
    out = []
    rows = np.arange(game.n_resources)
    for k in choices:
        c = base + game.incidence[i][k]
        out.append(game.welfare_table[rows, c].sum())
    return np.array(out)


def round_robin_walk(game: ResourceGame, k: int, policy: TiePolicy = TiePolicy(),
                     order: Sequence[int] | None = None, start: Sequence[int] | None = None) -> Trajectory:
    """One trajectory of ``k`` rounds; ties resolved by ``policy``."""
    if policy.mode == "enumerate-all":
        raise ValidationError("a single walk needs a deterministic tie policy; use enumerate_outcomes")
    steps = _schedule(game, k, order)
    a = list(game.empty_profile() if start is None else check_joint_action(game, start))
    counts = load_count(game, a)
    profiles = [tuple(a)]
    for i in steps:
        util = action_utilities(game, i, a, counts)
        tied = _ties(util, policy.tolerance)
        if policy.mode == "first-index" or tied.size == 1:
            choice = int(tied[0])
        else:
            w = _welfare_after(game, i, tuple(a), counts, tied)
            choice = int(tied[int(np.argmin(w))])
        counts += game.incidence[i][choice] - game.incidence[i][a[i]]
        a[i] = choice
        profiles.append(tuple(a))
    return Trajectory(tuple(profiles), steps)


def enumerate_outcomes(game: ResourceGame, k: int, tol: float = DEFAULT_TOL,
                       branch_cap: int = DEFAULT_BRANCH_CAP, order: Sequence[int] | None = None) -> WalkOutcome:
    """Depth-first search over every tie branch, memoized on (step, joint action)."""
    if branch_cap < 1:
        raise ValidationError("branch cap must be >= 1")
    steps = _schedule(game, k, order)
    T = len(steps)
    root = (0, game.empty_profile())
    parent = {root: None}
    stack = [root]
    explored = 0
    truncated = False
    while stack:
        node = stack.pop()
        tau, a = node
        if tau == T:
            continue
        explored += 1
        if explored > branch_cap:
            truncated = True
            break
        i = steps[tau]
        for choice in reversed(best_responses(game, i, a, tol)):
            nxt = a[:i] + (choice,) + a[i + 1:]
            child = (tau + 1, nxt)
            if child not in parent:
                parent[child] = node
                stack.append(child)
    finals = sorted(a for (tau, a) in parent if tau == T)
    witnesses = {}
    for a in finals:
        path = []
        node = (T, a)
        while node is not None:
            path.append(node[1])
            node = parent[node]
        witnesses[a] = Trajectory(tuple(reversed(path)), steps)
    return WalkOutcome(tuple(finals), witnesses, explored, truncated, k, steps)


def verify_trajectory(game: ResourceGame, traj: Trajectory, tol: float = DEFAULT_TOL) -> bool:
    """Independent re-check that every step is a best response of the mover."""
    if traj.profiles[0] != game.empty_profile() or len(traj.profiles) != len(traj.movers) + 1:
        return False
    for prev, nxt, i in zip(traj.profiles, traj.profiles[1:], traj.movers):
        changed = [j for j in range(game.n_players) if prev[j] != nxt[j]]
        if changed and changed != [i]:
            return False
        if nxt[i] not in best_responses(game, i, prev, tol):
            return False
    return True


def greedy_solution(game: ResourceGame, tol: float = 1e-12) -> JointAction:
    """Players in index order pick the welfare-maximizing action given earlier picks."""
    a = list(game.empty_profile())
    counts = np.zeros(game.n_resources, dtype=np.int64)
    for i in range(game.n_players):
        w = _welfare_after(game, i, tuple(a), counts, range(len(game.actions[i])))
        if np.isnan(w).any():
            raise TruncationExceeded("welfare rule not tabulated at a count reached by the greedy pass")
        choice = int(_ties(w, tol)[0])
        counts += game.incidence[i][choice]
        a[i] = choice
    return tuple(a)


def is_nash(game: ResourceGame, a: Sequence[int], tol: float = DEFAULT_TOL) -> bool:
    a = check_joint_action(game, a)
    counts = load_count(game, a)
    for i in range(game.n_players):
        u = action_utilities(game, i, a, counts)
        if u[a[i]] < u.max() - tol:
            return False
    return True


def is_strict_nash(game: ResourceGame, a: Sequence[int]) -> bool:
    a = check_joint_action(game, a)
    counts = load_count(game, a)
    for i in range(game.n_players):
        u = action_utilities(game, i, a, counts)
        others = np.delete(u, a[i])
        if others.size and not np.all(others < u[a[i]]):
            return False
    return True


def potential(game: ResourceGame, a: Sequence[int]) -> float:
    """Sum over resources of the utility accumulated up to the current load."""
    counts = load_count(game, a)
    vals = game.potential_table[np.arange(game.n_resources), counts]
    if np.isnan(vals).any():
        raise TruncationExceeded("utility rule not tabulated at a reachable count")
    return float(vals.sum())


def improve_until_nash(game: ResourceGame, max_rounds: int = 10_000, start: Sequence[int] | None = None,
                       eps: float = 1e-12) -> tuple:
    """Round-robin strict improvements until a full round makes no move.

    Returns ``(joint_action, rounds_used, converged)``.
    """
    a = list(game.empty_profile() if start is None else check_joint_action(game, start))
    counts = load_count(game, a)
    for rnd in range(1, max_rounds + 1):
        moved = False
        for i in range(game.n_players):
            u = action_utilities(game, i, a, counts)
            best = int(np.argmax(u))
            if u[best] > u[a[i]] + eps:
                counts += game.incidence[i][best] - game.incidence[i][a[i]]
                a[i] = best
                moved = True
        if not moved:
            return tuple(a), rnd, True
    return tuple(a), max_rounds, False


def trajectory_csv(game: ResourceGame, traj: Trajectory) -> str:
    from .game import welfare

    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["step", "player", "action_index", "welfare", "potential"])
    for step, prof in enumerate(traj.profiles):
        if step == 0:
            player, act = "", ""
        else:
            player = traj.movers[step - 1]
            act = prof[player]
        out.writerow([step, player, act, repr(welfare(game, prof)), repr(potential(game, prof))])
    return buf.getvalue()
