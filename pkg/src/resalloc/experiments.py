"""Random sensor-coverage instances and a comparison of utility designs on them.

Each resource is a location where an event happens with probability p_r; a
sensor placed there detects it with probability D. Resource welfare is
``p_r (1 - (1-D)^j)``, written as scale ``p_r D`` times the normalized rule
``(1 - (1-D)^j) / D``.

Randomness comes from numpy's PCG64 seeded by ``SeedSequence([seed, instance, purpose])``
so that every instance and every purpose (priors, actions) has its own stream.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import lil_matrix

from .design import bcovering_optimal_f, linear_design, mc_utility, poa_optimal_f
from .dynamics import TiePolicy, improve_until_nash, round_robin_walk
from .efficiency import optimal_welfare
from .errors import NumericalFailure, ValidationError
from .game import DEFAULT_NMAX, Resource, ResourceGame, UtilityRule, basis_decompose, curvature, detection_rule, welfare

DESIGNS = ("one-round-optimal", "mc", "poa")
PURPOSE_PRIORS = 0
PURPOSE_ACTIONS = 1


@dataclass(frozen=True)
class SensorConfig:
    seed: int = 0
    n_instances: int = 100
    n_agents: int = 20
    n_resources: int = 30
    detect_prob: float = 0.5
    actions_per_agent: int = 2
    action_width: int = 2
    rounds: int = 5
    n_max: int = DEFAULT_NMAX

    def __post_init__(self):
        for name in ("n_instances", "n_agents", "n_resources", "actions_per_agent", "action_width", "rounds"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.seed < 0:
            raise ValidationError("seed must be >= 0")
        if not 0.0 < self.detect_prob < 1.0:
            raise ValidationError("detection probability must lie in (0, 1)")
        if self.action_width > self.n_resources:
            raise ValidationError("action width exceeds the number of resources")
        if self.n_max < max(self.n_agents, 2):
            raise ValidationError("rule horizon must cover every agent")


def _rng(cfg: SensorConfig, index: int, purpose: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, index, purpose])))


def sensor_instance(cfg: SensorConfig, index: int, utility: UtilityRule | None = None) -> ResourceGame:
    """Instance ``index`` of the configuration (MC utilities unless given)."""
    w = detection_rule(cfg.detect_prob, cfg.n_max)
    f = mc_utility(w) if utility is None else utility
    p = _rng(cfg, index, PURPOSE_PRIORS).uniform(0.0, 1.0, cfg.n_resources)
    p = p / p.sum()
    rng = _rng(cfg, index, PURPOSE_ACTIONS)
    top = cfg.n_resources - cfg.action_width
    actions = []
    for _ in range(cfg.n_agents):
        starts = rng.integers(0, top + 1, size=cfg.actions_per_agent)
        actions.append(((),) + tuple(tuple(range(s, s + cfg.action_width)) for s in starts))
    res = tuple(Resource("w", "f", float(pr * cfg.detect_prob)) for pr in p)
    return ResourceGame({"w": w}, {"f": f}, res, tuple(actions),
                        {"seed": cfg.seed, "instance": index, "priors": p.tolist()})


def design_rules(cfg: SensorConfig) -> dict:
    """Utility rule per design for the normalized detection rule."""
    w = detection_rule(cfg.detect_prob, cfg.n_max)
    c = curvature(w)
    alpha = basis_decompose(w)
    bs = range(1, len(alpha) + 1)
    one_round = linear_design([bcovering_optimal_f(b, c, cfg.n_max) for b in bs], alpha)
    anarchy = linear_design([poa_optimal_f(b, cfg.n_max) for b in bs], alpha)
    return {"one-round-optimal": one_round.f, "mc": mc_utility(w), "poa": anarchy.f}


# -- exact optimum --------------------------------------------------------------------

def optimal_welfare_milp(game: ResourceGame) -> tuple:
    """Exact optimum of a game with concave (submodular) resource welfare.

    Binary x[i,k] picks action k of player i. Resource r gets unit-step
    variables u[r,j] in [0,1] worth the j-th welfare increment; because the
    increments do not grow, an optimal solution fills them in order and
    sum_j u[r,j] equals the load. The reported value is recomputed from the
    chosen joint action.
    """
    tab = game.welfare_table
    if np.isnan(tab).any():
        raise ValidationError("welfare rules must cover every possible load")
    inc = np.diff(tab, axis=1)
    if np.any(np.diff(inc, axis=1) > 1e-12):
        raise ValidationError("integer program needs non-increasing welfare increments")
    xs = [(i, k) for i in range(game.n_players) for k in range(len(game.actions[i]))]
    deg = [sum(1 for i in range(game.n_players) if any(r in a for a in game.actions[i]))
           for r in range(game.n_resources)]
    us = [(r, j) for r in range(game.n_resources) for j in range(deg[r])]
    nx, nu = len(xs), len(us)
    cost = np.concatenate([np.zeros(nx), [-inc[r, j] for r, j in us]])
    A = lil_matrix((game.n_players + game.n_resources, nx + nu))
    for col, (i, k) in enumerate(xs):
        A[i, col] = 1.0
        for r in game.actions[i][k]:
            A[game.n_players + r, col] = -1.0
    for col, (r, j) in enumerate(us):
        A[game.n_players + r, nx + col] = 1.0
    lo = np.concatenate([np.ones(game.n_players), np.full(game.n_resources, -np.inf)])
    hi = np.concatenate([np.ones(game.n_players), np.zeros(game.n_resources)])
    integrality = np.concatenate([np.ones(nx), np.zeros(nu)])
    res = milp(cost, constraints=LinearConstraint(A.tocsr(), lo, hi), integrality=integrality,
               bounds=Bounds(0.0, 1.0), options={"mip_rel_gap": 0.0})
    if res.status != 0:
        raise NumericalFailure(f"integer program failed: {res.message}")
    choice = [0] * game.n_players
    for col, (i, k) in enumerate(xs):
        if res.x[col] > 0.5:
            choice[i] = k
    a = tuple(choice)
    value = welfare(game, a)
    if value < -res.fun - 1e-9 * max(1.0, abs(res.fun)):
        raise NumericalFailure("integer program solution does not reproduce its objective")
    return value, a


# -- experiment -------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentReport:
    config: SensorConfig
    designs: tuple
    ratios: dict                      # design -> array (instances x rounds)
    optima: tuple
    summary: tuple = field(default=())  # rows (design, round, worst, q1, median, q3, mean)

    def row(self, design: str, k: int) -> dict:
        for d, r, *vals in self.summary:
            if d == design and r == k:
                return dict(zip(("worst", "q1", "median", "q3", "mean"), vals))
        raise KeyError((design, k))

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["design", "round", "worst", "q1", "median", "q3", "mean"])
        for d, r, *vals in self.summary:
            out.writerow([d, r] + [repr(float(v)) for v in vals])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "config": self.config.__dict__,
            "summary": [dict(zip(("design", "round", "worst", "q1", "median", "q3", "mean"),
                                 (d, r, *map(float, vals)))) for d, r, *vals in self.summary],
        }

    def replay(self) -> str:
        """Per-instance seeds as JSON; each instance is rebuilt by ``sensor_instance``."""
        cfg = self.config
        items = [{"instance": i, "seed_sequence": {"priors": [cfg.seed, i, PURPOSE_PRIORS],
                                                   "actions": [cfg.seed, i, PURPOSE_ACTIONS]},
                  "optimal_welfare": self.optima[i]} for i in range(cfg.n_instances)]
        return json.dumps({"config": cfg.__dict__, "instances": items}, indent=2, sort_keys=True) + "\n"


def _summarize(designs, ratios, rounds) -> tuple:
    rows = []
    for d in designs:
        for k in range(1, rounds + 1):
            col = ratios[d][:, k - 1]
            q1, med, q3 = np.percentile(col, [25, 50, 75])
            rows.append((d, k, float(col.min()), float(q1), float(med), float(q3), float(col.mean())))
    return tuple(rows)


def run_sensor_experiment(cfg: SensorConfig, designs=DESIGNS) -> ExperimentReport:
    """Round-robin walks (first-index ties) under each design; welfare ratio per round."""
    designs = tuple(designs)
    unknown = set(designs) - set(DESIGNS)
    if unknown or not designs:
        raise ValidationError(f"designs must be among {DESIGNS}")
    rules = design_rules(cfg)
    n = cfg.n_agents
    ratios = {d: np.zeros((cfg.n_instances, cfg.rounds)) for d in designs}
    optima = []
    for idx in range(cfg.n_instances):
        base = sensor_instance(cfg, idx)
        opt, _ = optimal_welfare_milp(base)
        optima.append(opt)
        for d in designs:
            game = base.with_utility_rules({"f": rules[d]})
            traj = round_robin_walk(game, cfg.rounds, TiePolicy("first-index"))
            for k in range(1, cfg.rounds + 1):
                ratios[d][idx, k - 1] = min(1.0, welfare(game, traj.profiles[k * n]) / opt)
    for arr in ratios.values():
        arr.flags.writeable = False
    return ExperimentReport(cfg, designs, ratios, tuple(optima), _summarize(designs, ratios, cfg.rounds))


def check_milp_against_enumeration(cfg: SensorConfig, n_instances: int = 5) -> float:
    """Largest gap between the integer-program optimum and brute force (small configs)."""
    gap = 0.0
    for idx in range(n_instances):
        game = sensor_instance(cfg, idx)
        a, _ = optimal_welfare_milp(game)
        b, _ = optimal_welfare(game)
        gap = max(gap, abs(a - b))
    return gap


def settle_to_nash(cfg: SensorConfig, index: int, design: str = "mc") -> tuple:
    """Strict-improvement rounds from the empty profile until no agent moves."""
    game = sensor_instance(cfg, index).with_utility_rules({"f": design_rules(cfg)[design]})
    a, rounds, ok = improve_until_nash(game)
    return game, a, ok
