"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line, then asserts."""
import math
import time

import numpy as np
import pytest

from conftest import random_game
from test_lp import random_bounded_lp, vertex_oracle
from resalloc import lp
from resalloc.constructions import (ci_chain_game, poa_design_bad_game, setcover_stack_game,
                                    supermodular_stack_game, two_agent_curvature_game)
from resalloc.design import (bcovering_beta, bcovering_optimal_f, constant_utility, mc_utility,
                             optimal_utility_lp, pareto_frontier, pareto_utility, poa_optimal_f, shapley_utility)
from resalloc.dynamics import TiePolicy, improve_until_nash, is_nash, potential, round_robin_walk
from resalloc.efficiency import (pob_dual_lp, pob_exhaustive, pob_primal_lp, pob_setcover_formula,
                                 poa_setcover_formula)
from resalloc.experiments import SensorConfig, run_sensor_experiment
from resalloc.game import WelfareRule, b_covering, set_covering, utility

C_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


@pytest.fixture
def verdict(capsys):
    def report(k, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'} | {detail}")
        assert ok, detail
    return report


def test_criterion_1_curvature_closed_form(verdict):
    t0 = time.perf_counter()
    beta_err, guar_err = 0.0, 0.0
    for c in C_GRID:
        res = optimal_utility_lp(b_covering(1, c, 80), Y=40, Z=40)
        beta_err = max(beta_err, abs(res.beta - 2 / (2 - c)))
        best = min(1 / bcovering_beta(b, c) for b in range(1, 51))
        guar_err = max(guar_err, abs(best - (1 - c / 2)))
    dt = time.perf_counter() - t0
    ok = beta_err <= 1e-6 and guar_err <= 1e-9 and dt < 10
    verdict(1, ok, f"max |beta - 2/(2-c)| = {beta_err:.2e}, max guarantee error = {guar_err:.2e}, {dt:.2f} s")


def test_criterion_2_mc_efficiency(verdict):
    dual_err = 0.0
    for b in range(1, 6):
        for c in C_GRID:
            w = b_covering(b, c, 30)
            dual_err = max(dual_err, abs(1 / pob_dual_lp(w, mc_utility(w)) - 1 / (1 + c)))
    misses = []
    for c in C_GRID:
        for n in range(2, 7):
            got = pob_exhaustive(ci_chain_game(n, c)[0], 1).value
            # efficiency is a ratio in [0, 1]; at c = 0 the closed form exceeds 1
            want = min(1.0, n / ((n - 1) * (1 + c) + c))
            if abs(got - want) > 1e-12:
                misses.append(f"(n={n}, c={c}: {got:.6f} vs {want:.6f})")
    ok = dual_err <= 1e-6 and not misses
    verdict(2, ok, f"dual LP max error {dual_err:.2e}; chain mismatches: {' '.join(misses) or 'none'}")


def test_criterion_3_two_agent_bound(verdict):
    worst_gap = -math.inf
    cases = 0
    for c in (0.25, 0.5, 1.0):
        for f2 in (0.0, 1 - c, (2 - c) / 2, 1.0, 1.5):
            for order in ((0, 1), (1, 0)):
                g, _ = two_agent_curvature_game(c, f2, first=order[0])
                for k in (1, 2, 3):
                    v = pob_exhaustive(g, k, order=order).value
                    worst_gap = max(worst_gap, v - (1 - c / 2))
                    cases += 1
    verdict(3, worst_gap <= 1e-9, f"{cases} cases, max pob - (1 - c/2) = {worst_gap:.3e}")


def test_criterion_4_poa_design_one_round(verdict):
    f = poa_optimal_f(1, 16).f.values
    v4 = pob_exhaustive(poa_design_bad_game(4, 1, 1000)[0], 1).value
    v8 = pob_exhaustive(poa_design_bad_game(8, 1, 1000)[0], 1).value
    target = 1 / sum(f[:4])
    rel = abs(v4 - target) / target
    formula = poa_setcover_formula(poa_optimal_f(1, 16).f, 12)
    ok = rel <= 0.02 and v8 < v4 and abs(formula - (1 - 1 / math.e)) <= 0.02
    verdict(4, ok, f"pob(1) n=4 {v4:.6f} vs 1/sum f {target:.6f} (rel {rel:.3f}); n=8 {v8:.6f}; "
                   f"set-cover anarchy n=12 {formula:.6f}")


def test_criterion_5_pareto_frontier(verdict):
    half = pareto_frontier(0.5).value
    top = pareto_frontier(1 - 1 / math.e, 200)
    pob_err, poa_err = 0.0, 0.0
    for chi in (1.0, 0.9, 0.8, 0.7):
        pob_err = max(pob_err, abs(pob_setcover_formula(pareto_utility(chi, 201))
                                   - pareto_frontier(1 / (1 + chi), 200).value))
        poa_err = max(poa_err, abs(poa_setcover_formula(pareto_utility(chi, 41), 40) - 1 / (1 + chi)))
    ok = half == 0.5 and top.value < 0.02 and top.diverged and pob_err <= 1e-9 and poa_err <= 1e-6
    verdict(5, ok, f"frontier(1/2) = {half}, frontier(1-1/e) = {top.value} diverged={top.diverged}; "
                   f"pob error {pob_err:.2e}, anarchy error {poa_err:.2e}")


def test_criterion_6_supermodular(verdict):
    bad = []
    for n in range(1, 7):
        w = WelfareRule(tuple(float(j * j) for j in range(n + 1)))
        for name, f in (("shapley", shapley_utility(w)), ("constant", constant_utility(n))):
            g, _ = supermodular_stack_game(n, w, f)
            for k in (1, 2):
                v = pob_exhaustive(g, k).value
                if abs(v - n / w(n)) > 1e-12:
                    bad.append(f"(n={n}, {name}, k={k}: {v})")
    verdict(6, not bad, f"mismatches: {' '.join(bad) or 'none'}")


def test_criterion_7_potential_game(verdict):
    rng = np.random.default_rng(7)
    worst, non_nash, steps = 0.0, 0, 0
    for _ in range(1000):
        g = random_game(rng)
        traj = round_robin_walk(g, 2, TiePolicy("first-index"))
        for i, a, b in zip(traj.movers, traj.profiles, traj.profiles[1:]):
            dphi = potential(g, b) - potential(g, a)
            du = utility(g, i, b) - utility(g, i, a)
            worst = max(worst, abs(dphi - du))
            steps += 1
        a, _, ok = improve_until_nash(g)
        if not (ok and is_nash(g, a, tol=1e-12)):
            non_nash += 1
    verdict(7, worst <= 1e-9 and non_nash == 0,
            f"{steps} steps, max |dPhi - dU| = {worst:.2e}; non-Nash endpoints {non_nash}")


def test_criterion_8_lp_cross_validation(verdict):
    rng = np.random.default_rng(8)
    lp_err = 0.0
    for _ in range(200):
        c, A, b, sense, ub = random_bounded_lp(rng)
        rows = [(A[i], "<=", b[i]) for i in range(len(b))]
        sol = lp.solve(lp.LpProblem.from_rows(c, rows, sense, upper=ub))
        want = vertex_oracle(c, A, b, sense, ub)
        if want is None:
            lp_err = max(lp_err, 0.0 if sol.status == "infeasible" else math.inf)
        else:
            lp_err = max(lp_err, abs(sol.value - want) if sol.status == "optimal" else math.inf)
    configs = [(b_covering(1, c, 8), bcovering_optimal_f(1, c, 8).f) for c in C_GRID]
    sc = set_covering(8)
    configs += [(sc, mc_utility(sc)), (sc, bcovering_optimal_f(1, 1.0, 8).f)]
    gap = 0.0
    for w, f in configs:
        dual = 1 / pob_dual_lp(w, f)
        for n in (2, 3):
            gap = max(gap, abs(pob_primal_lp(w, f, n) - dual))
    ok = lp_err <= 1e-6 and gap <= 1e-5
    verdict(8, ok, f"200 LPs max error vs vertex enumeration {lp_err:.2e}; primal/dual max gap {gap:.2e}")


def test_criterion_9_sensor_experiment(verdict):
    t0 = time.perf_counter()
    rep = run_sensor_experiment(SensorConfig(seed=0, n_instances=100))
    dt = time.perf_counter() - t0
    worst = {d: rep.row(d, 1)["worst"] for d in rep.designs}
    ordering = worst["one-round-optimal"] >= worst["mc"] and worst["one-round-optimal"] >= worst["poa"]
    drift = max(abs(rep.row(d, 5)["mean"] - rep.row(d, 2)["mean"]) / rep.row(d, 2)["mean"] for d in rep.designs)
    ok = ordering and drift <= 0.01 and dt < 300
    detail = ", ".join(f"{d} {v:.5f}" for d, v in worst.items())
    verdict(9, ok, f"worst k=1: {detail}; max mean change round 2->5 {drift:.4%}; {dt:.1f} s")


def test_criterion_10_stack_tightness(verdict):
    bad = []
    for name, f in (("constant", constant_utility(8)), ("pareto chi=1", pareto_utility(1.0, 8))):
        for n in range(1, 7):
            v = pob_exhaustive(setcover_stack_game(n, f)[0], 1).value
            want = 1 / (sum(f.values[: n - 1]) + 1)
            if abs(v - want) > 1e-12:
                bad.append(f"({name}, n={n}: {v} vs {want})")
    verdict(10, not bad, f"mismatches: {' '.join(bad) or 'none'}")
