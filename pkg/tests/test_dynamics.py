import numpy as np
import pytest

from conftest import random_game
from resalloc.constructions import ci_chain_game, setcover_stack_game, two_agent_curvature_game
from resalloc.design import constant_utility, mc_utility
from resalloc.dynamics import (TiePolicy, action_utilities, best_responses, enumerate_outcomes, greedy_solution,
                               improve_until_nash, is_nash, is_strict_nash, potential, round_robin_walk,
                               trajectory_csv, verify_trajectory)
from resalloc.errors import ValidationError
from resalloc.efficiency import optimal_welfare
from resalloc.game import Resource, ResourceGame, UtilityRule, WelfareRule, set_covering, utility, welfare


def one_resource(n_players, f, actions=None):
    acts = actions or tuple(((), (0,)) for _ in range(n_players))
    return ResourceGame({"w": set_covering(4)}, {"f": UtilityRule(f)}, (Resource("w", "f"),), acts)


def test_best_response_only_empty():
    g = one_resource(1, (1.0,), actions=(((),),))
    assert best_responses(g, 0, (0,)) == (0,)


def test_best_response_tie_at_zero_tolerance():
    g = one_resource(2, (1.0, 0.0))
    assert best_responses(g, 1, (1, 0), tol=0.0) == (0, 1)


def test_two_agent_case_b_follower_is_indifferent():
    g, _ = two_agent_curvature_game(0.5, 0.75)
    # leader on R1: the follower's options R3 and R1 are worth f2 * x each
    assert best_responses(g, 1, (1, 0), tol=0.0) == (1, 2)


def test_single_player_walk():
    g = one_resource(1, (1.0,))
    t = round_robin_walk(g, 1)
    assert t.profiles == ((0,), (1,))


def test_walk_length_and_movers():
    g = one_resource(3, (1.0, 0.5, 0.25))
    t = round_robin_walk(g, 2)
    assert len(t) == 7 and t.movers == (0, 1, 2, 0, 1, 2)
    assert verify_trajectory(g, t)


def test_walk_rejects_enumerate_policy():
    with pytest.raises(ValidationError):
        round_robin_walk(one_resource(1, (1.0,)), 1, TiePolicy("enumerate-all"))
    with pytest.raises(ValidationError):
        TiePolicy("random")


def test_greedy_matches_mc_walk(rng):
    for _ in range(200):
        g = random_game(rng)
        rules = {k: mc_utility(g.welfare_rules["w" + k[1:]]) for k in g.utility_rules}
        g = g.with_utility_rules(rules)
        walk = round_robin_walk(g, 1, TiePolicy("first-index", 1e-12))
        assert walk.final == greedy_solution(g)


def test_case_b_end_state_reachable_after_two_rounds():
    c = 0.5
    g, _ = two_agent_curvature_game(c, 0.75)
    out = enumerate_outcomes(g, 2)
    assert (1, 2) in out
    assert welfare(g, (1, 2)) == pytest.approx(2 - c)
    assert verify_trajectory(g, out.witnesses[(1, 2)])


def test_stack_reachable_in_stack_game():
    g, _ = setcover_stack_game(3, constant_utility(3))
    assert (1, 1, 1) in enumerate_outcomes(g, 1)


def test_single_tie_gives_two_outcomes():
    g = ResourceGame({"w": set_covering(2)}, {"f": UtilityRule((1.0,))},
                     (Resource("w", "f"), Resource("w", "f")), (((), (0,), (1,)),))
    out = enumerate_outcomes(g, 1, tol=0.0)
    assert out.outcomes == ((1,), (2,)) and not out.truncated


def test_no_ties_single_outcome():
    g = one_resource(2, (1.0, 0.5))
    assert len(enumerate_outcomes(g, 3).outcomes) == 1


def test_branch_cap_truncates():
    g, _ = setcover_stack_game(5, constant_utility(5))
    out = enumerate_outcomes(g, 1, branch_cap=3)
    assert out.truncated


def test_witnesses_verify(rng):
    for _ in range(50):
        g = random_game(rng)
        out = enumerate_outcomes(g, 2)
        for a in out.outcomes:
            assert out.witnesses[a].final == a
            assert verify_trajectory(g, out.witnesses[a])


def test_greedy_on_chain():
    g, _ = ci_chain_game(3, 1.0)
    a = greedy_solution(g)
    assert welfare(g, a) == 3.0
    assert optimal_welfare(g)[0] == 5.0


def test_greedy_optimal_without_curvature():
    g, _ = two_agent_curvature_game(0.0, 0.0)
    assert welfare(g, greedy_solution(g)) == optimal_welfare(g)[0]


def test_nash_examples():
    g = one_resource(1, (1.0,))
    assert is_nash(g, (1,)) and is_strict_nash(g, (1,))
    assert not is_nash(g, (0,))
    g, _ = two_agent_curvature_game(1.0, 0.0)
    assert is_nash(g, (1, 1))
    assert not is_strict_nash(g, (1, 1))


def test_potential_examples():
    g = one_resource(2, (1.0, 0.5))
    assert potential(g, (0, 0)) == 0.0
    assert potential(g, (1, 0)) == 1.0
    assert potential(g, (1, 1)) == 1.5


def test_potential_alignment(rng):
    for _ in range(200):
        g = random_game(rng)
        a = tuple(int(rng.integers(0, len(acts))) for acts in g.actions)
        for i in range(g.n_players):
            for k in range(len(g.actions[i])):
                b = a[:i] + (k,) + a[i + 1:]
                dphi = potential(g, b) - potential(g, a)
                du = utility(g, i, b) - utility(g, i, a)
                assert dphi == pytest.approx(du, abs=1e-9)


def test_action_utilities_match_pointwise(rng):
    g = random_game(rng)
    a = g.empty_profile()
    for i in range(g.n_players):
        u = action_utilities(g, i, a)
        for k in range(len(g.actions[i])):
            assert u[k] == pytest.approx(utility(g, i, a[:i] + (k,) + a[i + 1:]))


def test_improvement_reaches_nash(rng):
    for _ in range(100):
        g = random_game(rng)
        a, rounds, ok = improve_until_nash(g)
        assert ok and is_nash(g, a, tol=1e-9)


def test_trajectory_csv_header():
    g = one_resource(1, (1.0,))
    text = trajectory_csv(g, round_robin_walk(g, 1))
    lines = text.strip().splitlines()
    assert lines[0] == "step,player,action_index,welfare,potential"
    assert lines[2] == "1,0,1,1.0,1.0"
