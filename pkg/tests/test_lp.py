import itertools

import numpy as np
import pytest
from fractions import Fraction
from scipy.optimize import linprog

from resalloc import lp
from resalloc.errors import InfeasibleError, UnboundedError, ValidationError


def vertex_oracle(c, A, b, sense, ub):
    """Best vertex of {A x <= b, 0 <= x <= ub} by brute force over active sets."""
    n = len(c)
    G = np.vstack([A, -np.eye(n), np.eye(n)])
    h = np.concatenate([b, np.zeros(n), ub])
    best = None
    for rows in itertools.combinations(range(G.shape[0]), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if np.all(G @ x <= h + 1e-9):
            v = float(c @ x)
            if best is None or (v < best if sense == "min" else v > best):
                best = v
    return best


def random_bounded_lp(rng):
    n = int(rng.integers(1, 7))
    m = int(rng.integers(1, 7))
    A = rng.integers(-4, 5, size=(m, n)).astype(float)
    b = rng.integers(-3, 8, size=m).astype(float)
    c = rng.integers(-5, 6, size=n).astype(float)
    ub = np.full(n, 10.0)
    sense = "min" if rng.random() < 0.5 else "max"
    return c, A, b, sense, ub


def test_trivial_examples():
    s = lp.solve(lp.LpProblem.from_rows([1.0], [([1.0], "<=", 1.0)], "max"))
    assert s.status == "optimal" and s.value == pytest.approx(1.0) and s.x[0] == pytest.approx(1.0)
    s = lp.solve(lp.LpProblem.from_rows([1.0], [([1.0], ">=", 2.0)], "min"))
    assert s.value == pytest.approx(2.0)


def test_status_classification():
    inf = lp.LpProblem.from_rows([1.0], [([1.0], "<=", -1.0)])
    assert lp.solve(inf).status == "infeasible"
    with pytest.raises(InfeasibleError):
        lp.solve_or_raise(inf)
    unb = lp.LpProblem.from_rows([1.0], [([1.0], ">=", 1.0)], "max")
    assert lp.solve(unb).status == "unbounded"
    with pytest.raises(UnboundedError):
        lp.solve_or_raise(unb)


def test_rejects_malformed():
    with pytest.raises(ValidationError):
        lp.LpProblem.from_rows([1.0, 2.0], [([1.0], "<=", 1.0)])
    with pytest.raises(ValidationError):
        lp.LpProblem.from_rows([1.0], [([1.0], "<", 1.0)])
    with pytest.raises(ValidationError):
        lp.LpProblem.from_rows([np.inf], [])


def test_vertex_enumeration_oracle(rng):
    for _ in range(200):
        c, A, b, sense, ub = random_bounded_lp(rng)
        p = lp.LpProblem(c, A, ("<=",) * len(b), b, sense, None, ub)
        s = lp.solve(p)
        ref = vertex_oracle(c, A, b, sense, ub)
        if ref is None:
            assert s.status == "infeasible"
        else:
            assert s.status == "optimal"
            assert s.value == pytest.approx(ref, abs=1e-7)


def test_matches_scipy_with_mixed_rows_and_free_vars(rng):
    for _ in range(150):
        n = int(rng.integers(1, 6))
        m = int(rng.integers(1, 10))
        A = rng.integers(-3, 4, size=(m, n)).astype(float)
        b = rng.integers(-3, 6, size=m).astype(float)
        rel = tuple(rng.choice(["<=", "=", ">="], size=m, p=[.6, .1, .3]))
        c = rng.integers(-3, 4, size=n).astype(float)
        lo = np.where(rng.random(n) < .2, -np.inf, 0.0)
        hi = np.where(rng.random(n) < .3, 5.0, np.inf)
        p = lp.LpProblem(c, A, rel, b, "min", lo, hi)
        s = lp.solve(p)
        A_ub = [A[i] if r == "<=" else -A[i] for i, r in enumerate(rel) if r != "="]
        b_ub = [b[i] if r == "<=" else -b[i] for i, r in enumerate(rel) if r != "="]
        A_eq = [A[i] for i, r in enumerate(rel) if r == "="]
        b_eq = [b[i] for i, r in enumerate(rel) if r == "="]
        ref = linprog(c, A_ub=A_ub or None, b_ub=b_ub or None, A_eq=A_eq or None, b_eq=b_eq or None,
                      bounds=list(zip(lo, hi)), method="highs")
        assert s.status == {0: "optimal", 2: "infeasible", 3: "unbounded"}[ref.status]
        if ref.status == 0:
            assert s.value == pytest.approx(ref.fun, abs=1e-7)


def test_scale_invariance(rng):
    c, A, b, sense, ub = random_bounded_lp(rng)
    while vertex_oracle(c, A, b, sense, ub) is None:
        c, A, b, sense, ub = random_bounded_lp(rng)
    rel = ("<=",) * len(b)
    s1 = lp.solve(lp.LpProblem(c, A, rel, b, sense, None, ub))
    s2 = lp.solve(lp.LpProblem(3.5 * c, A, rel, b, sense, None, ub))
    assert s2.value == pytest.approx(3.5 * s1.value, abs=1e-7)


def test_tall_problem_uses_dual_path():
    # min t s.t. t >= k/10 for k = 0..99
    rows = [([1.0], ">=", k / 10) for k in range(100)]
    s = lp.solve(lp.LpProblem.from_rows([1.0], rows, "min"))
    assert s.info["path"] == "dual"
    assert s.value == pytest.approx(9.9)


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook rule without an anti-cycling safeguard
    c = [-0.75, 150, -0.02, 6]
    rows = [([0.25, -60, -0.04, 9], "<=", 0), ([0.5, -90, -0.02, 3], "<=", 0), ([0, 0, 1, 0], "<=", 1)]
    s = lp.solve(lp.LpProblem.from_rows(c, rows, "min"), method="primal")
    assert s.value == pytest.approx(-0.05)


def test_exact_vertex_reconstruction():
    p = lp.LpProblem.from_rows([1.0, 1.0], [([3.0, 1.0], ">=", 1.0), ([1.0, 3.0], ">=", 1.0)], "min")
    e = lp.exact_vertex(p, lp.solve(p))
    assert e.x == (Fraction(1, 4), Fraction(1, 4))
    assert e.value == Fraction(1, 2) and e.certified


def test_exact_vertex_with_rhs_override():
    p = lp.LpProblem.from_rows([1.0], [([1.0], ">=", 0.1)], "min")
    e = lp.exact_vertex(p, lp.solve(p), rhs={0: Fraction(1, 10)})
    assert e.value == Fraction(1, 10)
