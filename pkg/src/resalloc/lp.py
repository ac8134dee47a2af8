"""Dense two-phase simplex solver.

Problems are stated with general rows (<=, =, >=) and per-variable bounds and
are reduced to ``min c.x, A x = b, x >= 0`` internally. Tall problems (many
more rows than columns) are solved through their dual, which keeps the
tableau small; the primal point is recovered from the dual's multipliers.
Every optimal answer carries a dual vector and is checked by weak duality.
"""
from __future__ import annotations

import logging
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InfeasibleError, NumericalFailure, UnboundedError, ValidationError

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-10
COST_TOL = 1e-9
FEAS_TOL = 1e-8
CERT_TOL = 1e-7
RELATIONS = ("<=", "=", ">=")


@dataclass(frozen=True)
class LpProblem:
    objective: np.ndarray
    A: np.ndarray
    relations: tuple
    rhs: np.ndarray
    sense: str = "min"
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).ravel()
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, c.size)
        b = np.asarray(self.rhs, dtype=float).ravel()
        rel = tuple(self.relations)
        if A.ndim != 2 or A.shape[1] != c.size:
            raise ValidationError("constraint rows must match the objective width")
        if A.shape[0] != b.size or len(rel) != b.size:
            raise ValidationError("rows, relations and right-hand sides differ in count")
        if any(r not in RELATIONS for r in rel):
            raise ValidationError(f"relations must be among {RELATIONS}")
        if not (np.isfinite(c).all() and np.isfinite(A).all() and np.isfinite(b).all()):
            raise ValidationError("LP data must be finite")
        if self.sense not in ("min", "max"):
            raise ValidationError("sense must be 'min' or 'max'")
        lo = np.zeros(c.size) if self.lower is None else np.asarray(self.lower, dtype=float).ravel()
        hi = np.full(c.size, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).ravel()
        if lo.size != c.size or hi.size != c.size:
            raise ValidationError("bounds must match the objective width")
        if np.any(lo > hi) or np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValidationError("inconsistent variable bounds")
        for name, val in (("objective", c), ("A", A), ("rhs", b), ("lower", lo), ("upper", hi)):
            val.flags.writeable = False
            object.__setattr__(self, name, val)
        object.__setattr__(self, "relations", rel)

    @classmethod
    def from_rows(cls, objective, rows: Sequence, sense="min", lower=None, upper=None) -> "LpProblem":
        """Build from ``(coefficients, relation, rhs)`` triples."""
        c = np.asarray(objective, dtype=float)
        if rows:
            A = np.array([r[0] for r in rows], dtype=float)
        else:
            A = np.zeros((0, c.size))
        return cls(c, A, tuple(r[1] for r in rows), np.array([r[2] for r in rows], dtype=float),
                   sense, lower, upper)

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.rhs.size


@dataclass(frozen=True)
class LpSolution:
    status: str
    x: np.ndarray | None = None
    value: float | None = None
    duals: np.ndarray | None = None
    iterations: int = 0
    info: dict = field(default_factory=dict)


# -- core: min c.x s.t. A x = b, x >= 0, b >= 0 ------------------------------

@dataclass
class _Core:
    status: str
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    iterations: int = 0
    kept_rows: np.ndarray | None = None
    basis: list | None = None


def _pivot(T: np.ndarray, r: int, j: int) -> None:
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run(T: np.ndarray, basis: list, ncols: int, max_iter: int, state: dict) -> str:
    """Minimize the objective row ``T[-1]`` over columns ``< ncols``."""
    m = T.shape[0] - 1
    degenerate = 0
    bland = False
    bland_after = 5 * (m + ncols)
    while True:
        if state["it"] >= max_iter:
            raise NumericalFailure(f"simplex did not converge in {max_iter} pivots")
        red = T[-1, :ncols]
        if bland:
            cand = np.flatnonzero(red < -COST_TOL)
            if cand.size == 0:
                return "optimal"
            j = int(cand[0])
        else:
            j = int(np.argmin(red))
            if red[j] >= -COST_TOL:
                return "optimal"
        col = T[:m, j]
        pos = np.flatnonzero(col > PIVOT_TOL)
        if pos.size == 0:
            return "unbounded"
        ratios = T[pos, -1] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        if best <= 1e-12:
            degenerate += 1
            if degenerate > bland_after and not bland:
                log.debug("switching to Bland's rule after %d degenerate pivots", degenerate)
                bland = True
        _pivot(T, r, j)
        basis[r] = j
        state["it"] += 1


def _solve_standard(c: np.ndarray, A: np.ndarray, b: np.ndarray, max_iter: int = 100000) -> _Core:
    m, n = A.shape
    state = {"it": 0}
    if m == 0:
        if np.any(c < -COST_TOL):
            return _Core("unbounded")
        return _Core("optimal", np.zeros(n), np.zeros(0), 0, np.arange(0))

    # unit columns already present can start the basis; the rest get artificials
    basis = [-1] * m
    for j in range(n):
        col = A[:, j]
        nz = np.flatnonzero(col)
        if nz.size == 1 and col[nz[0]] > 0 and basis[nz[0]] == -1 and abs(col[nz[0]] - 1.0) < 1e-15:
            basis[nz[0]] = j
    art_rows = [i for i in range(m) if basis[i] == -1]
    n_art = len(art_rows)
    T = np.zeros((m + 1, n + n_art + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    for k, i in enumerate(art_rows):
        T[i, n + k] = 1.0
        basis[i] = n + k

    if n_art:
        T[-1, n:n + n_art] = 1.0
        for i in art_rows:
            T[-1] -= T[i]
        status = _run(T, basis, n + n_art, max_iter, state)
        if status != "optimal":
            raise NumericalFailure("phase one reported an unbounded auxiliary problem")
        if -T[-1, -1] > FEAS_TOL * max(1.0, np.abs(b).max()):
            return _Core("infeasible", iterations=state["it"])
        # drive artificials out of the basis, dropping redundant rows
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= n:
                row = T[i, :n]
                cand = np.flatnonzero(np.abs(row) > 1e-9)
                if cand.size:
                    j = int(cand[np.argmax(np.abs(row[cand]))])
                    _pivot(T, i, j)
                    basis[i] = j
                else:
                    keep[i] = False
        rows = np.flatnonzero(keep)
        T = np.vstack([T[rows][:, list(range(n)) + [T.shape[1] - 1]], np.zeros((1, n + 1))])
        basis = [basis[i] for i in rows]
    else:
        rows = np.arange(m)
        T = np.vstack([T[:m], np.zeros((1, n + 1))])

    T[-1, :n] = c
    T[-1, -1] = 0.0
    for i, j in enumerate(basis):
        if T[-1, j] != 0.0:
            T[-1] -= T[-1, j] * T[i]
    status = _run(T, basis, n, max_iter, state)
    if status == "unbounded":
        return _Core("unbounded", iterations=state["it"])

    # recompute the vertex and multipliers from the original data for accuracy
    Ar, br = A[rows], b[rows]
    B = Ar[:, basis]
    try:
        xb = np.linalg.solve(B, br)
        y = np.linalg.solve(B.T, c[basis])
    except np.linalg.LinAlgError:
        xb = T[:-1, -1]
        y = None
    x = np.zeros(n)
    x[basis] = xb
    x[np.abs(x) < 1e-13] = 0.0
    if y is None or np.any(x < -FEAS_TOL * max(1.0, np.abs(xb).max())):
        x = np.zeros(n)
        x[basis] = T[:-1, -1]
        y = np.linalg.lstsq(B.T, c[basis], rcond=None)[0]
    x = np.maximum(x, 0.0)
    y_full = np.zeros(m)
    y_full[rows] = y
    core = _Core("optimal", x, y_full, state["it"], rows)
    core.basis = list(basis)
    return core


# -- reductions -----------------------------------------------------------------

@dataclass
class _Shifted:
    """Problem in ``min c.z + const, rows(z) rel b, z >= 0`` form plus the map back."""

    c: np.ndarray
    A: np.ndarray
    rel: list
    b: np.ndarray
    const: float
    T: np.ndarray        # x = T z + t
    t: np.ndarray
    n_orig_rows: int


def _shift_bounds(p: LpProblem) -> _Shifted:
    sign = 1.0 if p.sense == "min" else -1.0
    c = sign * p.objective
    n = p.n_vars
    cols, t = [], np.zeros(n)
    extra_rows = []
    for j in range(n):
        lo, hi = p.lower[j], p.upper[j]
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lo):
            t[j] = lo
            cols.append(e)
            if np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            t[j] = hi
            cols.append(-e)
        else:
            cols.append(e)
            cols.append(-e)
    Tm = np.array(cols).T if cols else np.zeros((n, 0))
    A = p.A @ Tm
    b = p.rhs - p.A @ t
    rel = list(p.relations)
    if extra_rows:
        ub = np.zeros((len(extra_rows), Tm.shape[1]))
        for k, (col, val) in enumerate(extra_rows):
            ub[k, col] = 1.0
        A = np.vstack([A, ub])
        b = np.concatenate([b, [v for _, v in extra_rows]])
        rel += ["<="] * len(extra_rows)
    return _Shifted(c @ Tm, A, rel, b, float(c @ t), Tm, t, p.n_rows)


def _to_equality(s: _Shifted):
    """Add slacks and flip rows so that b >= 0."""
    m, n = s.A.shape
    n_slack = sum(r != "=" for r in s.rel)
    A = np.zeros((m, n + n_slack))
    A[:, :n] = s.A
    b = s.b.copy()
    k = n
    for i, r in enumerate(s.rel):
        if r == "<=":
            A[i, k] = 1.0
            k += 1
        elif r == ">=":
            A[i, k] = -1.0
            k += 1
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1
    c = np.concatenate([s.c, np.zeros(n_slack)])
    return c, A, b, flip


def _primal_path(s: _Shifted, max_iter: int):
    c, A, b, flip = _to_equality(s)
    core = _solve_standard(c, A, b, max_iter)
    if core.status != "optimal":
        return core.status, None, None, core.iterations, None
    n = s.A.shape[1]
    z = core.x[:n]
    y = core.y.copy()
    y[flip] *= -1
    basic = set(core.basis)
    slack_of = {}
    k = n
    for i, r in enumerate(s.rel):
        if r != "=":
            slack_of[i] = k
            k += 1
    rows = [i for i, r in enumerate(s.rel) if r == "=" or slack_of[i] not in basic]
    zero = [j for j in range(n) if j not in basic]
    return "optimal", z, y, core.iterations, (rows, zero)


def _dual_path(s: _Shifted, max_iter: int):
    """Solve ``max b.y, A^T y <= c`` with sign-constrained y and map back.

    Row signs: '>=' rows give y >= 0, '<=' rows give y <= 0, '=' rows free.
    """
    m, n = s.A.shape
    cols, owner = [], []
    for i, r in enumerate(s.rel):
        if r in (">=", "="):
            cols.append(s.A[i])
            owner.append((i, 1.0))
        if r in ("<=", "="):
            cols.append(-s.A[i])
            owner.append((i, -1.0))
    D = np.array(cols).T if cols else np.zeros((n, 0))  # n x k
    gain = np.array([sign * s.b[i] for i, sign in owner])
    # min -gain.u  s.t.  D u + slack = c,  u, slack >= 0
    k = D.shape[1]
    A = np.hstack([D, np.eye(n)])
    rhs = s.c.copy()
    flip = rhs < 0
    A[flip] *= -1
    rhs[flip] *= -1
    cost = np.concatenate([-gain, np.zeros(n)])
    core = _solve_standard(cost, A, rhs, max_iter)
    if core.status == "unbounded":
        return "infeasible", None, None, core.iterations, None
    if core.status == "infeasible":
        return "dual-infeasible", None, None, core.iterations, None
    u = core.x[:k]
    y = np.zeros(m)
    for (i, sign), val in zip(owner, u):
        y[i] += sign * val
    # multipliers of "D u + slack = c" are -z for the primal point z
    w = core.y.copy()
    w[flip] *= -1
    z = np.maximum(-w, 0.0)
    # basic multipliers mark tight rows; basic dual slacks mark variables at zero
    rows = sorted({owner[j][0] for j in core.basis if j < k})
    zero = sorted(j - k for j in core.basis if j >= k)
    return "optimal", z, y, core.iterations, (rows, zero)


def _row_violation(A, rel, b, x) -> float:
    act = A @ x
    scale = 1.0 + np.abs(b)
    worst = 0.0
    for i, r in enumerate(rel):
        d = act[i] - b[i]
        v = max(d, 0.0) if r == "<=" else (max(-d, 0.0) if r == ">=" else abs(d))
        worst = max(worst, v / scale[i])
    return worst


def solve(p: LpProblem, max_iter: int = 100000, method: str = "auto") -> LpSolution:
    """Solve ``p``; status is 'optimal', 'infeasible' or 'unbounded'.

    Raises NumericalFailure if the answer does not pass its own certificate.
    """
    s = _shift_bounds(p)
    m, n = s.A.shape
    use_dual = method == "dual" or (method == "auto" and m > 2 * n)
    path = "dual" if use_dual else "primal"
    if use_dual:
        status, z, y, it, active = _dual_path(s, max_iter)
        if status == "optimal" and _row_violation(s.A, s.rel, s.b, z) > FEAS_TOL * 10:
            raise NumericalFailure("primal point recovered from the dual is infeasible")
        if status == "dual-infeasible":
            # primal is unbounded or infeasible; the primal phases tell which
            status, z, y, it2, active = _primal_path(s, max_iter)
            it += it2
            path = "primal"
    else:
        status, z, y, it, active = _primal_path(s, max_iter)
    if status != "optimal":
        return LpSolution(status, iterations=it, info={"path": path})

    sign = 1.0 if p.sense == "min" else -1.0
    x = s.T @ z + s.t
    value = float(p.objective @ x)
    _certify(p, s, z, y, sign, value)
    y_out = sign * y[: s.n_orig_rows]
    return LpSolution("optimal", x, value, y_out, it, {"path": path, "active": active})


def _certify(p: LpProblem, s: _Shifted, z, y, sign, value) -> None:
    viol = _row_violation(s.A, s.rel, s.b, z)
    if viol > 10 * FEAS_TOL:
        raise NumericalFailure(f"solution violates constraints by {viol:.3g}")
    if np.any(z < -FEAS_TOL):
        raise NumericalFailure("solution violates variable bounds")
    # dual feasibility: A^T y <= c with the sign convention of each row
    for i, r in enumerate(s.rel):
        if (r == ">=" and y[i] < -1e-7) or (r == "<=" and y[i] > 1e-7):
            raise NumericalFailure("dual multiplier has the wrong sign")
    reduced = s.c - s.A.T @ y
    scale = 1.0 + np.abs(s.c).max(initial=0.0)
    if np.any(reduced < -CERT_TOL * scale * 10):
        raise NumericalFailure("dual certificate is infeasible")
    primal = float(s.c @ z)
    dual = float(s.b @ y)
    if abs(primal - dual) > CERT_TOL * max(1.0, abs(primal)):
        raise NumericalFailure(f"duality gap {primal - dual:.3g} exceeds tolerance")
    if abs(sign * (primal + s.const) - value) > 1e-8 * max(1.0, abs(value)):
        raise NumericalFailure("objective value does not match the solution")


def solve_or_raise(p: LpProblem, **kw) -> LpSolution:
    sol = solve(p, **kw)
    if sol.status == "infeasible":
        raise InfeasibleError("linear program is infeasible")
    if sol.status == "unbounded":
        raise UnboundedError("linear program is unbounded")
    return sol


# -- exact reconstruction -----------------------------------------------------------

@dataclass(frozen=True)
class ExactSolution:
    """Vertex and value in rational arithmetic; ``certified`` means the exact
    multipliers of the defining constraints prove optimality."""

    x: tuple
    value: Fraction
    certified: bool


class _ExactSystem:
    """Rational view of the bound-shifted system used by ``_shift_bounds``.

    Rows are converted on demand; most rows of a tall problem are only
    checked in floating point.
    """

    def __init__(self, p: LpProblem, rhs: Sequence):
        self.p = p
        self.sign = 1 if p.sense == "min" else -1
        cols, t, extra = [], [Fraction(0)] * p.n_vars, []
        for j in range(p.n_vars):
            lo, hi = p.lower[j], p.upper[j]
            if np.isfinite(lo):
                t[j] = Fraction(lo)
                cols.append((j, 1))
                if np.isfinite(hi):
                    extra.append((len(cols) - 1, Fraction(hi) - Fraction(lo)))
            elif np.isfinite(hi):
                t[j] = Fraction(hi)
                cols.append((j, -1))
            else:
                cols.append((j, 1))
                cols.append((j, -1))
        self.cols, self.t, self.extra = cols, t, extra
        self.rhs = list(rhs)
        self.m0 = p.n_rows
        self.rel = list(p.relations) + ["<="] * len(extra)
        self.cost = [self.sign * Fraction(p.objective[j]) * s_ for j, s_ in cols]
        self._rows = {}

    @property
    def n(self) -> int:
        return len(self.cols)

    def row(self, i: int) -> tuple:
        """Sparse row as ((col, coef), ...) and its right-hand side."""
        if i not in self._rows:
            if i < self.m0:
                a = self.p.A[i]
                entries = tuple((k, s_ * Fraction(a[j])) for k, (j, s_) in enumerate(self.cols) if a[j] != 0.0)
                b = self.rhs[i] - sum(Fraction(a[j]) * self.t[j] for j in range(self.p.n_vars)
                                      if a[j] != 0.0 and self.t[j])
            else:
                col, val = self.extra[i - self.m0]
                entries, b = ((col, Fraction(1)),), val
            self._rows[i] = (entries, b)
        return self._rows[i]

    def float_rows(self) -> tuple:
        A = self.p.A
        Af = np.zeros((len(self.rel), self.n))
        for k, (j, s_) in enumerate(self.cols):
            Af[: self.m0, k] = s_ * A[:, j]
        bf = np.concatenate([np.asarray([float(v) for v in self.rhs]) - A @ np.array([float(v) for v in self.t]),
                             [float(v) for _, v in self.extra]])
        for r, (col, _) in enumerate(self.extra):
            Af[self.m0 + r, col] = 1.0
        return Af, bf


def _exact_solve(M: list, rhs: list) -> list | None:
    """Gaussian elimination over the rationals on sparse dict rows; None if singular."""
    n = len(M)
    rows = [dict(r) for r in M]
    b = list(rhs)
    for r in rows:
        for k in [k for k, v in r.items() if v == 0]:
            del r[k]
    for col in range(n):
        piv = next((r for r in range(col, n) if col in rows[r]), None)
        if piv is None:
            return None
        rows[col], rows[piv] = rows[piv], rows[col]
        b[col], b[piv] = b[piv], b[col]
        pv = rows[col][col]
        prow = {k: v / pv for k, v in rows[col].items()}
        pb = b[col] / pv
        rows[col], b[col] = prow, pb
        for r in range(n):
            if r != col and col in rows[r]:
                fac = rows[r][col]
                target = rows[r]
                for k, v in prow.items():
                    nv = target.get(k, 0) - fac * v
                    if nv:
                        target[k] = nv
                    else:
                        target.pop(k, None)
                b[r] -= fac * pb
    return b


def exact_vertex(p: LpProblem, sol: LpSolution, rhs: dict | None = None) -> ExactSolution:
    """Re-solve the vertex of an optimal float solution in rational arithmetic.

    The simplex basis names the constraints that define the vertex; they are
    solved exactly, every constraint is re-checked (exactly where the float
    margin is small), and the exact multipliers are tested for the sign
    pattern that certifies optimality. ``rhs`` replaces selected right-hand
    sides by exact values.
    """
    if sol.status != "optimal" or "active" not in sol.info:
        raise ValidationError("exact reconstruction needs an optimal simplex solution")
    b_exact = [Fraction(v) for v in p.rhs]
    for i, v in (rhs or {}).items():
        b_exact[i] = Fraction(v)
    S = _ExactSystem(p, b_exact)
    nz = S.n
    Af, bf = S.float_rows()
    rows, zero = sol.info["active"]
    # defining constraints: an independent subset of the active set
    cand = [("row", i) for i in rows] + [("var", j) for j in zero]
    chosen = []
    Q = np.zeros((0, nz))
    for kind, idx in cand:
        v = Af[idx] if kind == "row" else np.eye(nz)[idx]
        r = v - Q.T @ (Q @ v) if Q.size else v.copy()
        nrm = np.linalg.norm(r)
        if nrm > 1e-9 * max(1.0, np.linalg.norm(v)):
            Q = np.vstack([Q, r / nrm])
            chosen.append((kind, idx))
        if len(chosen) == nz:
            break
    if len(chosen) < nz:
        raise NumericalFailure("active constraints do not determine a vertex")
    M, rhs_vec = [], []
    for kind, idx in chosen:
        if kind == "row":
            entries, b = S.row(idx)
            M.append(dict(entries))
            rhs_vec.append(b)
        else:
            M.append({idx: Fraction(1)})
            rhs_vec.append(Fraction(0))
    z = _exact_solve(M, rhs_vec)
    if z is None:
        raise NumericalFailure("defining constraints are singular in exact arithmetic")
    if any(v < 0 for v in z):
        raise NumericalFailure("exact vertex violates nonnegativity")
    zf = np.array([float(v) for v in z])
    act = Af @ zf
    for i, r in enumerate(S.rel):
        # rows with a clear float margin are settled; near-tight ones are checked exactly
        margin = act[i] - bf[i]
        if r != "=" and abs(margin) > 1e-6 * (1.0 + abs(bf[i])):
            if (r == ">=" and margin < 0) or (r == "<=" and margin > 0):
                raise NumericalFailure("exact vertex violates a constraint")
            continue
        entries, b = S.row(i)
        lhs = sum(a * z[k] for k, a in entries if z[k])
        if (r == ">=" and lhs < b) or (r == "<=" and lhs > b) or (r == "=" and lhs != b):
            raise NumericalFailure("exact vertex violates a constraint")
    # multipliers: M^T y = c
    MT = [dict() for _ in range(nz)]
    for r, row in enumerate(M):
        for k, v in row.items():
            MT[k][r] = v
    y = _exact_solve(MT, S.cost)
    certified = y is not None
    if certified:
        for (kind, idx), val in zip(chosen, y):
            kind_rel = S.rel[idx] if kind == "row" else ">="
            if (kind_rel == ">=" and val < 0) or (kind_rel == "<=" and val > 0):
                certified = False
                break
    x = list(S.t)
    for (j, s_), v in zip(S.cols, z):
        x[j] += s_ * v
    value = sum(Fraction(p.objective[j]) * x[j] for j in range(p.n_vars))
    return ExactSolution(tuple(x), value, certified)
