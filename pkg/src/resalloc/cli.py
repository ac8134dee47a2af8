"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 infeasible/degenerate/numerical
trouble, 4 instance too large. Errors go to stderr as one JSON line.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import constructions, design, efficiency
from .errors import ResallocError, ValidationError
from .experiments import DESIGNS, SensorConfig, run_sensor_experiment
from .game import DEFAULT_NMAX, WelfareRule, b_covering, curvature, set_covering
from .gamefile import dump_game, load_game, load_rule


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


# -- output ---------------------------------------------------------------------------

def _num(v):
    if isinstance(v, (bool, str)) or v is None:
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def _flatten(prefix: str, value, out: list):
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}" if prefix else str(k), value[k], out)
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, _num(value)))


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(result: dict, fmt: str) -> str:
    """JSON, or CSV: a table when the result is ``{"rows": [...]}``, else ``key,value`` lines."""
    if fmt == "json":
        return json.dumps(result, sort_keys=True, default=_num) + "\n"
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    if set(result) == {"rows"}:
        rows = result["rows"]
        cols = list(rows[0]) if rows else []
        out.writerow(cols)
        for row in rows:
            out.writerow([_cell(_num(row[c])) for c in cols])
    else:
        flat = []
        _flatten("", result, flat)
        out.writerow(["key", "value"])
        for k, v in flat:
            out.writerow([k, _cell(v)])
    return buf.getvalue()


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- argument helpers -------------------------------------------------------------------

def _welfare(args) -> WelfareRule:
    if args.welfare:
        return load_rule(args.welfare, "welfare")
    if args.b is None and args.c is None:
        raise ValidationError("give --welfare FILE or --b/--c")
    b = 1 if args.b is None else args.b
    c = 1.0 if args.c is None else args.c
    return b_covering(b, c, args.nmax)


def _utility(args, w: WelfareRule):
    if args.utility:
        return load_rule(args.utility, "utility")
    name = getattr(args, "design", None) or "mc"
    n = args.nmax
    if name == "mc":
        return design.mc_utility(w)
    if name == "shapley":
        return design.shapley_utility(w)
    if name == "constant":
        return design.constant_utility(n)
    if name == "curvature":
        return design.bcovering_optimal_f(1, curvature(w), n).f
    if name == "poa":
        return design.poa_optimal_f(args.b or 1, n).f
    raise ValidationError(f"unknown design {name!r}")


def _positive(name: str, value, minimum=1):
    if value is not None and value < minimum:
        raise ValidationError(f"--{name} must be >= {minimum}")


def _check_common(args):
    _positive("nmax", args.nmax, 2)
    if getattr(args, "k", None) is not None:
        _positive("k", args.k)
    tol = getattr(args, "tol", None)
    if tol is not None and not (math.isfinite(tol) and tol >= 0):
        raise ValidationError("--tol must be finite and >= 0")
    c = getattr(args, "c", None)
    if c is not None and not 0.0 <= c <= 1.0:
        raise ValidationError("--c must lie in [0, 1]")
    b = getattr(args, "b", None)
    if b is not None:
        _positive("b", b)


# -- commands ------------------------------------------------------------------------------

def cmd_design(args) -> dict:
    kind = args.kind
    if kind == "optimal":
        res = design.optimal_utility_lp(_welfare(args), args.y, args.z, strict=args.strict,
                                        check_convergence=args.check)
    elif kind == "curvature":
        if args.welfare:
            c = curvature(load_rule(args.welfare, "welfare"))
            b = 1
        else:
            b = 1 if args.b is None else args.b
            c = 1.0 if args.c is None else args.c
        res = design.bcovering_optimal_f(b, c, args.nmax)
    elif kind in ("mc", "shapley"):
        w = _welfare(args)
        f = design.mc_utility(w) if kind == "mc" else design.shapley_utility(w)
        return {"method": kind, "f": list(f.values)}
    elif kind == "constant":
        return {"method": kind, "f": list(design.constant_utility(args.nmax).values)}
    elif kind == "poa":
        res = design.poa_optimal_f(args.b or 1, args.nmax)
    else:  # pareto
        if args.chi is None:
            raise ValidationError("design pareto needs --chi")
        f = design.pareto_utility(args.chi, args.nmax)
        return {"method": "pareto", "chi": args.chi, "f": list(f.values),
                "pob": efficiency.pob_setcover_formula(f), "poa": efficiency.poa_setcover_formula(f, f.n_max)}
    return res.to_dict()


def cmd_eff(args) -> dict:
    kind = args.kind
    if kind == "walk":
        if not args.game:
            raise ValidationError("eff walk needs --game FILE")
        return efficiency.pob_exhaustive(load_game(args.game), args.k, args.tol).to_dict()
    if kind == "poa" and args.game:
        return efficiency.poa_exact(load_game(args.game)).to_dict()
    w = _welfare(args) if (args.welfare or args.b is not None or args.c is not None) else set_covering(args.nmax)
    f = _utility(args, w)
    if kind == "lp":
        rep = efficiency.pob_dual_lp_report(w, f, args.y, args.z)
        return {"beta": rep.beta, "pob": rep.pob, "binding_y": rep.y, "binding_z": rep.z,
                "Y": rep.Y, "Z": rep.Z, "converged": rep.converged}
    if kind == "primal":
        v = efficiency.pob_primal_lp(w, f, args.n or 2)
        return {"pob": v, "n": args.n or 2}
    if kind == "poa":
        n1 = args.n or 8
        return {"poa": efficiency.poa_lp(w, f, n1), "N1": n1}
    n = args.n or f.n_max
    return {"pob": efficiency.pob_setcover_formula(f, n), "poa": efficiency.poa_setcover_formula(f, n), "n": n}


def cmd_frontier(args) -> dict:
    if args.q is None:
        raise ValidationError("frontier needs --q")
    r = design.pareto_frontier(args.q, args.j)
    return {"Q": r.Q, "value": r.value, "diverged": r.diverged, "partial_value": r.partial_value,
            "terms": r.terms}


def cmd_construct(args) -> str:
    kind = args.kind
    if kind == "two-agent":
        game, _ = constructions.two_agent_curvature_game(1.0 if args.c is None else args.c, args.f2,
                                                         args.x, args.first)
    elif kind == "ci-chain":
        game, _ = constructions.ci_chain_game(args.n or 3, 1.0 if args.c is None else args.c)
    elif kind == "stack":
        n = args.n or 3
        if args.utility:
            f = load_rule(args.utility, "utility")
        else:
            f = design.pareto_utility(1.0 if args.chi is None else args.chi, max(n, 2))
        game, _ = constructions.setcover_stack_game(n, f, args.v or 1.0)
    elif kind == "poa-bad":
        game, _ = constructions.poa_design_bad_game(args.n or 4, args.b or 1, args.v or 1000.0)
    else:
        n = args.n or 3
        if args.welfare:
            w = load_rule(args.welfare, "welfare")
        else:
            w = WelfareRule(tuple(float(j) ** args.power for j in range(n + 1)), label=f"j^{args.power:g}")
        f = design.constant_utility(w.n_max) if args.design == "constant" else None
        game, _ = constructions.supermodular_stack_game(n, w, f)
    return dump_game(game)


def cmd_experiment(args) -> dict:
    cfg = SensorConfig(seed=args.seed, n_instances=args.instances, n_agents=args.agents,
                       n_resources=args.resources, detect_prob=args.detect, rounds=args.k or 5)
    rep = run_sensor_experiment(cfg)
    if args.replay:
        Path(args.replay).write_text(rep.replay(), encoding="utf-8")
    return {"rows": [dict(zip(("design", "round", "worst", "q1", "median", "q3", "mean"), row))
                     for row in rep.summary]}


def cmd_repro(args) -> dict:
    if args.figure == "fig2":
        rows = []
        for i in range(101):
            c = i / 100
            rows.append({"c": c, "one_round_optimal": design.optimal_one_round_curvature(c),
                         "greedy": design.greedy_guarantee(c), "best_approximation": 1.0 - c / math.e})
        return {"rows": rows}
    if args.figure == "fig3":
        rows = []
        lo, hi = 0.5, 1.0 - 1.0 / math.e
        for i in range(101):
            q = lo + (hi - lo) * i / 100
            r = design.pareto_frontier(q, args.j)
            rows.append({"poa": q, "pob": r.value, "diverged": int(r.diverged)})
        return {"rows": rows}
    return cmd_experiment(args)


def cmd_game(args) -> dict:
    game = load_game(args.file)
    return {"valid": True, "players": game.n_players, "resources": game.n_resources,
            "actions": [len(a) for a in game.actions]}


# -- parser ------------------------------------------------------------------------------------

def _common(p, rules=True):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write the result to FILE instead of stdout")
    p.add_argument("--nmax", type=int, default=DEFAULT_NMAX, help="rule table length N")
    if rules:
        p.add_argument("--welfare", help="welfare rule file (JSON list w(0..N))")
        p.add_argument("--utility", help="utility rule file (JSON list f(1..N))")
        p.add_argument("--b", type=int)
        p.add_argument("--c", type=float)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="resalloc", description="Utility design and best-response efficiency tools.")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("design", help="synthesize a utility rule")
    p.add_argument("kind", choices=("optimal", "curvature", "mc", "shapley", "constant", "poa", "pareto"))
    _common(p)
    p.add_argument("--chi", type=float)
    p.add_argument("--y", type=int, default=40)
    p.add_argument("--z", type=int, default=40)
    p.add_argument("--strict", action="store_true", help="fail if the LP rule is not non-increasing")
    p.add_argument("--check", action="store_true", help="re-solve with doubled truncation")
    p.set_defaults(run=cmd_design)

    p = sub.add_parser("eff", help="efficiency of a game or of a rule pair")
    p.add_argument("kind", choices=("walk", "lp", "primal", "poa", "setcover"))
    _common(p)
    p.add_argument("--game", help="game file")
    p.add_argument("--design", choices=("mc", "shapley", "constant", "curvature", "poa"))
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--n", type=int, help="agents (primal, setcover) or N1 (poa)")
    p.add_argument("--y", type=int)
    p.add_argument("--z", type=int)
    p.set_defaults(run=cmd_eff)

    p = sub.add_parser("frontier", help="one-round efficiency at a given price of anarchy")
    _common(p, rules=False)
    p.add_argument("--q", type=float)
    p.add_argument("--j", type=int, default=200)
    p.set_defaults(run=cmd_frontier)

    p = sub.add_parser("construct", help="write a worst-case game file")
    p.add_argument("kind", choices=("two-agent", "ci-chain", "stack", "poa-bad", "supermodular"))
    _common(p)
    p.add_argument("--f2", type=float, default=0.0)
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--first", type=int, default=0)
    p.add_argument("--n", type=int)
    p.add_argument("--v", type=float)
    p.add_argument("--chi", type=float)
    p.add_argument("--power", type=float, default=2.0)
    p.add_argument("--design", choices=("shapley", "constant"), default="shapley")
    p.set_defaults(run=cmd_construct)

    for name, helptext in (("experiment", "sensor-coverage experiment"), ("repro", "figure data")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("figure" if name == "repro" else "kind",
                       choices=("fig2", "fig3", "fig4") if name == "repro" else ("sensor",))
        _common(p, rules=False)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--instances", type=int, default=100)
        p.add_argument("--agents", type=int, default=20)
        p.add_argument("--resources", type=int, default=30)
        p.add_argument("--detect", type=float, default=0.5)
        p.add_argument("--k", type=int, default=5)
        p.add_argument("--j", type=int, default=200)
        p.add_argument("--replay", help="write per-instance seeds to FILE")
        p.set_defaults(run=cmd_experiment if name == "experiment" else cmd_repro)

    p = sub.add_parser("game", help="game file utilities")
    p.add_argument("kind", choices=("validate",))
    p.add_argument("file")
    _common(p, rules=False)
    p.set_defaults(run=cmd_game)
    return top


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _check_common(args)
        result = args.run(args)
        text = result if isinstance(result, str) else render(result, args.format)
        _emit(args, text)
        return 0
    except ResallocError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc),
                                     "exit_code": exc.exit_code}) + "\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "OSError", "message": str(exc), "exit_code": 2}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
