"""Command-line entry point.

    stochmatch solve    --kind new --kind std --input g.json
    stochmatch bench    --example order-gap
    stochmatch simulate --example half-rom --param 0.1 --algorithm known --arrival rom
    stochmatch examples order-gap
    stochmatch sweep    single-offline --n 2..8

Exit status: 0 on success, 1 on invalid input, 2 when a self-checking
`examples` run lands outside its expected band.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .algorithms import (ArrivalModel, SubgraphSolver, run_unknown_rom, simulate_known, simulate_known_iid,
                         solve_known, solve_known_iid)
from .benchmarks import (BenchmarkLimits, LimitError, opt_committal_exact, opt_noncommittal_exact,
                         opt_online_fixed_order, order_gap, star_oracle)
from .formulations import FormulationError, KINDS, solve_formulation
from .graph import GraphError, StochasticGraph, TypeGraphInstance, load, named_example, random_graph
from .lp_solver import LpError
from .pricing import PricingError
from .simulate import SimConfig, SimReport, estimate_batch, estimate_value

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_BAND = 2

CSV_COLUMNS = ("instance", "quantity", "value", "stderr", "lo", "hi", "trials", "seed")
ONE_MINUS_INV_E = 1.0 - 1.0 / math.e


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class Row:
    instance: str
    quantity: str
    value: float
    stderr: float | None = None
    lo: float | None = None
    hi: float | None = None
    trials: int | None = None
    seed: int | None = None


@dataclass
class Report:
    rows: list[Row] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    def exact(self, instance, quantity, value):
        self.rows.append(Row(instance, quantity, float(value)))

    def estimate(self, instance, quantity, rep: SimReport):
        self.rows.append(Row(instance, quantity, rep.mean, rep.stderr, rep.ci95[0], rep.ci95[1], rep.trials, rep.seed))

    def check(self, ok: bool, message: str):
        if not ok:
            self.failures.append(message)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "%.12g" % x
    return str(x)


def render_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def render_json(report: Report) -> str:
    """One object per instance mapping quantity -> value; estimates add _stderr/_trials keys."""
    groups: dict[str, dict] = {}
    for r in report.rows:
        g = groups.setdefault(r.instance, {"instance": r.instance})
        g[r.quantity] = r.value
        if r.stderr is not None:
            g[r.quantity + "_stderr"] = r.stderr
            g[r.quantity + "_trials"] = r.trials
            g[r.quantity + "_seed"] = r.seed
    out = list(groups.values())
    payload = out[0] if len(out) == 1 else out
    if report.failures:
        payload = {"results": out, "failures": report.failures}
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# argument helpers


def parse_int_list(text: str) -> list[int]:
    """'2..8' -> [2..8], '10,20,40' -> [10, 20, 40]; pieces may be mixed."""
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        if ".." in piece:
            a, b = piece.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise UsageError(f"empty range {piece!r}")
            out.extend(range(lo, hi + 1))
        elif piece:
            out.append(int(piece))
    if not out:
        raise UsageError(f"no values in {text!r}")
    return out


def parse_float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _instance(args):
    if getattr(args, "input", None):
        return args.input, load(args.input)
    if getattr(args, "example", None):
        name = args.example.replace("-", "_")
        label = name if args.param is None else f"{name}({args.param:g})"
        return label, named_example(name, args.param)
    raise UsageError("give --input FILE or --example NAME")


def _lp_mode(args) -> str:
    return "colgen" if args.lp_mode == "colgen" else "enum"


def _config(args, trials=None) -> SimConfig:
    return SimConfig(trials=trials or args.trials, seed=args.seed, parallelism=args.parallelism)


def _limits(graph: StochasticGraph) -> BenchmarkLimits:
    m, n = graph.shape
    return BenchmarkLimits(max(4, m), max(3, n), max(9, int(np.count_nonzero(graph.prob > 0))),
                           max(3, int(graph.patience.max()) if n else 0))


def _limits_for(args, graph):
    return _limits(graph) if args.no_limits else BenchmarkLimits()


# ---------------------------------------------------------------------------
# commands


def cmd_solve(args, rep: Report):
    name, inst = _instance(args)
    kinds = args.kind or ["new"]
    for k in kinds:
        if k == "new" and _lp_mode(args) == "colgen" and isinstance(inst, StochasticGraph):
            rep.exact(name, "opt_new", solve_known(inst, "colgen", args.tol).objective)
            continue
        if k == "new_iid" and _lp_mode(args) == "colgen" and isinstance(inst, TypeGraphInstance):
            rep.exact(name, "opt_new_iid", solve_known_iid(inst, "colgen", args.tol).objective)
            continue
        _, sol = solve_formulation(k, inst, aux=star_oracle, tol=args.tol)
        if not sol.optimal:
            raise LpError(f"{k}: {sol.status}")
        rep.exact(name, f"opt_{k}", sol.objective_value)


def cmd_bench(args, rep: Report):
    name, g = _instance(args)
    if not isinstance(g, StochasticGraph):
        raise UsageError("bench needs a stochastic graph")
    lim = _limits_for(args, g)
    wanted = args.quantity or ["committal", "noncommittal"]
    for q in wanted:
        if q == "committal":
            rep.exact(name, "opt_committal", opt_committal_exact(g, lim))
        elif q == "noncommittal":
            rep.exact(name, "opt_noncommittal", opt_noncommittal_exact(g, lim))
        elif q == "order-gap":
            rep.exact(name, "order_gap", order_gap(g, lim))
        elif q == "online-order":
            order = parse_int_list(args.order) if args.order else list(range(g.online_count))
            rep.exact(name, "opt_online_order", opt_online_fixed_order(g, order, lim))


def _simulate_graph(args, name, g, rep: Report):
    cfg = _config(args)
    if args.algorithm == "unknown":
        solver = SubgraphSolver(g, _lp_mode(args), args.tol)
        res = estimate_value(lambda rng: run_unknown_rom(g, args.alpha, _lp_mode(args), rng, solver), cfg)
        opt = solve_known(g, _lp_mode(args), args.tol).objective
        rep.estimate(name, "value_unknown_rom", res)
        rep.exact(name, "opt_new", opt)
        return
    sol = solve_known(g, _lp_mode(args), args.tol)
    if args.arrival == "rom":
        arrival = ArrivalModel.rom()
    else:
        order = parse_int_list(args.order) if args.order else list(range(g.online_count))
        arrival = ArrivalModel.adversarial(order)
    variant = "modified" if args.algorithm == "known-modified" else "plain"
    res = estimate_batch(lambda k, rng: simulate_known(g, sol, arrival, variant, k, rng), cfg)
    rep.estimate(name, f"value_{variant}_{args.arrival}", res)
    rep.exact(name, "opt_new", sol.objective)


def cmd_simulate(args, rep: Report):
    name, inst = _instance(args)
    if isinstance(inst, TypeGraphInstance):
        sol = solve_known_iid(inst, _lp_mode(args), args.tol)
        res = estimate_batch(lambda k, rng: simulate_known_iid(inst, sol, k, rng), _config(args))
        rep.estimate(name, "value_iid", res)
        rep.exact(name, "opt_new_iid", sol.objective)
        return
    _simulate_graph(args, name, inst, rep)


# self-checking examples -----------------------------------------------------


def ex_order_gap(args, rep: Report):
    g = named_example("order_gap")
    a = opt_online_fixed_order(g, [0, 1])
    b = opt_online_fixed_order(g, [1, 0])
    gap = order_gap(g)
    for q, v, want in (("opt_order_v1v2", a, 1.0), ("opt_order_v2v1", b, 1.25), ("order_gap", gap, 0.8)):
        rep.exact("order_gap", q, v)
        rep.check(abs(v - want) <= 1e-12, f"{q} = {v!r}, expected {want}")


def ex_noncommittal_gap(args, rep: Report):
    g = named_example("noncommittal_gap")
    c = opt_committal_exact(g)
    nc = opt_noncommittal_exact(g)
    rep.exact("noncommittal_gap", "opt_committal", c)
    rep.exact("noncommittal_gap", "opt_noncommittal", nc)
    rep.exact("noncommittal_gap", "ratio", c / nc)
    rep.check(abs(c - 3.36) <= 1e-9, f"committal {c!r} != 3.36")
    rep.check(abs(nc - 3.924) <= 1e-9, f"non-committal {nc!r} != 3.924")
    rep.check(abs(c / nc - 0.856269) <= 1e-6, f"ratio {c / nc!r} != 0.856269")


def ex_single_offline(args, rep: Report):
    for n in parse_int_list(args.n or "2..8"):
        g = named_example("single_offline", n)
        name = f"single_offline({n})"
        c = opt_committal_exact(g, _limits(g))
        closed = 1.0 - (1.0 - 1.0 / n) ** n
        new = solve_known(g, _lp_mode(args), args.tol).objective
        std = solve_formulation("std", g, tol=args.tol)[1].objective_value
        rep.exact(name, "opt_committal", c)
        rep.exact(name, "closed_form", closed)
        rep.exact(name, "new_over_std", new / std)
        rep.check(abs(c - closed) <= 1e-12, f"{name}: committal {c!r} vs {closed!r}")
        rep.check(abs(new / std - 1.0) <= 1e-9, f"{name}: new/std = {new / std!r}")


def ex_stochasticity_gap(args, rep: Report):
    prev = None
    for n in parse_int_list(args.n or "2..4"):
        g = named_example("stochasticity_gap", n)
        name = f"stochasticity_gap({n})"
        c = opt_committal_exact(g, _limits(g))
        std = solve_formulation("std", g, tol=args.tol)[1].objective_value
        rep.exact(name, "opt_committal", c)
        rep.exact(name, "opt_std", std)
        rep.exact(name, "ratio", c / std)
        rep.check(c / std < 1.0, f"{name}: ratio {c / std!r} not below 1")
        if prev is not None:
            rep.check(c / std <= prev + 1e-12, f"{name}: ratio increased from {prev!r}")
        prev = c / std


def ex_half_rom(args, rep: Report):
    eps = args.param if args.param is not None else 0.01
    g = named_example("half_rom", eps)
    name = f"half_rom({eps:g})"
    sol = solve_known(g, _lp_mode(args), args.tol)
    res = estimate_batch(lambda k, rng: simulate_known(g, sol, ArrivalModel.rom(), "plain", k, rng), _config(args))
    want = (2 * eps + 1 + eps - eps * eps) / 2
    rep.estimate(name, "value_plain_rom", res)
    rep.exact(name, "expected", want)
    rep.exact(name, "opt_new", sol.objective)
    rep.check(abs(res.mean - want) <= 3 * res.stderr, f"{name}: mean {res.mean!r} not within 3 se of {want!r}")


EXAMPLES = {
    "order-gap": ex_order_gap,
    "noncommittal-gap": ex_noncommittal_gap,
    "single-offline": ex_single_offline,
    "stochasticity-gap": ex_stochasticity_gap,
    "half-rom": ex_half_rom,
}


def cmd_examples(args, rep: Report):
    names = list(EXAMPLES) if args.name == "all" else [args.name]
    for nm in names:
        EXAMPLES[nm](args, rep)


# sweeps ---------------------------------------------------------------------


def finite_n_bound(n: int, alpha: float) -> float:
    """Sum over probed steps t of alpha*n / (n*(t-1)); used as a finite-n reference."""
    start = max(2, math.ceil(alpha * n))
    return sum(alpha * n / (n * (t - 1)) for t in range(start, n + 1))


def sweep_half_rom(args, rep: Report):
    for eps in parse_float_list(args.eps or "0.5,0.1,0.01"):
        g = named_example("half_rom", eps)
        name = f"half_rom({eps:g})"
        sol = solve_known(g, _lp_mode(args), args.tol)
        res = estimate_batch(lambda k, rng: simulate_known(g, sol, ArrivalModel.rom(), "plain", k, rng), _config(args))
        rep.estimate(name, "value_plain_rom", res)
        rep.exact(name, "opt_new", sol.objective)
        rep.exact(name, "ratio", res.mean / sol.objective)
        rep.exact(name, "expected", (2 * eps + 1 + eps - eps * eps) / 2)


def sweep_gnnp(args, rep: Report):
    for n in parse_int_list(args.n or "2..4"):
        g = named_example("stochasticity_gap", n)
        name = f"gnnp({n})"
        c = opt_committal_exact(g, _limits(g))
        std = solve_formulation("std", g, tol=args.tol)[1].objective_value
        new = solve_known(g, _lp_mode(args), args.tol).objective
        for q, v in (("opt_committal", c), ("opt_std", std), ("opt_new", new), ("committal_over_std", c / std)):
            rep.exact(name, q, v)


def sweep_unknown_rom(args, rep: Report):
    for n in parse_int_list(args.n or "10,20,40"):
        rng = _rng.generator(args.seed, 0, n)
        g = random_graph(rng, args.offline, n, max_patience=2)
        name = f"unknown_rom(n={n})"
        solver = SubgraphSolver(g, _lp_mode(args), args.tol)
        res = estimate_value(lambda r: run_unknown_rom(g, args.alpha, _lp_mode(args), r, solver), _config(args))
        opt = solve_known(g, _lp_mode(args), args.tol).objective
        rep.estimate(name, "value_unknown_rom", res)
        rep.exact(name, "opt_new", opt)
        rep.exact(name, "ratio", res.mean / opt)
        rep.exact(name, "finite_n_bound", finite_n_bound(n, args.alpha))


SWEEPS = {
    "half-rom": sweep_half_rom,
    "single-offline": ex_single_offline,
    "gnnp": sweep_gnnp,
    "unknown-rom": sweep_unknown_rom,
}


def cmd_sweep(args, rep: Report):
    SWEEPS[args.name](args, rep)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=20240301)
    common.add_argument("--trials", type=int, default=100_000)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--alpha", type=float, default=0.367879441)
    common.add_argument("--lp-mode", choices=("colgen", "enum"), default="colgen")
    common.add_argument("--out", choices=("csv", "json"), default="csv")
    common.add_argument("--parallelism", type=int, default=1)

    source = _Parser(add_help=False)
    grp = source.add_mutually_exclusive_group()
    grp.add_argument("--input", help="graph or type-graph JSON file")
    grp.add_argument("--example", help="named instance, e.g. order-gap, half-rom")
    source.add_argument("--param", type=float, default=None, help="example parameter (n or eps)")

    p = _Parser(prog="stochmatch", description="Stochastic bipartite matching with commitment.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", parents=[common, source], help="solve LP relaxations")
    s.add_argument("--kind", action="append", choices=KINDS)

    b = sub.add_parser("bench", parents=[common, source], help="exact benchmark values")
    b.add_argument("--quantity", action="append", choices=("committal", "noncommittal", "order-gap", "online-order"))
    b.add_argument("--order", help="arrival order for online-order, e.g. 1,0")
    b.add_argument("--no-limits", action="store_true", help="size limits from the instance instead of defaults")

    m = sub.add_parser("simulate", parents=[common, source], help="Monte Carlo runs of an online algorithm")
    m.add_argument("--algorithm", choices=("known", "known-modified", "unknown"), default="known")
    m.add_argument("--arrival", choices=("rom", "adversarial"), default="rom")
    m.add_argument("--order", help="adversarial order, e.g. 2,0,1")

    e = sub.add_parser("examples", parents=[common], help="self-checking worked examples")
    e.add_argument("name", choices=tuple(EXAMPLES) + ("all",))
    e.add_argument("--n", help="sizes, e.g. 2..8")
    e.add_argument("--param", type=float, default=None)

    w = sub.add_parser("sweep", parents=[common], help="parameter sweeps emitting plot-ready rows")
    w.add_argument("name", choices=tuple(SWEEPS))
    w.add_argument("--eps", help="comma list of eps values")
    w.add_argument("--n", help="sizes, e.g. 2..8 or 10,20,40")
    w.add_argument("--offline", type=int, default=3, help="offline side size for unknown-rom graphs")
    return p


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "simulate": cmd_simulate,
            "examples": cmd_examples, "sweep": cmd_sweep}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.trials < 1 or args.parallelism < 1 or args.tol <= 0 or not 0.0 <= args.alpha <= 1.0:
            raise UsageError("--trials and --parallelism must be >= 1, --tol > 0, --alpha in [0, 1]")
        rep = Report()
        COMMANDS[args.command](args, rep)
    except (UsageError, GraphError, FormulationError, LimitError, LpError, PricingError, OSError,
            json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    stdout.write(render_json(rep) if args.out == "json" else render_csv(rep))
    for msg in rep.failures:
        print(f"band failure: {msg}", file=stderr)
    return EXIT_BAND if rep.failures else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
