"""Online probing algorithms built on one shared loop.

Each arrival gets a tuple LP solution (fixed up front, or re-solved on the
vertices seen so far), runs a probing subroutine, and is matched to the
committed offline vertex when that vertex is still free.

`run_*` functions execute one trial with full transcripts. `simulate_*`
functions run many trials at once with numpy and return per-trial values;
they follow the same rules but consume randomness differently, so the two
paths agree in distribution rather than trial by trial.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .formulations import ContributionVector, EdgeVariables, TupleColumn, contributions
from .graph import StochasticGraph, TypeGraphInstance, induced_subgraph, validate
from .pricing import solve_tuple_lp
from .probing import ColumnTable, LazyStates, batch_probe, probe_threshold, vertex_probe, vertex_probe_s

ADVERSARIAL = "adversarial"
ROM = "rom"
IID = "iid"

PLAIN = "plain"
MODIFIED = "modified"


class AlgorithmError(ValueError):
    pass


@dataclass(frozen=True)
class ArrivalModel:
    kind: str
    order: tuple[int, ...] | None = None

    @classmethod
    def adversarial(cls, order: Sequence[int]) -> "ArrivalModel":
        return cls(ADVERSARIAL, tuple(int(v) for v in order))

    @classmethod
    def rom(cls) -> "ArrivalModel":
        return cls(ROM)

    @classmethod
    def iid(cls) -> "ArrivalModel":
        return cls(IID)

    def check(self, n: int):
        if self.kind == ADVERSARIAL:
            if self.order is None or sorted(self.order) != list(range(n)):
                raise AlgorithmError(f"adversarial order {self.order} is not a permutation of {n} vertices")
        elif self.kind not in (ROM, IID):
            raise AlgorithmError(f"unknown arrival model {self.kind!r}")


@dataclass
class RunResult:
    matching: list[tuple[int, int]]
    value: float
    transcripts: list = field(default_factory=list)
    lp_objective_trace: list[float] = field(default_factory=list)
    commit_values: list[float] = field(default_factory=list)
    arrivals: list[int] = field(default_factory=list)


@dataclass
class TupleSolution:
    """An optimal tuple LP solution plus what the algorithms derive from it."""

    objective: float
    columns: list[TupleColumn]
    edge_vars: EdgeVariables
    contributions: ContributionVector


def solve_known(graph: StochasticGraph, lp_mode: str = "colgen", tol: float = 1e-9) -> TupleSolution:
    obj, cols, ev = solve_tuple_lp(graph, "new", lp_mode, tol)
    return TupleSolution(obj, cols, ev, contributions(graph, ev))


def solve_known_iid(instance: TypeGraphInstance, lp_mode: str = "colgen", tol: float = 1e-9) -> TupleSolution:
    obj, cols, ev = solve_tuple_lp(instance, "new_iid", lp_mode, tol)
    return TupleSolution(obj, cols, ev, contributions(instance.type_graph, ev))


def _arrival_order(n: int, arrival: ArrivalModel, rng: np.random.Generator):
    """Arrival order and, for random order, the arrival times that produced it."""
    if arrival.kind == ADVERSARIAL:
        return list(arrival.order), None
    times = rng.random(n)
    return [int(v) for v in np.argsort(times, kind="stable")], times


def _child(rng: np.random.Generator) -> np.random.Generator:
    """Independent generator for edge states, so the selection tape does not see them."""
    return np.random.Generator(np.random.PCG64(int(rng.integers(0, 2**63))))


def run_known(graph: StochasticGraph, arrival: ArrivalModel, variant: str = PLAIN, lp_mode: str = "colgen",
              rng: np.random.Generator | None = None, solution: TupleSolution | None = None,
              states=None) -> RunResult:
    """One run with the LP solved once on the whole (known) graph.

    `states` overrides the edge-state source (lazy draws by default).
    """
    validate(graph)
    n = graph.online_count
    arrival.check(n)
    if variant not in (PLAIN, MODIFIED):
        raise AlgorithmError(f"unknown variant {variant!r}")
    if variant == MODIFIED and arrival.kind != ROM:
        raise AlgorithmError("the threshold variant needs random-order arrivals")
    rng = rng if rng is not None else np.random.default_rng()
    sol = solution if solution is not None else solve_known(graph, lp_mode)
    if states is None:
        states = LazyStates(graph.prob, _child(rng))
    order, times = _arrival_order(n, arrival, rng)
    free = np.ones(graph.offline_count, dtype=bool)
    res = RunResult([], 0.0, arrivals=order)
    for v in order:
        if variant == PLAIN:
            tr = vertex_probe(graph, v, sol.columns, states, rng)
            ok = tr.committed is not None
        else:
            z = float(times[v])
            tr = vertex_probe_s(graph, v, sol.columns, z, sol.contributions, states, rng)
            ok = (tr.committed is not None and tr.committed_was_probed
                  and graph.weight[tr.committed] >= probe_threshold(z, sol.contributions.values[tr.committed[0]]))
        res.transcripts.append(tr)
        res.commit_values.append(float(graph.weight[tr.committed]) if tr.committed else 0.0)
        if ok and free[tr.committed[0]]:
            free[tr.committed[0]] = False
            res.matching.append(tr.committed)
            res.value += float(graph.weight[tr.committed])
    return res


def run_known_iid(instance: TypeGraphInstance, lp_mode: str = "colgen", rng: np.random.Generator | None = None,
                  solution: TupleSolution | None = None, state_factory=None) -> RunResult:
    """One run of the known i.i.d. algorithm; matching pairs are (u, round).

    `state_factory(t)` gives the edge-state source of round t.
    """
    g = instance.type_graph
    validate(g)
    rng = rng if rng is not None else np.random.default_rng()
    sol = solution if solution is not None else solve_known_iid(instance, lp_mode)
    scaled = [TupleColumn(c.online_vertex, c.tuple, c.value / instance.rates[c.online_vertex]) for c in sol.columns]
    if state_factory is None:
        state_rng = _child(rng)
        state_factory = lambda t: LazyStates(g.prob, state_rng)  # noqa: E731
    types = rng.choice(g.online_count, size=instance.horizon, p=instance.arrival_probs)
    free = np.ones(g.offline_count, dtype=bool)
    res = RunResult([], 0.0, arrivals=[int(v) for v in types])
    for t, v in enumerate(types):
        # each round sees fresh edge states, even for a repeated type
        tr = vertex_probe(g, int(v), scaled, state_factory(t), rng)
        res.transcripts.append(tr)
        res.commit_values.append(float(g.weight[tr.committed]) if tr.committed else 0.0)
        if tr.committed is not None and free[tr.committed[0]]:
            u = tr.committed[0]
            free[u] = False
            res.matching.append((u, t))
            res.value += float(g.weight[tr.committed])
    return res


def first_probed_step(n: int, alpha: float) -> int:
    """Smallest 1-based step t with t >= n * alpha (earlier arrivals are passed)."""
    t = 1
    while t < n * alpha:
        t += 1
    return t


class SubgraphSolver:
    """Tuple LP optima of induced subgraphs, keyed by the vertex set.

    The optimum for a given set is computed once on the subgraph with its
    vertices in increasing index order, so repeated sets reuse one solution.
    """

    def __init__(self, graph: StochasticGraph, lp_mode: str = "colgen", tol: float = 1e-9, max_entries: int = 200_000):
        self.graph = graph
        self.lp_mode = lp_mode
        self.tol = tol
        self.max_entries = max_entries
        self.memo: dict[frozenset, tuple[list[int], TupleSolution]] = {}

    def __call__(self, vertices) -> tuple[list[int], TupleSolution]:
        key = frozenset(int(v) for v in vertices)
        hit = self.memo.get(key)
        if hit is None:
            members = sorted(key)
            hit = (members, solve_known(induced_subgraph(self.graph, members), self.lp_mode, self.tol))
            if len(self.memo) < self.max_entries:
                self.memo[key] = hit
        return hit


def run_unknown_rom(graph: StochasticGraph, alpha: float = 1.0 / math.e, lp_mode: str = "colgen",
                    rng: np.random.Generator | None = None, solver: SubgraphSolver | None = None) -> RunResult:
    """One run without prior knowledge of the online side; arrivals in random order."""
    validate(graph)
    if not 0.0 <= alpha <= 1.0:
        raise AlgorithmError(f"alpha {alpha} outside [0, 1]")
    rng = rng if rng is not None else np.random.default_rng()
    solver = solver if solver is not None else SubgraphSolver(graph, lp_mode)
    n = graph.online_count
    state_rng = _child(rng)
    order = [int(v) for v in rng.permutation(n)]
    free = np.ones(graph.offline_count, dtype=bool)
    res = RunResult([], 0.0, arrivals=order)
    for t in range(1, n + 1):
        v = order[t - 1]
        if t < n * alpha:
            res.transcripts.append(None)
            res.lp_objective_trace.append(float("nan"))
            res.commit_values.append(0.0)
            continue
        members, sol = solver(order[:t])
        sub = induced_subgraph(graph, members)
        local = members.index(v)
        tr = vertex_probe(sub, local, sol.columns, LazyStates(sub.prob, state_rng), rng)
        res.lp_objective_trace.append(sol.objective)
        if tr.committed is not None:
            u = tr.committed[0]
            tr.committed = (u, v)
            res.commit_values.append(float(graph.weight[u, v]))
            if free[u]:
                free[u] = False
                res.matching.append((u, v))
                res.value += float(graph.weight[u, v])
        else:
            res.commit_values.append(0.0)
        tr.online_vertex = v
        tr.probes = [((u, v), s) for (u, _), s in tr.probes]
        res.transcripts.append(tr)
    return res


def check_run(instance, res: RunResult, tol: float = 1e-9) -> list[str]:
    """Violations of the run invariants (empty list when the run is valid).

    `instance` is the graph for `run_known`/`run_unknown_rom`, or the type-graph
    instance for `run_known_iid`, whose matching pairs are (u, round).
    """
    iid = isinstance(instance, TypeGraphInstance)
    w = instance.type_graph.weight if iid else instance.weight
    out = []
    us = [u for u, _ in res.matching]
    vs = [v for _, v in res.matching]
    if len(set(us)) != len(us) or len(set(vs)) != len(vs):
        out.append("not a matching")
    truly = set()
    for k, tr in enumerate(res.transcripts):
        if tr is None or tr.committed is None:
            continue
        if tr.committed_was_probed:
            if not tr.probes or tr.probes[-1] != (tr.committed, True):
                out.append(f"committed edge {tr.committed} is not the last active probe")
            truly.add((tr.committed[0], k) if iid else tr.committed)
    total = 0.0
    for u, v in res.matching:
        if (u, v) not in truly:
            out.append(f"matched edge {(u, v)} was not committed by a real probe")
        total += float(w[u, res.arrivals[v]] if iid else w[u, v])
    if abs(total - res.value) > tol * (1 + abs(total)):
        out.append("value differs from matched weight")
    return out


# ---------------------------------------------------------------------------
# vectorised trials


def simulate_known(graph: StochasticGraph, solution: TupleSolution, arrival: ArrivalModel, variant: str,
                   trials: int, rng: np.random.Generator) -> np.ndarray:
    """Matched value of `trials` independent runs of `run_known`'s rules."""
    m, n = graph.shape
    arrival.check(n)
    if variant == MODIFIED and arrival.kind != ROM:
        raise AlgorithmError("the threshold variant needs random-order arrivals")
    table = ColumnTable(graph, solution.columns)
    if arrival.kind == ADVERSARIAL:
        order = np.broadcast_to(np.asarray(arrival.order, dtype=np.int64), (trials, n))
        times = None
    else:
        times = rng.random((trials, n))
        order = np.argsort(times, axis=1, kind="stable")
    free = np.ones((trials, m), dtype=bool)
    value = np.zeros(trials)
    rows = np.arange(trials)
    c = solution.contributions.values
    for t in range(n):
        v = order[:, t]
        u, probed, chosen = batch_probe(graph, table, v, rng)
        hit = u >= 0
        uu = np.where(hit, u, 0)
        w = graph.weight[uu, v]
        if variant == MODIFIED:
            z = times[rows, v]
            # the committed entry was truly probed iff it cleared its threshold
            hit &= w >= (1.0 - np.exp(z - 1.0)) * c[uu]
        hit &= free[rows, uu]
        free[rows[hit], uu[hit]] = False
        value[hit] += w[hit]
    return value


def simulate_known_iid(instance: TypeGraphInstance, solution: TupleSolution, trials: int,
                       rng: np.random.Generator) -> np.ndarray:
    g = instance.type_graph
    m, ntypes = g.shape
    table = ColumnTable(g, solution.columns, scale=instance.rates)
    cdf = np.cumsum(instance.arrival_probs)
    cdf[-1] = 1.0
    free = np.ones((trials, m), dtype=bool)
    value = np.zeros(trials)
    rows = np.arange(trials)
    for _ in range(instance.horizon):
        v = np.searchsorted(cdf, rng.random(trials), side="right")
        v = np.minimum(v, ntypes - 1)
        u, _, _ = batch_probe(g, table, v, rng)
        hit = u >= 0
        uu = np.where(hit, u, 0)
        hit &= free[rows, uu]
        free[rows[hit], uu[hit]] = False
        value[hit] += g.weight[uu[hit], v[hit]]
    return value


def simulate_probe_marginals(graph: StochasticGraph, columns: Sequence[TupleColumn], v: int, trials: int,
                             rng: np.random.Generator):
    """Empirical per-offline probe and commit frequencies of one vertex over many trials."""
    table = ColumnTable(graph, columns)
    vv = np.full(trials, v, dtype=np.int64)
    u, probed, chosen = batch_probe(graph, table, vv, rng)
    m = graph.offline_count
    probe_counts = np.zeros(m)
    for i in range(table.depth):
        sel = chosen[probed[:, i], i]
        probe_counts += np.bincount(sel, minlength=m)
    commit_counts = np.bincount(u[u >= 0], minlength=m).astype(float)
    return probe_counts / trials, commit_counts / trials
