"""Best ordered probe tuple at a single online vertex, and column generation.

For a star with item weights w_i and activity probabilities p_i, the value of
probing a tuple in order and stopping at the first active edge is
    sum_i w_{u_i} p_{u_i} prod_{j<i} (1 - p_{u_j}).
For a fixed set of items the best order is by decreasing weight, so the
maximisation reduces to choosing a subset of the weight-sorted list, which a
knapsack-style recursion over (position, remaining budget) solves exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .formulations import (DEFAULT_TUPLE_CAP, EdgeVariables, FormulationError, TupleColumn,
                           edge_vars_from_solution, tuple_master)
from .graph import StochasticGraph, TypeGraphInstance
from .lp_solver import LpError, solve

VIOLATION_TOL = 1e-8
DEFAULT_COLUMN_CAP = 100_000


class PricingError(RuntimeError):
    pass


@dataclass
class PricingProblem:
    adjusted_weights: np.ndarray
    probs: np.ndarray
    budget: int
    threshold: float = 0.0


def star_sequence_dp(weights: Sequence[float], probs: Sequence[float], budget: int) -> tuple[float, tuple[int, ...]]:
    """Maximum expected first-active weight over ordered tuples of length <= budget."""
    w = np.asarray(weights, dtype=float).reshape(-1)
    p = np.asarray(probs, dtype=float).reshape(-1)
    if w.shape != p.shape:
        raise ValueError(f"length mismatch: {w.size} weights, {p.size} probabilities")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    # drop items that can only hurt, then sort by weight (ties by index)
    items = [i for i in range(w.size) if w[i] > 0.0 and p[i] > 0.0]
    items.sort(key=lambda i: (-w[i], i))
    L = len(items)
    K = min(budget, L)
    if K == 0:
        return 0.0, ()
    f = np.zeros((L + 1, K + 1))
    take = np.zeros((L, K + 1), dtype=bool)
    for pos in range(L - 1, -1, -1):
        i = items[pos]
        for k in range(1, K + 1):
            skip = f[pos + 1, k]
            val = p[i] * w[i] + (1.0 - p[i]) * f[pos + 1, k - 1]
            if val > skip:
                f[pos, k] = val
                take[pos, k] = True
            else:
                f[pos, k] = skip
    chosen = []
    k = K
    for pos in range(L):
        if k == 0:
            break
        if take[pos, k]:
            chosen.append(items[pos])
            k -= 1
    return float(f[0, K]), tuple(chosen)


def solve_pricing(problem: PricingProblem) -> tuple[float, tuple[int, ...]]:
    return star_sequence_dp(problem.adjusted_weights, problem.probs, problem.budget)


def separation_oracle(graph: StochasticGraph, alpha, beta, rate_scale=None,
                      tol: float = VIOLATION_TOL) -> TupleColumn | None:
    """First online vertex whose best tuple prices out positively, or None.

    With `rate_scale`, `beta` is read per unit of arrival rate and the threshold
    for vertex v becomes beta[v] * rate_scale[v].
    """
    m, n = graph.shape
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if alpha.size != m or beta.size != n:
        raise ValueError(f"dual dimension mismatch: expected ({m}, {n}), got ({alpha.size}, {beta.size})")
    thresh = beta if rate_scale is None else beta * np.asarray(rate_scale, dtype=float)
    for v in range(n):
        problem = PricingProblem(graph.weight[:, v] - alpha, graph.prob[:, v], int(graph.patience[v]), thresh[v])
        best, tup = solve_pricing(problem)
        if tup and best > problem.threshold + tol:
            return TupleColumn(v, tup, best)
    return None


@dataclass
class ColumnGenerationResult:
    objective: float
    columns: list[TupleColumn]
    edge_vars: EdgeVariables
    alpha: np.ndarray
    beta: np.ndarray
    history: list[float] = field(default_factory=list)
    column_pool: list[tuple[int, tuple[int, ...]]] = field(default_factory=list)


def _initial_columns(graph: StochasticGraph) -> list[tuple[int, tuple[int, ...]]]:
    cols = []
    for v in range(graph.online_count):
        if graph.patience[v] < 1:
            continue
        score = graph.weight[:, v] * graph.prob[:, v]
        if score.size and score.max() > 0.0:
            cols.append((v, (int(np.argmax(score)),)))
    return cols


def column_generation_solve(instance, kind: str = "new", tol: float = 1e-9,
                            max_columns: int = DEFAULT_COLUMN_CAP) -> ColumnGenerationResult:
    """Solve LP-new (kind "new") or its i.i.d. variant (kind "new_iid") by pricing."""
    if kind == "new":
        if not isinstance(instance, StochasticGraph):
            raise FormulationError("new needs a stochastic graph")
        graph, rates = instance, None
    elif kind == "new_iid":
        if not isinstance(instance, TypeGraphInstance):
            raise FormulationError("new_iid needs a type-graph instance")
        graph, rates = instance.type_graph, instance.rates
    else:
        raise FormulationError(f"column generation does not handle {kind!r}")
    m, n = graph.shape
    pool = _initial_columns(graph)
    seen = set(pool)
    history = []
    while True:
        lp = tuple_master(graph, pool, rates)
        sol = solve(lp, tol)
        if not sol.optimal:
            raise LpError(f"restricted master returned {sol.status}")
        history.append(sol.objective_value)
        alpha, beta = sol.duals[:m], sol.duals[m:]
        col = separation_oracle(graph, alpha, beta)
        if col is None:
            break
        key = (col.online_vertex, col.tuple)
        if key in seen:
            # reduced cost positive for a column already in the basis pool means numerical trouble
            raise PricingError(f"pricing returned existing column {key}; tolerance too tight")
        if len(pool) >= max_columns:
            raise PricingError(f"column generation exceeded {max_columns} columns")
        pool.append(key)
        seen.add(key)
    columns = [TupleColumn(v, t, float(x)) for (v, t), x in zip(pool, sol.primal) if x > 0.0]
    ev = edge_vars_from_solution(graph, columns, rates)
    return ColumnGenerationResult(sol.objective_value, columns, ev, alpha, beta, history, pool)


def solve_tuple_lp(instance, kind: str = "new", lp_mode: str = "colgen", tol: float = 1e-9,
                   cap: int = DEFAULT_TUPLE_CAP) -> tuple[float, list[TupleColumn], EdgeVariables]:
    """LP-new / LP-new-iid optimum with its positive columns, by pricing or by enumeration."""
    if lp_mode in ("colgen", "column_generation"):
        res = column_generation_solve(instance, kind, tol)
        return res.objective, res.columns, res.edge_vars
    if lp_mode not in ("enum", "enumerated"):
        raise ValueError(f"unknown lp mode {lp_mode!r}")
    from .formulations import build_formulation, tuple_columns
    lp = build_formulation(kind, instance, cap=cap)
    sol = solve(lp, tol)
    if not sol.optimal:
        raise LpError(f"tuple LP returned {sol.status}")
    graph = instance if kind == "new" else instance.type_graph
    rates = None if kind == "new" else instance.rates
    cols = tuple_columns(lp, sol)
    return sol.objective_value, cols, edge_vars_from_solution(graph, cols, rates)
