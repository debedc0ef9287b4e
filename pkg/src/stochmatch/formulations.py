"""LP relaxations of the committal benchmark and the quantities derived from them.

Every builder returns a `LinearProgram` in <= form with labelled columns:

    std       ("x", u, v)
    std_non   ("x", u, v) then ("z", u, v)
    dp        ("x", u, v)
    std_iid   ("y", u, v)
    new       (v, tuple)            one column per ordered probe tuple
    new_iid   (v, tuple)
    new_dual  ("alpha", u) then ("beta", v)   (minimisation)
    rel       ("alpha", v, R) then ("z", u, v, R)
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Callable, Iterable, Sequence

import numpy as np

from .graph import GraphError, StochasticGraph, TypeGraphInstance
from .lp_solver import LinearProgram, LpSolution, solve

STD = "std"
NEW = "new"
NEW_DUAL = "new_dual"
STD_NON = "std_non"
REL = "rel"
DP = "dp"
STD_IID = "std_iid"
NEW_IID = "new_iid"
KINDS = (STD, NEW, NEW_DUAL, STD_NON, REL, DP, STD_IID, NEW_IID)
IID_KINDS = (STD_IID, NEW_IID)

DEFAULT_TUPLE_CAP = 200_000
REL_MAX_OFFLINE = 6
REL_MAX_PATIENCE = 3
DP_MAX_OFFLINE = 5


class FormulationError(ValueError):
    pass


@dataclass(frozen=True)
class TupleColumn:
    online_vertex: int
    tuple: tuple[int, ...]
    value: float = 0.0


@dataclass(frozen=True)
class EdgeVariables:
    values: np.ndarray


@dataclass(frozen=True)
class ContributionVector:
    values: np.ndarray

    @property
    def total(self) -> float:
        return float(self.values.sum())


# ---------------------------------------------------------------------------
# tuple coefficients


def g_coeff(graph: StochasticGraph, v: int, tup: Sequence[int], i: int) -> float:
    """Probability that position i (1-based) of `tup` is the first active edge at v."""
    if not 1 <= i <= len(tup):
        raise FormulationError(f"position {i} out of range for tuple of length {len(tup)}")
    if len(set(tup)) != len(tup):
        raise FormulationError(f"tuple {tuple(tup)} has duplicate entries")
    p = graph.prob[:, v]
    out = float(p[tup[i - 1]])
    for j in range(i - 1):
        out *= 1.0 - float(p[tup[j]])
    return out


def g_vector(probs: Sequence[float]) -> np.ndarray:
    """g coefficients of every position for a tuple with these edge probabilities."""
    probs = np.asarray(probs, dtype=float)
    survive = np.concatenate(([1.0], np.cumprod(1.0 - probs)[:-1])) if probs.size else probs
    return probs * survive


def tuple_value(graph: StochasticGraph, v: int, tup: Sequence[int]) -> float:
    idx = list(tup)
    return float(g_vector(graph.prob[idx, v]) @ graph.weight[idx, v])


def enumerate_tuples(graph: StochasticGraph, v: int) -> list[tuple[int, ...]]:
    """Ordered distinct tuples of live offline vertices, length 1..patience, by (length, lex)."""
    live = [u for u in range(graph.offline_count) if graph.prob[u, v] > 0.0]
    out = []
    for k in range(1, min(int(graph.patience[v]), len(live)) + 1):
        out.extend(permutations(live, k))
    return out


def count_tuples(graph: StochasticGraph) -> int:
    total = 0
    for v in range(graph.online_count):
        live = int(np.count_nonzero(graph.prob[:, v] > 0.0))
        term = 1
        for k in range(1, min(int(graph.patience[v]), live) + 1):
            term *= live - k + 1
            total += term
    return total


def tuple_master(graph: StochasticGraph, columns: Sequence[tuple[int, tuple[int, ...]]],
                 rates: np.ndarray | None = None) -> LinearProgram:
    """LP-new (or its rate-scaled variant) restricted to the given (v, tuple) columns.

    Rows: one capacity row per offline vertex, then one mass row per online vertex.
    """
    m, n = graph.shape
    c = np.zeros(len(columns))
    A = np.zeros((m + n, len(columns)))
    for j, (v, tup) in enumerate(columns):
        idx = list(tup)
        g = g_vector(graph.prob[idx, v])
        c[j] = g @ graph.weight[idx, v]
        A[idx, j] += g
        A[m + v, j] = 1.0
    b = np.concatenate((np.ones(m), np.ones(n) if rates is None else np.asarray(rates, dtype=float)))
    rows = [("cap", u) for u in range(m)] + [("mass", v) for v in range(n)]
    return LinearProgram(c, A, b, list(columns), rows)


# ---------------------------------------------------------------------------
# builders


def _std_like(graph: StochasticGraph, rates=None, oracle=None) -> LinearProgram:
    m, n = graph.shape
    p, w = graph.prob, graph.weight
    r = np.ones(n) if rates is None else np.asarray(rates, dtype=float)
    idx = lambda u, v: u * n + v  # noqa: E731
    c = (w * p).reshape(-1)
    rows, b, labels = [], [], []

    def add(coefs, bound, label):
        row = np.zeros(m * n)
        for (u, v), a in coefs:
            row[idx(u, v)] += a
        rows.append(row)
        b.append(bound)
        labels.append(label)

    for u in range(m):
        add((((u, v), p[u, v]) for v in range(n)), 1.0, ("cap", u))
    for v in range(n):
        add((((u, v), p[u, v]) for u in range(m)), r[v], ("match", v))
        add((((u, v), 1.0) for u in range(m)), r[v] * graph.patience[v], ("patience", v))
    if oracle is not None:
        for v in range(n):
            for k in range(1, m + 1):
                for R in combinations(range(m), k):
                    add((((u, v), w[u, v] * p[u, v]) for u in R), float(oracle(graph, v, R)), ("star", v, R))
    for u in range(m):
        for v in range(n):
            add([((u, v), 1.0)], r[v], ("ub", u, v))
    name = "y" if rates is not None else "x"
    cols = [(name, u, v) for u in range(m) for v in range(n)]
    A = np.array(rows) if rows else np.zeros((0, m * n))
    return LinearProgram(c, A, np.array(b), cols, labels)


def _std_non(graph: StochasticGraph) -> LinearProgram:
    m, n = graph.shape
    E = m * n
    c = np.concatenate((np.zeros(E), graph.weight.reshape(-1)))
    rows, b, labels = [], [], []
    for u in range(m):
        row = np.zeros(2 * E)
        row[E + u * n:E + (u + 1) * n] = 1.0
        rows.append(row); b.append(1.0); labels.append(("match_u", u))
    for v in range(n):
        row = np.zeros(2 * E)
        row[E + v:2 * E:n] = 1.0
        rows.append(row); b.append(1.0); labels.append(("match_v", v))
        row = np.zeros(2 * E)
        row[v:E:n] = 1.0
        rows.append(row); b.append(float(graph.patience[v])); labels.append(("patience", v))
    for u in range(m):
        for v in range(n):
            e = u * n + v
            row = np.zeros(2 * E)
            row[E + e] = 1.0
            row[e] = -graph.prob[u, v]
            rows.append(row); b.append(0.0); labels.append(("active", u, v))
            row = np.zeros(2 * E)
            row[e] = 1.0
            rows.append(row); b.append(1.0); labels.append(("ub", u, v))
    cols = [("x", u, v) for u in range(m) for v in range(n)] + [("z", u, v) for u in range(m) for v in range(n)]
    return LinearProgram(c, np.array(rows).reshape(-1, 2 * E), np.array(b), cols, labels)


def _all_tuple_columns(graph: StochasticGraph, cap: int) -> list[tuple[int, tuple[int, ...]]]:
    total = count_tuples(graph)
    if total > cap:
        raise FormulationError(f"tuple enumeration needs {total} columns, cap is {cap}")
    return [(v, t) for v in range(graph.online_count) for t in enumerate_tuples(graph, v)]


def _new_dual(graph: StochasticGraph, cap: int) -> LinearProgram:
    m, n = graph.shape
    cols = _all_tuple_columns(graph, cap)
    primal = tuple_master(graph, cols)
    # constraints beta_v + sum g alpha >= val, written as -(...) <= -val
    A = -primal.A.T
    b = -primal.objective
    labels = [("alpha", u) for u in range(m)] + [("beta", v) for v in range(n)]
    return LinearProgram(np.ones(m + n), A, b, labels, list(cols), sense="min")


def _rel(graph: StochasticGraph) -> LinearProgram:
    m, n = graph.shape
    if m > REL_MAX_OFFLINE or (n and int(graph.patience.max()) > REL_MAX_PATIENCE):
        raise FormulationError(
            f"rel needs |U| <= {REL_MAX_OFFLINE} and patience <= {REL_MAX_PATIENCE}")
    p, w = graph.prob, graph.weight
    alpha_cols, z_cols = [], []
    for v in range(n):
        for k in range(1, int(graph.patience[v]) + 1):
            for R in combinations(range(m), k):
                alpha_cols.append(("alpha", v, R))
                z_cols.extend(("z", u, v, R) for u in R)
    cols = alpha_cols + z_cols
    pos = {lab: j for j, lab in enumerate(cols)}
    c = np.zeros(len(cols))
    for lab in z_cols:
        c[pos[lab]] = w[lab[1], lab[2]]
    rows, b, labels = [], [], []
    for u in range(m):
        row = np.zeros(len(cols))
        for lab in z_cols:
            if lab[1] == u:
                row[pos[lab]] = 1.0
        rows.append(row); b.append(1.0); labels.append(("cap", u))
    for _, v, R in alpha_cols:
        for k in range(1, len(R) + 1):
            for S in combinations(R, k):
                row = np.zeros(len(cols))
                for u in S:
                    row[pos[("z", u, v, R)]] = 1.0
                row[pos[("alpha", v, R)]] = -(1.0 - float(np.prod(1.0 - p[list(S), v])))
                rows.append(row); b.append(0.0); labels.append(("subset", v, R, S))
    for v in range(n):
        row = np.zeros(len(cols))
        for lab in alpha_cols:
            if lab[1] == v:
                row[pos[lab]] = 1.0
        rows.append(row); b.append(1.0); labels.append(("mass", v))
    A = np.array(rows).reshape(-1, len(cols))
    return LinearProgram(c, A, np.array(b), cols, labels)


def build_formulation(kind: str, instance, aux: Callable | None = None,
                      cap: int = DEFAULT_TUPLE_CAP) -> LinearProgram:
    """Build the LP named by `kind` for `instance`.

    `aux` is the star benchmark oracle `aux(graph, v, R) -> float` required by
    kind "dp"; it is ignored otherwise.
    """
    if kind not in KINDS:
        raise FormulationError(f"unknown formulation {kind!r}")
    is_iid = isinstance(instance, TypeGraphInstance)
    if kind in IID_KINDS and not is_iid:
        raise FormulationError(f"{kind} needs a type-graph instance")
    if kind not in IID_KINDS and not isinstance(instance, StochasticGraph):
        raise FormulationError(f"{kind} needs a stochastic graph")
    if kind == STD:
        return _std_like(instance)
    if kind == STD_IID:
        return _std_like(instance.type_graph, rates=instance.rates)
    if kind == STD_NON:
        return _std_non(instance)
    if kind == DP:
        if aux is None:
            raise FormulationError("dp needs the star benchmark oracle")
        if instance.offline_count > DP_MAX_OFFLINE:
            raise FormulationError(f"dp enumerates all offline subsets; |U| <= {DP_MAX_OFFLINE} required")
        return _std_like(instance, oracle=aux)
    if kind == NEW:
        return tuple_master(instance, _all_tuple_columns(instance, cap))
    if kind == NEW_IID:
        g = instance.type_graph
        return tuple_master(g, _all_tuple_columns(g, cap), rates=instance.rates)
    if kind == NEW_DUAL:
        return _new_dual(instance, cap)
    return _rel(instance)


def solve_formulation(kind: str, instance, aux=None, tol: float = 1e-9, cap: int = DEFAULT_TUPLE_CAP):
    lp = build_formulation(kind, instance, aux, cap)
    return lp, solve(lp, tol)


# ---------------------------------------------------------------------------
# derived quantities


def tuple_columns(lp: LinearProgram, sol: LpSolution, eps: float = 0.0) -> list[TupleColumn]:
    """Positive tuple columns of a solved new/new_iid program."""
    out = []
    for (v, tup), val in zip(lp.column_labels, sol.primal):
        if val > eps:
            out.append(TupleColumn(v, tuple(tup), float(val)))
    return out


def edge_vars_from_solution(graph: StochasticGraph, columns: Iterable[TupleColumn],
                            rates=None, tol: float = 1e-7) -> EdgeVariables:
    m, n = graph.shape
    load = np.zeros((m, n))  # p * x~
    mass = np.zeros(n)
    for col in columns:
        v, tup = col.online_vertex, col.tuple
        if len(tup) > graph.patience[v] or len(set(tup)) != len(tup):
            raise FormulationError(f"column {col} violates patience or distinctness")
        if col.value < -tol:
            raise FormulationError(f"column {col} has negative value")
        load[list(tup), v] += g_vector(graph.prob[list(tup), v]) * col.value
        mass[v] += col.value
    bound = np.ones(n) if rates is None else np.asarray(rates, dtype=float)
    if np.any(mass > bound + tol):
        raise FormulationError("online mass constraint violated")
    if np.any(load.sum(axis=1) > 1.0 + tol):
        raise FormulationError("offline capacity constraint violated")
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(graph.prob > 0, load / np.where(graph.prob > 0, graph.prob, 1.0), 0.0)
    return EdgeVariables(x)


def contributions(graph: StochasticGraph, edge_vars: EdgeVariables) -> ContributionVector:
    return ContributionVector((graph.weight * graph.prob * edge_vars.values).sum(axis=1))
