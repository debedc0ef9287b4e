"""Exact offline and online benchmark values on tiny instances.

All values are expectations of optimal adaptive probing policies, computed
by memoised recursion over bitmask-encoded states. Sizes are bounded by
`BenchmarkLimits`; the state spaces are exponential.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from typing import Sequence

import numpy as np

from . import _rng
from .graph import StochasticGraph, TypeGraphInstance, induced_subgraph, instantiate_iid, validate
from .pricing import star_sequence_dp

MEMO_CAP = 1 << 26
MAX_ORDERS_ONLINE = 6


class LimitError(ValueError):
    pass


@dataclass(frozen=True)
class BenchmarkLimits:
    max_offline: int = 4
    max_online: int = 3
    max_edges: int = 9
    max_patience: int = 3

    def check(self, graph: StochasticGraph):
        m, n = graph.shape
        edges = int(np.count_nonzero(graph.prob > 0))
        for name, have, cap in (("offline vertices", m, self.max_offline), ("online vertices", n, self.max_online),
                                ("edges", edges, self.max_edges),
                                ("patience", int(graph.patience.max()) if n else 0, self.max_patience)):
            if have > cap:
                raise LimitError(f"{name}: {have} exceeds limit {cap}")


DEFAULT_LIMITS = BenchmarkLimits()


def _edges(graph: StochasticGraph):
    m, n = graph.shape
    return [(u, v) for u in range(m) for v in range(n) if graph.prob[u, v] > 0.0]


class _Memo(dict):
    def put(self, key, value):
        if len(self) >= MEMO_CAP:
            raise LimitError(f"memo table exceeded {MEMO_CAP} entries")
        self[key] = value
        return value


def opt_committal_exact(graph: StochasticGraph, limits: BenchmarkLimits = DEFAULT_LIMITS) -> float:
    """Optimal adaptive committal value: a probed active edge is matched at once."""
    validate(graph)
    limits.check(graph)
    m, n = graph.shape
    edges = _edges(graph)
    p = [float(graph.prob[e]) for e in edges]
    w = [float(graph.weight[e]) for e in edges]
    eu = [u for u, _ in edges]
    ev = [v for _, v in edges]
    memo = _Memo()

    def value(free_u: int, free_v: int, failed: int, patience: tuple) -> float:
        key = (free_u, free_v, failed, patience)
        hit = memo.get(key)
        if hit is not None:
            return hit
        best = 0.0
        for k in range(len(edges)):
            u, v = eu[k], ev[k]
            if not (free_u >> u & 1 and free_v >> v & 1) or failed >> k & 1 or patience[v] == 0:
                continue
            nu, nv = free_u & ~(1 << u), free_v & ~(1 << v)
            # forget failures that can no longer matter once an endpoint is gone
            keep = failed
            for j in range(len(edges)):
                if keep >> j & 1 and not (nu >> eu[j] & 1 and nv >> ev[j] & 1):
                    keep &= ~(1 << j)
            win = w[k] + value(nu, nv, keep, patience)
            rest = list(patience)
            rest[v] -= 1
            lose = value(free_u, free_v, failed | 1 << k, tuple(rest))
            best = max(best, p[k] * win + (1.0 - p[k]) * lose)
        return memo.put(key, best)

    return value((1 << m) - 1, (1 << n) - 1, 0, tuple(int(x) for x in graph.patience))


def _mwm_factory(m: int, edges, weights):
    """Max-weight matching over a subset (bitmask) of `edges`, by enumeration."""
    by_u = [[k for k, (u, _) in enumerate(edges) if u == uu] for uu in range(m)]

    @lru_cache(maxsize=None)
    def mwm(active: int) -> float:
        def rec(u: int, used_v: int) -> float:
            if u == m:
                return 0.0
            best = rec(u + 1, used_v)
            for k in by_u[u]:
                v = edges[k][1]
                if active >> k & 1 and not used_v >> v & 1:
                    best = max(best, weights[k] + rec(u + 1, used_v | 1 << v))
            return best
        return rec(0, 0)

    return mwm


def opt_noncommittal_exact(graph: StochasticGraph, limits: BenchmarkLimits = DEFAULT_LIMITS) -> float:
    """Optimal adaptive value when the final matching is chosen after probing."""
    validate(graph)
    limits.check(graph)
    m, n = graph.shape
    edges = _edges(graph)
    p = [float(graph.prob[e]) for e in edges]
    w = [float(graph.weight[e]) for e in edges]
    ev = [v for _, v in edges]
    mwm = _mwm_factory(m, edges, w)
    memo = _Memo()

    def value(probed: int, active: int, patience: tuple) -> float:
        key = (probed, active)
        hit = memo.get(key)
        if hit is not None:
            return hit
        best = None
        for k in range(len(edges)):
            v = ev[k]
            if probed >> k & 1 or patience[v] == 0:
                continue
            rest = list(patience)
            rest[v] -= 1
            rest = tuple(rest)
            q = probed | 1 << k
            val = p[k] * value(q, active | 1 << k, rest) + (1.0 - p[k]) * value(q, active, rest)
            best = val if best is None else max(best, val)
        # another probe can only add active edges, so stopping early never helps
        return memo.put(key, mwm(active) if best is None else best)

    return value(0, 0, tuple(int(x) for x in graph.patience))


def opt_online_fixed_order(graph: StochasticGraph, order: Sequence[int],
                           limits: BenchmarkLimits = DEFAULT_LIMITS) -> float:
    """Best expected value of an online committal algorithm seeing arrivals in `order`."""
    validate(graph)
    limits.check(graph)
    m, n = graph.shape
    order = [int(v) for v in order]
    if sorted(order) != list(range(n)):
        raise ValueError(f"{order} is not a permutation of the online vertices")
    p, w = graph.prob, graph.weight

    @lru_cache(maxsize=None)
    def outer(t: int, avail: int) -> float:
        if t == n:
            return 0.0
        v = order[t]
        stay = outer(t + 1, avail)

        @lru_cache(maxsize=None)
        def star(tried: int, budget: int) -> float:
            best = stay
            if budget == 0:
                return best
            for u in range(m):
                if not avail >> u & 1 or tried >> u & 1 or p[u, v] <= 0.0:
                    continue
                val = p[u, v] * (w[u, v] + outer(t + 1, avail & ~(1 << u))) \
                    + (1.0 - p[u, v]) * star(tried | 1 << u, budget - 1)
                best = max(best, val)
            return best

        return star(0, int(graph.patience[v]))

    return float(outer(0, (1 << m) - 1))


def order_values(graph: StochasticGraph, limits: BenchmarkLimits = DEFAULT_LIMITS) -> dict[tuple[int, ...], float]:
    n = graph.online_count
    if n > MAX_ORDERS_ONLINE:
        raise LimitError(f"{n} online vertices: too many orders (limit {MAX_ORDERS_ONLINE})")
    return {pi: opt_online_fixed_order(graph, pi, limits) for pi in permutations(range(n))}


def order_gap(graph: StochasticGraph, limits: BenchmarkLimits = DEFAULT_LIMITS) -> float:
    vals = list(order_values(graph, limits).values())
    hi = max(vals)
    return 1.0 if hi == 0.0 else min(vals) / hi


def opt_star(graph: StochasticGraph, v: int, R: Sequence[int]) -> float:
    """Committal benchmark on the star between online vertex v and offline set R."""
    R = list(R)
    if not R:
        return 0.0
    return star_sequence_dp(graph.weight[R, v], graph.prob[R, v], int(graph.patience[v]))[0]


def star_oracle(graph: StochasticGraph, v: int, R) -> float:
    """Adapter with the (graph, v, R) signature expected by the dp formulation."""
    return opt_star(graph, v, R)


def opt_committal_iid_mc(instance: TypeGraphInstance, trials: int, seed: int,
                         limits: BenchmarkLimits = DEFAULT_LIMITS):
    """Monte Carlo average of the committal benchmark over instantiated graphs."""
    from .simulate import summarize

    if trials < 1:
        raise ValueError("trials must be >= 1")
    cache: dict[tuple[int, ...], float] = {}
    vals = np.empty(trials)
    for i in range(trials):
        inst = instantiate_iid(instance, _rng.derive_seed(seed, _rng.STREAM_TRIAL, i))
        # the committal benchmark ignores arrival order, so key on the multiset
        key = tuple(sorted(inst.arrivals))
        if key not in cache:
            cache[key] = opt_committal_exact(induced_subgraph(instance.type_graph, key), limits)
        vals[i] = cache[key]
    return summarize(vals, seed)
