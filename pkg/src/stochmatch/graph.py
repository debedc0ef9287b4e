"""Stochastic bipartite graphs, i.i.d. type graphs and their fixtures.

Edges are dense: every pair (u, v) exists, and a missing edge is simply one
with probability 0. Offline vertices are indexed by rows, online vertices by
columns.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _rng

EDGE_WEIGHTED = "edge_weighted"
VERTEX_WEIGHTED = "offline_vertex_weighted"
UNWEIGHTED = "unweighted"
WEIGHT_MODES = (EDGE_WEIGHTED, VERTEX_WEIGHTED, UNWEIGHTED)


class GraphError(ValueError):
    """An instance violates one of the model invariants."""


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StochasticGraph:
    prob: np.ndarray
    weight: np.ndarray
    patience: np.ndarray
    weight_mode: str = EDGE_WEIGHTED

    def __post_init__(self):
        prob = np.asarray(self.prob, dtype=float)
        if prob.ndim != 2:
            raise GraphError("probabilities must form a |U| x |V| matrix")
        object.__setattr__(self, "prob", _frozen(prob, float))
        object.__setattr__(self, "weight", _frozen(self.weight, float))
        object.__setattr__(self, "patience", _frozen(np.asarray(self.patience, dtype=np.int64).reshape(-1), np.int64))

    @property
    def offline_count(self) -> int:
        return self.prob.shape[0]

    @property
    def online_count(self) -> int:
        return self.prob.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.prob.shape

    def __eq__(self, other):
        if not isinstance(other, StochasticGraph):
            return NotImplemented
        return (
            self.weight_mode == other.weight_mode
            and self.prob.shape == other.prob.shape
            and np.array_equal(self.prob, other.prob)
            and np.array_equal(self.weight, other.weight)
            and np.array_equal(self.patience, other.patience)
        )

    def __hash__(self):
        return hash((self.weight_mode, self.prob.tobytes(), self.weight.tobytes(), self.patience.tobytes(), self.prob.shape))

    def __repr__(self):
        return f"StochasticGraph({self.offline_count}x{self.online_count}, {self.weight_mode})"


def make_graph(prob, weight=None, patience=None, weight_mode: str = EDGE_WEIGHTED) -> StochasticGraph:
    """Build and validate a graph. Weights default to 1, patience to |U|."""
    prob = np.atleast_2d(np.asarray(prob, dtype=float))
    if weight is None:
        weight = np.ones_like(prob)
    if patience is None:
        patience = np.full(prob.shape[1], prob.shape[0], dtype=np.int64)
    elif np.isscalar(patience):
        patience = np.full(prob.shape[1], int(patience), dtype=np.int64)
    g = StochasticGraph(prob, np.asarray(weight, dtype=float), patience, weight_mode)
    validate(g)
    return g


def validate(graph: StochasticGraph) -> None:
    """Raise GraphError naming the first violated invariant."""
    p, w, ell = graph.prob, graph.weight, graph.patience
    if graph.weight_mode not in WEIGHT_MODES:
        raise GraphError(f"unknown weight mode {graph.weight_mode!r}")
    if w.shape != p.shape or ell.shape != (p.shape[1],):
        raise GraphError("dimension mismatch between probabilities, weights and patience")
    if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise GraphError("probability out of range")
    if not np.all(np.isfinite(w)):
        raise GraphError("non-finite weight")
    if np.any(w < 0):
        raise GraphError("negative weight")
    if np.any(ell < 0) or np.any(ell > graph.offline_count):
        raise GraphError("patience out of range")
    if graph.weight_mode == VERTEX_WEIGHTED and p.shape[1] > 1:
        if np.any(w != w[:, :1]):
            raise GraphError("weight-mode inconsistency: offline_vertex_weighted needs w[u][v] constant in v")
    if graph.weight_mode == UNWEIGHTED and np.any(w != 1.0):
        raise GraphError("weight-mode inconsistency: unweighted graph must have all weights 1")


def induced_subgraph(graph: StochasticGraph, online_subset: Sequence[int]) -> StochasticGraph:
    idx = np.asarray(list(online_subset), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= graph.online_count):
        raise GraphError("online index out of range")
    return StochasticGraph(graph.prob[:, idx], graph.weight[:, idx], graph.patience[idx], graph.weight_mode)


@dataclass(frozen=True, eq=False)
class EdgeStateSample:
    state: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "state", _frozen(self.state, bool))

    def __getitem__(self, uv):
        return bool(self.state[uv])


def sample_states(graph: StochasticGraph, seed: int) -> EdgeStateSample:
    """Independent Bernoulli(p[u][v]) edge states; edge (u, v) uses its own counter."""
    return EdgeStateSample(sample_states_many(graph, [seed])[0])


def sample_states_many(graph: StochasticGraph, seeds) -> np.ndarray:
    """Edge states for many seeds at once, shape (len(seeds), |U|, |V|).

    Row k equals `sample_states(graph, seeds[k]).state` bit for bit.
    """
    m, n = graph.shape
    seeds = np.asarray(seeds, dtype=np.int64).reshape(-1, 1, 1)
    uu, vv = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    draws = _rng.hashed_uniform_array(seeds, _rng.STREAM_EDGE, uu[None], vv[None])
    return draws < graph.prob[None]


# ---------------------------------------------------------------------------
# known i.i.d. model


@dataclass(frozen=True, eq=False)
class TypeGraphInstance:
    type_graph: StochasticGraph
    rates: np.ndarray
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "rates", _frozen(np.asarray(self.rates, dtype=float).reshape(-1), float))
        object.__setattr__(self, "horizon", int(self.horizon))

    @property
    def arrival_probs(self) -> np.ndarray:
        return self.rates / self.rates.sum()

    def __eq__(self, other):
        if not isinstance(other, TypeGraphInstance):
            return NotImplemented
        return (self.type_graph == other.type_graph and self.horizon == other.horizon
                and np.array_equal(self.rates, other.rates))

    def __hash__(self):
        return hash((self.type_graph, self.rates.tobytes(), self.horizon))


RATE_TOL = 1e-9


def make_type_instance(type_graph: StochasticGraph, rates, horizon: int) -> TypeGraphInstance:
    """Validate and build an i.i.d. input; rates within 1e-9 of summing to n are renormalised."""
    validate(type_graph)
    rates = np.asarray(rates, dtype=float).reshape(-1)
    if horizon < 1:
        raise GraphError("horizon must be >= 1")
    if rates.shape != (type_graph.online_count,):
        raise GraphError("one arrival rate per type node required")
    if np.any(~np.isfinite(rates)) or np.any(rates <= 0):
        raise GraphError("arrival rates must be positive")
    total = rates.sum()
    if abs(total - horizon) > RATE_TOL:
        raise GraphError(f"arrival rates sum to {total!r}, expected horizon {horizon}")
    if total != horizon:
        rates = rates * (horizon / total)
    return TypeGraphInstance(type_graph, rates, horizon)


@dataclass(frozen=True)
class InstantiatedGraph:
    instance: TypeGraphInstance
    arrivals: tuple[int, ...]

    @property
    def graph(self) -> StochasticGraph:
        """The instantiated graph: one online column per arrival, in arrival order."""
        return induced_subgraph(self.instance.type_graph, self.arrivals)


def _arrival_cuts(instance: TypeGraphInstance) -> np.ndarray:
    cdf = np.cumsum(instance.arrival_probs)
    cdf[-1] = 1.0
    return cdf


def instantiate_iid(instance: TypeGraphInstance, seed: int) -> InstantiatedGraph:
    """Round t draws its type from its own counter, so prefixes agree across horizons."""
    cuts = _arrival_cuts(instance).tolist()
    arrivals = []
    for t in range(instance.horizon):
        x = _rng.hashed_uniform(seed, _rng.STREAM_ARRIVAL, t)
        k = 0
        while cuts[k] <= x:
            k += 1
        arrivals.append(k)
    return InstantiatedGraph(instance, tuple(arrivals))


def instantiate_iid_many(instance: TypeGraphInstance, seeds) -> np.ndarray:
    """Arrival sequences for many seeds, shape (len(seeds), n); row k matches `instantiate_iid`."""
    seeds = np.asarray(seeds, dtype=np.int64).reshape(-1, 1)
    x = _rng.hashed_uniform_array(seeds, _rng.STREAM_ARRIVAL, np.arange(instance.horizon)[None])
    return np.searchsorted(_arrival_cuts(instance), x, side="right")


# ---------------------------------------------------------------------------
# fixtures


def named_example(name: str, param: float | None = None):
    """Named instances used by the worked examples and acceptance checks.

    `stochasticity_gap(n)`: G_{n,n,1/n}, full patience, unweighted.
    `order_gap`: 2x2 unit patience instance with order gap 0.8.
    `half_rom(eps)`: one offline vertex, two online arrivals, tight 1/2 ROM instance.
    `single_offline(n)`: one offline vertex, n unit-patience arrivals with p = 1/n.
    `noncommittal_gap`: one online vertex of patience 2 against three offline vertices.
    """
    key = name.replace("-", "_")
    if key == "stochasticity_gap":
        n = _int_param(param, name)
        return make_graph(np.full((n, n), 1.0 / n), patience=n, weight_mode=UNWEIGHTED)
    if key == "order_gap":
        p = [[0.5, 0.0], [1.0, 0.5]]
        return make_graph(p, patience=1, weight_mode=UNWEIGHTED)
    if key == "half_rom":
        eps = 0.1 if param is None else float(param)
        if not 0.0 < eps < 1.0:
            raise GraphError("half_rom needs eps in (0, 1)")
        p = [[eps, 1.0 - eps]]
        w = [[1.0 / eps, eps / (1.0 - eps)]]
        return make_graph(p, w, patience=1, weight_mode=EDGE_WEIGHTED)
    if key == "single_offline":
        n = _int_param(param, name)
        return make_graph(np.full((1, n), 1.0 / n), patience=1, weight_mode=UNWEIGHTED)
    if key == "noncommittal_gap":
        p = [[0.8], [0.6], [0.01]]
        w = [[3.0], [4.0], [98.0]]
        return make_graph(p, w, patience=2, weight_mode=EDGE_WEIGHTED)
    raise GraphError(f"unknown example {name!r}")


def _int_param(param, name) -> int:
    if param is None:
        raise GraphError(f"{name} needs an integer parameter n")
    n = int(param)
    if n != param or n < 1:
        raise GraphError(f"{name} needs n >= 1, got {param!r}")
    return n


def random_graph(rng: np.random.Generator, offline: int, online: int, max_patience: int | None = None,
                 weight_mode: str = EDGE_WEIGHTED, sparsity: float = 0.0) -> StochasticGraph:
    """Random instance for property checks. `sparsity` is the chance an edge gets p = 0."""
    p = rng.uniform(0.05, 1.0, size=(offline, online))
    if sparsity > 0:
        p[rng.random((offline, online)) < sparsity] = 0.0
    if weight_mode == EDGE_WEIGHTED:
        w = rng.uniform(0.1, 5.0, size=(offline, online))
    elif weight_mode == VERTEX_WEIGHTED:
        w = np.repeat(rng.uniform(0.1, 5.0, size=(offline, 1)), online, axis=1)
    else:
        w = np.ones((offline, online))
    top = offline if max_patience is None else min(max_patience, offline)
    ell = rng.integers(1, top + 1, size=online) if offline > 0 else np.zeros(online, dtype=np.int64)
    return make_graph(p, w, ell, weight_mode)


def random_type_instance(rng: np.random.Generator, offline: int, types: int, horizon: int,
                         max_patience: int | None = None, weight_mode: str = EDGE_WEIGHTED) -> TypeGraphInstance:
    g = random_graph(rng, offline, types, max_patience, weight_mode)
    raw = rng.uniform(0.2, 1.0, size=types)
    rates = raw * (horizon / raw.sum())
    return make_type_instance(g, rates, horizon)


# ---------------------------------------------------------------------------
# JSON


def graph_to_dict(graph: StochasticGraph) -> dict:
    edges = []
    m, n = graph.shape
    for u in range(m):
        listed = False
        for v in range(n):
            p, w = float(graph.prob[u, v]), float(graph.weight[u, v])
            if p != 0.0 or _needs_weight(graph, u, v, listed):
                edges.append({"u": u, "v": v, "p": p, "w": w})
                listed = True
    return {
        "offline": m,
        "online": n,
        "patience": [int(x) for x in graph.patience],
        "weight_mode": graph.weight_mode,
        "edges": edges,
    }


def _needs_weight(graph, u, v, listed) -> bool:
    w = float(graph.weight[u, v])
    if graph.weight_mode == EDGE_WEIGHTED:
        return w != 0.0
    if graph.weight_mode == VERTEX_WEIGHTED:
        # one entry carries the vertex weight when u has no live edge
        return not listed and w != 0.0 and not np.any(graph.prob[u] != 0.0)
    return False


def graph_from_dict(d: dict) -> StochasticGraph:
    try:
        m, n = int(d["offline"]), int(d["online"])
        mode = d.get("weight_mode", EDGE_WEIGHTED)
        patience = d["patience"]
        edges = d.get("edges", [])
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed graph document: {exc}") from None
    if mode not in WEIGHT_MODES:
        raise GraphError(f"unknown weight mode {mode!r}")
    p = np.zeros((m, n))
    w = np.ones((m, n)) if mode == UNWEIGHTED else np.zeros((m, n))
    vertex_w = {}
    for e in edges:
        u, v = int(e["u"]), int(e["v"])
        if not (0 <= u < m and 0 <= v < n):
            raise GraphError(f"edge ({u}, {v}) out of range")
        p[u, v] = float(e.get("p", 0.0))
        if "w" in e:
            w[u, v] = float(e["w"])
            vertex_w.setdefault(u, float(e["w"]))
    if mode == VERTEX_WEIGHTED:
        for u, wu in vertex_w.items():
            w[u, :] = wu
    g = StochasticGraph(p, w, patience, mode)
    if len(g.patience) != n:
        raise GraphError("patience list length must equal the online count")
    validate(g)
    return g


def instance_to_dict(instance: TypeGraphInstance) -> dict:
    d = graph_to_dict(instance.type_graph)
    d["rates"] = [float(r) for r in instance.rates]
    d["horizon"] = instance.horizon
    return d


def instance_from_dict(d: dict) -> TypeGraphInstance:
    g = graph_from_dict(d)
    return make_type_instance(g, d["rates"], int(d["horizon"]))


def dumps(obj) -> str:
    if isinstance(obj, TypeGraphInstance):
        return json.dumps(instance_to_dict(obj))
    return json.dumps(graph_to_dict(obj))


def loads(text: str):
    """Decode a graph or, when rates/horizon are present, a type-graph instance."""
    d = json.loads(text)
    if "rates" in d or "horizon" in d:
        return instance_from_dict(d)
    return graph_from_dict(d)


def load(path) -> StochasticGraph | TypeGraphInstance:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def save(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))
        fh.write("\n")
