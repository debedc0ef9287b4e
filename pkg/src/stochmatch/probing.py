"""Per-arrival probing: pick a tuple from an LP solution, probe it in order, commit.

Randomness comes from an explicit tape (`rng`): one uniform selects the
tuple against the cumulative column masses, and in the threshold variant
further uniforms supply the simulated Bernoulli draws. Edge states come from
a separate `state_source` so tests can couple runs on the same realisation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .formulations import ContributionVector, TupleColumn
from .graph import EdgeStateSample, StochasticGraph

MASS_TOL = 1e-7


class ProbeError(ValueError):
    pass


@dataclass
class ProbeTranscript:
    online_vertex: int
    chosen_tuple: tuple[int, ...] | None = None
    probes: list = field(default_factory=list)      # ((u, v), active)
    simulated: list = field(default_factory=list)   # ((u, v), draw)
    committed: tuple[int, int] | None = None
    committed_was_probed: bool = False


class FixedStates:
    """Edge states read from a pre-drawn sample."""

    def __init__(self, sample: EdgeStateSample):
        self.sample = sample

    def state(self, u: int, v: int) -> bool:
        return bool(self.sample.state[u, v])


class LazyStates:
    """Edge states drawn on first access and remembered for the rest of the run."""

    def __init__(self, prob: np.ndarray, rng: np.random.Generator):
        self.prob = prob
        self.rng = rng
        self.memo: dict[tuple[int, int], bool] = {}

    def state(self, u: int, v: int) -> bool:
        key = (u, v)
        if key not in self.memo:
            self.memo[key] = bool(self.rng.random() < self.prob[u, v])
        return self.memo[key]


def _select(v: int, columns: Sequence[TupleColumn], rng: np.random.Generator):
    cols = [c for c in columns if c.online_vertex == v]
    total = sum(c.value for c in cols)
    if total > 1.0 + MASS_TOL:
        raise ProbeError(f"column mass {total} at vertex {v} exceeds 1")
    draw = rng.random()
    acc = 0.0
    for c in cols:
        acc += c.value
        if draw < acc:
            return c.tuple
    return None


def vertex_probe(graph: StochasticGraph, v: int, columns: Sequence[TupleColumn],
                 state_source, rng: np.random.Generator) -> ProbeTranscript:
    tr = ProbeTranscript(v)
    tup = _select(v, columns, rng)
    tr.chosen_tuple = tup
    if tup is None:
        return tr
    if len(tup) > graph.patience[v]:
        raise ProbeError(f"tuple {tup} exceeds patience {graph.patience[v]} of vertex {v}")
    for u in tup:
        active = state_source.state(u, v)
        tr.probes.append(((u, v), active))
        if active:
            tr.committed = (u, v)
            tr.committed_was_probed = True
            break
    return tr


def probe_threshold(z: float, c_u: float) -> float:
    return (1.0 - math.exp(z - 1.0)) * c_u


def vertex_probe_s(graph: StochasticGraph, v: int, columns: Sequence[TupleColumn], z: float,
                   contributions: ContributionVector, state_source, rng: np.random.Generator) -> ProbeTranscript:
    """Like `vertex_probe`, but entries below the arrival-time threshold are only simulated."""
    if not 0.0 <= z <= 1.0:
        raise ProbeError(f"arrival time {z} outside [0, 1]")
    tr = ProbeTranscript(v)
    tup = _select(v, columns, rng)
    tr.chosen_tuple = tup
    if tup is None:
        return tr
    if len(tup) > graph.patience[v]:
        raise ProbeError(f"tuple {tup} exceeds patience {graph.patience[v]} of vertex {v}")
    c = contributions.values
    for u in tup:
        if graph.weight[u, v] >= probe_threshold(z, c[u]):
            active = state_source.state(u, v)
            tr.probes.append(((u, v), active))
            real = True
        else:
            active = bool(rng.random() < graph.prob[u, v])
            tr.simulated.append(((u, v), active))
            real = False
        if active:
            tr.committed = (u, v)
            tr.committed_was_probed = real
            break
    return tr


# ---------------------------------------------------------------------------
# vectorised form for Monte Carlo


class ColumnTable:
    """Padded per-vertex tuple table for drawing many probes at once.

    `cum[v, j]` is the cumulative mass of the first j+1 columns of v (padded
    with +inf); `tuples[v, j, i]` is the i-th entry of column j (padded with -1),
    and row `tuples[v, count[v]]` is all -1 so a pass needs no special case.
    """

    def __init__(self, graph: StochasticGraph, columns: Sequence[TupleColumn], scale=None):
        n = graph.online_count
        per_v: list[list[TupleColumn]] = [[] for _ in range(n)]
        for c in columns:
            per_v[c.online_vertex].append(c)
        width = max((len(col) for col in per_v), default=0)
        depth = max((len(c.tuple) for c in columns), default=0)
        self.cum = np.full((n, width), np.inf)
        self.tuples = np.full((n, width + 1, max(depth, 1)), -1, dtype=np.int64)
        self.count = np.zeros(n, dtype=np.int64)
        for v, cols in enumerate(per_v):
            s = 1.0 if scale is None else float(scale[v])
            mass = np.cumsum([c.value / s for c in cols])
            if mass.size and mass[-1] > 1.0 + MASS_TOL:
                raise ProbeError(f"column mass {mass[-1]} at vertex {v} exceeds 1")
            self.cum[v, :mass.size] = mass
            self.count[v] = len(cols)
            for j, c in enumerate(cols):
                self.tuples[v, j, :len(c.tuple)] = c.tuple
        self.depth = self.tuples.shape[2]

    def draw(self, v: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Chosen tuples (rows of length depth, -1 padded) for arrivals v with selection uniforms x."""
        j = (self.cum[v] <= x[:, None]).sum(axis=1) if self.cum.shape[1] else np.zeros(v.size, dtype=np.int64)
        return self.tuples[v, j]


def batch_probe(graph: StochasticGraph, table: ColumnTable, v: np.ndarray, rng: np.random.Generator):
    """Probe one arrival per trial; returns (committed u or -1, per-position probe mask)."""
    k = v.size
    chosen = table.draw(v, rng.random(k))
    coin = rng.random((k, table.depth))
    committed = np.full(k, -1, dtype=np.int64)
    probed = np.zeros((k, table.depth), dtype=bool)
    open_ = np.ones(k, dtype=bool)
    for i in range(table.depth):
        u = chosen[:, i]
        live = open_ & (u >= 0)
        probed[:, i] = live
        uu = np.where(live, u, 0)
        hit = live & (coin[:, i] < graph.prob[uu, v])
        committed[hit] = u[hit]
        open_ &= ~hit
    return committed, probed, chosen
