"""Dense two-phase primal simplex for small programs.

Solves  maximize c.x  s.t.  A x <= b,  x >= 0  (or minimize, via `sense`)
and returns primal values together with the row duals. Bland's rule is used
for both the entering and leaving choice, so the method terminates on
degenerate programs and is deterministic for a fixed input.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpError(ValueError):
    pass


@dataclass
class LinearProgram:
    """Rows are (coefficients, bound) pairs with <= semantics.

    `objective` and each row may be given densely; `A`/`b` are materialised
    on construction. `sense` is "max" or "min".
    """

    objective: np.ndarray
    A: np.ndarray
    b: np.ndarray
    column_labels: list = field(default_factory=list)
    row_labels: list = field(default_factory=list)
    sense: str = "max"

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
        n = self.objective.size
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        A = np.asarray(self.A, dtype=float)
        self.A = A.reshape(-1, n) if A.size else np.zeros((self.b.size, n))
        if not self.column_labels:
            self.column_labels = list(range(n))
        if not self.row_labels:
            self.row_labels = list(range(self.A.shape[0]))

    @classmethod
    def from_rows(cls, objective, rows: Sequence[tuple[dict | Sequence[float], float]],
                  column_labels=None, row_labels=None, sense="max") -> "LinearProgram":
        c = np.asarray(objective, dtype=float)
        A = np.zeros((len(rows), c.size))
        b = np.zeros(len(rows))
        for i, (coef, bound) in enumerate(rows):
            if isinstance(coef, dict):
                for j, a in coef.items():
                    A[i, j] += a
            else:
                A[i] = coef
            b[i] = bound
        return cls(c, A, b, list(column_labels or []), list(row_labels or []), sense)

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]


@dataclass
class LpSolution:
    status: str
    primal: np.ndarray
    duals: np.ndarray
    objective_value: float
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _check(lp: LinearProgram):
    if lp.A.shape != (lp.b.size, lp.objective.size):
        raise LpError(f"dimension mismatch: A is {lp.A.shape}, b has {lp.b.size}, c has {lp.objective.size}")
    for name, arr in (("objective", lp.objective), ("A", lp.A), ("b", lp.b)):
        if not np.all(np.isfinite(arr)):
            raise LpError(f"non-finite entries in {name}")
    if lp.sense not in ("max", "min"):
        raise LpError(f"unknown sense {lp.sense!r}")


class _Tableau:
    """Rows 0..m-1 are constraints, row m holds reduced costs, last column the rhs."""

    def __init__(self, T: np.ndarray, basis: list[int], tol: float, max_iter: int):
        self.T = T
        self.basis = basis
        self.tol = tol
        self.max_iter = max_iter
        self.iterations = 0

    def pivot(self, i: int, j: int):
        T = self.T
        T[i] /= T[i, j]
        col = T[:, j].copy()
        col[i] = 0.0
        T -= np.outer(col, T[i])
        self.basis[i] = j

    def run(self, allowed: int) -> str:
        """Optimise over the first `allowed` columns; returns OPTIMAL or UNBOUNDED."""
        T, tol = self.T, self.tol
        m = T.shape[0] - 1
        while True:
            cand = np.flatnonzero(T[m, :allowed] > tol)
            if cand.size == 0:
                return OPTIMAL
            j = int(cand[0])
            colj = T[:m, j]
            rows = np.flatnonzero(colj > tol)
            if rows.size == 0:
                return UNBOUNDED
            ratios = T[rows, -1] / colj[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol * (1.0 + abs(best))]
            i = int(min(ties, key=lambda r: self.basis[r]))
            self.pivot(i, j)
            self.iterations += 1
            if self.iterations > self.max_iter:
                raise LpError(f"simplex exceeded {self.max_iter} pivots")


def solve(lp: LinearProgram, tol: float = 1e-9, max_iter: int = 200_000) -> LpSolution:
    """Solve `lp`; duals are reported for the maximisation form (y >= 0)."""
    if tol <= 0:
        raise LpError("tol must be positive")
    _check(lp)
    c = lp.objective if lp.sense == "max" else -lp.objective
    A, b = lp.A, lp.b
    m, n = A.shape
    neg = b < 0
    n_art = int(neg.sum())
    width = n + m + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[:m][neg] *= -1.0
    basis = list(range(n, n + m))
    art_rows = np.flatnonzero(neg)
    for k, i in enumerate(art_rows):
        T[i, n + m + k] = 1.0
        basis[i] = n + m + k
    tab = _Tableau(T, basis, tol, max_iter)

    if n_art:
        # phase 1: maximise -sum(artificials)
        T[m, :] = 0.0
        T[m, n + m:width] = -1.0
        for i in art_rows:
            T[m] += T[i]
        tab.run(width)
        if -T[m, -1] < -tol * (1.0 + np.abs(b).max()):
            return LpSolution(INFEASIBLE, np.full(n, np.nan), np.full(m, np.nan), float("nan"), tab.iterations)
        for i in range(m):
            if tab.basis[i] >= n + m:
                nz = np.flatnonzero(np.abs(T[i, :n + m]) > tol)
                if nz.size:
                    tab.pivot(i, int(nz[0]))
        T = np.delete(T, np.s_[n + m:width], axis=1)
        tab.T = T

    T[m, :] = 0.0
    T[m, :n] = c
    for i, j in enumerate(tab.basis):
        if T[m, j] != 0.0:
            T[m] -= T[m, j] * T[i]
    status = tab.run(n + m)
    T = tab.T
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, np.full(n, np.nan), np.full(m, np.nan), float("inf"), tab.iterations)

    x = np.zeros(n + m)
    for i, j in enumerate(tab.basis):
        x[j] = T[i, -1]
    primal = np.maximum(x[:n], 0.0)
    duals = -T[m, n:n + m]
    value = float(lp.objective @ primal)
    return LpSolution(OPTIMAL, primal, duals, value, tab.iterations)


def check_solution(lp: LinearProgram, sol: LpSolution, tol: float = 1e-7) -> list[str]:
    """Return the list of violated optimality certificates (empty when all hold)."""
    problems = []
    if not sol.optimal:
        return [f"status {sol.status}"]
    x, y = sol.primal, sol.duals
    slack = lp.b - lp.A @ x
    if np.any(slack < -tol * (1 + np.abs(lp.b))):
        problems.append("primal infeasible")
    if np.any(x < -tol):
        problems.append("negative primal")
    if np.any(y < -tol):
        problems.append("negative dual")
    c = lp.objective if lp.sense == "max" else -lp.objective
    if np.any(c - lp.A.T @ y > tol * (1 + np.abs(c))):
        problems.append("dual infeasible")
    cx = float(c @ x)
    if abs(cx - float(lp.b @ y)) > tol * (1 + abs(cx)):
        problems.append("duality gap")
    if np.any(np.abs(y * slack) > tol * (1 + np.abs(lp.b))):
        problems.append("complementary slackness")
    return problems


def label_values(lp: LinearProgram, sol: LpSolution, drop_zero: float | None = 0.0) -> dict[Hashable, float]:
    out = {}
    for lab, val in zip(lp.column_labels, sol.primal):
        if drop_zero is None or val > drop_zero:
            out[lab] = float(val)
    return out
