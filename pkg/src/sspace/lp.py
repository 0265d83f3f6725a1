"""Dense two-phase simplex with Bland's rule for small linear programs.

Problems handled here have at most a few dozen variables, so a full tableau
is cheap and Bland's anti-cycling rule gives deterministic pivots.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

PIVOT_TOL = 1e-12
COST_TOL = 1e-11


@dataclass(frozen=True)
class LPResult:
    status: Literal["optimal", "infeasible", "unbounded"]
    x: np.ndarray | None
    value: float


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    others = np.arange(T.shape[0]) != row
    T[others] -= np.outer(T[others, col], T[row])


def _run(T: np.ndarray, basis: list[int], ncols: int, max_iter: int) -> str:
    """Pivot until no reduced cost in the first ``ncols`` columns is negative."""
    m = len(basis)
    for _ in range(max_iter):
        costs = T[m, :ncols]
        entering = np.flatnonzero(costs < -COST_TOL)
        if entering.size == 0:
            return "optimal"
        col = int(entering[0])
        column = T[:m, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            return "unbounded"
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-14 * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
    raise RuntimeError("simplex iteration limit reached")


def simplex(c, A_eq, b_eq, feas_tol: float = 1e-9, max_iter: int = 10_000) -> LPResult:
    """Minimize ``c @ x`` subject to ``A_eq @ x == b_eq`` and ``x >= 0``.

    Phase one minimizes the sum of artificial variables; the problem is
    declared infeasible when that sum stays above ``feas_tol`` (scaled by
    ``max(1, |b|_1)``).
    """
    c = np.asarray(c, dtype=float)
    A = np.array(A_eq, dtype=float, ndmin=2)
    b = np.array(b_eq, dtype=float).ravel()
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("inconsistent LP dimensions")
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = list(range(n, n + m))

    _run(T, basis, n + m, max_iter)
    if -T[m, -1] > feas_tol * max(1.0, float(b.sum())):
        return LPResult("infeasible", None, float("inf"))

    # drive remaining artificials out of the basis; rows that cannot pivot are redundant
    keep = []
    for i in range(m):
        if basis[i] >= n:
            cand = np.flatnonzero(np.abs(T[i, :n]) > 1e-9)
            if cand.size == 0:
                continue
            _pivot(T, i, int(cand[0]))
            basis[i] = int(cand[0])
        keep.append(i)
    T = np.vstack([T[keep][:, list(range(n)) + [-1]], np.zeros(n + 1)])
    basis = [basis[i] for i in keep]
    k = len(basis)
    T[k, :n] = c
    for i, bcol in enumerate(basis):
        T[k] -= c[bcol] * T[i]

    status = _run(T, basis, n, max_iter)
    if status == "unbounded":
        return LPResult("unbounded", None, float("-inf"))
    x = np.zeros(n)
    for i, bcol in enumerate(basis):
        x[bcol] = T[i, -1]
    x = np.maximum(x, 0.0)
    return LPResult("optimal", x, float(c @ x))


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, free=None,
            feas_tol: float = 1e-9) -> LPResult:
    """Minimize ``c @ x`` with ``A_ub x <= b_ub``, ``A_eq x == b_eq``.

    Variables are nonnegative unless flagged in the boolean mask ``free``.
    Free variables are split into positive and negative parts and inequality
    rows receive slack columns before calling :func:`simplex`.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    free = np.zeros(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    nfree = int(free.sum())
    A_ub = np.zeros((0, n)) if A_ub is None else np.array(A_ub, dtype=float, ndmin=2)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.array(A_eq, dtype=float, ndmin=2)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    mu, me = A_ub.shape[0], A_eq.shape[0]

    # columns: x (n), negative parts of free vars (nfree), slacks (mu)
    def expand(A: np.ndarray) -> np.ndarray:
        return np.hstack([A, -A[:, free]])

    top = np.hstack([expand(A_ub), np.eye(mu)])
    bottom = np.hstack([expand(A_eq), np.zeros((me, mu))])
    A = np.vstack([top, bottom])
    b = np.concatenate([b_ub, b_eq])
    cc = np.concatenate([c, -c[free], np.zeros(mu)])
    res = simplex(cc, A, b, feas_tol=feas_tol)
    if res.status != "optimal":
        return res
    x = res.x[:n].copy()
    x[free] -= res.x[n:n + nfree]
    return LPResult("optimal", x, float(c @ x))
