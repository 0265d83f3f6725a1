"""Polyhedral convex functions ``f(x) = max_k <x, y_k> - c_k``.

Every function here is finite on all of R^d, so the interior of its domain
is the whole space and the subdifferential at ``x`` is the convex hull of the
slopes of the pieces active at ``x``. Pieces are never pruned: dominated
pieces matter for conjugates and exposure questions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .lp import linprog

DEFAULT_ACTIVITY_TOL = 1e-9
EXPOSURE_MARGIN = 1e-9


@dataclass(frozen=True, eq=False)
class PolyConvexFn:
    """Finite max of affine pieces ``x -> <x, slopes[k]> - intercepts[k]``."""

    slopes: np.ndarray
    intercepts: np.ndarray

    def __post_init__(self):
        slopes = np.array(self.slopes, dtype=float, ndmin=2)
        intercepts = np.array(self.intercepts, dtype=float).ravel()
        if slopes.shape[0] == 0:
            raise InputError("a polyhedral function needs at least one piece")
        if intercepts.shape[0] != slopes.shape[0]:
            raise InputError("slopes and intercepts disagree on the number of pieces")
        if not (np.all(np.isfinite(slopes)) and np.all(np.isfinite(intercepts))):
            raise InputError("pieces must be finite")
        slopes.setflags(write=False)
        intercepts.setflags(write=False)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "intercepts", intercepts)

    @classmethod
    def from_pieces(cls, pieces: Iterable[tuple[Sequence[float], float]]) -> "PolyConvexFn":
        pieces = list(pieces)
        if not pieces:
            raise InputError("a polyhedral function needs at least one piece")
        slopes = np.array([np.atleast_1d(np.asarray(s, dtype=float)) for s, _ in pieces])
        return cls(slopes, [c for _, c in pieces])

    @property
    def dim(self) -> int:
        return self.slopes.shape[1]

    @property
    def n_pieces(self) -> int:
        return self.slopes.shape[0]

    def pieces(self) -> list[tuple[np.ndarray, float]]:
        return [(self.slopes[k], float(self.intercepts[k])) for k in range(self.n_pieces)]

    def piece_values(self, x) -> np.ndarray:
        """Values of every piece at ``x``; shape ``(n_pieces,)`` or ``(n, n_pieces)``."""
        x = _points(self, x)
        return x @ self.slopes.T - self.intercepts

    def __call__(self, x):
        return evaluate(self, x)


@dataclass(frozen=True)
class ActiveSet:
    indices: frozenset[int]
    value: float


def _points(f: PolyConvexFn, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (f.dim,) or x.ndim > 2:
        raise InputError(f"expected point(s) of dimension {f.dim}, got shape {x.shape}")
    return x


def _indices(f: PolyConvexFn, idx, what: str) -> np.ndarray:
    idx = np.unique(np.asarray(list(idx), dtype=int))
    if idx.size == 0:
        raise InputError(f"{what} must be nonempty")
    if idx.min() < 0 or idx.max() >= f.n_pieces:
        raise InputError(f"{what} has piece indices outside 0..{f.n_pieces - 1}")
    return idx


def evaluate(f: PolyConvexFn, x):
    """``max_k <x, y_k> - c_k``; a 2-D ``x`` is evaluated row by row."""
    vals = f.piece_values(x)
    out = vals.max(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def arg_set(f: PolyConvexFn, subset, x, tol: float = DEFAULT_ACTIVITY_TOL):
    """Pieces of ``subset`` attaining ``max_{k in subset} <x, y_k> - c_k`` within ``tol``.

    A 2-D ``x`` gives one :class:`ActiveSet` per row.
    """
    idx = _indices(f, subset, "subset")
    vals = f.piece_values(x)[..., idx]
    best = vals.max(axis=-1)
    hit = vals >= best[..., None] - tol
    if vals.ndim == 1:
        return ActiveSet(frozenset(idx[hit].tolist()), float(best))
    return [ActiveSet(frozenset(idx[h].tolist()), float(b)) for h, b in zip(hit, best)]


def active_indices(f: PolyConvexFn, x, tol: float = DEFAULT_ACTIVITY_TOL) -> np.ndarray:
    vals = f.piece_values(x)
    return np.flatnonzero(vals >= vals.max() - tol)


def subdifferential(f: PolyConvexFn, x, tol: float = DEFAULT_ACTIVITY_TOL) -> np.ndarray:
    """Active slopes at ``x``, one per row. Their convex hull is the subdifferential."""
    return f.slopes[active_indices(f, x, tol)]


def restricted(f: PolyConvexFn, keep) -> PolyConvexFn:
    """The polyhedral function built from the kept pieces only."""
    idx = _indices(f, keep, "keep")
    return PolyConvexFn(f.slopes[idx], f.intercepts[idx])


def conjugate_at(f: PolyConvexFn, y) -> float:
    """Fenchel conjugate ``f*(y)``, or ``inf`` when ``y`` is outside the slope hull.

    Solves ``min sum_k lam_k c_k`` over ``lam >= 0``, ``sum lam = 1``,
    ``sum lam_k y_k = y``.
    """
    y = _points(f, y)
    if y.ndim != 1:
        raise InputError("conjugate_at takes a single point")
    A_eq = np.vstack([np.ones(f.n_pieces), f.slopes.T])
    b_eq = np.concatenate([[1.0], y])
    res = linprog(f.intercepts, A_eq=A_eq, b_eq=b_eq)
    if res.status != "optimal":
        return float("inf")
    return res.value


def tightened(f: PolyConvexFn) -> PolyConvexFn:
    """Same function with every intercept lowered to the conjugate value ``f*(y_k)``.

    Fenchel-Young keeps each tightened piece below ``f`` and tightening only
    raises pieces, so the function is unchanged while every piece becomes a
    supporting affine minorant.
    """
    return PolyConvexFn(f.slopes, [conjugate_at(f, y) for y in f.slopes])


def fenchel_check(f: PolyConvexFn, x, y, tol: float = DEFAULT_ACTIVITY_TOL) -> bool:
    """True iff ``f(x) + f*(y) = <x, y>`` within ``tol``, i.e. ``y`` is a subgradient at ``x``."""
    x = _points(f, x)
    y = _points(f, y)
    fy = conjugate_at(f, y)
    if not np.isfinite(fy):
        raise ValueError("fenchel_check needs y inside the convex hull of the slopes")
    return abs(evaluate(f, x) + fy - float(x @ y)) <= tol


def hull_membership(point, generators, tol: float = 1e-9) -> bool:
    """Whether ``point`` lies within ``tol`` of ``conv(generators)``.

    One and two generators are decided in closed form; otherwise an LP
    minimizes the L1 distance to the hull (an upper bound on the Euclidean one).
    """
    p = np.asarray(point, dtype=float).ravel()
    G = np.array(generators, dtype=float, ndmin=2)
    if G.shape[0] == 0:
        raise InputError("hull_membership needs at least one generator")
    if G.shape[1] != p.size:
        raise InputError("generators and point differ in dimension")
    if np.any(p < G.min(axis=0) - tol) or np.any(p > G.max(axis=0) + tol):
        return False
    if G.shape[0] == 1:
        return float(np.linalg.norm(p - G[0])) <= tol
    if G.shape[0] == 2:
        seg = G[1] - G[0]
        L2 = float(seg @ seg)
        t = 0.0 if L2 == 0.0 else min(1.0, max(0.0, float((p - G[0]) @ seg) / L2))
        return float(np.linalg.norm(p - G[0] - t * seg)) <= tol
    n, d = G.shape
    # variables: lam (n), e_plus (d), e_minus (d)
    c = np.concatenate([np.zeros(n), np.ones(2 * d)])
    A_eq = np.vstack([
        np.hstack([G.T, np.eye(d), -np.eye(d)]),
        np.concatenate([np.ones(n), np.zeros(2 * d)]),
    ])
    b_eq = np.concatenate([p, [1.0]])
    res = linprog(c, A_eq=A_eq, b_eq=b_eq)
    return res.status == "optimal" and res.value <= tol


def exposure_margin(f: PolyConvexFn, k: int) -> tuple[float, np.ndarray | None]:
    """Largest ``t <= 1`` with ``piece_k(x) - piece_l(x) >= t`` for all ``l != k``.

    Returns the optimal margin and a witness ``x``.
    """
    if f.n_pieces == 1:
        return 1.0, np.zeros(f.dim)
    others = np.arange(f.n_pieces) != k
    dy = f.slopes[k] - f.slopes[others]
    dc = f.intercepts[k] - f.intercepts[others]
    # variables (x, t): maximize t s.t. -<x, dy_l> + t <= -dc_l, t <= 1
    n = f.dim + 1
    A_ub = np.vstack([np.hstack([-dy, np.ones((dy.shape[0], 1))]), np.eye(n)[-1]])
    b_ub = np.concatenate([-dc, [1.0]])
    c = np.zeros(n)
    c[-1] = -1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, free=np.ones(n, dtype=bool))
    if res.status != "optimal":
        raise RuntimeError(f"exposure LP ended with status {res.status}")
    return float(res.x[-1]), res.x[:-1]


def exposed_slopes(f: PolyConvexFn, margin: float = EXPOSURE_MARGIN) -> set[int]:
    """Indices of pieces that are the strict unique maximizer somewhere.

    These are exactly the slopes in the range of the gradient of ``f``; the
    corresponding points ``(y_k, c_k)`` are the exposed points of the
    epigraph of the conjugate.
    """
    return {k for k in range(f.n_pieces) if exposure_margin(f, k)[0] > margin}
