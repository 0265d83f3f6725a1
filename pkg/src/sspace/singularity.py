"""Detection and classification of singular points of projections onto monotone sets.

A point is singular when its projection holds two or more points of G. It has
order 0 when every pair of minimizers is isotropic and order 1 when some pair
has a strictly positive scalar square. Coordinates ``j`` are 1-based.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InputError
from .monotone import DEFAULT_PROJECTION_TOL, MonotoneSet, project
from .polyconvex import DEFAULT_ACTIVITY_TOL, PolyConvexFn
from .pseudo_space import DEFAULT_ISOTROPY_TOL, pair_class

COORD_TOL = 1e-12
DEDUP_GRID = 1e-9


@dataclass(frozen=True)
class Witness:
    """Pair of minimizers ``(G[i], G[k])`` with ``i < k``."""

    i: int
    k: int
    kind: str  # "isotropic", "positive" or "negative"
    coords: frozenset[int]  # 1-based coordinates where the two points differ


@dataclass(frozen=True, eq=False)
class SingularPoint:
    location: np.ndarray
    witnesses: tuple[Witness, ...]
    j_indices: frozenset[int]
    order: int

    def in_sigma1(self, j: int) -> bool:
        """Some positive witness pair differs in coordinate ``j``."""
        return any(w.kind == "positive" and j in w.coords for w in self.witnesses)

    def in_sigma0_closure(self, j: int) -> bool:
        """Some isotropic witness pair differs in coordinate ``j``."""
        return any(w.kind == "isotropic" and j in w.coords for w in self.witnesses)


def classify_point(G: MonotoneSet, x, tol: float = DEFAULT_PROJECTION_TOL,
                   isotropy_tol: float = DEFAULT_ISOTROPY_TOL) -> SingularPoint | None:
    """Classify ``x``; ``None`` means the projection is a single point."""
    proj = project(G, x, tol)
    if len(proj.indices) < 2:
        return None
    witnesses = []
    for i, k in combinations(proj.indices, 2):
        y, z = G.points[i], G.points[k]
        coords = frozenset(int(c) + 1 for c in np.flatnonzero(np.abs(y - z) > COORD_TOL))
        witnesses.append(Witness(i, k, pair_class(G.space, y, z, isotropy_tol), coords))
    j_indices = frozenset().union(*(w.coords for w in witnesses))
    order = 1 if any(w.kind == "positive" for w in witnesses) else 0
    loc = np.array(x, dtype=float)
    loc.setflags(write=False)
    return SingularPoint(loc, tuple(witnesses), j_indices, order)


def sigma_j_A(f: PolyConvexFn, A_indices, j: int, xs, tol: float = DEFAULT_ACTIVITY_TOL) -> list[np.ndarray]:
    """Points of ``xs`` where two pieces of ``A`` attaining ``f(x)`` differ in slope coordinate ``j``."""
    if not 1 <= j <= f.dim:
        raise InputError(f"j must lie in 1..{f.dim}")
    A = np.unique(np.asarray(list(A_indices), dtype=int))
    out = []
    for x in np.atleast_2d(np.asarray(xs, dtype=float)):
        vals = f.piece_values(x)
        act = A[vals[A] >= vals.max() - tol]
        if act.size >= 2:
            q = f.slopes[act, j - 1]
            if q.max() - q.min() > COORD_TOL:
                out.append(x)
    return out


def tie_hyperplane(G: MonotoneSet, i: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Anchor point and orthonormal basis of ``{x : S(x - y, x - y) = S(x - z, x - z)}``.

    The set is ``{x : S(x, y - z) = (S(y, y) - S(z, z)) / 2}``; the midpoint of
    ``y`` and ``z`` lies on it and serves as the anchor.
    """
    y, z = G.points[i], G.points[k]
    normal = G.space.apply(y - z)
    anchor = 0.5 * (y + z)
    # rows 1.. of V^T from the SVD of the normal span its orthogonal complement
    _, _, vt = np.linalg.svd(normal[None, :])
    return anchor, vt[1:]


def _ball(rng: np.random.Generator, n: int, dim: int, radius: float) -> np.ndarray:
    if dim == 0:
        return np.zeros((n, 0))
    g = rng.normal(size=(n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / dim)
    return g * r[:, None]


def candidate_singular_points(G: MonotoneSet, samples_per_pair: int, radius: float, seed: int,
                              tol: float = DEFAULT_PROJECTION_TOL,
                              isotropy_tol: float = DEFAULT_ISOTROPY_TOL) -> list[SingularPoint]:
    """Sample every pairwise tie hyperplane and keep the singular samples.

    Pairs are visited as ordered pairs ``(i, k)``, ``i != k``, in lexicographic
    order; samples are uniform in the ball of ``radius`` around the pair
    midpoint within the hyperplane. Duplicates on a 1e-9 grid are dropped.
    """
    if samples_per_pair < 1:
        raise InputError("samples_per_pair must be at least 1")
    if radius < 0:
        raise InputError("radius must be nonnegative")
    rng = np.random.default_rng(seed)
    seen = set()
    found = []
    n = len(G)
    for i in range(n):
        for k in range(n):
            if i == k:
                continue
            anchor, basis = tie_hyperplane(G, i, k)
            offsets = _ball(rng, samples_per_pair, basis.shape[0], radius)
            for x in anchor + offsets @ basis:
                key = tuple(np.round(x / DEDUP_GRID).astype(np.int64))
                if key in seen:
                    continue
                seen.add(key)
                sp = classify_point(G, x, tol, isotropy_tol)
                if sp is not None:
                    found.append(sp)
    return found
