"""Finite S-monotone sets, their Fitzpatrick functions and projections."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError, LipschitzError, MonotonicityError
from .polyconvex import PolyConvexFn
from .pseudo_space import DEFAULT_ISOTROPY_TOL, ScalarProduct, inertia

DISTINCT_TOL = 1e-12
DEFAULT_PROJECTION_TOL = 1e-9


def pairwise_squares(space: ScalarProduct, points: np.ndarray) -> np.ndarray:
    """Matrix of scalar squares ``S(p_i - p_k, p_i - p_k)``."""
    diff = points[:, None, :] - points[None, :, :]
    return np.einsum("ikd,de,ike->ik", diff, space.matrix, diff)


def check_monotone(space: ScalarProduct, points, tol: float = DEFAULT_ISOTROPY_TOL):
    """Return ``None`` if every pair has ``S(y - z, y - z) >= -tol``.

    Otherwise return the first violating pair ``(i, k)``, ``i < k``, in
    lexicographic order.
    """
    P = np.array(points, dtype=float, ndmin=2)
    if P.shape[0] == 0:
        raise InputError("a monotone set needs at least one point")
    Q = pairwise_squares(space, P)
    bad = np.argwhere(np.triu(Q < -tol, k=1))
    if bad.size == 0:
        return None
    return int(bad[0, 0]), int(bad[0, 1])


@dataclass(frozen=True, eq=False)
class MonotoneSet:
    """Finite S-monotone point set; rows of ``points`` are the elements of G."""

    space: ScalarProduct
    points: np.ndarray

    @classmethod
    def build(cls, space: ScalarProduct, points, tol: float = DEFAULT_ISOTROPY_TOL) -> "MonotoneSet":
        P = np.array(points, dtype=float, ndmin=2)
        if P.shape[0] == 0 or P.shape[1] != space.dim:
            raise InputError(f"points must be a nonempty list of {space.dim}-vectors, got shape {P.shape}")
        if not np.all(np.isfinite(P)):
            raise InputError("points must be finite")
        if P.shape[0] > 1:
            dist = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=-1)
            dup = np.argwhere(np.triu(dist <= DISTINCT_TOL, k=1))
            if dup.size:
                raise InputError(f"points {dup[0, 0]} and {dup[0, 1]} coincide")
        bad = check_monotone(space, P, tol)
        if bad is not None:
            d = P[bad[0]] - P[bad[1]]
            raise MonotonicityError(bad, d @ space.matrix @ d)
        P.setflags(write=False)
        return cls(space, P)

    @property
    def dim(self) -> int:
        return self.space.dim

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class ProjectionResult:
    indices: tuple[int, ...]
    minimizers: np.ndarray
    value: float


def _check_point(G: MonotoneSet, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (G.dim,):
        raise InputError(f"expected a {G.dim}-vector, got shape {x.shape}")
    return x


def squares_to_points(G: MonotoneSet, x) -> np.ndarray:
    diff = _check_point(G, x) - G.points
    return np.einsum("nd,de,ne->n", diff, G.space.matrix, diff)


def fitzpatrick(G: MonotoneSet) -> PolyConvexFn:
    """``psi_G(x) = max_y S(x, y) - S(y, y) / 2`` as a polyhedral function.

    Piece ``k`` has slope ``S y_k`` and intercept ``S(y_k, y_k) / 2``.
    """
    SY = G.space.apply(G.points)
    half = 0.5 * np.einsum("nd,nd->n", G.points, SY)
    return PolyConvexFn(SY, half)


def scalar_square_to_set(G: MonotoneSet, x) -> float:
    """``phi_G(x) = min_y S(x - y, x - y)``."""
    return float(squares_to_points(G, x).min())


def project(G: MonotoneSet, x, tol: float = DEFAULT_PROJECTION_TOL) -> ProjectionResult:
    """Minimizers of ``S(x - y, x - y)`` over G.

    Ties are resolved with tolerance ``tol * max(1, |min value|)``.
    """
    vals = squares_to_points(G, x)
    best = float(vals.min())
    idx = np.flatnonzero(vals <= best + tol * max(1.0, abs(best)))
    return ProjectionResult(tuple(int(i) for i in idx), G.points[idx], best)


def graph_from_lipschitz(m: int, samples: Sequence[tuple[Sequence[float], Sequence[float]]],
                         tol: float = 1e-12) -> MonotoneSet:
    """Monotone set ``{(u_i, v_i)}`` for the canonical form of index ``m``.

    ``v`` must be 1-Lipschitz in ``u`` on the sample, up to a relative ``tol``
    on squared lengths.
    """
    if not samples:
        raise InputError("need at least one sample")
    U = np.array([np.atleast_1d(np.asarray(u, dtype=float)) for u, _ in samples])
    Vv = np.array([np.atleast_1d(np.asarray(v, dtype=float)) for _, v in samples])
    if U.shape[1] != m:
        raise InputError(f"domain samples must have length {m}, got {U.shape[1]}")
    if Vv.ndim != 2:
        raise InputError("value samples must share a common length")
    du = np.sum((U[:, None] - U[None]) ** 2, axis=-1)
    dv = np.sum((Vv[:, None] - Vv[None]) ** 2, axis=-1)
    bad = np.argwhere(np.triu(dv > du + tol * np.maximum(1.0, du), k=1))
    if bad.size:
        i, k = int(bad[0, 0]), int(bad[0, 1])
        ratio = np.sqrt(dv[i, k] / du[i, k]) if du[i, k] > 0 else float("inf")
        raise LipschitzError((i, k), ratio)
    space = ScalarProduct.canonical(m + Vv.shape[1], m)
    return MonotoneSet.build(space, np.hstack([U, Vv]))


def _lipschitz_graph(rng: np.random.Generator, n: int, m: int, k: int, contraction: float) -> np.ndarray:
    """Samples of a random ``contraction``-Lipschitz map R^m -> R^k, stacked as ``(u, F(u))``."""
    U = rng.uniform(-2.0, 2.0, size=(n, m))
    if k == 0:
        return U
    W = rng.normal(size=(k, m))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    b = rng.uniform(-1.0, 1.0, size=k)
    # each coordinate is |<w, u> - b| scaled so the vector map has constant `contraction`
    F = contraction * np.abs(U @ W.T - b) / np.sqrt(k)
    return np.hstack([U, F])


def random_monotone(space: ScalarProduct, n: int, seed: int, contraction: float = 0.8) -> MonotoneSet:
    """Seeded random monotone set of ``n`` points.

    A strictly contractive graph sample is drawn in canonical coordinates and
    mapped back through ``V^{-1}`` of the inertia factorization, so every pair
    has a strictly positive scalar square.
    """
    if n < 1:
        raise InputError("n must be at least 1")
    rng = np.random.default_rng(seed)
    m, d = space.index, space.dim
    if m == 0:
        if n > 1:
            raise InputError("a negative definite form only admits singleton monotone sets")
        return MonotoneSet.build(space, rng.uniform(-2.0, 2.0, size=(1, d)), tol=0.0)
    canon = _lipschitz_graph(rng, n, m, d - m, contraction)
    V = inertia(space).V
    return MonotoneSet.build(space, np.linalg.solve(V, canon.T).T, tol=0.0)


def random_isotropic_chain(space: ScalarProduct, n: int, seed: int) -> MonotoneSet:
    """Seeded monotone set with planted isotropic pairs.

    In canonical coordinates the set is the graph of ``u -> phi(u^1) e_1``
    where ``phi`` is piecewise linear with slopes in {-1, -1/2, 0, 1/2, 1}
    and all data are dyadic, so segments of slope +-1 give exactly isotropic
    pairs. Requires ``0 < index < dim``.
    """
    m, d = space.index, space.dim
    if not 0 < m < d:
        raise InputError("isotropic chains need 0 < index < dim")
    rng = np.random.default_rng(seed)
    grid = np.arange(-16, 17) / 4.0
    knots = np.sort(rng.choice(grid, size=4, replace=False))
    slopes = rng.choice([-1.0, -0.5, 0.0, 0.5, 1.0, 1.0, -1.0], size=5)
    # the piece between knots[1] and knots[2] is always isometric
    slopes[2] = rng.choice([-1.0, 1.0])

    def phi(t: float) -> float:
        value, left = 0.0, grid[0]
        for knot, slope in zip(list(knots) + [np.inf], slopes):
            stop = min(t, knot)
            if stop > left:
                value += slope * (stop - left)
            left = max(left, knot)
            if t <= knot:
                break
        return value

    if n < 2:
        raise InputError("isotropic chains need at least two points")
    # few distinct values in the trailing domain coordinates so collinear pairs occur
    tails = [tuple(rng.choice(grid, size=m - 1)) for _ in range(2)]
    if n > len(grid) * len(set(tails)):
        raise InputError(f"an isotropic chain of index {m} holds at most {len(grid) * len(set(tails))} points")
    rows = {(float(knots[1]),) + tails[0], (float(knots[2]),) + tails[0]}
    while len(rows) < n:
        t = float(rng.choice(grid))
        rows.add((t,) + tails[int(rng.integers(len(tails)))])
    U = np.array(sorted(rows))
    F = np.zeros((n, d - m))
    F[:, 0] = [phi(t) for t in U[:, 0]]
    canon = np.hstack([U, F])
    V = inertia(space).V
    return MonotoneSet.build(space, np.linalg.solve(V, canon.T).T)
