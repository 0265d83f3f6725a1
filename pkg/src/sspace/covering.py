"""Covering singular sets by c-c surfaces.

A c-c surface is the zero set of ``h(x) = x^j + g1(x^{-j}) - g2(x^{-j})``
with convex ``g1``, ``g2``; wherever both are differentiable the gradient of
``h`` lies in a finite set of normals whose ``j``-th coordinate is 1.

Surfaces are built from a polyhedral ``f`` and two groups of pieces ``C1``,
``C2`` whose slopes are separated in coordinate ``j``
(``max_{C1} y^j < min_{C2} y^j``). The saddle function
``g(t, u) = inf_s { f_C(s, u) - s t }`` is polyhedral in ``u`` for each
fixed ``t`` inside the gap, and the surface is

    h(s, u) = s + (g(r2, u) - g(r1, u)) / (r2 - r1)

for two levels ``r1 < r2`` inside the gap. Its zero set is exactly the set of
points where some piece of ``C1`` and some piece of ``C2`` are both active
for ``f_C``. Coordinates ``j`` are 1-based throughout.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InputError
from .monotone import MonotoneSet
from .polyconvex import DEFAULT_ACTIVITY_TOL, PolyConvexFn
from .pseudo_space import DEFAULT_ISOTROPY_TOL, pair_class
from .singularity import COORD_TOL, SingularPoint

DEFAULT_FD_STEP = 1e-7
DEFAULT_GRADIENT_TOL = 1e-6
DEFAULT_COVERAGE_TOL = 1e-8
HYPERPLANE_DEDUP = 1e-9


@dataclass(frozen=True, eq=False)
class CcSurface:
    """Zero set of ``h(M x)`` with ``h(z) = z^j + g1(z^{-j}) - g2(z^{-j})``.

    ``normal_set`` rows all have ``j``-th coordinate 1. ``precompose`` is the
    optional matrix ``M``; without it the surface lives in ``z = x``
    coordinates. ``c1``, ``c2`` and ``levels`` record how the surface was built.
    """

    dim: int
    j: int
    g1: PolyConvexFn
    g2: PolyConvexFn
    normal_set: np.ndarray
    precompose: np.ndarray | None = None
    c1: tuple[int, ...] = ()
    c2: tuple[int, ...] = ()
    levels: tuple[float, float] | None = None

    def __post_init__(self):
        if not 1 <= self.j <= self.dim:
            raise InputError(f"j must lie in 1..{self.dim}")
        if self.g1.dim != self.dim - 1 or self.g2.dim != self.dim - 1:
            raise InputError("g1 and g2 must be functions of dim - 1 variables")
        N = np.array(self.normal_set, dtype=float, ndmin=2)
        if N.shape[1] != self.dim or np.any(np.abs(N[:, self.j - 1] - 1.0) > 1e-12):
            raise InputError("every normal must have j-th coordinate 1")
        N.setflags(write=False)
        object.__setattr__(self, "normal_set", N)

    def to_z(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x if self.precompose is None else x @ self.precompose.T

    def from_z(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return z if self.precompose is None else np.linalg.solve(self.precompose, z.T).T

    def h(self, z):
        """``h`` in surface coordinates; rows of a 2-D ``z`` are evaluated independently."""
        z = np.asarray(z, dtype=float)
        u = np.delete(z, self.j - 1, axis=-1)
        return z[..., self.j - 1] + self.g1(u) - self.g2(u)

    def point_at(self, u) -> np.ndarray:
        """The surface point (in x coordinates) whose ``z^{-j}`` equals ``u``."""
        u = np.asarray(u, dtype=float)
        s = -(self.g1(u) - self.g2(u))
        z = np.insert(u, self.j - 1, s, axis=-1)
        return self.from_z(z)


@dataclass(frozen=True, eq=False)
class IsotropicHyperplane:
    """``{x : S(x - anchor, direction) = 0}`` for an isotropic ``direction``."""

    j: int
    anchor: np.ndarray
    direction: np.ndarray
    normal: np.ndarray  # Euclidean normal S @ direction
    pair: tuple[int, int] = (-1, -1)

    def residual(self, x):
        """Euclidean distance from ``x`` (or each row of ``x``) to the hyperplane."""
        x = np.asarray(x, dtype=float)
        return np.abs((x - self.anchor) @ self.normal) / np.linalg.norm(self.normal)


@dataclass(frozen=True)
class CoverReport:
    total_points: int
    covered: int
    max_residual: float
    normal_failures: int
    gradient_checks: int = 0


def rescale_theta(C, j: int) -> np.ndarray:
    """Map every ``y`` to ``y / y^j``; each ``y^j`` must be positive."""
    C = np.array(C, dtype=float, ndmin=2)
    if not 1 <= j <= C.shape[1]:
        raise InputError(f"j must lie in 1..{C.shape[1]}")
    q = C[:, j - 1]
    if np.any(q <= 0):
        raise InputError("rescaling needs a positive j-th coordinate on every vector")
    out = C / q[:, None]
    out[:, j - 1] = 1.0
    return out


def eval_surface(surf: CcSurface | IsotropicHyperplane, x):
    """``h(M x)`` for a c-c surface; the unsigned Euclidean distance for a hyperplane."""
    if isinstance(surf, IsotropicHyperplane):
        return surf.residual(x)
    return surf.h(surf.to_z(x))


def _split(f: PolyConvexFn, j: int) -> tuple[np.ndarray, np.ndarray]:
    return f.slopes[:, j - 1], np.delete(f.slopes, j - 1, axis=1)


def partial_conjugate(f: PolyConvexFn, j: int, C: Sequence[int], r: float) -> PolyConvexFn:
    """``u -> inf_s { f_C(s, u) - s r }`` as an explicit polyhedral function of ``u``.

    Here ``s`` is coordinate ``j``. Pieces are the dual vertices of the
    one-variable LP in ``s``: chords between pieces ``k``, ``l`` of ``C``
    with ``y_k^j < r < y_l^j`` and pieces with ``y_k^j = r``.
    """
    q, Z = _split(f, j)
    c = f.intercepts
    C = list(dict.fromkeys(int(k) for k in C))
    slopes, intercepts = [], []
    for k in C:
        if abs(q[k] - r) <= COORD_TOL:
            slopes.append(Z[k])
            intercepts.append(c[k])
    for k in C:
        for l in C:
            if q[k] < r - COORD_TOL and q[l] > r + COORD_TOL:
                lam = (q[l] - r) / (q[l] - q[k])
                slopes.append(lam * Z[k] + (1.0 - lam) * Z[l])
                intercepts.append(lam * c[k] + (1.0 - lam) * c[l])
    if not slopes:
        raise ValueError("partial conjugate is -inf: no pieces on both sides of r")
    return PolyConvexFn(np.array(slopes).reshape(len(slopes), f.dim - 1), intercepts)


def theorem1_build(f: PolyConvexFn, j: int, C1: Iterable[int], C2: Iterable[int],
                   tol: float = COORD_TOL) -> CcSurface:
    """Build the c-c surface through the points where ``C1`` and ``C2`` are both active.

    Requires ``a = max_{C1} y^j < b = min_{C2} y^j`` (by more than ``tol``).
    The levels are ``r1 = a + (b - a)/3`` and ``r2 = a + 2(b - a)/3``;
    ``g1 = g(r2, .) / (r2 - r1)``, ``g2 = g(r1, .) / (r2 - r1)`` and the
    normals are ``theta^j({y_l - y_k : k in C1, l in C2})``.
    """
    if not 1 <= j <= f.dim:
        raise InputError(f"j must lie in 1..{f.dim}")
    C1 = tuple(dict.fromkeys(int(k) for k in C1))
    C2 = tuple(dict.fromkeys(int(k) for k in C2))
    if not C1 or not C2:
        raise InputError("C1 and C2 must be nonempty")
    if min(C1 + C2) < 0 or max(C1 + C2) >= f.n_pieces:
        raise InputError("piece index out of range")
    q = f.slopes[:, j - 1]
    a = float(q[list(C1)].max())
    b = float(q[list(C2)].min())
    if not b - a > tol:
        raise InputError(f"coordinate {j} of C1 slopes must lie strictly below C2 slopes (a={a}, b={b})")
    r1 = a + (b - a) / 3.0
    r2 = a + 2.0 * (b - a) / 3.0
    width = r2 - r1
    C = C1 + tuple(k for k in C2 if k not in C1)
    G_hi = partial_conjugate(f, j, C, r2)
    G_lo = partial_conjugate(f, j, C, r1)
    if G_hi.n_pieces != len(C1) * len(C2) or G_lo.n_pieces != len(C1) * len(C2):
        raise AssertionError("dual vertex count does not match the C1 x C2 chords")
    g1 = PolyConvexFn(G_hi.slopes / width, G_hi.intercepts / width)
    g2 = PolyConvexFn(G_lo.slopes / width, G_lo.intercepts / width)
    diffs = np.array([f.slopes[l] - f.slopes[k] for k in C1 for l in C2])
    normals = np.unique(rescale_theta(diffs, j), axis=0)
    return CcSurface(f.dim, j, g1, g2, normals, None, C1, C2, (r1, r2))


def _rounding_floor(surf: CcSurface, u: np.ndarray, fd_step: float) -> float:
    """Rounding noise of a difference quotient of ``g1 - g2`` at ``u``.

    Each piece value carries an error of about ``d * eps * (|a_k| |u| + |c_k|)``;
    dividing by the step turns that into a gradient error.
    """
    mag = 0.0
    for g in (surf.g1, surf.g2):
        mag += float(np.max(np.linalg.norm(g.slopes, axis=1) * (np.linalg.norm(u) + fd_step) + np.abs(g.intercepts)))
    return 4.0 * surf.dim * np.finfo(float).eps * mag / fd_step


def _gradient_status_z(surf: CcSurface, z: np.ndarray, fd_step: float, tol: float) -> str:
    d = surf.dim
    u = np.delete(z, surf.j - 1)
    grad = np.zeros(d)
    grad[surf.j - 1] = 1.0
    tol = tol + _rounding_floor(surf, u, fd_step)
    if d > 1:
        E = fd_step * np.eye(d - 1)
        diff = np.zeros(d - 1)
        for g, sign in ((surf.g1, 1.0), (surf.g2, -1.0)):
            g0 = g(u)
            fwd = (g(u + E) - g0) / fd_step
            bwd = (g0 - g(u - E)) / fd_step
            if np.any(np.abs(fwd - bwd) > 10.0 * tol):
                return "nonsmooth"
            diff += sign * 0.5 * (fwd + bwd)
        grad[np.arange(d) != surf.j - 1] = diff
    dist = np.linalg.norm(surf.normal_set - grad, axis=1).min()
    return "pass" if dist <= tol else "fail"


def surface_gradient_check(surf: CcSurface, x, fd_step: float = DEFAULT_FD_STEP,
                           tol: float = DEFAULT_GRADIENT_TOL) -> str:
    """Finite-difference gradient of ``h`` at ``z = M x`` against ``normal_set``.

    ``tol`` is widened by the rounding noise of the difference quotients,
    which matters when ``g1`` and ``g2`` are large while their difference is
    not. Returns ``"nonsmooth"`` when one-sided differences of ``g1`` or
    ``g2`` disagree by more than ``10 * tol``, else ``"pass"`` or ``"fail"``.
    """
    z = surf.to_z(np.asarray(x, dtype=float))
    if abs(float(surf.h(z))) > tol:
        raise InputError("surface_gradient_check needs a point on the surface")
    return _gradient_status_z(surf, z, fd_step, tol)


def _nearby_smooth_status(surf: CcSurface, z: np.ndarray, fd_step: float, tol: float) -> str | None:
    """Gradient status at ``z`` or, if that is a kink, at the closest smooth nearby surface point."""
    status = _gradient_status_z(surf, z, fd_step, tol)
    if status != "nonsmooth" or surf.dim == 1:
        return status
    u0 = np.delete(z, surf.j - 1)
    rng = np.random.default_rng(0)
    for step in (1e-5, 1e-4, 1e-3, 1e-2):
        dirs = np.vstack([np.eye(u0.size), -np.eye(u0.size), rng.normal(size=(4, u0.size))])
        for dvec in dirs:
            u = u0 + step * dvec / np.linalg.norm(dvec)
            zz = np.insert(u, surf.j - 1, -(surf.g1(u) - surf.g2(u)))
            status = _gradient_status_z(surf, zz, fd_step, tol)
            if status != "nonsmooth":
                return status
    return None


def mean_value_witness(f: PolyConvexFn, surf: CcSurface, x, tol: float = DEFAULT_ACTIVITY_TOL):
    """Re-solve the one-variable LP at a surface point.

    For ``x`` on the surface built by :func:`theorem1_build` from ``f``
    (``z = M x``), picks ``r`` between the levels, finds the chord ``(k, l)``
    realizing ``g(r, u)`` and checks that both pieces are active for ``f_C``
    at ``z``. Returns ``(r, k, l, combination)`` where ``combination`` is the
    convex combination of the two slopes with ``j``-th coordinate ``r``, or
    ``None`` if the active-pair check fails.
    """
    if surf.levels is None:
        raise InputError("surface carries no construction levels")
    z = surf.to_z(np.asarray(x, dtype=float))
    j = surf.j
    q, Z = _split(f, j)
    u = np.delete(z, j - 1)
    C = list(surf.c1) + [k for k in surf.c2 if k not in surf.c1]
    r = 0.5 * (surf.levels[0] + surf.levels[1])
    alpha = Z @ u - f.intercepts
    best, pair = -np.inf, None
    for k in C:
        for l in C:
            if q[k] < r < q[l]:
                lam = (q[l] - r) / (q[l] - q[k])
                val = lam * alpha[k] + (1.0 - lam) * alpha[l]
                if pair is None or val > best + 1e-14 * max(1.0, abs(best)):
                    best, pair = val, (k, l, lam)
    k, l, lam = pair
    vals = f.piece_values(z)
    top = vals[C].max()
    floor = top - tol * max(1.0, abs(top))
    if vals[k] < floor or vals[l] < floor:
        return None
    return r, k, l, lam * f.slopes[k] + (1.0 - lam) * f.slopes[l]


def _clusters(P: np.ndarray, idx: Sequence[int], radius: float) -> list[tuple[int, ...]]:
    left = list(idx)
    out = []
    while left:
        lead = left[0]
        members = [k for k in left if np.linalg.norm(P[k] - P[lead]) <= radius]
        out.append(tuple(members))
        left = [k for k in left if k not in members]
    return out


def _families(P: np.ndarray, idx: Sequence[int], j: int, admissible: Callable[[int, int], bool],
              epsilon: float, cluster_radius: float | None) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Pairs ``(C1, C2)`` of index groups covering every admissible separated pair.

    Singletons by default. With ``cluster_radius`` the points are grouped into
    balls and a pair of groups becomes one compact when every cross pair is
    admissible and separated and ``diam theta^j(C2 - C1) < epsilon``; pairs
    not absorbed this way fall back to singletons.
    """
    q = P[:, j - 1]
    pairs = [(k, l) for k in idx for l in idx
             if q[l] - q[k] > COORD_TOL and admissible(k, l)]
    if cluster_radius is None:
        return [((k,), (l,)) for k, l in pairs]
    allowed = set(pairs)
    done: set[tuple[int, int]] = set()
    fams = []
    groups = _clusters(P, idx, cluster_radius)
    for K in groups:
        for L in groups:
            cross = [(k, l) for k in K for l in L]
            if len(cross) < 2 or not all(p in allowed for p in cross):
                continue
            theta = rescale_theta(np.array([P[l] - P[k] for k, l in cross]), j)
            diam = max(np.linalg.norm(a - b) for a in theta for b in theta)
            if diam < epsilon:
                fams.append((K, L))
                done.update(cross)
    fams.extend(((k,), (l,)) for k, l in pairs if (k, l) not in done)
    return fams


def cover_sigma_j_A(f: PolyConvexFn, A_indices, j: int, epsilon: float = np.inf,
                    cluster_radius: float | None = None) -> list[CcSurface]:
    """Surfaces covering the points where two active slopes of ``A`` differ in coordinate ``j``."""
    if not 1 <= j <= f.dim:
        raise InputError(f"j must lie in 1..{f.dim}")
    idx = sorted({int(k) for k in A_indices})
    fams = _families(f.slopes, idx, j, lambda k, l: True, epsilon, cluster_radius)
    return [theorem1_build(f, j, C1, C2) for C1, C2 in fams]


def lifted_fitzpatrick(G: MonotoneSet) -> PolyConvexFn:
    """``x -> psi_G(S^{-1} x)``: pieces with slope ``y`` and intercept ``S(y, y) / 2``."""
    P = G.points
    return PolyConvexFn(P, 0.5 * np.einsum("nd,de,ne->n", P, G.space.matrix, P))


def _cover_monotone(G: MonotoneSet, j: int, kind: str, epsilon: float, cluster_radius: float | None,
                    isotropy_tol: float) -> list[CcSurface]:
    if not 1 <= j <= G.dim:
        raise InputError(f"j must lie in 1..{G.dim}")
    g = lifted_fitzpatrick(G)
    P = G.points

    def admissible(k: int, l: int) -> bool:
        return pair_class(G.space, P[l], P[k], isotropy_tol) == kind

    fams = _families(P, range(len(G)), j, admissible, epsilon, cluster_radius)
    S = G.space.matrix
    return [dataclasses.replace(theorem1_build(g, j, C1, C2), precompose=S) for C1, C2 in fams]


def cover_sigma1(G: MonotoneSet, j: int, epsilon: float = np.inf, cluster_radius: float | None = None,
                 isotropy_tol: float = DEFAULT_ISOTROPY_TOL) -> list[CcSurface]:
    """Surfaces ``{h(S x) = 0}`` covering first-order singular points that differ in coordinate ``j``."""
    return _cover_monotone(G, j, "positive", epsilon, cluster_radius, isotropy_tol)


def cover_sigma0(G: MonotoneSet, j: int, delta: float, epsilon: float = np.inf,
                 cluster_radius: float | None = None,
                 isotropy_tol: float = DEFAULT_ISOTROPY_TOL) -> list[CcSurface]:
    """Surfaces covering points with an isotropic pair of minimizers differing in coordinate ``j``.

    Every normalized normal ``w`` satisfies ``0 <= S(w, w) <= delta`` up to
    ``isotropy_tol``; a violation raises ``AssertionError``.
    """
    if not delta > 0:
        raise InputError("delta must be positive")
    surfaces = _cover_monotone(G, j, "isotropic", epsilon, cluster_radius, isotropy_tol)
    S = G.space.matrix
    for surf in surfaces:
        sq = np.einsum("nd,de,ne->n", surf.normal_set, S, surf.normal_set)
        if np.any(sq < -isotropy_tol) or np.any(sq > delta + isotropy_tol):
            raise AssertionError(f"normal scalar squares {sq} escape [0, {delta}]")
    return surfaces


def cover_sigma0_lines(G: MonotoneSet, j: int,
                       isotropy_tol: float = DEFAULT_ISOTROPY_TOL) -> list[IsotropicHyperplane]:
    """Isotropic hyperplanes ``{x : S(x - z, y - z) = 0}`` for index-one spaces.

    One hyperplane per pair ``(y, z)`` with ``y^j > z^j`` and isotropic
    difference; hyperplanes describing the same affine set are merged.
    """
    if G.space.index != 1:
        raise InputError("isotropic hyperplane coverings need index 1")
    if not 1 <= j <= G.dim:
        raise InputError(f"j must lie in 1..{G.dim}")
    P = G.points
    out: list[IsotropicHyperplane] = []
    keys: list[np.ndarray] = []
    n = len(G)
    for a in range(n):
        for b in range(n):
            y, z = P[a], P[b]
            if not y[j - 1] - z[j - 1] > COORD_TOL:
                continue
            if pair_class(G.space, y, z, isotropy_tol) != "isotropic":
                continue
            normal = G.space.apply(y - z)
            unit = normal / np.linalg.norm(normal)
            lead = unit[np.flatnonzero(np.abs(unit) > COORD_TOL)[0]]
            unit = unit * np.sign(lead)
            key = np.append(unit, unit @ z)
            if any(np.abs(key - kk).max() <= HYPERPLANE_DEDUP for kk in keys):
                continue
            keys.append(key)
            out.append(IsotropicHyperplane(j, z.copy(), y - z, normal, (a, b)))
    return out


def verify_coverage(surfaces: Sequence[CcSurface | IsotropicHyperplane], points: Sequence[SingularPoint],
                    filter: Callable[[SingularPoint], bool] | None = None,
                    tol: float = DEFAULT_COVERAGE_TOL, fd_step: float = DEFAULT_FD_STEP,
                    gradient_tol: float = DEFAULT_GRADIENT_TOL, space=None,
                    isotropy_tol: float = DEFAULT_ISOTROPY_TOL) -> CoverReport:
    """Check that every selected singular point lies on some surface.

    A point is covered when the smallest residual over ``surfaces`` is at most
    ``tol``. At each covered point the gradient of the closest c-c surface is
    checked against its normals (at the nearest smooth surface point when the
    point itself sits on a kink); for a hyperplane the normalized direction
    must be isotropic, which needs ``space``.
    """
    chosen = [p for p in points if filter is None or filter(p)]
    if not chosen:
        return CoverReport(0, 0, 0.0, 0, 0)
    X = np.array([p.location for p in chosen])
    if not surfaces:
        return CoverReport(len(chosen), 0, float("inf"), 0, 0)
    R = np.vstack([np.abs(np.atleast_1d(eval_surface(s, X))) for s in surfaces])
    best = R.argmin(axis=0)
    resid = R[best, np.arange(len(chosen))]
    covered = resid <= tol
    failures = checks = 0
    for i in np.flatnonzero(covered):
        surf = surfaces[best[i]]
        if isinstance(surf, IsotropicHyperplane):
            if space is None:
                continue
            w = surf.direction / surf.direction[surf.j - 1]
            checks += 1
            failures += int(abs(float(w @ space.matrix @ w)) > isotropy_tol)
            continue
        status = _nearby_smooth_status(surf, surf.to_z(X[i]), fd_step, gradient_tol)
        if status is not None:
            checks += 1
            failures += int(status == "fail")
    return CoverReport(len(chosen), int(covered.sum()), float(resid.max()), failures, checks)
