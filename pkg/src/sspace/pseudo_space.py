"""Pseudo-Euclidean scalar products.

A scalar product is given by an invertible symmetric matrix ``S`` and acts as
``S(x, y) = <x, S y>``. The index ``m`` is the number of positive eigenvalues;
the scalar square ``S(x, x)`` may be negative when ``m < d``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DegenerateFormError, InputError

SYMMETRY_TOL = 1e-12
SINGULARITY_RATIO = 1e-10
DEFAULT_ISOTROPY_TOL = 1e-9

PairClass = Literal["negative", "isotropic", "positive"]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScalarProduct:
    """Symmetric invertible bilinear form on R^d with ``index`` positive eigenvalues.

    Build instances with :meth:`from_matrix` (or the ``canonical`` / ``standard``
    helpers); the raw constructor performs no validation.
    """

    dim: int
    matrix: np.ndarray
    index: int

    @classmethod
    def from_matrix(cls, matrix, index: int | None = None) -> "ScalarProduct":
        """Validate ``matrix`` and build the form.

        The matrix is symmetrized as ``(S + S^T) / 2``; asymmetry beyond round-off
        (relative 1e-6) is rejected. If ``index`` is given it must match the
        number of positive eigenvalues.
        """
        S = np.asarray(matrix, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] == 0:
            raise InputError(f"scalar product matrix must be square and nonempty, got shape {S.shape}")
        if not np.all(np.isfinite(S)):
            raise InputError("scalar product matrix has non-finite entries")
        scale = max(1.0, float(np.abs(S).max()))
        if np.abs(S - S.T).max() > 1e-6 * scale:
            raise DegenerateFormError("scalar product matrix is not symmetric")
        S = 0.5 * (S + S.T)
        sv = np.linalg.svd(S, compute_uv=False)
        if sv[-1] <= SINGULARITY_RATIO * sv[0]:
            raise DegenerateFormError(
                f"scalar product matrix is singular (condition ratio {sv[-1] / sv[0]:.3g})"
            )
        m = int(np.sum(np.linalg.eigvalsh(S) > 0))
        if index is not None and int(index) != m:
            raise InputError(f"declared index {index} but the matrix has {m} positive eigenvalues")
        return cls(dim=S.shape[0], matrix=_frozen(S), index=m)

    @classmethod
    def canonical(cls, dim: int, index: int) -> "ScalarProduct":
        """Canonical form diag(1, ..., 1, -1, ..., -1) with ``index`` leading ones."""
        if not 0 <= index <= dim:
            raise InputError(f"index must lie in 0..{dim}, got {index}")
        return cls.from_matrix(np.diag([1.0] * index + [-1.0] * (dim - index)), index)

    @classmethod
    def standard(cls, half_dim: int) -> "ScalarProduct":
        """Standard form on R^m x R^m: ``S(x, y) = sum_i x^i y^{m+i} + x^{m+i} y^i``."""
        m = half_dim
        S = np.zeros((2 * m, 2 * m))
        S[:m, m:] = np.eye(m)
        S[m:, :m] = np.eye(m)
        return cls.from_matrix(S, m)

    @classmethod
    def euclidean(cls, dim: int) -> "ScalarProduct":
        return cls.from_matrix(np.eye(dim), dim)

    def __call__(self, x, y) -> float:
        return sproduct(self, x, y)

    def square(self, x) -> float:
        return sproduct(self, x, x)

    def apply(self, x) -> np.ndarray:
        """Return ``S x`` (rows of a 2-D array are mapped independently)."""
        x = np.asarray(x, dtype=float)
        return x @ self.matrix  # S is symmetric

    def solve(self, x) -> np.ndarray:
        """Return ``S^{-1} x``."""
        return np.linalg.solve(self.matrix, np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class InertiaDecomposition:
    """``S = V^T diag(lambda_signs) V`` with the positive signs first."""

    V: np.ndarray
    lambda_signs: np.ndarray

    @property
    def canonical(self) -> ScalarProduct:
        return ScalarProduct.from_matrix(np.diag(self.lambda_signs))

    def reconstruct(self) -> np.ndarray:
        return self.V.T @ np.diag(self.lambda_signs) @ self.V


def _vec(sp: ScalarProduct, x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (sp.dim,):
        raise InputError(f"{name} must have length {sp.dim}, got shape {x.shape}")
    return x


def sproduct(sp: ScalarProduct, x, y) -> float:
    """Return ``x^T S y``."""
    x = _vec(sp, x, "x")
    y = _vec(sp, y, "y")
    return float(x @ sp.matrix @ y)


def inertia(sp: ScalarProduct) -> InertiaDecomposition:
    """Factor ``S = V^T Lambda V`` through the symmetric eigendecomposition.

    With ``S = Q D Q^T`` the rows of ``V`` are ``|d_i|^{1/2} q_i^T``, ordered by
    decreasing eigenvalue so that the ``index`` positive signs come first.
    """
    w, Q = np.linalg.eigh(sp.matrix)
    amax = np.abs(w).max()
    if np.abs(w).min() <= SINGULARITY_RATIO * amax:
        raise DegenerateFormError("cannot factor a numerically singular form")
    order = np.argsort(-w, kind="stable")
    w, Q = w[order], Q[:, order]
    V = np.sqrt(np.abs(w))[:, None] * Q.T
    signs = np.where(w > 0, 1.0, -1.0)
    return InertiaDecomposition(V=_frozen(V), lambda_signs=_frozen(signs))


def pair_class(sp: ScalarProduct, y, z, tol: float = DEFAULT_ISOTROPY_TOL) -> PairClass:
    """Sign class of the scalar square ``q = S(y - z, y - z)``.

    ``tol`` is scaled by ``max(1, |y - z|^2)`` before comparing against ``|q|``.
    """
    if tol < 0:
        raise InputError("tolerance must be nonnegative")
    diff = _vec(sp, y, "y") - _vec(sp, z, "z")
    q = float(diff @ sp.matrix @ diff)
    eff = tol * max(1.0, float(diff @ diff))
    if abs(q) <= eff:
        return "isotropic"
    return "positive" if q > 0 else "negative"
