import numpy as np
import pytest

from sspace import PolyConvexFn, ScalarProduct, tightened


def random_poly(rng: np.random.Generator, dim: int, n: int, tight: bool = True) -> PolyConvexFn:
    """Random max of ``n`` affine pieces with O(1) data, optionally tightened."""
    f = PolyConvexFn(rng.normal(size=(n, dim)), rng.normal(size=n))
    return tightened(f) if tight else f


def random_form(rng: np.random.Generator, dim: int, index: int) -> ScalarProduct:
    """Random symmetric invertible form with a prescribed number of positive eigenvalues."""
    Q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    mags = rng.uniform(0.3, 3.0, size=dim)
    signs = np.array([1.0] * index + [-1.0] * (dim - index))
    return ScalarProduct.from_matrix(Q @ np.diag(signs * mags) @ Q.T, index)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
