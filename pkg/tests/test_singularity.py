import numpy as np
import pytest

from sspace import (InputError, MonotoneSet, ScalarProduct, candidate_singular_points, classify_point,
                    fitzpatrick, pair_class, random_isotropic_chain, random_monotone, sigma_j_A)
from sspace.polyconvex import PolyConvexFn
from sspace.singularity import tie_hyperplane

from conftest import random_form

LAMBDA = ScalarProduct.canonical(2, 1)
EUCLID = ScalarProduct.euclidean(2)
HINGE = PolyConvexFn.from_pieces([((0, 0), 0), ((1, 1), 1)])


def brute_force_minimizers(G, x, tol=1e-9):
    vals = np.array([(x - p) @ G.space.matrix @ (x - p) for p in G.points])
    return set(np.flatnonzero(vals <= vals.min() + tol * max(1.0, abs(vals.min()))).tolist())


def test_classify_examples():
    G = MonotoneSet.build(EUCLID, [[-1, 0], [1, 0]])
    p = classify_point(G, [0, 5])
    assert p.order == 1 and p.j_indices == {1}
    assert p.witnesses[0].kind == "positive"
    G = MonotoneSet.build(LAMBDA, [[0, 0], [1, 1]])
    p = classify_point(G, [0, 0])
    assert p.order == 0 and p.j_indices == {1, 2}
    assert p.in_sigma0_closure(1) and not p.in_sigma1(1)
    assert classify_point(MonotoneSet.build(EUCLID, [[-1, 0], [1, 0]]), [0.3, 1]) is None


def test_sigma_j_A_examples():
    xs = [[0.5, 0.5], [0, 0], [2, -1.0]]
    out = sigma_j_A(HINGE, [0, 1], 1, xs)
    assert len(out) == 2 and np.allclose(out[0], [0.5, 0.5])
    assert sigma_j_A(HINGE, [0, 1], 1, [[0, 0]]) == []
    assert sigma_j_A(HINGE, [1], 1, xs) == []
    with pytest.raises(InputError):
        sigma_j_A(HINGE, [0, 1], 3, xs)


def test_tie_hyperplane_contains_midpoint_and_is_equidistant(rng):
    G = random_monotone(random_form(rng, 3, 2), 5, 1)
    anchor, basis = tie_hyperplane(G, 0, 3)
    np.testing.assert_allclose(basis @ basis.T, np.eye(2), atol=1e-12)
    for x in anchor + rng.normal(size=(10, 2)) @ basis:
        a, b = (x - G.points[0]), (x - G.points[3])
        sa, sb = G.space.square(a), G.space.square(b)
        assert abs(sa - sb) <= 1e-9 * max(1.0, abs(sa))


def test_candidates_euclidean_pair_on_axis():
    G = MonotoneSet.build(EUCLID, [[-1, 0], [1, 0]])
    pts = candidate_singular_points(G, 20, 2.0, 0)
    assert pts and all(abs(p.location[0]) <= 1e-9 for p in pts)
    assert all(np.linalg.norm(p.location) <= 2.0 + 1e-12 for p in pts)


def test_candidates_singleton_and_bad_samples():
    G = MonotoneSet.build(EUCLID, [[0, 0]])
    assert candidate_singular_points(G, 5, 1.0, 0) == []
    with pytest.raises(InputError):
        candidate_singular_points(G, 0, 1.0, 0)


def test_candidates_isotropic_chain_on_diagonal():
    G = MonotoneSet.build(LAMBDA, [[0, 0], [1, 1], [2, 2]])
    pts = candidate_singular_points(G, 10, 3.0, 1)
    assert pts
    for p in pts:
        assert abs(p.location[0] - p.location[1]) <= 1e-9
        assert p.order == 0


def test_candidates_deterministic():
    G = random_monotone(ScalarProduct.standard(1), 6, 3)
    a = candidate_singular_points(G, 4, 2.0, 9)
    b = candidate_singular_points(G, 4, 2.0, 9)
    assert [p.location.tolist() for p in a] == [p.location.tolist() for p in b]


@pytest.mark.parametrize("seed", range(12))
def test_candidate_invariants_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 4))
    m = int(rng.integers(1, d))
    sp = random_form(rng, d, m)
    G = random_isotropic_chain(sp, 6, seed) if seed % 2 else random_monotone(sp, 6, seed)
    psi = fitzpatrick(G)
    pts = candidate_singular_points(G, 4, 2.0, seed)
    assert pts
    for p in pts:
        mins = brute_force_minimizers(G, p.location)
        assert len(mins) >= 2
        assert p.witnesses
        for w in p.witnesses:
            assert {w.i, w.k} <= mins
            assert w.kind == pair_class(sp, G.points[w.i], G.points[w.k])
            assert w.coords == {c + 1 for c in range(d) if G.points[w.i][c] != G.points[w.k][c]}
        assert p.order == int(any(w.kind == "positive" for w in p.witnesses))
        if p.order == 1:
            assert any(p.in_sigma1(j) for j in p.j_indices)
        else:
            assert all(w.kind == "isotropic" for w in p.witnesses)
        found = {j for j in range(1, d + 1) if sigma_j_A(psi, range(len(G)), j, [p.location], 1e-8)}
        assert found == set(p.j_indices)
