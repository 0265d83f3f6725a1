import numpy as np
import pytest

from sspace import (CcSurface, InputError, MonotoneSet, PolyConvexFn, ScalarProduct, candidate_singular_points,
                    cover_sigma0, cover_sigma0_lines, cover_sigma1, cover_sigma_j_A, eval_surface,
                    mean_value_witness, random_isotropic_chain, random_monotone, rescale_theta,
                    surface_gradient_check, theorem1_build, verify_coverage)
from sspace.covering import partial_conjugate
from sspace.singularity import SingularPoint

from conftest import random_form, random_poly

HINGE = PolyConvexFn.from_pieces([((0, 0), 0), ((1, 1), 1)])
V_FN = PolyConvexFn.from_pieces([((0, -1), 0), ((0, 1), 0), ((2, 0), 0)])
STANDARD = ScalarProduct.standard(1)
LAMBDA = ScalarProduct.canonical(2, 1)


def g_oracle(f, j, C, r, u):
    """inf_s max_{k in C} s (q_k - r) + <u, z_k> - c_k via all pairwise line crossings in s."""
    q = f.slopes[C, j - 1] - r
    b = np.delete(f.slopes[C], j - 1, axis=1) @ u - f.intercepts[C]
    cands = [0.0]
    for a in range(len(C)):
        for c in range(len(C)):
            if q[a] != q[c]:
                cands.append((b[c] - b[a]) / (q[a] - q[c]))
    return min(float(np.max(s * q + b)) for s in cands)


def crossing(f, j, C1, C2, u, lo=-1e3, hi=1e3):
    """The s where max over C1 pieces equals max over C2 pieces at (s, u), by bisection."""
    def gap(s):
        x = np.insert(u, j - 1, s)
        v = f.piece_values(x)
        return v[list(C1)].max() - v[list(C2)].max()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if gap(mid) > 0 else (lo, mid)
    return 0.5 * (lo + hi)


def test_rescale_theta_examples():
    np.testing.assert_array_equal(rescale_theta([[2, -1]], 1), [[1, -0.5]])
    np.testing.assert_array_equal(rescale_theta([[1, 3], [1, -2]], 1), [[1, 3], [1, -2]])
    np.testing.assert_array_equal(rescale_theta([[2, 2], [4, 0]], 1), [[1, 1], [1, 0]])
    with pytest.raises(InputError):
        rescale_theta([[0, 1]], 1)


def test_surface_validates_normals():
    g = PolyConvexFn([[0.0]], [0.0])
    with pytest.raises(InputError):
        CcSurface(2, 1, g, g, [[2.0, 0.0]])


def test_eval_surface_cancellation(rng):
    g = random_poly(rng, 2, 4)
    s = CcSurface(3, 2, g, g, [[0.0, 1.0, 0.0]])
    for x in rng.normal(size=(5, 3)):
        assert eval_surface(s, x) == pytest.approx(x[1], abs=1e-12)
    M = random_form(rng, 3, 1).matrix
    sm = CcSurface(3, 2, g, g, [[0.0, 1.0, 0.0]], precompose=M)
    for x in rng.normal(size=(5, 3)):
        assert eval_surface(sm, x) == pytest.approx((M @ x)[1], abs=1e-12)


def test_build_hinge_hyperplane():
    s = theorem1_build(HINGE, 1, [0], [1])
    for x in np.random.default_rng(0).normal(size=(20, 2)):
        assert eval_surface(s, x) == pytest.approx(x[0] + x[1] - 1.0, abs=1e-12)
    np.testing.assert_array_equal(s.normal_set, [[1, 1]])
    assert eval_surface(s, [0.25, 0.75]) == 0.0


def test_build_v_surface():
    s = theorem1_build(V_FN, 1, [0, 1], [2])
    assert s.levels == pytest.approx((2 / 3, 4 / 3))
    for u in np.linspace(-3, 3, 25):
        assert s.g1([u]) == pytest.approx(abs(u) / 2)
        assert s.g2([u]) == pytest.approx(abs(u))
        assert eval_surface(s, [1.7, u]) == pytest.approx(1.7 - abs(u) / 2)
    assert eval_surface(s, [1, 2]) == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_array_equal(s.normal_set, [[1, -0.5], [1, 0.5]])


@pytest.mark.parametrize("r", [2 / 3, 4 / 3, 1.0, 0.1])
def test_v_partial_conjugate_matches_oracle(r):
    g = partial_conjugate(V_FN, 1, [0, 1, 2], r)
    for u in np.linspace(-2, 2, 41):
        assert g([u]) == pytest.approx(g_oracle(V_FN, 1, [0, 1, 2], r, np.array([u])), abs=1e-12)
        assert g([u]) == pytest.approx(abs(u) * (1 - r / 2), abs=1e-12)


def test_v_zero_set_matches_crossing_oracle():
    s = theorem1_build(V_FN, 1, [0, 1], [2])
    for u in np.linspace(-2, 2, 41):
        x = crossing(V_FN, 1, [0, 1], [2], np.array([u]))
        assert x == pytest.approx(abs(u) / 2, abs=1e-9)
        assert abs(eval_surface(s, [x, u])) <= 1e-9


def test_build_rejects_gap_violation():
    with pytest.raises(InputError):
        theorem1_build(HINGE, 1, [1], [0])
    with pytest.raises(InputError):
        theorem1_build(HINGE, 1, [0], [0])


def test_build_symmetric_pair_gives_symmetry_plane():
    f = PolyConvexFn.from_pieces([((-1, 0.3), 0.5), ((1, 0.3), 0.5)])
    s = theorem1_build(f, 1, [0], [1])
    for x in np.random.default_rng(1).normal(size=(10, 2)):
        assert eval_surface(s, x) == pytest.approx(x[0], abs=1e-12)


@pytest.mark.parametrize("seed", range(40))
def test_random_build_against_oracles(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    f = random_poly(rng, d, int(rng.integers(2, 9)))
    j = int(rng.integers(1, d + 1))
    q = f.slopes[:, j - 1]
    order = np.argsort(q)
    cut = int(np.argmax(np.diff(q[order]))) + 1
    C1 = sorted(order[:cut][rng.random(cut) < 0.7].tolist() or [int(order[cut - 1])])
    C2 = sorted(order[cut:][rng.random(len(q) - cut) < 0.7].tolist() or [int(order[cut])])
    s = theorem1_build(f, j, C1, C2)
    C = C1 + C2
    r1, r2 = s.levels
    for u in rng.normal(size=(10, d - 1)):
        for r in (r1, r2):
            assert partial_conjugate(f, j, C, r)(u) == pytest.approx(g_oracle(f, j, C, r, u), abs=1e-9)
        x = np.insert(u, j - 1, crossing(f, j, C1, C2, u))
        assert abs(eval_surface(s, x)) <= 1e-8
        status = surface_gradient_check(s, s.point_at(u))
        assert status in ("pass", "nonsmooth")


def test_gradient_check_examples():
    assert surface_gradient_check(theorem1_build(HINGE, 1, [0], [1]), [0.3, 0.7]) == "pass"
    v = theorem1_build(V_FN, 1, [0, 1], [2])
    assert surface_gradient_check(v, [1, 2]) == "pass"
    assert surface_gradient_check(v, [0, 0]) == "nonsmooth"
    with pytest.raises(InputError):
        surface_gradient_check(v, [5, 0])


def test_gradient_check_fails_with_wrong_normals():
    s = theorem1_build(HINGE, 1, [0], [1])
    bad = CcSurface(2, 1, s.g1, s.g2, [[1.0, 0.0]])
    assert surface_gradient_check(bad, [0.3, 0.7]) == "fail"


def test_mean_value_witness():
    s = theorem1_build(V_FN, 1, [0, 1], [2])
    r, k, l, comb = mean_value_witness(V_FN, s, [1, 2])
    assert s.levels[0] <= r <= s.levels[1]
    assert (k, l) == (1, 2)
    assert comb[0] == pytest.approx(r)
    np.testing.assert_allclose(comb, [1, 0.5])
    assert mean_value_witness(V_FN, s, [3, 2]) is None


@pytest.mark.parametrize("seed", range(15))
def test_mean_value_witness_random(seed):
    rng = np.random.default_rng(100 + seed)
    f = random_poly(rng, 3, 5)
    q = f.slopes[:, 0]
    order = np.argsort(q)
    C1, C2 = [int(order[0]), int(order[1])], [int(order[3]), int(order[4])]
    s = theorem1_build(f, 1, C1, C2)
    for u in rng.normal(size=(10, 2)):
        r, k, l, comb = mean_value_witness(f, s, s.point_at(u))
        assert s.levels[0] <= r <= s.levels[1]
        assert k in C1 and l in C2
        assert comb[0] == pytest.approx(r)


def test_cover_sigma_j_A_examples():
    surfs = cover_sigma_j_A(HINGE, [0, 1], 1)
    assert len(surfs) == 1
    assert eval_surface(surfs[0], [0.2, 0.8]) == pytest.approx(0.0, abs=1e-12)
    flat = PolyConvexFn.from_pieces([((1, 0), 0), ((1, 2), 1), ((1, -1), 0)])
    assert cover_sigma_j_A(flat, [0, 1, 2], 1) == []
    three = PolyConvexFn.from_pieces([((0, 0), 0), ((1, 0), 1), ((2, 1), 0)])
    assert len(cover_sigma_j_A(three, [0, 1, 2], 1)) == 3


def test_cover_sigma_j_A_clustered_compacts():
    f = PolyConvexFn.from_pieces([((0, -1), 0), ((0, 1), 0), ((2, 0), 0), ((2.1, 0.05), 0.2)])
    surfs = cover_sigma_j_A(f, range(4), 1, epsilon=10.0, cluster_radius=2.1)
    assert [(s.c1, s.c2) for s in surfs] == [((0, 1), (2, 3)), ((2,), (3,))]
    assert len(cover_sigma_j_A(f, range(4), 1, epsilon=0.5, cluster_radius=2.1)) == 5
    for s in surfs:
        for u in np.linspace(-2, 2, 9):
            x = np.array([crossing(f, 1, s.c1, s.c2, np.array([u])), u])
            vals = f.piece_values(x)
            if max(vals[list(s.c1) + list(s.c2)]) >= vals.max() - 1e-9:
                assert abs(eval_surface(s, x)) <= 1e-8


def test_cover_sigma1_examples():
    G = MonotoneSet.build(STANDARD, [[0, 0], [1, 1]])
    surfs = cover_sigma1(G, 1)
    assert len(surfs) == 1
    for t in np.linspace(-2, 2, 9):
        assert eval_surface(surfs[0], [t, 1 - t]) == pytest.approx(0.0, abs=1e-12)
    assert eval_surface(surfs[0], [0, 0]) == pytest.approx(-1.0)
    chain = MonotoneSet.build(LAMBDA, [[0, 0], [1, 1], [2, 2]])
    assert cover_sigma1(chain, 1) == []
    assert cover_sigma1(MonotoneSet.build(STANDARD, [[0, 0]]), 1) == []


def test_cover_sigma0_examples():
    chain = MonotoneSet.build(LAMBDA, [[0, 0], [1, 1], [2, 2]])
    surfs = cover_sigma0(chain, 1, 0.1)
    assert len(surfs) == 3
    for s in surfs:
        for t in np.linspace(-2, 2, 9):
            assert eval_surface(s, [t, t]) == pytest.approx(0.0, abs=1e-12)
        assert eval_surface(s, [1, 0]) != pytest.approx(0.0)
        for w in s.normal_set:
            assert abs(LAMBDA.square(w)) <= 1e-9
    assert cover_sigma0(MonotoneSet.build(STANDARD, [[0, 0], [1, 1]]), 1, 0.1) == []
    with pytest.raises(InputError):
        cover_sigma0(chain, 1, 0.0)


def test_cover_sigma0_lines_examples():
    G = MonotoneSet.build(LAMBDA, [[0, 0], [1, 1]])
    (plane,) = cover_sigma0_lines(G, 1)
    for t in np.linspace(-2, 2, 9):
        assert plane.residual([t, t]) <= 1e-15
    assert plane.residual([1, 0]) == pytest.approx(np.sqrt(0.5))
    assert cover_sigma0_lines(MonotoneSet.build(LAMBDA, [[0, 0], [1, 0.2]]), 1) == []
    with pytest.raises(InputError):
        cover_sigma0_lines(MonotoneSet.build(ScalarProduct.euclidean(2), [[0, 0]]), 1)


def test_cover_sigma0_lines_deduplicates():
    chain = MonotoneSet.build(LAMBDA, [[0, 0], [1, 1], [2, 2], [3, 3]])
    assert len(cover_sigma0_lines(chain, 1)) == 1


def test_standard_form_staircase_lines():
    G = MonotoneSet.build(STANDARD, [[0, 0], [1, 0], [1, 1], [2, 1], [2, 2]])
    horizontal = cover_sigma0_lines(G, 1)
    vertical = cover_sigma0_lines(G, 2)
    assert sorted(float(p.anchor[1]) for p in horizontal) == [0.0, 1.0]
    assert sorted(float(p.anchor[0]) for p in vertical) == [1.0, 2.0]
    for p in horizontal:
        assert p.normal[0] == 0.0
    for p in vertical:
        assert p.normal[1] == 0.0


def test_verify_coverage_examples():
    G = MonotoneSet.build(STANDARD, [[0, 0], [1, 1]])
    surfs = cover_sigma1(G, 1)
    assert verify_coverage(surfs, []).total_points == 0
    pts = candidate_singular_points(G, 100, 3.0, 0)
    rep = verify_coverage(surfs, pts, lambda p: p.in_sigma1(1))
    assert rep.total_points == rep.covered == 200
    assert rep.max_residual <= 1e-9 and rep.normal_failures == 0
    off = [SingularPoint(p.location + [0.1, 0.0], p.witnesses, p.j_indices, p.order) for p in pts]
    rep = verify_coverage(surfs, off, tol=1e-8)
    assert rep.covered == 0


def test_verify_coverage_flags_bad_normals():
    G = MonotoneSet.build(STANDARD, [[0, 0], [1, 1]])
    (s,) = cover_sigma1(G, 1)
    bad = CcSurface(2, 1, s.g1, s.g2, [[1.0, 5.0]], precompose=s.precompose)
    pts = candidate_singular_points(G, 5, 1.0, 0)
    assert verify_coverage([bad], pts).normal_failures == len(pts)


@pytest.mark.parametrize("seed", range(10))
def test_monotone_coverage_random(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 4))
    m = int(rng.integers(1, d))
    sp = random_form(rng, d, m)
    G = random_isotropic_chain(sp, 7, seed) if seed % 2 else random_monotone(sp, 7, seed)
    pts = candidate_singular_points(G, 3, 2.0, seed)
    for j in range(1, d + 1):
        r1 = verify_coverage(cover_sigma1(G, j), pts, lambda p: p.in_sigma1(j), space=sp)
        r0 = verify_coverage(cover_sigma0(G, j, 0.1), pts, lambda p: p.in_sigma0_closure(j), space=sp)
        for rep in (r1, r0):
            assert rep.covered == rep.total_points and rep.normal_failures == 0
        if m == 1:
            rl = verify_coverage(cover_sigma0_lines(G, j), pts, lambda p: p.in_sigma0_closure(j), space=sp)
            assert rl.covered == rl.total_points and rl.normal_failures == 0


def test_clustered_monotone_coverage():
    G = random_monotone(ScalarProduct.canonical(3, 2), 12, 5)
    pts = candidate_singular_points(G, 3, 2.0, 5)
    for j in (1, 2, 3):
        surfs = cover_sigma1(G, j, epsilon=100.0, cluster_radius=1.5)
        rep = verify_coverage(surfs, pts, lambda p: p.in_sigma1(j))
        assert rep.covered == rep.total_points
