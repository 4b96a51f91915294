import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from approxvb import bundle, matgeo
from approxvb.bundle import (DiscreteCocycle, DiscreteTrivialization, ZeroCochainO, act, average_classifying,
                             consistency_radius, d_z, epsilon_death, orient, refine, triangle_defect,
                             triangle_defects, triv_at, witness)
from approxvb.complex import Filtration, SimplicialComplex
from approxvb.errors import DegenerateInputError, ObstructionError, RankError
from helpers import complete_complex, exact_cocycle, perturb, planted_trivialization, random_filtration

SEEDS = st.integers(0, 2**32 - 1)


def test_triangle_defect_examples():
    K = SimplicialComplex.from_simplices([(0, 1, 2)])
    om = DiscreteCocycle.identity(K, 2)
    assert triangle_defect(om, (0, 1, 2)) == 0.0
    vals = {(0, 1): np.eye(2), (1, 2): np.eye(2), (0, 2): -np.eye(2)}
    bad = DiscreteCocycle.from_function(K, 2, lambda i, j: vals[(i, j)])
    assert triangle_defect(bad, (0, 1, 2)) == pytest.approx(np.sqrt(8))
    with pytest.raises(KeyError):
        triangle_defect(bad, (0, 1, 3))


@given(SEEDS, st.integers(1, 4))
def test_triangle_defect_ordering_invariance(seed, d):
    rng = np.random.default_rng(seed)
    K = SimplicialComplex.from_simplices([(0, 1, 2)])
    om = DiscreteCocycle(K, d, np.array([matgeo.random_orthogonal(d, rng) for _ in range(3)]))
    brute = []
    for a, b, c in itertools.permutations(range(3)):
        brute.append(np.linalg.norm(om(a, b) @ om(b, c) - om(a, c)))
        assert triangle_defect(om, (a, b, c)) == pytest.approx(brute[-1], abs=1e-12)
    assert max(brute) - min(brute) < 1e-9
    assert triangle_defects(om)[0] == pytest.approx(brute[0], abs=1e-12)


def test_symmetry_is_structural():
    rng = np.random.default_rng(0)
    K = complete_complex(4)
    om = DiscreteCocycle(K, 3, np.array([matgeo.random_orthogonal(3, rng) for _ in range(K.n_simplices(1))]))
    for i, j in itertools.permutations(range(4), 2):
        np.testing.assert_array_equal(om(i, j), om(j, i).T)
    np.testing.assert_array_equal(om(2, 2), np.eye(3))
    rows = np.array([[0, 1], [1, 0], [3, 2], [2, 2]])
    got = om.ordered(rows)
    for r, M in zip(rows, got):
        np.testing.assert_array_equal(M, om(*r))


def test_cocycle_validation():
    K = SimplicialComplex.from_simplices([(0, 1)])
    with pytest.raises(DegenerateInputError):
        DiscreteCocycle(K, 2, np.array([[[1.0, 0], [0, 2.0]]]))
    with pytest.raises(DegenerateInputError):
        DiscreteCocycle(K, 2, np.zeros((2, 2, 2)))


def test_consistency_radius_examples():
    rng = np.random.default_rng(1)
    om, _ = exact_cocycle(complete_complex(5), 3, rng)
    assert consistency_radius(om) < 1e-12
    K = SimplicialComplex.from_simplices([(0, 1, 2)])
    vals = {(0, 1): np.eye(2), (1, 2): np.eye(2), (0, 2): -np.eye(2)}
    assert consistency_radius(DiscreteCocycle.from_function(K, 2, lambda i, j: vals[(i, j)])) == pytest.approx(np.sqrt(8))
    assert consistency_radius(DiscreteCocycle.identity(SimplicialComplex.from_simplices([(0, 1)]), 2)) == 0.0


def _nearest_exact_search(om, rng, restarts=20, iters=200):
    """Search for ``g`` making ``g_i g_j^t`` close to ``Omega_ij`` (complete complex: exact = coboundary).

    Synchronization sweeps ``g_i <- polar(sum_j Omega_ij g_j)`` from random starts,
    with random single-vertex moves accepted when they lower ``d_Z``.
    """
    K, d = om.complex, om.d
    n = K.n_vertices

    def dist(g):
        return d_z(om, DiscreteCocycle.from_function(K, d, lambda i, j: g[i] @ g[j].T))

    best = np.inf
    for _ in range(restarts):
        g = np.array([matgeo.random_orthogonal(d, rng) for _ in range(n)])
        for _ in range(30):
            for i in range(n):
                g[i] = matgeo.polar_orthogonal_factor(sum(om(i, j) @ g[j] for j in range(n) if j != i))
        cur = dist(g)
        for _ in range(iters):
            i = rng.integers(n)
            trial = g.copy()
            trial[i] = trial[i] @ perturb_matrix(d, 0.2, rng)
            val = dist(trial)
            if val < cur:
                g, cur = trial, val
        best = min(best, cur)
    return best


def perturb_matrix(d, size, rng):
    from scipy.linalg import expm

    A = rng.standard_normal((d, d))
    A = A - A.T
    return expm(A * (rng.uniform(0, size) / max(np.linalg.norm(A), 1e-300)))


def test_distance_to_exact_cocycles_bounded_below():
    rng = np.random.default_rng(2)
    for _ in range(3):
        base, _ = exact_cocycle(complete_complex(4), 2, rng)
        om = perturb(base, 0.8, rng)
        rho = consistency_radius(om)
        found = _nearest_exact_search(om, rng)
        assert found >= rho / 3 - 1e-9
        # the planted exact cocycle is itself a candidate
        assert d_z(om, base) >= rho / 3 - 1e-9


def _filtration_with_defects(defects, births):
    n = len(births) + 2
    tris = [(0, 1, k + 2) for k in range(len(births))]
    K = SimplicialComplex.from_simplices(tris, n)
    F = Filtration(K, [np.zeros(n), np.zeros(K.n_simplices(1)), np.array(births, float)], max(births) + 1)
    vals = {}
    for (a, b, c), t in zip(tris, defects):
        # Omega_0c = R(theta) with ||R(theta) - I|| = t
        theta = 2 * np.arcsin(t / (2 * np.sqrt(2)))
        vals[(a, c)] = matgeo.so2_from_angle(theta / (2 * np.pi))
    om = DiscreteCocycle.from_function(F.complex, 2, lambda i, j: vals.get((i, j), np.eye(2)))
    return om, F


def test_epsilon_death_examples():
    om, F = _filtration_with_defects([0.5], [2.0])
    assert triangle_defects(om)[0] == pytest.approx(0.5)
    assert epsilon_death(om, F, 0.3) == 2.0
    assert epsilon_death(om, F, 0.6) == F.threshold


def test_epsilon_death_linear_scan_and_monotone():
    rng = np.random.default_rng(5)
    for _ in range(10):
        F = random_filtration(rng, max_dim=2)
        if F.dim < 2:
            continue
        om = DiscreteCocycle(F.complex, 2, np.array([matgeo.random_orthogonal(2, rng, 1)
                                                     for _ in range(F.complex.n_simplices(1))]))
        t = triangle_defects(om)
        eps_grid = np.sort(rng.uniform(0, 2.9, 8))
        deaths = []
        for eps in eps_grid:
            scan = F.threshold
            for b, dft in sorted(zip(F.births[2], t)):
                if dft >= eps:
                    scan = b
                    break
            deaths.append(epsilon_death(om, F, eps))
            assert deaths[-1] == scan
        assert all(a <= b for a, b in zip(deaths, deaths[1:]))


def test_witness_examples():
    rng = np.random.default_rng(6)
    K = SimplicialComplex.from_simplices([(0, 1)])
    M = matgeo.random_frame(5, 2, rng)
    np.testing.assert_allclose(witness(DiscreteTrivialization(K, np.array([M, M]))).values[0], np.eye(2), atol=1e-12)
    Q = matgeo.random_orthogonal(2, rng)
    np.testing.assert_allclose(witness(DiscreteTrivialization(K, np.array([M, M @ Q]))).values[0], Q, atol=1e-9)


def test_witness_rank_error_names_edge():
    K = SimplicialComplex.from_simplices([(0, 1), (1, 2)])
    e = np.eye(3)
    frames = np.array([e[:, [0]], e[:, [0]], e[:, [1]]])
    with pytest.raises(RankError, match=r"\(1, 2\)"):
        witness(DiscreteTrivialization(K, frames))


def test_witness_of_exact_trivialization_is_exact():
    rng = np.random.default_rng(7)
    K = complete_complex(6)
    phi, _ = planted_trivialization(K, 6, 3, 0.0, rng)
    assert consistency_radius(witness(phi)) < 1e-9


@pytest.mark.parametrize("d,D", [(1, 4), (2, 4), (3, 4), (1, 8), (2, 8), (3, 8)])
def test_planted_witness_bounds(d, D):
    rng = np.random.default_rng(10 * d + D)
    K = complete_complex(5)
    for _ in range(100):
        eps = rng.uniform(0.01, 0.3)
        phi, star = planted_trivialization(K, D, d, eps, rng)
        # phi really is an eps-trivialization for star
        E = K.simplices[1]
        gaps = np.linalg.norm(phi.frames[E[:, 0]] @ star.values - phi.frames[E[:, 1]], axis=(1, 2))
        assert gaps.max() <= eps + 1e-12
        om = witness(phi)
        assert d_z(om, star) <= 2 * eps + 1e-12
        assert consistency_radius(om) <= 3 * eps + 1e-12


def test_act_examples_and_isometry():
    rng = np.random.default_rng(8)
    K = complete_complex(5)
    om = DiscreteCocycle(K, 3, np.array([matgeo.random_orthogonal(3, rng) for _ in range(K.n_simplices(1))]))
    other = DiscreteCocycle(K, 3, np.array([matgeo.random_orthogonal(3, rng) for _ in range(K.n_simplices(1))]))
    ident = ZeroCochainO(np.broadcast_to(np.eye(3), (5, 3, 3)))
    np.testing.assert_allclose(act(ident, om).values, om.values, atol=1e-15)
    th = ZeroCochainO(np.array([matgeo.random_orthogonal(3, rng) for _ in range(5)]))
    np.testing.assert_allclose(act(th.inverse(), act(th, om)).values, om.values, atol=1e-12)
    assert consistency_radius(act(th, om)) == pytest.approx(consistency_radius(om), abs=1e-12)
    np.testing.assert_allclose(triangle_defects(act(th, om)), triangle_defects(om), atol=1e-12)
    assert d_z(act(th, om), act(th, other)) == pytest.approx(d_z(om, other), abs=1e-12)
    with pytest.raises(DegenerateInputError):
        act(ZeroCochainO(np.broadcast_to(np.eye(2), (5, 2, 2))), om)


def test_triv_at_examples():
    rng = np.random.default_rng(9)
    K = complete_complex(4)
    om, _ = exact_cocycle(K, 2, rng)
    F = triv_at(om, {1: 1.0}, 1)
    expect = np.zeros((8, 2))
    expect[2:4] = np.eye(2)
    np.testing.assert_allclose(F, expect, atol=1e-15)
    w = {0: 0.2, 1: 0.5, 3: 0.3}
    for i, j in [(0, 1), (1, 3), (0, 3)]:
        Fi, Fj = triv_at(om, w, i), triv_at(om, w, j)
        assert matgeo.is_frame(Fi)
        assert np.linalg.norm(Fi @ om(i, j) - Fj) < 1e-12
    with pytest.raises(DegenerateInputError):
        triv_at(om, {0: 0.5, 1: 0.6}, 0)
    with pytest.raises(DegenerateInputError):
        triv_at(om, {0: 0.5, 1: 0.5}, 2)


def test_triv_at_pair_defect_blockwise():
    rng = np.random.default_rng(10)
    K = complete_complex(4, dim=3)
    base, _ = exact_cocycle(K, 2, rng)
    om = perturb(base, 0.3, rng)
    eps = consistency_radius(om) + 1e-9
    for _ in range(100):
        w = rng.dirichlet(np.ones(4))
        i, j = rng.choice(4, 2, replace=False)
        got = np.linalg.norm(triv_at(om, w, int(i)) @ om(i, j) - triv_at(om, w, int(j)))
        block = np.sqrt(sum(w[k] * np.linalg.norm(om(k, i) @ om(i, j) - om(k, j)) ** 2 for k in range(4)))
        assert got == pytest.approx(block, abs=1e-12)
        assert got < eps


def test_average_classifying():
    rng = np.random.default_rng(11)
    M = matgeo.random_frame(5, 2, rng)
    P = matgeo.frame_projector(M)
    np.testing.assert_allclose(average_classifying([M], [1.0]), P, atol=1e-15)
    np.testing.assert_allclose(average_classifying([M, M], [0.5, 0.5]), P, atol=1e-15)
    for _ in range(50):
        A, B = matgeo.random_frame(5, 2, rng), matgeo.random_frame(5, 2, rng)
        t = rng.uniform()
        avg = average_classifying([A, B], [t, 1 - t])
        dq = np.linalg.norm(A @ matgeo.procrustes(A, B) - B)
        if np.sqrt(2) * dq >= np.sqrt(2) / 2:
            continue
        assert np.linalg.norm(avg - matgeo.grassmann_project(avg, 2)) <= np.sqrt(2) * dq + 1e-12
    with pytest.raises(DegenerateInputError):
        average_classifying([M, M], [0.7, 0.7])


def test_refine():
    rng = np.random.default_rng(12)
    K = complete_complex(4)
    om = perturb(exact_cocycle(K, 2, rng)[0], 0.5, rng)
    np.testing.assert_array_equal(refine(om, K, np.arange(4)).values, om.values)
    # L: path 0-1-2 where 0 and 1 both map to vertex 0
    L = SimplicialComplex.from_simplices([(0, 1), (1, 2)])
    pulled = refine(om, L, [0, 0, 3])
    np.testing.assert_array_equal(pulled(0, 1), np.eye(2))
    np.testing.assert_allclose(pulled(1, 2), om(0, 3))
    # subdivide triangle (0,1,2) with a barycenter 4 mapped onto vertex 0
    sub = SimplicialComplex.from_simplices([(0, 1, 4), (1, 2, 4), (0, 2, 4), (0, 1, 3), (1, 2, 3), (0, 2, 3)], 5)
    pulled = refine(om, sub, [0, 1, 2, 3, 0])
    assert consistency_radius(pulled) <= consistency_radius(om) + 1e-12
    with pytest.raises(DegenerateInputError):
        refine(om, SimplicialComplex.from_simplices([(0, 1)]), [0, 7])
    bad = SimplicialComplex.from_simplices([(0, 1)])
    tree = SimplicialComplex.from_simplices([(0, 1), (1, 2)])
    om_tree = DiscreteCocycle.identity(tree, 2)
    with pytest.raises(DegenerateInputError):
        refine(om_tree, bad, [0, 2])


def test_orient_examples():
    rng = np.random.default_rng(13)
    K = complete_complex(4)
    om, _ = exact_cocycle(K, 2, rng, det=1)
    np.testing.assert_allclose(orient(om).values, om.values)
    flip = np.array([np.eye(2)] * 4)
    flip[2] = np.diag([1.0, -1.0])
    twisted = act(ZeroCochainO(flip), om)
    assert np.any(twisted.determinants() < 0)
    fixed = orient(twisted)
    assert np.all(fixed.determinants() > 0)


def test_orient_random_tree_plus_loops():
    rng = np.random.default_rng(14)
    for _ in range(20):
        n = 9
        edges = {(int(rng.integers(0, i)), i) for i in range(1, n)}
        while len(edges) < n + 4:
            a, b = sorted(rng.choice(n, 2, replace=False))
            edges.add((int(a), int(b)))
        K = SimplicialComplex.from_simplices(edges, n)
        base, _ = exact_cocycle(K, 3, rng, det=1)
        signs = rng.choice([1.0, -1.0], n)
        th = ZeroCochainO(np.array([np.diag([1, 1, s]) @ matgeo.random_orthogonal(3, rng, 1) for s in signs]))
        om = perturb(act(th, base), 0.2, rng)
        out = orient(om)
        assert np.all(out.determinants() > 0)
        np.testing.assert_allclose(triangle_defects(out), triangle_defects(om), atol=1e-12)


def test_orient_obstruction():
    K = SimplicialComplex.from_simplices([(0, 1), (1, 2), (0, 2)])
    vals = np.array([np.eye(2), np.eye(2), np.diag([1.0, -1.0])])
    with pytest.raises(ObstructionError):
        orient(DiscreteCocycle(K, 2, vals))


@settings(max_examples=25)
@given(SEEDS)
def test_solve_z2_potential_matches_linear_algebra(seed):
    rng = np.random.default_rng(seed)
    K = complete_complex(5, dim=1)
    s = rng.integers(0, 2, K.n_simplices(1))
    t = bundle.solve_z2_potential(K, s)
    E = K.simplices[1]
    # s is a coboundary iff it sums to 0 around every triangle of the complete graph
    consistent = all((s[K.index([[a, b]])[0]] + s[K.index([[b, c]])[0]] + s[K.index([[a, c]])[0]]) % 2 == 0
                     for a, b, c in itertools.combinations(range(5), 3))
    assert (t is not None) == consistent
    if t is not None:
        np.testing.assert_array_equal((t[E[:, 1]] - t[E[:, 0]]) % 2, s)
