import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from approxvb import matgeo
from approxvb.errors import AmbiguityError, DegenerateInputError, RankError

SEEDS = st.integers(0, 2**32 - 1)


def test_frobenius_examples():
    I2 = np.eye(2)
    assert matgeo.frobenius_dist(I2, I2) == 0.0
    assert matgeo.frobenius_dist(I2, -I2) == pytest.approx(np.sqrt(8))
    assert matgeo.frobenius_dist(np.diag([1.0, 0]), np.diag([0, 1.0])) == pytest.approx(np.sqrt(2))


def test_frobenius_shape_mismatch():
    with pytest.raises(DegenerateInputError):
        matgeo.frobenius_dist(np.eye(2), np.eye(3))


@given(SEEDS)
def test_frobenius_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    A, B, C = rng.standard_normal((3, 3, 4))
    dab = matgeo.frobenius_dist(A, B)
    assert dab == pytest.approx(matgeo.frobenius_dist(B, A))
    assert matgeo.frobenius_dist(A, C) <= dab + matgeo.frobenius_dist(B, C) + 1e-12


def test_polar_examples():
    Q = matgeo.random_orthogonal(3, np.random.default_rng(0))
    np.testing.assert_allclose(matgeo.polar_orthogonal_factor(Q), Q, atol=1e-12)
    np.testing.assert_allclose(matgeo.polar_orthogonal_factor(np.diag([2.0, 3.0])), np.eye(2), atol=1e-12)


@given(SEEDS)
def test_polar_reconstructs_via_eigendecomposition(seed):
    M = np.random.default_rng(seed).standard_normal((4, 2))
    U = matgeo.polar_orthogonal_factor(M)
    assert np.linalg.norm(U.T @ U - np.eye(2)) < 1e-9
    # independent square root of M^t M
    w, V = np.linalg.eigh(M.T @ M)
    P = V @ np.diag(np.sqrt(w)) @ V.T
    np.testing.assert_allclose(U @ P, M, atol=1e-8)


def test_polar_rank_error():
    with pytest.raises(RankError):
        matgeo.polar_orthogonal_factor(np.array([[1.0, 0], [0, 0], [0, 0]]))


def test_polar_continuity_constant():
    rng = np.random.default_rng(5)
    ratios = []
    for _ in range(50):
        M = matgeo.random_frame(5, 2, rng) + 0.1 * rng.standard_normal((5, 2))
        E = rng.standard_normal((5, 2))
        E *= rng.uniform(1e-4, 0.1) / np.linalg.norm(E)
        ratios.append(np.linalg.norm(matgeo.polar_orthogonal_factor(M + E) - matgeo.polar_orthogonal_factor(M))
                      / np.linalg.norm(E))
    # smallest singular value of M stays above ~0.5 here, so C is O(1)
    assert max(ratios) < 5.0


def test_procrustes_examples():
    rng = np.random.default_rng(1)
    M = matgeo.random_frame(5, 3, rng)
    np.testing.assert_allclose(matgeo.procrustes(M, M), np.eye(3), atol=1e-12)
    Q = matgeo.random_orthogonal(3, rng, det=-1)
    np.testing.assert_allclose(matgeo.procrustes(M, M @ Q), Q, atol=1e-9)


def test_procrustes_rank_error():
    M = np.array([[1.0, 0], [0, 1.0], [0, 0]])
    N = np.array([[1.0, 0], [0, 0], [0, 1.0]])
    with pytest.raises(RankError):
        matgeo.procrustes(M, N)


def _o2_grid(n):
    t = 2 * np.pi * np.arange(n) / n
    c, s = np.cos(t), np.sin(t)
    rot = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    ref = rot @ np.diag([1.0, -1.0])
    return np.concatenate([rot, ref])


def test_procrustes_matches_o2_grid_search():
    rng = np.random.default_rng(2)
    grid = _o2_grid(5000)
    for _ in range(20):
        M, N = matgeo.random_frame(4, 2, rng), matgeo.random_frame(4, 2, rng)
        best = np.min(np.linalg.norm(M @ grid - N, axis=(1, 2)))
        got = np.linalg.norm(M @ matgeo.procrustes(M, N) - N)
        assert got <= best + 1e-12
        assert best - got < 1e-3


@settings(max_examples=30)
@given(SEEDS, st.integers(1, 3))
def test_procrustes_beats_random_orthogonals(seed, d):
    rng = np.random.default_rng(seed)
    M, N = matgeo.random_frame(5, d, rng), matgeo.random_frame(5, d, rng)
    got = np.linalg.norm(M @ matgeo.procrustes(M, N) - N)
    Qs = np.array([matgeo.random_orthogonal(d, rng) for _ in range(1000)])
    assert got <= np.linalg.norm(M @ Qs - N, axis=(1, 2)).min() + 1e-12


def test_procrustes_batch_matches_single():
    rng = np.random.default_rng(3)
    M = np.array([matgeo.random_frame(6, 3, rng) for _ in range(10)])
    N = np.array([matgeo.random_frame(6, 3, rng) for _ in range(10)])
    B = matgeo.procrustes_batch(M, N)
    for a, b, q in zip(M, N, B):
        np.testing.assert_allclose(q, matgeo.procrustes(a, b), atol=1e-12)


def test_grassmann_examples():
    P = matgeo.frame_projector(matgeo.random_frame(4, 2, np.random.default_rng(4)))
    np.testing.assert_allclose(matgeo.grassmann_project(P, 2), P, atol=1e-12)
    np.testing.assert_allclose(matgeo.grassmann_project(np.diag([0.9, 0.1]), 1), np.diag([1.0, 0.0]), atol=1e-12)


@given(SEEDS)
def test_grassmann_symmetrizes_and_is_idempotent(seed):
    A = np.random.default_rng(seed).standard_normal((4, 4))
    P = matgeo.grassmann_project(A, 2)
    np.testing.assert_allclose(P, matgeo.grassmann_project(0.5 * (A + A.T), 2), atol=1e-9)
    np.testing.assert_allclose(matgeo.grassmann_project(P, 2), P, atol=1e-9)
    assert matgeo.is_projector(P)
    assert np.trace(P) == pytest.approx(2)


def test_grassmann_tie_is_ambiguous():
    with pytest.raises(AmbiguityError):
        matgeo.grassmann_project(np.eye(3), 1)


def test_frame_projector_examples():
    np.testing.assert_array_equal(matgeo.frame_projector(np.array([[1.0], [0.0]])), np.diag([1.0, 0.0]))
    rng = np.random.default_rng(6)
    M = matgeo.random_frame(5, 2, rng)
    Q = matgeo.random_orthogonal(2, rng)
    np.testing.assert_allclose(matgeo.frame_projector(M @ Q), matgeo.frame_projector(M), atol=1e-12)


@given(SEEDS)
def test_frame_projector_lipschitz(seed):
    rng = np.random.default_rng(seed)
    M, N = matgeo.random_frame(3, 1, rng), matgeo.random_frame(3, 1, rng)
    lhs = np.linalg.norm(matgeo.frame_projector(M) - matgeo.frame_projector(N))
    assert lhs <= np.sqrt(2) * np.linalg.norm(M - N) + 1e-12


@given(SEEDS, st.integers(1, 3))
def test_grassmann_and_stiefel_metrics_equivalent(seed, d):
    rng = np.random.default_rng(seed)
    M, N = matgeo.random_frame(5, d, rng), matgeo.random_frame(5, d, rng)
    dq = np.linalg.norm(M @ matgeo.procrustes(M, N) - N)
    dfr = np.linalg.norm(matgeo.frame_projector(M) - matgeo.frame_projector(N))
    assert dq <= dfr + 1e-9
    assert dfr <= np.sqrt(2) * dq + 1e-9


def test_so2_examples():
    assert matgeo.so2_lift(np.eye(2)) == 0.0
    assert matgeo.so2_lift(matgeo.so2_from_angle(0.25)) == pytest.approx(0.25)
    np.testing.assert_allclose(matgeo.so2_from_angle(0.0), np.eye(2), atol=1e-15)
    np.testing.assert_allclose(matgeo.so2_from_angle(0.5), -np.eye(2), atol=1e-15)
    np.testing.assert_allclose(matgeo.so2_from_angle(1.0), np.eye(2), atol=1e-15)
    # the endpoint 1/2 is folded onto -1/2
    assert matgeo.so2_lift(-np.eye(2)) == -0.5


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_so2_morphism_and_roundtrip(r, s):
    np.testing.assert_allclose(matgeo.so2_from_angle(r + s),
                               matgeo.so2_from_angle(r) @ matgeo.so2_from_angle(s), atol=1e-12)
    R = matgeo.so2_from_angle(r)
    lift = matgeo.so2_lift(R)
    assert -0.5 <= lift < 0.5
    np.testing.assert_allclose(matgeo.so2_from_angle(lift), R, atol=1e-12)


def test_predicates():
    assert matgeo.is_orthogonal(np.diag([1.0, -1.0]))
    assert not matgeo.is_orthogonal(np.diag([1.0, 2.0]))
    assert matgeo.is_frame(np.eye(3)[:, :2])
    assert matgeo.is_projector(np.diag([1.0, 0.0]))
    assert not matgeo.is_projector(np.diag([0.5, 0.0]))
