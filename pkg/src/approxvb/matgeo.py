"""Dense matrix geometry: Frobenius metric, orthogonal groups, Stiefel and
Grassmann manifolds, polar decomposition and Procrustes problems.

Frames are ``(D, d)`` arrays with orthonormal columns; projectors are
symmetric idempotent ``(n, n)`` arrays.  Every function here is pure.
"""

from __future__ import annotations

import numpy as np

from .errors import AmbiguityError, DegenerateInputError, RankError

ORTH_TOL = 1e-9
RANK_TOL = 1e-12
EIG_GAP_TOL = 1e-10


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DegenerateInputError(f"expected a 2-d array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DegenerateInputError("matrix has non-finite entries")
    return A


def frobenius_norm(A) -> float:
    A = np.asarray(A, dtype=float)
    return float(np.sqrt(np.sum(A * A)))


def frobenius_dist(A, B) -> float:
    """Frobenius distance ``||A - B||``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise DegenerateInputError(f"shape mismatch: {A.shape} vs {B.shape}")
    return frobenius_norm(A - B)


def is_orthogonal(M, tol: float = ORTH_TOL) -> bool:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    return frobenius_norm(M.T @ M - np.eye(M.shape[0])) <= tol


def is_frame(M, tol: float = ORTH_TOL) -> bool:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[1] > M.shape[0]:
        return False
    return frobenius_norm(M.T @ M - np.eye(M.shape[1])) <= tol


def is_projector(A, tol: float = ORTH_TOL) -> bool:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    if frobenius_norm(A - A.T) > tol or frobenius_norm(A @ A - A) > tol:
        return False
    tr = np.trace(A)
    return abs(tr - round(tr)) <= 1e-6


def check_orthogonal(M, tol: float = ORTH_TOL) -> np.ndarray:
    M = _as_matrix(M)
    if not is_orthogonal(M, tol):
        raise DegenerateInputError("matrix is not orthogonal within tolerance")
    return M


def polar_orthogonal_factor(M) -> np.ndarray:
    """Orthogonal factor ``U`` of the polar decomposition ``M = U P``.

    ``M`` is ``(D, d)`` with ``D >= d``; ``U`` is then a frame and
    ``P = (M^t M)^{1/2}``.  Computed from the SVD ``M = W S V^t`` as
    ``U = W V^t``.

    Raises
    ------
    RankError
        If the smallest singular value of ``M`` is at most ``1e-12``.
    """
    M = _as_matrix(M)
    if M.shape[0] < M.shape[1]:
        raise DegenerateInputError(f"polar factor needs rows >= cols, got {M.shape}")
    W, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s[-1] <= RANK_TOL:
        raise RankError(f"matrix is rank deficient (smallest singular value {s[-1]:.3e})")
    return W @ Vt


def procrustes(M, N) -> np.ndarray:
    """Orthogonal ``Omega`` minimizing ``||M Omega - N||`` over ``O(d)``."""
    M = _as_matrix(M)
    N = _as_matrix(N)
    if M.shape != N.shape:
        raise DegenerateInputError(f"shape mismatch: {M.shape} vs {N.shape}")
    return polar_orthogonal_factor(M.T @ N)


def procrustes_batch(M, N) -> np.ndarray:
    """Vectorized :func:`procrustes` over stacks of shape ``(m, D, d)``.

    Returns the stack of minimizers and raises :class:`RankError` naming the
    first degenerate position.
    """
    M = np.asarray(M, dtype=float)
    N = np.asarray(N, dtype=float)
    if M.shape != N.shape or M.ndim != 3:
        raise DegenerateInputError(f"expected equal (m, D, d) stacks, got {M.shape}, {N.shape}")
    if M.shape[0] == 0:
        return np.zeros((0, M.shape[2], M.shape[2]))
    C = np.einsum("mki,mkj->mij", M, N)
    W, s, Vt = np.linalg.svd(C)
    bad = np.flatnonzero(s[:, -1] <= RANK_TOL)
    if bad.size:
        err = RankError(f"degenerate Procrustes problem at position {int(bad[0])}")
        err.position = int(bad[0])
        raise err
    return W @ Vt


def grassmann_project(A, d: int) -> np.ndarray:
    """Closest rank-``d`` orthogonal projector to ``A``.

    Symmetrizes, eigendecomposes with eigenvalues in descending order and
    returns ``Q J_d Q^t``.  A tie between the ``d``-th and ``(d+1)``-th
    eigenvalues raises :class:`AmbiguityError`.
    """
    A = _as_matrix(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise DegenerateInputError("grassmann_project needs a square matrix")
    if not 0 <= d <= n:
        raise DegenerateInputError(f"rank {d} out of range for n={n}")
    S = 0.5 * (A + A.T)
    w, Q = np.linalg.eigh(S)
    w = w[::-1]
    Q = Q[:, ::-1]
    if 0 < d < n and w[d - 1] - w[d] <= EIG_GAP_TOL:
        raise AmbiguityError(f"eigenvalue tie at rank cut {d}: {w[d - 1]!r} vs {w[d]!r}")
    Qd = Q[:, :d]
    return Qd @ Qd.T


def frame_projector(M) -> np.ndarray:
    M = _as_matrix(M)
    return M @ M.T


def random_orthogonal(d: int, rng: np.random.Generator, det: int | None = None) -> np.ndarray:
    """Haar-distributed orthogonal matrix, optionally with prescribed determinant."""
    Z = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    Q = Q * np.sign(np.diag(R))
    if det is not None and np.sign(np.linalg.det(Q)) != det:
        Q[:, 0] = -Q[:, 0]
    return Q


def random_frame(D: int, d: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((D, d))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


def so2_from_angle(r: float) -> np.ndarray:
    """Rotation by ``2 pi r``."""
    c = np.cos(2 * np.pi * r)
    s = np.sin(2 * np.pi * r)
    return np.array([[c, -s], [s, c]])


def so2_lift(R) -> float:
    """Principal lift ``r`` in ``[-1/2, 1/2)`` with ``so2_from_angle(r) == R``."""
    R = np.asarray(R, dtype=float)
    if R.shape != (2, 2):
        raise DegenerateInputError(f"expected a 2x2 rotation, got shape {R.shape}")
    return float(so2_lift_batch(R[None])[0])


def so2_lift_batch(R) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    r = np.arctan2(R[:, 1, 0], R[:, 0, 0]) / (2 * np.pi)
    # atan2 returns (-pi, pi]; fold the endpoint onto -1/2
    return np.where(r >= 0.5, r - 1.0, r)
