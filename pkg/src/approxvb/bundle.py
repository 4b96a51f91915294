"""Discrete approximate cocycles and local trivializations on simplicial
complexes.

A :class:`DiscreteCocycle` stores one orthogonal ``d x d`` matrix per edge
``(i, j)`` with ``i < j``; the value on the reversed edge is the transpose.
The cocycle condition reads ``Omega_ij Omega_jk ~ Omega_ik``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import matgeo
from .complex import Cochain, Filtration, SimplicialComplex
from .errors import DegenerateInputError, ObstructionError, RankError

# defects are compared against strict bounds; O(2) defects of exactly 2 round to 2 - 4e-16
DEFECT_TOL = 1e-9


def _check_orthogonal_stack(Q: np.ndarray, tol: float = matgeo.ORTH_TOL) -> None:
    if Q.shape[0] == 0:
        return
    eye = np.eye(Q.shape[-1])
    err = np.sqrt(np.sum((np.einsum("mki,mkj->mij", Q, Q) - eye) ** 2, axis=(1, 2)))
    bad = np.flatnonzero(err > tol)
    if bad.size:
        raise DegenerateInputError(f"value at position {int(bad[0])} is not orthogonal (error {err[bad[0]]:.2e})")


@dataclass(frozen=True)
class DiscreteCocycle:
    complex: SimplicialComplex
    d: int
    values: np.ndarray

    def __post_init__(self):
        V = np.array(self.values, dtype=float).reshape(-1, self.d, self.d)
        if V.shape[0] != self.complex.n_simplices(1):
            raise DegenerateInputError(f"need one matrix per edge ({self.complex.n_simplices(1)}), got {V.shape[0]}")
        if not np.all(np.isfinite(V)):
            raise DegenerateInputError("cocycle values must be finite")
        _check_orthogonal_stack(V)
        V.setflags(write=False)
        object.__setattr__(self, "values", V)

    @classmethod
    def from_function(cls, complex: SimplicialComplex, d: int, fn) -> DiscreteCocycle:
        """Build from ``fn(i, j)`` evaluated on every edge with ``i < j``."""
        vals = [fn(int(i), int(j)) for i, j in complex.simplices[1]] if complex.dim >= 1 else []
        return cls(complex, d, np.array(vals, dtype=float).reshape(-1, d, d))

    @classmethod
    def identity(cls, complex: SimplicialComplex, d: int) -> DiscreteCocycle:
        return cls(complex, d, np.broadcast_to(np.eye(d), (complex.n_simplices(1), d, d)))

    def __call__(self, i: int, j: int) -> np.ndarray:
        """``Omega_ij`` for an ordered pair (identity when ``i == j``)."""
        if i == j:
            return np.eye(self.d)
        a, b = (i, j) if i < j else (j, i)
        pos = self.complex.index(np.array([[a, b]]), 1)[0]
        M = self.values[pos]
        return M if i < j else M.T

    def ordered(self, edges: np.ndarray) -> np.ndarray:
        """Stack of ``Omega_ij`` for rows ``(i, j)`` of ``edges`` in any orientation."""
        edges = np.asarray(edges, dtype=np.int64)
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        out = np.empty((edges.shape[0], self.d, self.d))
        same = lo == hi
        out[same] = np.eye(self.d)
        if np.any(~same):
            pos = self.complex.index(np.column_stack([lo[~same], hi[~same]]), 1)
            M = self.values[pos]
            flip = (edges[~same, 0] > edges[~same, 1])
            M = np.where(flip[:, None, None], np.swapaxes(M, 1, 2), M)
            out[~same] = M
        return out

    def determinants(self) -> np.ndarray:
        return np.linalg.det(self.values) if self.values.shape[0] else np.zeros(0)


@dataclass(frozen=True)
class DiscreteTrivialization:
    complex: SimplicialComplex
    frames: np.ndarray

    def __post_init__(self):
        F = np.array(self.frames, dtype=float)
        if F.ndim != 3 or F.shape[0] != self.complex.n_vertices:
            raise DegenerateInputError("need one (D, d) frame per vertex")
        eye = np.eye(F.shape[2])
        err = np.sqrt(np.sum((np.einsum("mki,mkj->mij", F, F) - eye) ** 2, axis=(1, 2)))
        if F.shape[0] and err.max() > matgeo.ORTH_TOL:
            raise DegenerateInputError(f"frame at vertex {int(np.argmax(err))} is not orthonormal")
        F.setflags(write=False)
        object.__setattr__(self, "frames", F)

    @property
    def D(self) -> int:
        return self.frames.shape[1]

    @property
    def d(self) -> int:
        return self.frames.shape[2]


@dataclass(frozen=True)
class ZeroCochainO:
    values: np.ndarray

    def __post_init__(self):
        V = np.array(self.values, dtype=float)
        _check_orthogonal_stack(V)
        V.setflags(write=False)
        object.__setattr__(self, "values", V)

    def inverse(self) -> ZeroCochainO:
        return ZeroCochainO(np.swapaxes(self.values, 1, 2))


def triangle_defect(omega: DiscreteCocycle, triangle) -> float:
    """``||Omega_ij Omega_jk - Omega_ik||`` for the ordered triangle ``(i, j, k)``."""
    i, j, k = (int(v) for v in triangle)
    if not omega.complex.contains((i, j, k)):
        raise KeyError(f"triangle {(i, j, k)} not in complex")
    return matgeo.frobenius_dist(omega(i, j) @ omega(j, k), omega(i, k))


def triangle_defects(omega: DiscreteCocycle, triangles: np.ndarray | None = None) -> np.ndarray:
    """Defects of the given triangles (default: every 2-simplex, sorted rows)."""
    if triangles is None:
        if omega.complex.dim < 2:
            return np.zeros(0)
        triangles = omega.complex.simplices[2]
    T = np.asarray(triangles, dtype=np.int64)
    if T.shape[0] == 0:
        return np.zeros(0)
    ij = omega.ordered(T[:, [0, 1]])
    jk = omega.ordered(T[:, [1, 2]])
    ik = omega.ordered(T[:, [0, 2]])
    diff = ij @ jk - ik
    return np.sqrt(np.sum(diff * diff, axis=(1, 2)))


def consistency_radius(omega: DiscreteCocycle) -> float:
    """Largest triangle defect; ``omega`` is ``eps``-approximate iff ``eps`` exceeds it."""
    t = triangle_defects(omega)
    return float(t.max()) if t.size else 0.0


def d_z(omega: DiscreteCocycle, other: DiscreteCocycle) -> float:
    """Largest edgewise Frobenius distance between two cocycles on the same complex."""
    if omega.values.shape != other.values.shape:
        raise DegenerateInputError("cocycles have different shapes")
    if omega.values.shape[0] == 0:
        return 0.0
    diff = omega.values - other.values
    return float(np.sqrt(np.sum(diff * diff, axis=(1, 2))).max())


def _filtration_triangle_defects(omega: DiscreteCocycle, F: Filtration) -> np.ndarray:
    if F.dim < 2:
        return np.zeros(0)
    return triangle_defects(omega, F.complex.simplices[2])


def epsilon_death(omega: DiscreteCocycle, F: Filtration, eps: float) -> float:
    """Supremum of the scales ``r`` where every triangle of ``K_r`` has defect below ``eps``.

    Equals the earliest birth of a triangle with defect ``>= eps`` (up to
    ``DEFECT_TOL``), or the filtration threshold when there is none.
    """
    t = _filtration_triangle_defects(omega, F)
    bad = t >= eps - DEFECT_TOL
    if not np.any(bad):
        return float(F.threshold)
    return float(F.births[2][bad].min())


def witness(phi: DiscreteTrivialization) -> DiscreteCocycle:
    """Best witness: ``Omega_ij`` minimizes ``||Phi_i Omega - Phi_j||`` over ``O(d)``."""
    K = phi.complex
    E = K.simplices[1] if K.dim >= 1 else np.zeros((0, 2), dtype=np.int64)
    try:
        vals = matgeo.procrustes_batch(phi.frames[E[:, 0]], phi.frames[E[:, 1]])
    except RankError as exc:
        i, j = E[exc.position]
        raise RankError(f"degenerate edge ({int(i)}, {int(j)}): Phi_i^t Phi_j is rank deficient") from None
    return DiscreteCocycle(K, phi.d, vals)


def act(theta: ZeroCochainO, omega: DiscreteCocycle) -> DiscreteCocycle:
    """Gauge action ``(Theta . Omega)_ij = Theta_i Omega_ij Theta_j^{-1}``."""
    T = theta.values
    if T.shape[1:] != (omega.d, omega.d) or T.shape[0] != omega.complex.n_vertices:
        raise DegenerateInputError("0-cochain does not match the cocycle")
    E = omega.complex.simplices[1] if omega.complex.dim >= 1 else np.zeros((0, 2), dtype=np.int64)
    vals = T[E[:, 0]] @ omega.values @ np.swapaxes(T[E[:, 1]], 1, 2)
    return DiscreteCocycle(omega.complex, omega.d, vals)


def _barycentric(K: SimplicialComplex, weights) -> dict:
    if isinstance(weights, dict):
        w = {int(k): float(v) for k, v in weights.items() if v != 0}
    else:
        arr = np.asarray(weights, dtype=float)
        w = {int(k): float(arr[k]) for k in np.flatnonzero(arr)}
    if any(v < 0 for v in w.values()) or abs(sum(w.values()) - 1.0) > 1e-9:
        raise DegenerateInputError("barycentric weights must be nonnegative and sum to 1")
    if not w or not K.contains(tuple(sorted(w))):
        raise DegenerateInputError(f"support {sorted(w)} is not a simplex of the complex")
    return w


def triv_at(omega: DiscreteCocycle, weights, i: int) -> np.ndarray:
    """Frame ``Phi_i`` at a point with barycentric coordinates ``weights``.

    Block ``j`` (rows ``d*j .. d*(j+1)-1``) is ``sqrt(w_j) Omega_ij^t``; blocks
    of vertices outside the support are zero.
    """
    K = omega.complex
    w = _barycentric(K, weights)
    if i not in w:
        raise DegenerateInputError(f"vertex {i} is not in the support")
    d = omega.d
    out = np.zeros((K.n_vertices * d, d))
    for j, wj in w.items():
        out[d * j:d * (j + 1)] = math.sqrt(wj) * omega(i, j).T
    return out


def average_classifying(frames, weights) -> np.ndarray:
    """Weighted average ``sum w_i Phi_i Phi_i^t`` of frame projectors."""
    w = np.asarray(weights, dtype=float)
    F = [np.asarray(f, dtype=float) for f in frames]
    if len(F) != w.shape[0] or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise DegenerateInputError("weights must be nonnegative, one per frame, summing to 1")
    return sum(wi * (f @ f.T) for wi, f in zip(w, F))


def refine(omega: DiscreteCocycle, L: SimplicialComplex, nu) -> DiscreteCocycle:
    """Pull back along a simplicial vertex map ``nu: L -> K``.

    Collapsed edges (``nu(j) == nu(k)``) get the identity.
    """
    K = omega.complex
    nu = np.asarray(nu, dtype=np.int64)
    if nu.shape != (L.n_vertices,) or (nu.size and (nu.min() < 0 or nu.max() >= K.n_vertices)):
        raise DegenerateInputError("vertex map has the wrong shape or range")
    for k in range(1, L.dim + 1):
        for s in L.simplices[k]:
            img = tuple(sorted(set(nu[s].tolist())))
            if len(img) > 1 and not K.contains(img):
                raise DegenerateInputError(f"vertex map is not simplicial: {tuple(s.tolist())} -> {img}")
    if L.dim < 1:
        return DiscreteCocycle(L, omega.d, np.zeros((0, omega.d, omega.d)))
    E = L.simplices[1]
    vals = omega.ordered(np.column_stack([nu[E[:, 0]], nu[E[:, 1]]]))
    return DiscreteCocycle(L, omega.d, vals)


def sw1_values(omega: DiscreteCocycle) -> np.ndarray:
    """``1`` on edges whose value has determinant ``-1``, else ``0``."""
    return (omega.determinants() < 0).astype(np.int64)


def solve_z2_potential(K: SimplicialComplex, edge_values: np.ndarray) -> np.ndarray | None:
    """A vertex 0-cochain ``t`` over ``Z/2`` with ``t_j - t_i = s_ij``, or ``None``."""
    n = K.n_vertices
    E = K.simplices[1] if K.dim >= 1 else np.zeros((0, 2), dtype=np.int64)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for (i, j), s in zip(E.tolist(), np.asarray(edge_values).tolist()):
        adj[i].append((j, s))
        adj[j].append((i, s))
    t = np.full(n, -1, dtype=np.int64)
    for root in range(n):
        if t[root] >= 0:
            continue
        t[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v, s in adj[u]:
                want = (t[u] + s) % 2
                if t[v] < 0:
                    t[v] = want
                    queue.append(v)
                elif t[v] != want:
                    return None
    return t


def orient(omega: DiscreteCocycle) -> DiscreteCocycle:
    """Gauge-equivalent cocycle with every determinant ``+1``.

    Raises
    ------
    ObstructionError
        If the determinant cocycle is not a coboundary (non-orientable).
    """
    t = solve_z2_potential(omega.complex, sw1_values(omega))
    if t is None:
        raise ObstructionError("first Stiefel-Whitney class is nonzero; cocycle cannot be oriented")
    d = omega.d
    flip = np.eye(d)
    flip[-1, -1] = -1.0
    Pi = np.where(t[:, None, None] == 1, flip, np.eye(d))
    return act(ZeroCochainO(Pi), omega)


def sw1_cochain(omega: DiscreteCocycle) -> Cochain:
    return Cochain(omega.complex, 1, sw1_values(omega), 2)
