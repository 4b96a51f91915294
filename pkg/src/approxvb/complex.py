"""Finite simplicial complexes, filtrations, Vietoris-Rips construction and
simplicial cochains over ``Z/2``, ``Z/3`` (any ``Z/p``) and ``Z``.

Simplices are rows of sorted vertex indices.  ``complex.simplices[k]`` is an
``(m_k, k + 1)`` integer array; a cochain of degree ``k`` is a value vector
aligned with those rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from ._accel import USE_NUMBA, njit
from .errors import DegenerateInputError

MAX_DIM = 3
INTEGERS = 0  # ring tag for Z; a positive value p means Z/p


def simplex_codes(rows: np.ndarray, n: int) -> np.ndarray:
    """Injective int64 code of each sorted simplex row (mixed radix ``n``)."""
    rows = np.asarray(rows, dtype=np.int64)
    code = np.zeros(rows.shape[0], dtype=np.int64)
    for j in range(rows.shape[1]):
        code = code * n + rows[:, j]
    return code


def _ring_reduce(values: np.ndarray, ring: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    return values % ring if ring else values


class SimplicialComplex:
    """A finite simplicial complex of dimension at most 3.

    Parameters
    ----------
    n_vertices : int
        Vertices are ``0 .. n_vertices - 1``; all of them are 0-simplices.
    simplices : sequence of arrays
        ``simplices[k]`` holds the ``k``-simplices for ``k >= 1`` as sorted rows.
        Entry 0 is ignored and rebuilt.  Row order is preserved.
    """

    def __init__(self, n_vertices: int, simplices, check: bool = True):
        self.n_vertices = int(n_vertices)
        rows = [np.arange(self.n_vertices, dtype=np.int64)[:, None]]
        for k, arr in enumerate(list(simplices)[1:], start=1):
            arr = np.asarray(arr, dtype=np.int64).reshape(-1, k + 1)
            rows.append(arr)
        while len(rows) > 1 and rows[-1].shape[0] == 0:
            rows.pop()
        if len(rows) - 1 > MAX_DIM:
            raise DegenerateInputError(f"simplices above dimension {MAX_DIM} are not supported")
        self.simplices = tuple(rows)
        for arr in self.simplices:
            arr.setflags(write=False)
        self._codes = [simplex_codes(a, max(self.n_vertices, 1)) for a in self.simplices]
        self._order = [np.argsort(c, kind="stable") for c in self._codes]
        self._sorted_codes = [c[o] for c, o in zip(self._codes, self._order)]
        self._cob = {}
        if check:
            self._validate()

    @classmethod
    def from_simplices(cls, simplices, n_vertices: int | None = None) -> SimplicialComplex:
        """Downward closure of an arbitrary collection of simplices."""
        found: list[set] = [set() for _ in range(MAX_DIM + 1)]
        top = 0
        for s in simplices:
            s = tuple(sorted(int(v) for v in s))
            if len(s) - 1 > MAX_DIM:
                raise DegenerateInputError(f"simplex {s} exceeds dimension {MAX_DIM}")
            for r in range(1, len(s) + 1):
                for f in combinations(s, r):
                    found[r - 1].add(f)
            top = max(top, len(s) - 1)
        nv = n_vertices if n_vertices is not None else (max((v for (v,) in found[0]), default=-1) + 1)
        arrs = [np.zeros((0, 1), dtype=np.int64)]
        for k in range(1, top + 1):
            arrs.append(np.array(sorted(found[k]), dtype=np.int64).reshape(-1, k + 1))
        return cls(nv, arrs)

    def _validate(self) -> None:
        for k, arr in enumerate(self.simplices):
            if arr.size and (arr.min() < 0 or arr.max() >= self.n_vertices):
                raise DegenerateInputError(f"vertex index out of range in dimension {k}")
            if k and np.any(np.diff(arr, axis=1) <= 0):
                raise DegenerateInputError(f"{k}-simplices must be strictly increasing rows")
            if np.any(np.diff(self._sorted_codes[k]) == 0):
                raise DegenerateInputError(f"duplicate {k}-simplices")
            if k:
                for i in range(k + 1):
                    face = np.delete(arr, i, axis=1)
                    try:
                        self.index(face)
                    except KeyError as exc:
                        raise DegenerateInputError(f"not closed under faces: {exc.args[0]}") from None

    @property
    def dim(self) -> int:
        return len(self.simplices) - 1

    def n_simplices(self, k: int) -> int:
        return self.simplices[k].shape[0] if k <= self.dim else 0

    def __len__(self) -> int:
        return sum(a.shape[0] for a in self.simplices)

    def index(self, rows, k: int | None = None) -> np.ndarray:
        """Positions of the given sorted simplex rows; ``KeyError`` if any is missing."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
        if k is None:
            k = rows.shape[1] - 1
        if k > self.dim:
            raise KeyError(f"complex has no {k}-simplices")
        codes = simplex_codes(rows, max(self.n_vertices, 1))
        sc = self._sorted_codes[k]
        pos = np.searchsorted(sc, codes)
        pos = np.minimum(pos, max(sc.shape[0] - 1, 0))
        if sc.shape[0] == 0 or np.any(sc[pos] != codes):
            bad = rows[np.flatnonzero((sc.shape[0] == 0) | (sc[pos] != codes))[0]]
            raise KeyError(f"simplex {tuple(int(v) for v in bad)} not in complex")
        return self._order[k][pos]

    def contains(self, simplex) -> bool:
        try:
            self.index(np.array(sorted(simplex))[None])
        except KeyError:
            return False
        return True

    def coboundary_matrix(self, k: int) -> sp.csr_matrix:
        """Signed integer matrix of ``delta: C^k -> C^{k+1}`` (rows are (k+1)-simplices)."""
        if k in self._cob:
            return self._cob[k]
        n_lo = self.n_simplices(k)
        n_hi = self.n_simplices(k + 1)
        if n_hi == 0:
            M = sp.csr_matrix((0, n_lo), dtype=np.int64)
        else:
            hi = self.simplices[k + 1]
            r, c, v = [], [], []
            for i in range(k + 2):
                r.append(np.arange(n_hi))
                c.append(self.index(np.delete(hi, i, axis=1), k))
                v.append(np.full(n_hi, -1 if i % 2 else 1, dtype=np.int64))
            M = sp.csr_matrix((np.concatenate(v), (np.concatenate(r), np.concatenate(c))), shape=(n_hi, n_lo))
        self._cob[k] = M
        return M

    def subcomplex(self, masks) -> tuple[SimplicialComplex, list[np.ndarray]]:
        """Subcomplex keeping ``simplices[k][masks[k]]`` (vertices always kept).

        Returns the subcomplex and, per dimension, the kept positions in ``self``.
        """
        keep = [np.arange(self.n_vertices)]
        arrs = [self.simplices[0]]
        for k in range(1, self.dim + 1):
            idx = np.flatnonzero(masks[k])
            keep.append(idx)
            arrs.append(self.simplices[k][idx])
        return SimplicialComplex(self.n_vertices, arrs, check=False), keep


@dataclass
class Filtration:
    """A simplicial complex with a monotone birth value per simplex.

    The constructor reorders simplices of each dimension by ``(birth, vertex tuple)``
    so positions coincide with the filtration order.
    """

    complex: SimplicialComplex
    births: list = field(default_factory=list)
    threshold: float = math.inf

    def __post_init__(self):
        K = self.complex
        if len(self.births) != K.dim + 1:
            raise DegenerateInputError("need one birth array per dimension")
        arrs, births = [], []
        for k in range(K.dim + 1):
            b = np.asarray(self.births[k], dtype=float)
            if b.shape != (K.n_simplices(k),):
                raise DegenerateInputError(f"birth array for dimension {k} has wrong length")
            if not np.all(np.isfinite(b)):
                raise DegenerateInputError("births must be finite")
            rows = K.simplices[k]
            keys = [rows[:, j] for j in range(rows.shape[1] - 1, -1, -1)] + [b]
            o = np.lexsort(keys)
            arrs.append(rows[o])
            births.append(b[o])
        self.complex = SimplicialComplex(K.n_vertices, arrs, check=False)
        self.births = births
        if any(b.size and b.max() > self.threshold for b in births):
            raise DegenerateInputError("births exceed the filtration threshold")
        for k in range(1, self.complex.dim + 1):
            faces_ok = True
            for i in range(k + 1):
                fb = self.births[k - 1][self.complex.index(np.delete(arrs[k], i, axis=1), k - 1)]
                faces_ok &= bool(np.all(fb <= self.births[k]))
            if not faces_ok:
                raise DegenerateInputError(f"filtration is not monotone in dimension {k}")

    @property
    def dim(self) -> int:
        return self.complex.dim

    def max_birth(self) -> float:
        return max((float(b.max()) for b in self.births if b.size), default=0.0)

    def at(self, r: float) -> tuple[SimplicialComplex, list[np.ndarray]]:
        """The subcomplex ``K_r`` of simplices born at or before ``r``."""
        masks = [b <= r for b in self.births]
        return self.complex.subcomplex(masks)

    def n_alive(self, k: int, r: float) -> int:
        return int(np.count_nonzero(self.births[k] <= r)) if k <= self.dim else 0


@njit
def _expand_nb(rows, births, adj, D):
    m, w = rows.shape
    n = adj.shape[0]
    count = 0
    for s in range(m):
        last = rows[s, w - 1]
        for v in range(last + 1, n):
            ok = True
            for j in range(w):
                if not adj[rows[s, j], v]:
                    ok = False
                    break
            if ok:
                count += 1
    out = np.empty((count, w + 1), dtype=np.int64)
    ob = np.empty(count)
    c = 0
    for s in range(m):
        last = rows[s, w - 1]
        for v in range(last + 1, n):
            ok = True
            b = births[s]
            for j in range(w):
                u = rows[s, j]
                if not adj[u, v]:
                    ok = False
                    break
                if D[u, v] > b:
                    b = D[u, v]
            if ok:
                for j in range(w):
                    out[c, j] = rows[s, j]
                out[c, w] = v
                ob[c] = b
                c += 1
    return out, ob


def _expand_np(rows, births, adj, D):
    out, ob = [], []
    for s in range(rows.shape[0]):
        r = rows[s]
        cand = np.flatnonzero(np.all(adj[r], axis=0))
        cand = cand[cand > r[-1]]
        if cand.size:
            out.append(np.column_stack([np.repeat(r[None], cand.size, axis=0), cand]))
            ob.append(np.maximum(births[s], D[np.ix_(r, cand)].max(axis=0)))
    if not out:
        return np.zeros((0, rows.shape[1] + 1), dtype=np.int64), np.zeros(0)
    return np.vstack(out).astype(np.int64), np.concatenate(ob)


def expand_cliques(rows, births, adj, D, use_numba: bool | None = None):
    """All cofaces ``rows[s] + (v,)`` with ``v`` larger than every vertex and adjacent to all."""
    use_numba = USE_NUMBA if use_numba is None else use_numba
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    births = np.ascontiguousarray(births, dtype=np.float64)
    fn = _expand_nb if use_numba else _expand_np
    return fn(rows, births, np.ascontiguousarray(adj), np.ascontiguousarray(D, dtype=np.float64))


def check_dissimilarity(D) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise DegenerateInputError(f"dissimilarity must be square, got {D.shape}")
    if not np.all(np.isfinite(D)):
        raise DegenerateInputError("dissimilarity has non-finite entries")
    if not np.allclose(D, D.T, atol=1e-12, rtol=0):
        raise DegenerateInputError("dissimilarity matrix is not symmetric")
    if np.any(np.abs(np.diag(D)) > 1e-12) or np.any(D < 0):
        raise DegenerateInputError("dissimilarity needs zero diagonal and nonnegative entries")
    return 0.5 * (D + D.T)


def vr_filtration(D, max_dim: int, threshold: float, use_numba: bool | None = None) -> Filtration:
    """Vietoris-Rips filtration of a dissimilarity matrix up to ``threshold``.

    A simplex is present iff all its pairwise dissimilarities are at most
    ``threshold``, and is born at the largest of them.
    """
    D = check_dissimilarity(D)
    if not 0 <= max_dim <= MAX_DIM:
        raise DegenerateInputError(f"max_dim must be in [0, {MAX_DIM}]")
    n = D.shape[0]
    adj = D <= threshold
    np.fill_diagonal(adj, False)
    arrs = [np.arange(n, dtype=np.int64)[:, None]]
    births = [np.zeros(n)]
    if max_dim >= 1:
        i, j = np.nonzero(np.triu(adj, 1))
        arrs.append(np.column_stack([i, j]).astype(np.int64))
        births.append(D[i, j])
        for _ in range(2, max_dim + 1):
            rows, b = expand_cliques(arrs[-1], births[-1], adj, D, use_numba)
            arrs.append(rows)
            births.append(b)
    while len(arrs) > 1 and arrs[-1].shape[0] == 0:
        arrs.pop()
        births.pop()
    return Filtration(SimplicialComplex(n, arrs, check=False), births, float(threshold))


@dataclass(frozen=True)
class Cochain:
    """A ``degree``-cochain on ``complex`` with values in ``Z/ring`` (``ring=0``: ``Z``)."""

    complex: SimplicialComplex
    degree: int
    values: np.ndarray
    ring: int = 2

    def __post_init__(self):
        if self.ring < 0 or self.ring == 1:
            raise DegenerateInputError(f"invalid ring tag {self.ring}")
        v = _ring_reduce(np.asarray(self.values).reshape(-1), self.ring)
        if v.shape[0] != self.complex.n_simplices(self.degree):
            raise DegenerateInputError(
                f"{self.degree}-cochain needs {self.complex.n_simplices(self.degree)} values, got {v.shape[0]}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, complex: SimplicialComplex, degree: int, ring: int = 2) -> Cochain:
        return cls(complex, degree, np.zeros(complex.n_simplices(degree), dtype=np.int64), ring)

    @classmethod
    def from_dict(cls, complex: SimplicialComplex, degree: int, mapping: dict, ring: int = 2) -> Cochain:
        v = np.zeros(complex.n_simplices(degree), dtype=np.int64)
        for s, val in mapping.items():
            v[complex.index(np.array(sorted(s))[None], degree)[0]] = val
        return cls(complex, degree, v, ring)

    def __getitem__(self, simplex) -> int:
        return int(self.values[self.complex.index(np.array(sorted(simplex))[None], self.degree)[0]])

    def __add__(self, other: Cochain) -> Cochain:
        self._compatible(other)
        return Cochain(self.complex, self.degree, self.values + other.values, self.ring)

    def __sub__(self, other: Cochain) -> Cochain:
        self._compatible(other)
        return Cochain(self.complex, self.degree, self.values - other.values, self.ring)

    def __mul__(self, scalar: int) -> Cochain:
        return Cochain(self.complex, self.degree, self.values * int(scalar), self.ring)

    __rmul__ = __mul__

    def _compatible(self, other: Cochain) -> None:
        if other.complex is not self.complex or other.degree != self.degree or other.ring != self.ring:
            raise DegenerateInputError("cochains live on different complexes, degrees or rings")

    def reduce(self, p: int) -> Cochain:
        return Cochain(self.complex, self.degree, self.values, p)

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def restrict(self, sub: SimplicialComplex) -> Cochain:
        """Restriction to a subcomplex (looked up by vertex tuples)."""
        idx = self.complex.index(sub.simplices[self.degree], self.degree) if sub.n_simplices(self.degree) else []
        return Cochain(sub, self.degree, self.values[idx], self.ring)

    def support(self) -> list[tuple[int, ...]]:
        rows = self.complex.simplices[self.degree][np.flatnonzero(self.values)]
        return [tuple(int(v) for v in r) for r in rows]


def coboundary(c: Cochain) -> Cochain:
    """Simplicial coboundary ``(delta c)(v_0..v_{k+1}) = sum_i (-1)^i c(.. v_i omitted ..)``."""
    if c.degree + 1 > MAX_DIM:
        raise DegenerateInputError(f"degree {c.degree} exceeds the stored dimension")
    M = c.complex.coboundary_matrix(c.degree)
    return Cochain(c.complex, c.degree + 1, M @ c.values, c.ring)


def is_cocycle(c: Cochain) -> bool:
    if c.degree + 1 > c.complex.dim:
        return True
    return coboundary(c).is_zero()
