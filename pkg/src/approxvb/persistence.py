"""Persistent cohomology over ``Z/p`` with representative cocycles, and
decomposition of cocycles in the resulting persistence basis.

Simplices of each dimension are ordered by ``(birth, vertex tuple)`` (the
order a :class:`~approxvb.complex.Filtration` already stores).  Degree ``k``
is computed by reducing the coboundary ``C^k -> C^{k+1}`` with columns taken
in decreasing filtration order and pivots at the earliest coface.  Columns
of ``k``-simplices that were pivots in degree ``k - 1`` are cleared.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._textio import open_text
from ._reduction import reduce_columns
from .complex import Cochain, Filtration, SimplicialComplex, coboundary
from .errors import DegenerateInputError


@dataclass(frozen=True)
class Bar:
    bar_id: int
    degree: int
    birth: float
    death: float
    representative: Cochain = field(repr=False)
    birth_simplex: tuple = ()
    death_simplex: tuple | None = None

    @property
    def persistence(self) -> float:
        return self.death - self.birth

    def alive_at(self, r: float) -> bool:
        return self.birth <= r < self.death


@dataclass
class PersistenceDiagram:
    filtration: Filtration
    p: int
    max_deg: int
    bars: list

    def degree(self, k: int) -> list:
        return [b for b in self.bars if b.degree == k]

    def alive(self, k: int, r: float) -> list:
        return [b for b in self.bars if b.degree == k and b.alive_at(r)]

    def betti(self, k: int, r: float) -> int:
        return len(self.alive(k, r))

    def bar(self, bar_id: int) -> Bar:
        return self.bars[bar_id]

    def most_persistent(self, k: int, cap: float | None = None) -> Bar | None:
        """Longest bar of degree ``k``; infinite deaths count as ``cap`` (default: last birth).

        Among bars with equal capped length the earliest born wins.
        """
        cap = self.filtration.max_birth() if cap is None else cap
        bars = self.degree(k)
        if not bars:
            return None
        return max(bars, key=lambda b: (min(b.death, cap) - b.birth, -b.birth))

    def write_csv(self, path) -> None:
        with open_text(path, "w") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["degree", "birth", "death", "bar_id"])
            for b in self.bars:
                w.writerow([b.degree, repr(b.birth), "inf" if math.isinf(b.death) else repr(b.death), b.bar_id])


def _csc(M: sp.csr_matrix):
    C = M.tocsc()
    C.sort_indices()
    return C.indptr, C.indices, C.data


def persistent_cohomology(F: Filtration, p: int = 2, max_deg: int | None = None, use_numba: bool | None = None,
                          keep_zero_length: bool = False) -> PersistenceDiagram:
    """Barcode of ``H^k`` over ``Z/p`` for ``k = 0 .. max_deg`` with representatives.

    ``max_deg`` defaults to ``F.dim - 1`` (the largest degree whose deaths
    are visible).  Zero-length bars are dropped unless ``keep_zero_length``.
    """
    if p < 2 or any(p % q == 0 for q in range(2, int(math.isqrt(p)) + 1)):
        raise DegenerateInputError(f"coefficient modulus {p} is not prime")
    K = F.complex
    if max_deg is None:
        max_deg = max(F.dim - 1, 0)
    if max_deg > F.dim:
        raise DegenerateInputError(f"max_deg {max_deg} exceeds filtration dimension {F.dim}")
    bars: list[Bar] = []
    cleared = np.zeros(K.n_simplices(0), dtype=bool)
    for k in range(max_deg + 1):
        n_k = K.n_simplices(k)
        M = K.coboundary_matrix(k)
        n_hi = M.shape[0]
        indptr, indices, data = _csc(M)
        order = np.arange(n_k - 1, -1, -1)
        order = order[~cleared[order]]
        red = reduce_columns(indptr, indices, data, n_hi, order, p, use_numba)
        next_cleared = np.zeros(n_hi, dtype=bool)
        for j in order.tolist():
            piv = int(red.pivot[j])
            birth = float(F.births[k][j])
            if piv >= 0:
                next_cleared[piv] = True
                death = float(F.births[k + 1][piv])
                dsimp = tuple(int(v) for v in K.simplices[k + 1][piv])
            else:
                death = math.inf
                dsimp = None
            if death == birth and not keep_zero_length:
                continue
            idx, val = red.v_col(j)
            vals = np.zeros(n_k, dtype=np.int64)
            vals[idx] = val
            rep = Cochain(K, k, vals, p)
            bars.append(Bar(len(bars), k, birth, death, rep, tuple(int(v) for v in K.simplices[k][j]), dsimp))
        cleared = next_cleared
    # canonical order: degree, birth, death, then simplex tuples
    bars.sort(key=lambda b: (b.degree, b.birth, b.death, b.birth_simplex))
    bars = [Bar(i, b.degree, b.birth, b.death, b.representative, b.birth_simplex, b.death_simplex)
            for i, b in enumerate(bars)]
    return PersistenceDiagram(F, p, max_deg, bars)


def epsilon_span(diag: PersistenceDiagram, delta: float, degree: int) -> list:
    """Bars of the given degree with ``birth <= delta <= death``."""
    if delta < 0:
        raise DegenerateInputError("delta must be nonnegative")
    return [b for b in diag.degree(degree) if b.birth <= delta <= b.death]


@dataclass
class ClassDecomposition:
    """``z = sum_i c_i Lambda_i + delta b`` on ``K_r``."""

    r: float
    degree: int
    p: int
    bar_ids: list
    coefficients: np.ndarray
    witness: Cochain | None
    subcomplex: SimplicialComplex = field(repr=False)

    def coefficient(self, bar_id: int) -> int:
        try:
            return int(self.coefficients[self.bar_ids.index(bar_id)])
        except ValueError:
            return 0

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coefficients)

    def decorated(self) -> list:
        return [b for b, c in zip(self.bar_ids, self.coefficients) if c]

    def write_csv(self, path) -> None:
        with open_text(path, "w") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bar_id", "coefficient"])
            for b, c in zip(self.bar_ids, self.coefficients):
                w.writerow([b, int(c)])


def _restrict_to(z: Cochain, sub: SimplicialComplex, p: int) -> np.ndarray:
    k = z.degree
    if sub.n_simplices(k) == 0:
        return np.zeros(0, dtype=np.int64)
    try:
        idx = z.complex.index(sub.simplices[k], k)
    except KeyError as exc:
        raise DegenerateInputError(f"cochain is not defined on all of K_r: {exc}") from None
    return z.values[idx] % p


def decompose_class(z: Cochain, diag: PersistenceDiagram, r: float, use_numba: bool | None = None) -> ClassDecomposition:
    """Coordinates of the class of ``z`` on ``K_r`` in the persistence basis.

    Solves ``z = sum c_i Lambda_i + delta b`` over ``Z/p`` where ``Lambda_i``
    ranges over representatives of bars alive at ``r``.

    Raises
    ------
    DegenerateInputError
        If the system is inconsistent, i.e. ``z`` is not a cocycle on ``K_r``.
    """
    p = diag.p
    k = z.degree
    if k > diag.max_deg:
        raise DegenerateInputError(f"degree {k} above the computed range {diag.max_deg}")
    if z.ring and z.ring % p and z.ring != p:
        raise DegenerateInputError(f"cannot read a Z/{z.ring} cochain over Z/{p}")
    Kr, _ = diag.filtration.at(r)
    n_k = Kr.n_simplices(k)
    alive = diag.alive(k, r)
    cols = [_restrict_to(b.representative, Kr, p) for b in alive]
    blocks = []
    if cols:
        B = np.column_stack(cols)
        blocks.append(sp.csc_matrix(B))
    n_lower = Kr.n_simplices(k - 1) if k >= 1 else 0
    if k >= 1:
        blocks.append(Kr.coboundary_matrix(k - 1).tocsc())
    zr = _restrict_to(z, Kr, p)
    blocks.append(sp.csc_matrix(zr.reshape(-1, 1)))
    A = sp.hstack(blocks, format="csc") if n_k else sp.csc_matrix((0, len(cols) + n_lower + 1), dtype=np.int64)
    A = sp.csc_matrix(A.astype(np.int64))
    A.data %= p
    A.eliminate_zeros()
    A.sort_indices()
    n_cols = A.shape[1]
    red = reduce_columns(A.indptr, A.indices, A.data, n_k, np.arange(n_cols), p, use_numba)
    if red.pivot[n_cols - 1] != -1:
        raise DegenerateInputError(f"z is not a cocycle on K_r (r={r}) or has the wrong degree")
    idx, val = red.v_col(n_cols - 1)
    x = np.zeros(n_cols, dtype=np.int64)
    x[idx] = val
    x = (-x[:-1]) % p
    coeffs = x[:len(cols)]
    witness = Cochain(Kr, k - 1, x[len(cols):], p) if k >= 1 else None
    recon = np.zeros(n_k, dtype=np.int64)
    for c, col in zip(coeffs, cols):
        recon += c * col
    if witness is not None:
        recon += coboundary(witness).values
    if np.any((recon - zr) % p):
        raise AssertionError("decomposition failed to reconstruct the cocycle")
    return ClassDecomposition(r, k, p, [b.bar_id for b in alive], coeffs, witness, Kr)


def betti_dense(K: SimplicialComplex, k: int, p: int) -> int:
    """``dim H^k(K; Z/p)`` by dense Gaussian elimination (test oracle)."""
    n_k = K.n_simplices(k)
    rk_out = rank_mod_p(K.coboundary_matrix(k).toarray(), p) if k + 1 <= K.dim else 0
    rk_in = rank_mod_p(K.coboundary_matrix(k - 1).toarray(), p) if k >= 1 and k <= K.dim else 0
    return n_k - rk_out - rk_in


def rank_mod_p(A, p: int) -> int:
    A = np.array(A, dtype=np.int64) % p
    rows, cols = A.shape
    rank = 0
    for c in range(cols):
        nz = np.flatnonzero(A[rank:, c])
        if nz.size == 0:
            continue
        piv = rank + nz[0]
        A[[rank, piv]] = A[[piv, rank]]
        A[rank] = A[rank] * pow(int(A[rank, c]), p - 2, p) % p
        others = np.flatnonzero(A[:, c])
        others = others[others != rank]
        A[others] = (A[others] - np.outer(A[others, c], A[rank])) % p
        rank += 1
        if rank == rows:
            break
    return rank
