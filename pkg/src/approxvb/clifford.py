"""Clifford algebra ``Cl(d)`` with the positive convention ``e_i^2 = +1``,
the group ``Pin(d)`` and its covering map onto ``O(d)``.

Blade storage: a coefficient vector of length ``2**d``; position ``m`` holds
the blade ``e_{i_1} ... e_{i_k}`` with ``i_1 < ... < i_k`` the set bits of
``m`` (bit ``i - 1`` stands for ``e_i``).  So index 0 is the unit ``1``,
index 1 is ``e_1``, index 2 is ``e_2`` and index 3 is ``e_1 e_2``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._accel import USE_NUMBA, njit
from .errors import AmbiguityError, DegenerateInputError
from .matgeo import ORTH_TOL, check_orthogonal

SCALAR_TOL = 1e-9
MAX_GEODESIC_DIM = 4


def _reorder_sign(a: int, b: int) -> int:
    # (-1)^(number of transpositions to sort the concatenated generator word)
    a >>= 1
    swaps = 0
    while a:
        swaps += bin(a & b).count("1")
        a >>= 1
    return -1 if swaps & 1 else 1


@lru_cache(maxsize=None)
def blade_tables(d: int) -> tuple[np.ndarray, np.ndarray]:
    """``(sign, xor)`` tables with ``blade_a * blade_b = sign[a, b] * blade_{xor[a, b]}``."""
    n = 1 << d
    idx = np.arange(n)
    xor = idx[:, None] ^ idx[None, :]
    sign = np.empty((n, n), dtype=np.float64)
    for a in range(n):
        for b in range(n):
            sign[a, b] = _reorder_sign(a, b)
    sign.setflags(write=False)
    xor.setflags(write=False)
    return sign, xor


@lru_cache(maxsize=None)
def blade_grades(d: int) -> np.ndarray:
    g = np.array([bin(m).count("1") for m in range(1 << d)])
    g.setflags(write=False)
    return g


def blade_index(indices) -> int:
    """Bitmask of the blade ``e_{i_1} ... e_{i_k}`` (1-based generator labels, increasing)."""
    m = 0
    for i in indices:
        m |= 1 << (int(i) - 1)
    return m


@dataclass(frozen=True)
class CliffordElement:
    d: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (1 << self.d,):
            raise DegenerateInputError(f"need {1 << self.d} coefficients for d={self.d}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise DegenerateInputError("non-finite Clifford coefficients")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def scalar(cls, d: int, value: float = 1.0) -> CliffordElement:
        c = np.zeros(1 << d)
        c[0] = value
        return cls(d, c)

    @classmethod
    def blade(cls, d: int, indices, value: float = 1.0) -> CliffordElement:
        c = np.zeros(1 << d)
        c[blade_index(indices)] = value
        return cls(d, c)

    @classmethod
    def vector(cls, v) -> CliffordElement:
        v = np.asarray(v, dtype=float)
        d = v.shape[0]
        c = np.zeros(1 << d)
        c[1 << np.arange(d)] = v
        return cls(d, c)

    def __mul__(self, other):
        if isinstance(other, CliffordElement):
            return clifford_mul(self, other)
        return CliffordElement(self.d, self.coeffs * float(other))

    def __rmul__(self, other) -> CliffordElement:
        return CliffordElement(self.d, self.coeffs * float(other))

    def __add__(self, other: CliffordElement) -> CliffordElement:
        _check_same_dim(self, other)
        return CliffordElement(self.d, self.coeffs + other.coeffs)

    def __sub__(self, other: CliffordElement) -> CliffordElement:
        _check_same_dim(self, other)
        return CliffordElement(self.d, self.coeffs - other.coeffs)

    def __neg__(self) -> CliffordElement:
        return CliffordElement(self.d, -self.coeffs)

    def reverse(self) -> CliffordElement:
        g = blade_grades(self.d)
        return CliffordElement(self.d, self.coeffs * np.where((g * (g - 1) // 2) % 2, -1.0, 1.0))

    def grade_involution(self) -> CliffordElement:
        g = blade_grades(self.d)
        return CliffordElement(self.d, self.coeffs * np.where(g % 2, -1.0, 1.0))

    @property
    def scalar_part(self) -> float:
        return float(self.coeffs[0])

    def allclose(self, other: CliffordElement, atol: float = 1e-10) -> bool:
        return self.d == other.d and bool(np.allclose(self.coeffs, other.coeffs, atol=atol, rtol=0))


def _check_same_dim(x: CliffordElement, y: CliffordElement) -> None:
    if x.d != y.d:
        raise DegenerateInputError(f"Clifford dimension mismatch: {x.d} vs {y.d}")


def _mul_coeffs(x: np.ndarray, y: np.ndarray, d: int) -> np.ndarray:
    sign, xor = blade_tables(d)
    return np.bincount(xor.ravel(), weights=(sign * np.outer(x, y)).ravel(), minlength=1 << d)


def clifford_mul(x: CliffordElement, y: CliffordElement) -> CliffordElement:
    """Geometric product in ``Cl(d)``."""
    _check_same_dim(x, y)
    return CliffordElement(x.d, _mul_coeffs(x.coeffs, y.coeffs, x.d))


@dataclass(frozen=True)
class PinElement:
    """Element ``sign * v_1 v_2 ... v_k`` of ``Pin(d)`` with unit vectors ``v_i``.

    Keeping the generating vectors makes the projection to ``O(d)`` exact and
    inversion cheap (reverse the list).
    """

    d: int
    generators: np.ndarray = field(repr=False)
    sign: int = 1

    def __post_init__(self):
        G = np.asarray(self.generators, dtype=float).reshape(-1, self.d)
        norms = np.linalg.norm(G, axis=1)
        if G.shape[0] and np.max(np.abs(norms - 1.0)) > 1e-8:
            raise DegenerateInputError("Pin generators must be unit vectors")
        if self.sign not in (1, -1):
            raise DegenerateInputError("sign must be +1 or -1")
        G = G.copy()
        G.setflags(write=False)
        object.__setattr__(self, "generators", G)

    @classmethod
    def one(cls, d: int) -> PinElement:
        return cls(d, np.zeros((0, d)))

    @property
    def parity(self) -> int:
        """0 for even (``Spin``), 1 for odd."""
        return self.generators.shape[0] % 2

    @property
    def value(self) -> CliffordElement:
        c = np.zeros(1 << self.d)
        c[0] = float(self.sign)
        for v in self.generators:
            c = _mul_coeffs(c, CliffordElement.vector(v).coeffs, self.d)
        return CliffordElement(self.d, c)

    def inverse(self) -> PinElement:
        return PinElement(self.d, self.generators[::-1], self.sign)

    def __mul__(self, other: PinElement) -> PinElement:
        if self.d != other.d:
            raise DegenerateInputError("Pin dimension mismatch")
        return PinElement(self.d, np.vstack([self.generators, other.generators]), self.sign * other.sign)

    def __neg__(self) -> PinElement:
        return PinElement(self.d, self.generators, -self.sign)


def reflection_matrix(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.eye(v.shape[0]) - 2.0 * np.outer(v, v)


def householder_reflectors(Q) -> tuple[list[np.ndarray], np.ndarray]:
    """Write an orthogonal ``Q`` as ``H(v_1) ... H(v_k) R`` with ``R = diag(+-1)``.

    Columns whose subdiagonal part already vanishes are skipped so the
    identity produces no reflectors.
    """
    A = np.array(Q, dtype=float)
    d = A.shape[0]
    vs = []
    for j in range(d - 1):
        x = A[j:, j]
        tail = np.linalg.norm(x[1:])
        if tail <= 1e-15:
            continue
        alpha = np.linalg.norm(x)
        v = x.copy()
        v[0] += np.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        A[j:, :] -= 2.0 * np.outer(v, v @ A[j:, :])
        full = np.zeros(d)
        full[j:] = v
        vs.append(full)
    return vs, np.sign(np.diag(A))


def pin_lift(Q) -> PinElement:
    """A preimage of the orthogonal matrix ``Q`` in ``Pin(d)``.

    Householder QR writes ``Q`` as a product of reflections; each reflector
    ``v`` contributes the generator ``sum v_i e_i`` and each ``-1`` on the
    diagonal of the triangular factor at position ``i`` contributes ``e_i``.
    """
    Q = check_orthogonal(Q, ORTH_TOL)
    d = Q.shape[0]
    vs, diag = householder_reflectors(Q)
    eye = np.eye(d)
    gens = vs + [eye[i] for i in range(d) if diag[i] < 0]
    return PinElement(d, np.array(gens).reshape(-1, d))


def pin_project(p) -> np.ndarray:
    """Image of ``p`` in ``O(d)``.

    A :class:`PinElement` is projected exactly as the product of its
    reflections.  A homogeneous unit :class:`CliffordElement` is projected via
    the twisted adjoint action ``w -> alpha(x) w x^{-1}``.
    """
    if isinstance(p, PinElement):
        M = np.eye(p.d)
        for v in p.generators:
            M = M @ reflection_matrix(v)
        return M
    return _twisted_adjoint(p)


def _twisted_adjoint(x: CliffordElement) -> np.ndarray:
    d = x.d
    g = blade_grades(d)
    even = np.abs(x.coeffs[g % 2 == 0]).max(initial=0.0)
    odd = np.abs(x.coeffs[g % 2 == 1]).max(initial=0.0)
    if even > 1e-8 and odd > 1e-8:
        raise DegenerateInputError("Clifford element is not homogeneous")
    norm = clifford_mul(x, x.reverse())
    if abs(abs(norm.coeffs[0]) - 1.0) > 1e-8 or np.abs(norm.coeffs[1:]).max(initial=0.0) > 1e-8:
        raise DegenerateInputError("Clifford element is not a unit")
    xinv = x.reverse() * (1.0 / norm.coeffs[0])
    ax = x.grade_involution()
    M = np.empty((d, d))
    for j in range(d):
        ej = CliffordElement.blade(d, [j + 1])
        img = clifford_mul(clifford_mul(ax, ej), xinv)
        M[:, j] = img.coeffs[1 << np.arange(d)]
    return M


def _scalar_coefficient(p) -> tuple[float, int, int]:
    if isinstance(p, PinElement):
        return p.value.scalar_part, p.parity, p.d
    g = blade_grades(p.d)
    odd = np.abs(p.coeffs[g % 2 == 1]).max(initial=0.0)
    even = np.abs(p.coeffs[g % 2 == 0]).max(initial=0.0)
    parity = 1 if odd > even else 0
    return p.scalar_part, parity, p.d


def closest_sign(p) -> int:
    """Which of ``+1`` / ``-1`` is closest to the spin element ``p``.

    Decided by the sign of the scalar coefficient.  For ``d <= 4`` this
    equals the geodesic decision (see :func:`spin_geodesic_dist`); for larger
    ``d`` it is used as a heuristic and a warning is issued.
    """
    c0, parity, d = _scalar_coefficient(p)
    if parity:
        raise DegenerateInputError("odd Pin element: equidistant (infinitely far) from both +1 and -1")
    if abs(c0) <= SCALAR_TOL:
        raise AmbiguityError(f"scalar coefficient {c0:.3e} too close to zero to decide the sign")
    if d > MAX_GEODESIC_DIM:
        warnings.warn(
            f"closest_sign for d={d} > 4 uses the scalar-coefficient heuristic",
            RuntimeWarning,
            stacklevel=2,
        )
    return 1 if c0 > 0 else -1


def _coeffs_of(p) -> tuple[np.ndarray, int]:
    if isinstance(p, PinElement):
        return p.value.coeffs, p.d
    return p.coeffs, p.d


def _sphere_dist(a: np.ndarray, b: np.ndarray, radius: float) -> float:
    c = float(np.dot(a, b)) / radius**2
    return radius * float(np.arccos(np.clip(c, -1.0, 1.0)))


def spin_geodesic_dist(p, q) -> float:
    """Geodesic distance in ``Spin(d)`` for ``d in {2, 3, 4}``.

    ``d = 2``: the even part is a unit circle in the ``(1, e_1 e_2)`` plane.
    ``d = 3``: the even part is the unit quaternions, a unit 3-sphere.
    ``d = 4``: ``Spin(4) = S^3 x S^3`` through the central idempotents
    ``(1 +- e_1 e_2 e_3 e_4) / 2``; each factor sits on a sphere of radius
    ``1/sqrt(2)`` and the product distance is Pythagorean.
    """
    x, d = _coeffs_of(p)
    y, d2 = _coeffs_of(q)
    if d != d2:
        raise DegenerateInputError("dimension mismatch")
    if d not in (2, 3, 4):
        raise DegenerateInputError(f"geodesic formulas are only implemented for d in (2, 3, 4), got {d}")
    even = blade_grades(d) % 2 == 0
    if d in (2, 3):
        return _sphere_dist(x[even], y[even], 1.0)
    omega = CliffordElement.blade(4, [1, 2, 3, 4])
    one = CliffordElement.scalar(4)
    plus = (one + omega) * 0.5
    minus = (one - omega) * 0.5
    X = CliffordElement(4, x)
    Y = CliffordElement(4, y)
    r = 1.0 / np.sqrt(2.0)
    dl = _sphere_dist((X * plus).coeffs, (Y * plus).coeffs, r)
    dr = _sphere_dist((X * minus).coeffs, (Y * minus).coeffs, r)
    return float(np.hypot(dl, dr))


def random_spin(d: int, rng: np.random.Generator, n_generators: int | None = None) -> PinElement:
    """Product of an even number of random unit vectors."""
    k = n_generators if n_generators is not None else 2 * int(rng.integers(1, d + 1))
    if k % 2:
        raise DegenerateInputError("spin elements need an even number of generators")
    V = rng.standard_normal((k, d))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    return PinElement(d, V)


# batched triangle kernel for the second Stiefel-Whitney class


@njit
def _triple_scalar_nb(L, tri_edges, sign, xor):
    m = tri_edges.shape[0]
    n = L.shape[1]
    out = np.empty(m)
    w = np.empty(n)
    for t in range(m):
        x = L[tri_edges[t, 0]]
        y = L[tri_edges[t, 1]]
        z = L[tri_edges[t, 2]]
        for c in range(n):
            w[c] = 0.0
        for a in range(n):
            xa = x[a]
            if xa == 0.0:
                continue
            for b in range(n):
                yb = y[b]
                if yb != 0.0:
                    w[xor[a, b]] += sign[a, b] * xa * yb
        s = 0.0
        # scalar part of w * z with z already reversed by the caller
        for c in range(n):
            s += w[c] * z[c] * sign[c, c]
        out[t] = s
    return out


def _triple_scalar_np(L, tri_edges, sign, xor, chunk: int = 4096):
    n = L.shape[1]
    a = np.arange(n)
    perm = a[:, None] ^ a[None, :]
    s_ac = sign[a[:, None], perm]
    s_cc = np.diag(sign)
    out = np.empty(tri_edges.shape[0])
    for start in range(0, tri_edges.shape[0], chunk):
        te = tri_edges[start:start + chunk]
        x = L[te[:, 0]]
        y = L[te[:, 1]][:, perm]
        z = L[te[:, 2]] * s_cc
        out[start:start + chunk] = np.einsum("ma,mac,mc->m", x, y * s_ac, z)
    return out


def triple_scalar_parts(L: np.ndarray, tri_edges: np.ndarray, d: int, use_numba: bool | None = None) -> np.ndarray:
    """Scalar coefficients of ``L[i] * L[j] * reverse(L[k])`` for rows ``(i, j, k)`` of ``tri_edges``."""
    sign, xor = blade_tables(d)
    g = blade_grades(d)
    rev = np.where((g * (g - 1) // 2) % 2, -1.0, 1.0)
    Lx = np.ascontiguousarray(L, dtype=np.float64)
    # reverse only the third factor: gather, then apply the grade sign
    third = Lx[tri_edges[:, 2]] * rev
    stacked = np.concatenate([Lx, third])
    te = np.column_stack([tri_edges[:, 0], tri_edges[:, 1], Lx.shape[0] + np.arange(tri_edges.shape[0])])
    te = np.ascontiguousarray(te, dtype=np.int64)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        return _triple_scalar_nb(stacked, te, np.ascontiguousarray(sign), np.ascontiguousarray(xor.astype(np.int64)))
    return _triple_scalar_np(stacked, te, sign, xor)
