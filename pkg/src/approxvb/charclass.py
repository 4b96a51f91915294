"""First and second Stiefel-Whitney classes and the Euler class of discrete
approximate cocycles.

Each algorithm fixes one lift per edge ``(i, j)``, ``i < j``, and evaluates
every triangle ``(i, j, k)``, ``i < j < k``, on ``Lambda_ij``, ``Lambda_jk``
and ``Lambda_ik^{-1}``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ._textio import open_text
from . import clifford, matgeo
from .bundle import DEFECT_TOL, DiscreteCocycle, consistency_radius, sw1_values
from .complex import INTEGERS, Cochain, is_cocycle
from .errors import AmbiguityError, DegenerateInputError, RegimeError

SW1_RADIUS = 2.0
SW2_RADIUS = 1.0
EULER_RADIUS = 1.0
ROUNDING_TOL = 1e-9


def cocycle_hash(omega: DiscreteCocycle) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(omega.complex.simplices[1] if omega.complex.dim >= 1 else []).tobytes())
    h.update(np.ascontiguousarray(omega.values).tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class CharClassCocycle:
    name: str
    cochain: Cochain
    radius: float = 0.0
    source: str = field(default="", compare=False)

    @property
    def degree(self) -> int:
        return self.cochain.degree

    @property
    def ring(self) -> int:
        return self.cochain.ring

    def write_csv(self, path) -> None:
        K = self.cochain.complex
        rows = K.simplices[self.degree] if self.degree <= K.dim else np.zeros((0, self.degree + 1), dtype=int)
        with open_text(path, "w") as fh:
            fh.write(",".join([f"v{i}" for i in range(self.degree + 1)] + ["value"]) + "\n")
            for s, v in zip(rows, self.cochain.values):
                fh.write(",".join(str(int(x)) for x in s) + f",{int(v)}\n")


def _sorted_triangles(omega: DiscreteCocycle) -> tuple[np.ndarray, np.ndarray]:
    K = omega.complex
    if K.dim < 2:
        return np.zeros((0, 3), dtype=np.int64), np.zeros((0, 3), dtype=np.int64)
    T = K.simplices[2]
    e = np.column_stack([K.index(T[:, [0, 1]], 1), K.index(T[:, [1, 2]], 1), K.index(T[:, [0, 2]], 1)])
    return T, e


def _check_radius(omega: DiscreteCocycle, bound: float, name: str, strict: bool) -> float:
    r = consistency_radius(omega)
    if (r >= bound - DEFECT_TOL) if strict else (r > bound):
        rel = "<" if strict else "<="
        raise RegimeError(f"{name} needs consistency radius {rel} {bound}, got {r:.6g}")
    return r


def sw1(omega: DiscreteCocycle) -> CharClassCocycle:
    """Determinant cocycle: ``1`` on edges with ``det(Omega_ji) = -1``."""
    r = _check_radius(omega, SW1_RADIUS, "sw1", strict=True)
    c = Cochain(omega.complex, 1, sw1_values(omega), 2)
    if not is_cocycle(c):
        raise AssertionError("sw1 output is not a cocycle despite radius < 2")
    return CharClassCocycle("sw1", c, r, cocycle_hash(omega))


def euler(omega: DiscreteCocycle, lift_shift=None) -> CharClassCocycle:
    """Integer Euler cocycle of an oriented rank-2 approximate cocycle.

    ``lift_shift`` optionally adds an integer to the principal angle lift of
    each edge; the resulting cocycle changes by a coboundary only.
    """
    if omega.d != 2:
        raise DegenerateInputError(f"Euler class needs rank 2, got {omega.d}")
    if np.any(omega.determinants() < 0):
        raise DegenerateInputError("Euler class needs SO(2) values (orient the cocycle first)")
    r = _check_radius(omega, EULER_RADIUS, "euler", strict=False)
    lam = matgeo.so2_lift_batch(omega.values) if omega.values.shape[0] else np.zeros(0)
    if lift_shift is not None:
        lam = lam + np.asarray(lift_shift, dtype=float)
    _, e = _sorted_triangles(omega)
    x = lam[e[:, 0]] + lam[e[:, 1]] - lam[e[:, 2]]
    frac = x - np.floor(x)
    if np.any(np.abs(frac - 0.5) < ROUNDING_TOL):
        raise AmbiguityError("angle sum is halfway between two integers")
    vals = np.rint(x).astype(np.int64)
    c = Cochain(omega.complex, 2, vals, INTEGERS)
    if not is_cocycle(c):
        raise AssertionError("Euler output is not a cocycle inside the guaranteed regime")
    return CharClassCocycle("euler", c, r, cocycle_hash(omega))


def pin_lifts(omega: DiscreteCocycle) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient vectors and parities of one ``Pin(d)`` lift per edge."""
    m = omega.values.shape[0]
    L = np.empty((m, 1 << omega.d))
    par = np.empty(m, dtype=np.int64)
    for e in range(m):
        p = clifford.pin_lift(omega.values[e])
        L[e] = p.value.coeffs
        par[e] = p.parity
    return L, par


def sw2(omega: DiscreteCocycle, lift_signs=None, use_numba: bool | None = None) -> CharClassCocycle:
    """Second Stiefel-Whitney cocycle via lifts to ``Pin(d)``.

    ``lift_signs`` optionally multiplies each edge lift by ``+-1``; the
    resulting cocycle changes by a coboundary only.
    """
    r = _check_radius(omega, SW2_RADIUS, "sw2", strict=False)
    L, par = pin_lifts(omega)
    if lift_signs is not None:
        L = L * np.asarray(lift_signs, dtype=float)[:, None]
    _, e = _sorted_triangles(omega)
    odd = (par[e[:, 0]] + par[e[:, 1]] + par[e[:, 2]]) % 2
    if np.any(odd):
        raise DegenerateInputError("triangle product is not in Spin(d)")
    c0 = clifford.triple_scalar_parts(L, e, omega.d, use_numba) if e.shape[0] else np.zeros(0)
    if np.any(np.abs(c0) <= clifford.SCALAR_TOL):
        raise AmbiguityError("triangle product is equidistant from +1 and -1")
    if omega.d > clifford.MAX_GEODESIC_DIM and e.shape[0]:
        import warnings

        warnings.warn(f"sw2 for d={omega.d} > 4 uses the scalar-coefficient heuristic", RuntimeWarning, stacklevel=2)
    c = Cochain(omega.complex, 2, (c0 < 0).astype(np.int64), 2)
    if not is_cocycle(c):
        raise AssertionError("sw2 output is not a cocycle inside the guaranteed regime")
    return CharClassCocycle("sw2", c, r, cocycle_hash(omega))


def reduce_mod(z: CharClassCocycle, p: int) -> CharClassCocycle:
    """Entrywise reduction of an integer class cocycle to ``Z/p``."""
    return CharClassCocycle(f"{z.name}_mod{p}", z.cochain.reduce(p), z.radius, z.source)
