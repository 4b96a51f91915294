"""Shared constructions and brute-force oracles for the test suite."""

from __future__ import annotations

import itertools

import numpy as np

from approxvb.bundle import DiscreteCocycle, DiscreteTrivialization
from approxvb.complex import Filtration, SimplicialComplex
from scipy.linalg import expm

from approxvb.matgeo import polar_orthogonal_factor, random_frame, random_orthogonal

# pass/fail lines collected by the acceptance tests, echoed in the pytest summary
ACCEPTANCE_LINES: list[str] = []


def hexagon_points() -> np.ndarray:
    a = 2 * np.pi * np.arange(6) / 6
    return np.column_stack([np.cos(a), np.sin(a)])


def cycle_complex(n: int) -> SimplicialComplex:
    edges = [tuple(sorted((i, (i + 1) % n))) for i in range(n)]
    return SimplicialComplex.from_simplices(edges, n)


def mobius_cocycle(n: int = 6, twisted: bool = True) -> DiscreteCocycle:
    K = cycle_complex(n)
    vals = np.ones((K.n_simplices(1), 1, 1))
    if twisted:
        vals[0] = -1.0
    return DiscreteCocycle(K, 1, vals)


OCTA_VERTICES = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)
OCTA_FACES = [(a, b, c) for a in (0, 1) for b in (2, 3) for c in (4, 5)]


def octahedron() -> SimplicialComplex:
    return SimplicialComplex.from_simplices(OCTA_FACES)


def subdivided_octahedron(levels: int = 1) -> tuple[np.ndarray, list]:
    """Loop-style 4-to-1 subdivision with new vertices pushed to the unit sphere."""
    V = [v for v in OCTA_VERTICES]
    faces = list(OCTA_FACES)
    for _ in range(levels):
        mid: dict = {}

        def m(a, b):
            key = (min(a, b), max(a, b))
            if key not in mid:
                x = V[a] + V[b]
                V.append(x / np.linalg.norm(x))
                mid[key] = len(V) - 1
            return mid[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = m(a, b), m(b, c), m(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return np.array(V), faces


def _tangent_basis(v: np.ndarray) -> np.ndarray:
    a = np.array([1.0, 0, 0]) if abs(v[0]) < 0.9 else np.array([0, 1.0, 0])
    a = a - v * (a @ v)
    a /= np.linalg.norm(a)
    return np.column_stack([a, np.cross(v, a)])


def sphere_tangent_cocycle(levels: int = 1) -> tuple[DiscreteCocycle, np.ndarray]:
    """SO(2) cocycle of the tangent bundle of the sphere on a subdivided octahedron.

    Vertex ``i`` carries a positively oriented frame field on its star (its
    tangent basis projected onto nearby tangent planes); ``Omega_ij`` compares
    the two fields at the edge midpoint.
    """
    V, faces = subdivided_octahedron(levels)
    K = SimplicialComplex.from_simplices(faces)

    def field(i, x):
        x = x / np.linalg.norm(x)
        return polar_orthogonal_factor((np.eye(3) - np.outer(x, x)) @ _tangent_basis(V[i]))

    om = DiscreteCocycle.from_function(K, 2, lambda i, j: field(i, V[i] + V[j]).T @ field(j, V[i] + V[j]))
    return om, V


def orientation_signs(V: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """+1 where the sorted triangle is counterclockwise seen from outside the sphere."""
    return np.sign(np.linalg.det(V[np.asarray(triangles)]))


def random_filtration(rng: np.random.Generator, n: int = 9, max_dim: int = 3, max_simplices: int = 200) -> Filtration:
    """Random clique filtration with integer-valued births (many ties)."""
    while True:
        pts = rng.integers(0, 5, size=(n, 2)).astype(float) + 0.01 * rng.standard_normal((n, 2))
        D = np.round(np.linalg.norm(pts[:, None] - pts[None], axis=2), 1)
        from approxvb.complex import vr_filtration

        thr = float(np.quantile(D[np.triu_indices(n, 1)], rng.uniform(0.3, 0.7)))
        F = vr_filtration(D, max_dim, thr)
        if len(F.complex) <= max_simplices:
            return F


def dense_betti(F: Filtration, k: int, r: float, p: int) -> int:
    """dim H^k(K_r; Z/p) from ranks of dense coboundary matrices built from scratch."""
    K = F.complex
    alive = [[tuple(s) for s, b in zip(K.simplices[j].tolist(), F.births[j]) if b <= r] for j in range(K.dim + 1)]

    def delta(j):
        lo = alive[j]
        hi = alive[j + 1] if j + 1 < len(alive) else []
        pos = {s: c for c, s in enumerate(lo)}
        M = np.zeros((len(hi), len(lo)), dtype=np.int64)
        for row, s in enumerate(hi):
            for i in range(len(s)):
                M[row, pos[s[:i] + s[i + 1:]]] = (-1) ** i
        return M

    def rank(M):
        A = M % p
        rk = 0
        for c in range(A.shape[1]):
            piv = [i for i in range(rk, A.shape[0]) if A[i, c]]
            if not piv:
                continue
            A[[rk, piv[0]]] = A[[piv[0], rk]]
            A[rk] = A[rk] * pow(int(A[rk, c]), p - 2, p) % p
            for i in range(A.shape[0]):
                if i != rk and A[i, c]:
                    A[i] = (A[i] - A[i, c] * A[rk]) % p
            rk += 1
        return rk

    if k > K.dim:
        return 0
    n_k = len(alive[k])
    out = rank(delta(k)) if k + 1 <= K.dim else 0
    inc = rank(delta(k - 1)) if k >= 1 else 0
    return n_k - out - inc


def z2_class_is_zero(K: SimplicialComplex, values: np.ndarray, degree: int) -> bool:
    """Brute-force check that a Z/2 cochain is a coboundary (exhaustive for tiny complexes)."""
    n_lo = K.n_simplices(degree - 1)
    M = K.coboundary_matrix(degree - 1).toarray() % 2
    target = np.asarray(values) % 2
    for bits in itertools.product((0, 1), repeat=n_lo):
        if np.array_equal(M @ np.array(bits) % 2, target):
            return True
    return False


def planted_trivialization(K: SimplicialComplex, D: int, d: int, eps: float, rng: np.random.Generator):
    """Frames ``Phi_i`` with ``||Phi_i Omega*_ij - Phi_j|| <= eps`` for a known exact ``Omega*``.

    Start from a global frame ``Phi`` and vertex gauges ``g_i`` so that
    ``Phi_i = Phi g_i`` and ``Omega*_ij = g_i^t g_j``; then perturb each frame by
    at most ``eps / 2`` and re-orthonormalize.
    """
    base = random_frame(D, d, rng)
    g = np.array([random_orthogonal(d, rng) for _ in range(K.n_vertices)])
    frames = []
    for i in range(K.n_vertices):
        F0 = base @ g[i]
        while True:
            E = rng.standard_normal((D, d))
            E *= rng.uniform(0, 0.5 * eps) / np.linalg.norm(E)
            F = polar_orthogonal_factor(F0 + E)
            if np.linalg.norm(F - F0) <= 0.5 * eps + 1e-14:
                break
        frames.append(F)
    omega_star = DiscreteCocycle.from_function(K, d, lambda i, j: g[i].T @ g[j])
    return DiscreteTrivialization(K, np.array(frames)), omega_star


def complete_complex(n: int, dim: int = 2) -> SimplicialComplex:
    return SimplicialComplex.from_simplices(itertools.combinations(range(n), dim + 1), n)


def exact_cocycle(K, d, rng, det=None):
    g = np.array([random_orthogonal(d, rng, det) for _ in range(K.n_vertices)])
    return DiscreteCocycle.from_function(K, d, lambda i, j: g[i] @ g[j].T), g


def perturb(omega, size, rng):
    """Multiply every edge value by a random rotation of Frobenius distance <= size from I."""
    d = omega.d
    vals = []
    for M in omega.values:
        A = rng.standard_normal((d, d))
        A = A - A.T
        n = np.linalg.norm(A)
        if n == 0:
            vals.append(M)
            continue
        # ||expm(tA) - I|| <= t ||A||; pick t so the shift is below size
        R = expm(A * (rng.uniform(0, size) / n))
        vals.append(M @ R)
    return DiscreteCocycle(omega.complex, d, np.array(vals))


def projective_plane() -> tuple[SimplicialComplex, np.ndarray]:
    """Six-vertex projective plane (icosahedron modulo the antipodal map).

    Also returns the edge cocycle of the orientation double cover: ``1`` on
    edges whose chosen vertex representatives are not adjacent upstairs.
    """
    phi = (1 + np.sqrt(5)) / 2
    ico = []
    for s1 in (1, -1):
        for s2 in (1, -1):
            for perm in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
                v = np.array([0.0, s1 * 1.0, s2 * phi])
                ico.append(v[list(perm)])
    ico = np.array(ico)
    reps = ico[ico @ np.array([1.0, 0.1, 0.01]) > 0]
    adj = lambda a, b: abs(np.linalg.norm(a - b) - 2) < 1e-9
    tris = set()
    for a, b, c in itertools.combinations(range(6), 3):
        for sb, sc in itertools.product((1, -1), repeat=2):
            x, y, z = reps[a], sb * reps[b], sc * reps[c]
            if adj(x, y) and adj(y, z) and adj(x, z):
                tris.add((a, b, c))
    K = SimplicialComplex.from_simplices(sorted(tris), 6)
    w1 = np.array([0 if adj(reps[i], reps[j]) else 1 for i, j in K.simplices[1]], dtype=np.int64)
    return K, w1
