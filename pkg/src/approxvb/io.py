"""Plain-text file formats.

Filtration file
    One simplex per line, ``dim v0 v1 ... vk birth``, vertices ascending.
    Lines starting with ``#`` are comments; ``# threshold <value>`` records the
    filtration threshold.  Every vertex appears as a ``0 v birth`` line.

Cocycle file
    Header ``d n_vertices``, then one line per edge ``i j`` (``i < j``) followed
    by the ``d*d`` entries of ``Omega_ij`` in row-major order.

Trivialization file
    Header ``D d``, then one line per vertex holding the ``D*d`` entries of its
    frame in row-major order.

Point clouds, rotations and matrices are CSV without header, one row per
point (rotations: the 9 row-major entries of each 3x3 block).  The path
``-`` stands for stdin or stdout.

Floats are written with ``repr`` so reading back gives identical values.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ._textio import open_text as _open
from .bundle import DiscreteCocycle, DiscreteTrivialization
from .complex import MAX_DIM, Cochain, Filtration, SimplicialComplex
from .errors import DegenerateInputError


def _fmt(x: float) -> str:
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _data_lines(path):
    with _open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if s and not s.startswith("#"):
                yield lineno, s


def write_filtration(F: Filtration, path) -> None:
    K = F.complex
    with _open(path, "w") as fh:
        if not math.isinf(F.threshold):
            fh.write(f"# threshold {_fmt(F.threshold)}\n")
        for k in range(K.dim + 1):
            for row, b in zip(K.simplices[k], F.births[k]):
                fh.write(f"{k} " + " ".join(str(int(v)) for v in row) + f" {_fmt(b)}\n")


def read_filtration(path) -> Filtration:
    threshold = math.inf
    rows: dict[int, list] = {}
    births: dict[int, list] = {}
    with _open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                parts = s[1:].split()
                if len(parts) == 2 and parts[0] == "threshold":
                    threshold = float(parts[1])
                continue
            parts = s.split()
            try:
                k = int(parts[0])
                verts = [int(v) for v in parts[1:-1]]
                b = float(parts[-1])
            except (ValueError, IndexError) as exc:
                raise DegenerateInputError(f"{path}:{lineno}: malformed simplex line") from exc
            if k < 0 or k > MAX_DIM or len(verts) != k + 1:
                raise DegenerateInputError(f"{path}:{lineno}: expected {k + 1} vertices for a {k}-simplex")
            if verts != sorted(set(verts)):
                raise DegenerateInputError(f"{path}:{lineno}: vertices must be strictly increasing")
            rows.setdefault(k, []).append(verts)
            births.setdefault(k, []).append(b)
    if 0 not in rows:
        raise DegenerateInputError(f"{path}: no vertices")
    n = max(v[0] for v in rows[0]) + 1
    if sorted(v[0] for v in rows[0]) != list(range(n)):
        raise DegenerateInputError(f"{path}: vertices must be 0..n-1, each listed once")
    top = max(rows)
    simplices = [None] + [np.array(rows.get(k, []), dtype=np.int64).reshape(-1, k + 1) for k in range(1, top + 1)]
    K = SimplicialComplex(n, simplices)
    b0 = np.empty(n)
    for (v,), b in zip(rows[0], births[0]):
        b0[v] = b
    bs = [b0] + [np.array(births.get(k, []), dtype=float) for k in range(1, K.dim + 1)]
    return Filtration(K, bs, threshold)


def write_cocycle(omega: DiscreteCocycle, path) -> None:
    K = omega.complex
    with _open(path, "w") as fh:
        fh.write(f"{omega.d} {K.n_vertices}\n")
        edges = K.simplices[1] if K.dim >= 1 else np.zeros((0, 2), dtype=np.int64)
        for (i, j), M in zip(edges, omega.values):
            fh.write(f"{int(i)} {int(j)} " + " ".join(_fmt(x) for x in M.ravel()) + "\n")


def read_cocycle(path, complex: SimplicialComplex | None = None) -> DiscreteCocycle:
    """Read a cocycle file.

    Without ``complex`` the cocycle lives on the 1-skeleton spanned by the listed
    edges.  With ``complex`` every edge of it must be listed (extra edges are an
    error).
    """
    lines = _data_lines(path)
    try:
        _, header = next(lines)
        d, n = (int(t) for t in header.split())
    except (StopIteration, ValueError) as exc:
        raise DegenerateInputError(f"{path}: missing or malformed header 'd n_vertices'") from exc
    edges, mats = [], []
    for lineno, s in lines:
        parts = s.split()
        if len(parts) != 2 + d * d:
            raise DegenerateInputError(f"{path}:{lineno}: expected 2 + {d * d} fields")
        i, j = int(parts[0]), int(parts[1])
        M = np.array([float(x) for x in parts[2:]]).reshape(d, d)
        if i > j:
            i, j, M = j, i, M.T
        if i == j or j >= n:
            raise DegenerateInputError(f"{path}:{lineno}: bad edge ({i}, {j})")
        edges.append((i, j))
        mats.append(M)
    E = np.array(edges, dtype=np.int64).reshape(-1, 2)
    V = np.array(mats, dtype=float).reshape(-1, d, d)
    if complex is None:
        if len(set(edges)) != len(edges):
            raise DegenerateInputError(f"{path}: repeated edge")
        complex = SimplicialComplex(n, [None, E])
        return DiscreteCocycle(complex, d, V)
    if complex.n_vertices != n:
        raise DegenerateInputError(f"{path}: file has {n} vertices, complex has {complex.n_vertices}")
    if complex.n_simplices(1) != len(edges):
        raise DegenerateInputError(f"{path}: {len(edges)} edges listed, complex has {complex.n_simplices(1)}")
    try:
        pos = complex.index(E, 1)
    except KeyError as exc:
        raise DegenerateInputError(f"{path}: edge not in complex: {exc}") from exc
    out = np.empty_like(V)
    out[pos] = V
    return DiscreteCocycle(complex, d, out)


def write_trivialization(phi: DiscreteTrivialization, path) -> None:
    with _open(path, "w") as fh:
        fh.write(f"{phi.D} {phi.d}\n")
        for F in phi.frames:
            fh.write(" ".join(_fmt(x) for x in F.ravel()) + "\n")


def read_trivialization(path, complex: SimplicialComplex | None = None) -> DiscreteTrivialization:
    lines = _data_lines(path)
    try:
        _, header = next(lines)
        D, d = (int(t) for t in header.split())
    except (StopIteration, ValueError) as exc:
        raise DegenerateInputError(f"{path}: missing or malformed header 'D d'") from exc
    frames = []
    for lineno, s in lines:
        parts = s.split()
        if len(parts) != D * d:
            raise DegenerateInputError(f"{path}:{lineno}: expected {D * d} entries")
        frames.append([float(x) for x in parts])
    Fr = np.array(frames, dtype=float).reshape(-1, D, d)
    if complex is None:
        complex = SimplicialComplex(Fr.shape[0], [None])
    return DiscreteTrivialization(complex, Fr)


def write_matrix_csv(A, path) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    with _open(path, "w") as fh:
        for row in A:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    for lineno, s in _data_lines(path):
        try:
            rows.append([float(x) for x in s.split(",")])
        except ValueError as exc:
            raise DegenerateInputError(f"{path}:{lineno}: non-numeric entry") from exc
    if not rows:
        raise DegenerateInputError(f"{path}: empty file")
    if len({len(r) for r in rows}) != 1:
        raise DegenerateInputError(f"{path}: ragged rows")
    return np.array(rows, dtype=float)


def write_rotations(R, path) -> None:
    write_matrix_csv(np.asarray(R, dtype=float).reshape(-1, 9), path)


def read_rotations(path) -> np.ndarray:
    A = read_matrix_csv(path)
    if A.shape[1] != 9:
        raise DegenerateInputError(f"{path}: rotations need 9 entries per row")
    return A.reshape(-1, 3, 3)


def write_table_csv(header, rows, path) -> None:
    with _open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(int(x)) if isinstance(x, (int, np.integer)) else _fmt(x) for x in row) + "\n")


def ensure_parent(path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def read_cochain_csv(path, complex: SimplicialComplex, ring: int = 2) -> Cochain:
    """Read a ``v0,..,vk,value`` CSV (as written by class exports) onto ``complex``.

    Simplices of ``complex`` missing from the file get value 0; rows naming
    simplices outside ``complex`` are an error.
    """
    with _open(path) as fh:
        header = fh.readline().strip().split(",")
        if len(header) < 2 or header[-1] != "value":
            raise DegenerateInputError(f"{path}: header must be v0,..,vk,value")
        k = len(header) - 2
        rows, vals = [], []
        for lineno, line in enumerate(fh, start=2):
            s = line.strip()
            if not s:
                continue
            parts = s.split(",")
            if len(parts) != k + 2:
                raise DegenerateInputError(f"{path}:{lineno}: expected {k + 2} fields")
            rows.append(sorted(int(v) for v in parts[:-1]))
            vals.append(int(parts[-1]))
    v = np.zeros(complex.n_simplices(k), dtype=np.int64)
    if rows:
        try:
            idx = complex.index(np.array(rows, dtype=np.int64), k)
        except KeyError as exc:
            raise DegenerateInputError(f"{path}: simplex not in the complex: {exc}") from exc
        v[idx] = vals
    return Cochain(complex, k, v, ring)
