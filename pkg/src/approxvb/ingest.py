"""Point-cloud front end and the dataset generators used in the examples:
local PCA frames, delay embeddings, the double-gyre flow, fuzzy line images
and projections of a union of balls with their alignment cocycle.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ._accel import njit
from .bundle import DiscreteCocycle, DiscreteTrivialization
from .complex import SimplicialComplex
from .errors import AmbiguityError, DegenerateInputError

SV_GAP_TOL = 1e-10


def as_point_cloud(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DegenerateInputError(f"point cloud must be 2-d (n, D), got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DegenerateInputError("point cloud has non-finite entries")
    return X


def euclidean_dissimilarity(X) -> np.ndarray:
    X = as_point_cloud(X)
    sq = np.sum(X * X, axis=1)
    D2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D2, 0.0, out=D2)
    D = np.sqrt(D2)
    np.fill_diagonal(D, 0.0)
    return 0.5 * (D + D.T)


def knn_indices(X, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest points of each point (itself included), ties by index."""
    D = euclidean_dissimilarity(X)
    return np.argsort(D, axis=1, kind="stable")[:, :k]


def _fix_signs(V: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive
    idx = np.argmax(np.abs(V), axis=0)
    s = np.sign(V[idx, np.arange(V.shape[1])])
    s[s == 0] = 1.0
    return V * s


def local_pca_frames(X, k: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-``d`` principal directions of each ``k``-neighborhood.

    Returns ``(frames, degenerate)`` with frames of shape ``(n, D, d)`` and a
    boolean mask of vertices whose ``d``-th and ``(d+1)``-th singular values tie.
    """
    X = as_point_cloud(X)
    n, D = X.shape
    if k < d:
        raise DegenerateInputError(f"need k >= d, got k={k}, d={d}")
    if n < k:
        raise DegenerateInputError(f"need at least k={k} points, got {n}")
    if d > D:
        raise DegenerateInputError(f"target rank {d} exceeds ambient dimension {D}")
    nbrs = knn_indices(X, k)
    frames = np.empty((n, D, d))
    degenerate = np.zeros(n, dtype=bool)
    for i in range(n):
        N = X[nbrs[i]]
        N = N - N.mean(axis=0)
        _, s, Vt = np.linalg.svd(N, full_matrices=False)
        frames[i] = _fix_signs(Vt[:d].T)
        if d < s.shape[0] and s[d - 1] - s[d] <= SV_GAP_TOL * max(s[0], 1.0):
            degenerate[i] = True
    return frames, degenerate


def local_pca(X, k: int, d: int, complex: SimplicialComplex | None = None) -> DiscreteTrivialization:
    """Local PCA trivialization over the points of ``X`` (vertex ``i`` is ``X[i]``)."""
    X = as_point_cloud(X)
    frames, degenerate = local_pca_frames(X, k, d)
    if np.any(degenerate):
        warnings.warn(
            f"degenerate neighborhoods (singular value tie at rank {d}) at vertices "
            f"{np.flatnonzero(degenerate).tolist()[:10]}",
            RuntimeWarning,
            stacklevel=2,
        )
    if complex is None:
        complex = SimplicialComplex(X.shape[0], [None])
    if complex.n_vertices != X.shape[0]:
        raise DegenerateInputError("complex vertices do not match the point cloud")
    return DiscreteTrivialization(complex, frames)


def delay_embed(series, d: int, tau: int) -> np.ndarray:
    """Rows ``(x_i, x_{i+tau}, ..., x_{i+(d-1)tau})``."""
    x = np.asarray(series, dtype=float).ravel()
    span = (d - 1) * tau
    if d < 1 or tau < 1:
        raise DegenerateInputError("need d >= 1 and tau >= 1")
    if x.shape[0] < span + 1:
        raise DegenerateInputError(f"series of length {x.shape[0]} too short for d={d}, tau={tau}")
    m = x.shape[0] - span
    return np.stack([x[j * tau:j * tau + m] for j in range(d)], axis=1)


def maxmin_subsample(X, n: int, seed: int = 0) -> np.ndarray:
    """Greedy farthest-point subsample; returns sorted indices."""
    X = as_point_cloud(X)
    if n >= X.shape[0]:
        return np.arange(X.shape[0])
    rng = np.random.default_rng(seed)
    idx = [int(rng.integers(X.shape[0]))]
    dist = np.linalg.norm(X - X[idx[0]], axis=1)
    for _ in range(n - 1):
        j = int(np.argmax(dist))
        idx.append(j)
        dist = np.minimum(dist, np.linalg.norm(X - X[j], axis=1))
    return np.sort(np.array(idx))


# double gyre


@njit
def _gyre_velocity(x, y, t, A, eps, omega, sign):
    a = eps * np.sin(omega * t)
    f = a * x * x + (1.0 - 2.0 * a) * x
    dfdx = 2.0 * a * x + 1.0 - 2.0 * a
    dpsi_dy = A * np.pi * np.sin(np.pi * f) * np.cos(np.pi * y)
    dpsi_dx = A * np.pi * np.cos(np.pi * f) * np.sin(np.pi * y) * dfdx
    return sign * dpsi_dy, -sign * dpsi_dx


@njit
def _gyre_rk4(x0, y0, times, h_max, A, eps, omega, sign):
    out = np.empty((times.shape[0], 2))
    x = x0
    y = y0
    out[0, 0] = x
    out[0, 1] = y
    for s in range(1, times.shape[0]):
        t = times[s - 1]
        span = times[s] - t
        steps = int(np.ceil(span / h_max - 1e-12))
        if steps < 1:
            steps = 1
        h = span / steps
        for _ in range(steps):
            k1x, k1y = _gyre_velocity(x, y, t, A, eps, omega, sign)
            k2x, k2y = _gyre_velocity(x + 0.5 * h * k1x, y + 0.5 * h * k1y, t + 0.5 * h, A, eps, omega, sign)
            k3x, k3y = _gyre_velocity(x + 0.5 * h * k2x, y + 0.5 * h * k2y, t + 0.5 * h, A, eps, omega, sign)
            k4x, k4y = _gyre_velocity(x + h * k3x, y + h * k3y, t + h, A, eps, omega, sign)
            x += h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
            y += h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0
            t += h
        out[s, 0] = x
        out[s, 1] = y
    return out


def double_gyre_velocity(x: float, y: float, t: float, A: float, eps: float, omega: float,
                         flow_sign: int = 1) -> tuple[float, float]:
    """``flow_sign * (dpsi/dy, -dpsi/dx)`` for the stream function ``A sin(pi f(x, t)) sin(pi y)``.

    ``flow_sign=-1`` gives the common convention ``(-dpsi/dy, dpsi/dx)``; it is
    the default flow mirrored by ``y -> 1 - y``.
    """
    if flow_sign not in (1, -1):
        raise DegenerateInputError("flow_sign must be 1 or -1")
    vx, vy = _gyre_velocity(float(x), float(y), float(t), float(A), float(eps), float(omega), float(flow_sign))
    return float(vx), float(vy)


def gen_double_gyre(A: float = 0.1, eps: float = 0.1, omega: float = np.pi / 5, x0: float = 0.55,
                    y0: float = 0.5, t0: float = 0.0, n_samples: int = 2000, t_end: float = 1000.0,
                    step: float = 1e-2, flow_sign: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Trajectory sampled at ``n_samples`` equally spaced times on ``[t0, t_end]``.

    Fixed-step RK4 with step at most ``step``.  Returns ``(times, positions)``.
    """
    if min(A, eps, omega) <= 0 or step <= 0:
        raise DegenerateInputError("A, eps, omega and step must be positive")
    if not (0 <= x0 <= 2 and 0 <= y0 <= 1):
        raise DegenerateInputError("initial position must lie in [0, 2] x [0, 1]")
    if flow_sign not in (1, -1):
        raise DegenerateInputError("flow_sign must be 1 or -1")
    times = np.linspace(t0, t_end, n_samples)
    pos = _gyre_rk4(float(x0), float(y0), times, float(step), float(A), float(eps), float(omega), float(flow_sign))
    return times, pos


def attractor_dataset(x0: float, y0: float, t0: float = 0.0, n_points: int = 1000, tau: int = 5, d: int = 5,
                      seed: int = 0, step: float = 1e-2, subsample: str = "random", **flow) -> np.ndarray:
    """Delay embedding of the x-coordinate of a double-gyre trajectory, subsampled.

    ``subsample`` is ``"random"`` (uniform without replacement, order kept) or
    ``"maxmin"``.  Extra keyword arguments go to :func:`gen_double_gyre`.
    """
    _, pos = gen_double_gyre(x0=x0, y0=y0, t0=t0, step=step, **flow)
    X = delay_embed(pos[:, 0], d, tau)
    if n_points >= len(X):
        return X
    if subsample == "maxmin":
        return X[maxmin_subsample(X, n_points, seed)]
    if subsample != "random":
        raise ValueError(f"unknown subsample mode {subsample!r}")
    rng = np.random.default_rng(seed)
    return X[np.sort(rng.choice(len(X), n_points, replace=False))]


# fuzzy lines


def _pixel_centers(size: int, half_width: float) -> tuple[np.ndarray, np.ndarray]:
    c = (np.arange(size) + 0.5) * (2.0 * half_width / size) - half_width
    x, y = np.meshgrid(c, c)  # x varies along columns, y along rows
    return x, y


def line_image(theta: float, offset: float, size: int = 10, sigma: float = 1.5) -> np.ndarray:
    """Gaussian profile of the distance to the line ``{p : <p, (cos t, sin t)> = offset}``.

    Coordinates are in pixel units centered on the image.
    """
    x, y = _pixel_centers(size, size / 2.0)
    dist = x * np.cos(theta) + y * np.sin(theta) - offset
    return np.exp(-dist * dist / (2.0 * sigma * sigma))


LINES_N_ANGLES = 64
LINES_N_OFFSETS = 64


def line_grid(size: int = 10, n_angles: int = LINES_N_ANGLES, n_offsets: int = LINES_N_OFFSETS,
              sigma: float = 1.5, max_offset: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Flattened line images on an angle x offset grid and their ``(theta, offset)``.

    Angles are ``pi * a / n_angles``; offsets are evenly spaced in
    ``[-max_offset, max_offset]`` (default: the image side, so the outer rows are
    nearly blank).  Images are divided by the largest image norm, which keeps
    faint far-away lines close to the blank image.
    """
    max_offset = float(size) if max_offset is None else float(max_offset)
    thetas = np.pi * np.arange(n_angles) / n_angles
    offsets = np.linspace(-max_offset, max_offset, n_offsets)
    params = np.array([(t, o) for t in thetas for o in offsets])
    imgs = np.array([line_image(t, o, size, sigma).ravel() for t, o in params])
    return imgs / np.linalg.norm(imgs, axis=1).max(), params


def gen_lines(count: int = 160, size: int = 10, n_angles: int = LINES_N_ANGLES, sigma: float = 1.5,
              max_offset: float | None = None, n_offsets: int = LINES_N_OFFSETS, seed: int = 0) -> np.ndarray:
    """``count`` fuzzy-line images: a farthest-point subsample of :func:`line_grid`.

    The greedy subsample spreads the images evenly in image space, so the many
    near-blank grid images contribute only a few points.
    """
    imgs, _ = line_grid(size, n_angles, n_offsets, sigma, max_offset)
    if count > imgs.shape[0]:
        raise DegenerateInputError(f"count {count} exceeds the grid size {imgs.shape[0]}")
    return imgs[maxmin_subsample(imgs, count, seed)]


# projections of a union of balls

BALL_CENTERS = np.array([
    [0.42, 0.05, -0.10],
    [-0.28, 0.42, 0.12],
    [-0.22, -0.38, -0.30],
    [0.05, -0.05, 0.58],
])
BALL_RADII = np.array([0.35, 0.30, 0.25, 0.20])


def super_fibonacci_quaternions(n: int) -> np.ndarray:
    """Low-discrepancy unit quaternions ``(w, x, y, z)`` (super-Fibonacci spirals)."""
    phi = np.sqrt(2.0)
    psi = 1.533751168755204288118041
    s = np.arange(n) + 0.5
    t = s / n
    r = np.sqrt(t)
    R = np.sqrt(1.0 - t)
    alpha = 2.0 * np.pi * s / phi
    beta = 2.0 * np.pi * s / psi
    return np.stack([r * np.sin(alpha), r * np.cos(alpha), R * np.sin(beta), R * np.cos(beta)], axis=1)


def quaternion_to_matrix(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = np.moveaxis(q, -1, 0)
    return np.stack([
        np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], axis=-1),
        np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], axis=-1),
        np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], axis=-1),
    ], axis=-2)


def sample_rotations(n: int, seed: int = 0) -> np.ndarray:
    """Super-Fibonacci sample of ``SO(3)`` composed with one seeded random rotation."""
    rng = np.random.default_rng(seed)
    g = quaternion_to_matrix(rng.standard_normal(4))
    return g @ quaternion_to_matrix(super_fibonacci_quaternions(n))


def projection_image(v, size: int = 100, centers=BALL_CENTERS, radii=BALL_RADII) -> np.ndarray:
    """Line integrals along the camera ``z``-axis of the indicator of the balls, rotated by ``v``.

    Pixel ``(row, col)`` sees camera coordinates ``(x_col, y_row)`` on ``[-1, 1]^2``;
    the molecule point is ``v @ (x, y, z)``.  Balls are assumed disjoint.
    """
    v = np.asarray(v, dtype=float)
    x, y = _pixel_centers(size, 1.0)
    img = np.zeros((size, size))
    for c, rho in zip(centers, radii):
        cc = v.T @ c
        r2 = (x - cc[0]) ** 2 + (y - cc[1]) ** 2
        img += 2.0 * np.sqrt(np.maximum(rho * rho - r2, 0.0))
    return img


def gen_sphere_projections(n: int = 400, size: int = 100, seed: int = 0, centers=BALL_CENTERS,
                           radii=BALL_RADII) -> tuple[np.ndarray, np.ndarray]:
    """``(images, rotations)``: flattened projections and the rotations that produced them."""
    rots = sample_rotations(n, seed)
    imgs = np.array([projection_image(v, size, centers, radii).ravel() for v in rots])
    return imgs, rots


def geodesic_rotation(a, b, strict: bool = True) -> np.ndarray:
    """Rotation taking unit vector ``a`` to ``b`` about the axis ``a x b``.

    Antipodal inputs have no unique minimizing geodesic: with ``strict`` this
    raises, otherwise a fixed axis perpendicular to ``a`` is used.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    axis = np.cross(a, b)
    s = np.linalg.norm(axis)
    c = float(np.clip(np.dot(a, b), -1.0, 1.0))
    if s < 1e-12:
        if c > 0:
            return np.eye(3)
        if strict:
            raise AmbiguityError("antipodal directions: minimizing geodesic is not unique")
        trial = np.eye(3)[np.argmin(np.abs(a))]
        axis = np.cross(a, trial)
        s = np.linalg.norm(axis)
        axis /= s
        return 2.0 * np.outer(axis, axis) - np.eye(3)
    k = axis / s
    Kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * Kx + (1.0 - c) * (Kx @ Kx)


def alignment_matrix(vi, vj, strict: bool = True) -> np.ndarray:
    """``Omega_ij`` in ``SO(2)`` with ``r_ji v_j = v_i diag(Omega_ij, 1)``.

    ``r_ji`` moves the viewing direction of ``v_j`` (third column) to that of
    ``v_i`` along a minimizing geodesic.
    """
    vi = np.asarray(vi, dtype=float)
    vj = np.asarray(vj, dtype=float)
    r = geodesic_rotation(vj[:, 2], vi[:, 2], strict)
    M = vi.T @ r @ vj
    if M[2, 2] < 1 - 1e-8 or np.abs(M[:2, 2]).max() > 1e-8 or np.abs(M[2, :2]).max() > 1e-8:
        raise AssertionError("aligned frames do not share the viewing axis")
    return M[:2, :2]


def alignment_cocycle(rotations, complex: SimplicialComplex) -> DiscreteCocycle:
    """``SO(2)``-valued cocycle of in-plane alignments on the edges of ``complex``."""
    R = np.asarray(rotations, dtype=float)
    if complex.n_vertices != R.shape[0]:
        raise DegenerateInputError("one rotation per vertex is required")
    E = complex.simplices[1] if complex.dim >= 1 else np.zeros((0, 2), dtype=np.int64)
    vals = np.array([alignment_matrix(R[i], R[j]) for i, j in E]).reshape(-1, 2, 2)
    return DiscreteCocycle(complex, 2, vals)


def disc_mask(size: int) -> np.ndarray:
    x, y = _pixel_centers(size, 1.0)
    return (x * x + y * y) <= 1.0


def rotate_image(img, omega, order: int = 1) -> np.ndarray:
    """``(Omega . img)(p) = img(Omega^t p)`` with bilinear resampling, zero outside the disc."""
    img = np.asarray(img, dtype=float)
    size = img.shape[0]
    x, y = _pixel_centers(size, 1.0)
    P = np.stack([x.ravel(), y.ravel()])
    Q = np.asarray(omega, dtype=float).T @ P
    col = (Q[0] + 1.0) * size / 2.0 - 0.5
    row = (Q[1] + 1.0) * size / 2.0 - 0.5
    out = ndimage.map_coordinates(img * disc_mask(size), [row, col], order=order, mode="constant", cval=0.0)
    return out.reshape(size, size) * disc_mask(size)


def rotated_image_distance(xi, xj, omega) -> float:
    """Frobenius distance between ``x_i`` and ``x_j`` rotated in-plane by ``omega``."""
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    if xi.ndim == 1:
        s = int(round(np.sqrt(xi.shape[0])))
        xi = xi.reshape(s, s)
        xj = xj.reshape(s, s)
    if xi.shape != xj.shape or xi.shape[0] != xi.shape[1]:
        raise DegenerateInputError("images must be square and of equal size")
    return float(np.linalg.norm(xi * disc_mask(xi.shape[0]) - rotate_image(xj, omega)))


def projection_dissimilarity(images, rotations) -> np.ndarray:
    """Symmetrized aligned-image distances for all pairs."""
    X = np.asarray(images, dtype=float)
    R = np.asarray(rotations, dtype=float)
    n = X.shape[0]
    s = int(round(np.sqrt(X.shape[1])))
    imgs = X.reshape(n, s, s)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            om = alignment_matrix(R[i], R[j], strict=False)
            dij = rotated_image_distance(imgs[i], imgs[j], om)
            dji = rotated_image_distance(imgs[j], imgs[i], om.T)
            D[i, j] = D[j, i] = 0.5 * (dij + dji)
    return D


@dataclass
class ProjsDataset:
    images: np.ndarray
    rotations: np.ndarray
    dissimilarity: np.ndarray
