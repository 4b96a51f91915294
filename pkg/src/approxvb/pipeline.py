"""End-to-end workflow: filtration, approximate cocycle, epsilon-death,
characteristic class and its decomposition in the persistence basis.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import charclass
from .bundle import DiscreteCocycle, epsilon_death, triangle_defects, witness
from .complex import Filtration, SimplicialComplex
from .errors import DegenerateInputError, RegimeError
from .ingest import local_pca
from .persistence import ClassDecomposition, PersistenceDiagram, decompose_class, epsilon_span, persistent_cohomology

log = logging.getLogger(__name__)

CLASS_SPECS = {
    # name: (default epsilon, regime bound, cohomology degree, default prime)
    "sw1": (2.0, charclass.SW1_RADIUS, 1, 2),
    "sw2": (1.0, charclass.SW2_RADIUS, 2, 2),
    "euler": (1.0, charclass.EULER_RADIUS, 2, 3),
}


def restrict_cocycle(omega: DiscreteCocycle, sub: SimplicialComplex) -> DiscreteCocycle:
    idx = omega.complex.index(sub.simplices[1], 1) if sub.n_simplices(1) else np.zeros(0, dtype=np.int64)
    return DiscreteCocycle(sub, omega.d, omega.values[idx])


def scale_below(F: Filtration, delta: float) -> float | None:
    """Largest filtration value strictly below ``delta`` (``None`` if there is none)."""
    vals = np.concatenate([b for b in F.births])
    vals = vals[vals < delta]
    return float(vals.max()) if vals.size else None


@dataclass
class ClassResult:
    name: str
    epsilon: float
    death: float
    scale: float | None
    span: list
    class_cocycle: charclass.CharClassCocycle | None
    decomposition: ClassDecomposition | None
    diagram: PersistenceDiagram = field(repr=False)

    @property
    def nonzero(self) -> bool:
        return self.decomposition is not None and not self.decomposition.is_zero

    def decorated(self) -> list:
        return self.decomposition.decorated() if self.decomposition is not None else []

    def most_persistent_decorated(self) -> bool:
        """Whether the most persistent bar of the class degree carries a nonzero coefficient."""
        if self.decomposition is None:
            return False
        top = self.diagram.most_persistent(self.decomposition.degree)
        return top is not None and self.decomposition.coefficient(top.bar_id) != 0


def compute_class(name: str, omega: DiscreteCocycle, F: Filtration, diag: PersistenceDiagram,
                  epsilon: float | None = None) -> ClassResult:
    """Characteristic class ``name`` of ``omega`` at its epsilon-death, written in ``diag``."""
    if name not in CLASS_SPECS:
        raise DegenerateInputError(f"unknown class {name!r}")
    eps_default, bound, degree, _ = CLASS_SPECS[name]
    eps = eps_default if epsilon is None else float(epsilon)
    if eps > bound:
        raise RegimeError(f"{name} needs epsilon <= {bound}, got {eps}")
    delta = epsilon_death(omega, F, eps)
    span = epsilon_span(diag, delta, degree)
    r = scale_below(F, delta)
    log.info("%s: epsilon=%g death=%g scale=%s span=%d bars", name, eps, delta, r, len(span))
    if r is None or delta <= 0:
        return ClassResult(name, eps, delta, None, span, None, None, diag)
    Kr, _ = F.at(r)
    om = restrict_cocycle(omega, Kr)
    if name == "sw1":
        z = charclass.sw1(om)
    elif name == "sw2":
        z = charclass.sw2(om)
    else:
        z = charclass.reduce_mod(charclass.euler(_oriented(om)), diag.p)
    dec = decompose_class(z.cochain, diag, r)
    return ClassResult(name, eps, delta, r, span, z, dec, diag)


def _oriented(omega: DiscreteCocycle) -> DiscreteCocycle:
    from .bundle import orient

    if np.all(omega.determinants() > 0):
        return omega
    return orient(omega)


@dataclass
class PointCloudRun:
    filtration: Filtration
    cocycle: DiscreteCocycle
    diagram: PersistenceDiagram
    classes: dict


def point_cloud_classes(X, D, k: int, d: int, threshold: float, classes=("sw1",), p: int = 2,
                        max_dim: int | None = None, epsilons: dict | None = None) -> PointCloudRun:
    """Local PCA + best witness on the Vietoris-Rips filtration of ``D``."""
    from .complex import vr_filtration

    degrees = [CLASS_SPECS[c][2] for c in classes]
    max_dim = max(degrees) + 1 if max_dim is None else max_dim
    F = vr_filtration(D, max_dim, threshold)
    phi = local_pca(X, k, d, F.complex)
    omega = witness(phi)
    diag = persistent_cohomology(F, p, max(degrees))
    eps = epsilons or {}
    res = {c: compute_class(c, omega, F, diag, eps.get(c)) for c in classes}
    return PointCloudRun(F, omega, diag, res)


def death_for_k(X, F: Filtration, k: int, d: int, eps: float) -> float:
    omega = witness(local_pca(X, k, d, F.complex))
    return epsilon_death(omega, F, eps)


def defects_table(omega: DiscreteCocycle, F: Filtration) -> np.ndarray:
    """Rows ``(i, j, k, birth, defect)`` for every triangle of ``F``."""
    if F.dim < 2:
        return np.zeros((0, 5))
    T = F.complex.simplices[2]
    return np.column_stack([T, F.births[2], triangle_defects(omega, T)])


def finite_or(x: float, default: float) -> float:
    return default if math.isinf(x) else x
