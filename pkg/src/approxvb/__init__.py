"""Approximate vector bundles on finite simplicial complexes.

Approximate O(d) cocycles from data, their consistency radius and epsilon-death,
and the characteristic classes sw1, sw2 and the Euler class, written in a
persistent cohomology basis.
"""

from importlib.metadata import PackageNotFoundError, version

from ._accel import USE_NUMBA
from .bundle import (
    DiscreteCocycle,
    DiscreteTrivialization,
    ZeroCochainO,
    act,
    consistency_radius,
    d_z,
    epsilon_death,
    triangle_defects,
    triv_at,
    witness,
)
from .charclass import CharClassCocycle, euler, sw1, sw2
from .complex import Cochain, Filtration, SimplicialComplex, coboundary, vr_filtration
from .errors import (
    AmbiguityError,
    ApproxVBError,
    DegenerateInputError,
    ObstructionError,
    RankError,
    RegimeError,
)
from .persistence import PersistenceDiagram, decompose_class, epsilon_span, persistent_cohomology

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.1.0"

__all__ = [
    "USE_NUMBA",
    "AmbiguityError",
    "ApproxVBError",
    "CharClassCocycle",
    "Cochain",
    "DegenerateInputError",
    "DiscreteCocycle",
    "DiscreteTrivialization",
    "Filtration",
    "ObstructionError",
    "PersistenceDiagram",
    "RankError",
    "RegimeError",
    "SimplicialComplex",
    "ZeroCochainO",
    "act",
    "coboundary",
    "consistency_radius",
    "d_z",
    "decompose_class",
    "epsilon_death",
    "epsilon_span",
    "euler",
    "persistent_cohomology",
    "sw1",
    "sw2",
    "triangle_defects",
    "triv_at",
    "vr_filtration",
    "witness",
]
