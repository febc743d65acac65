"""Exact finite-precision p-adic linear algebra and nonarchimedean integral geometry.

Everything is computed in the flat model: an element of the valuation ring is
a single residue modulo p^N.  Uniform residues are exactly the pushforward of
the Haar measure, so Monte Carlo estimators built on them are exact in
distribution for every event measurable at precision N.  Closed-form volumes
and densities are evaluated in exact rational arithmetic with the residue
cardinality q as a free parameter.
"""

from padicgeo.core import (
    AT_LEAST_PRECISION,
    FieldElement,
    PadicConfig,
    RingElement,
    substream,
)
from padicgeo.linalg import RMatrix, SmithDecomposition, smith_normal_form
from padicgeo.subspaces import PositionVector, Subspace, position_vector

__all__ = [
    "AT_LEAST_PRECISION",
    "FieldElement",
    "PadicConfig",
    "PositionVector",
    "RMatrix",
    "RingElement",
    "SmithDecomposition",
    "Subspace",
    "position_vector",
    "smith_normal_form",
    "substream",
]

__version__ = "0.1.0"
