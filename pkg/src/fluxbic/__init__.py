"""Fluxonium qutrit simulator: spectra, spin-1 projections and BIC lifetimes.

The package models a fluxonium circuit capacitively coupled to a
superconducting waveguide, extracts the effective qutrit description of
its three lowest levels, and evaluates every relaxation channel that
limits the lifetime of the symmetry-protected second excited state.
"""

__version__ = "0.1.0"

from fluxbic.constants import CONSTANTS, PhysicalConstants
from fluxbic.params import BasisKind, BasisSpec, CircuitParams, DerivedParams, derive_params

__all__ = [
    "BasisKind",
    "BasisSpec",
    "CircuitParams",
    "CONSTANTS",
    "DerivedParams",
    "PhysicalConstants",
    "derive_params",
    "__version__",
]
