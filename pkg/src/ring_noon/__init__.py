"""Exact diagonalisation and driven dynamics of bosons on a rotating three-site ring.

Atoms occupy the quasi-momentum modes k = -1, 0, +1.  Near the rotation phase
Omega = pi the two lowest states are NOON-like superpositions of all atoms in
mode 0 and all atoms in mode +1; the modules here build the Hamiltonian,
diagonalise it, propagate driven and ramped dynamics, and run the detection
and phase-readout protocols on top.
"""

__version__ = "0.1.0"

from .basis import (
    BasisMap,
    OccupationState,
    WaveFunction,
    enumerate_basis,
    fock_state,
    noon_state,
)
from .hamiltonian import ModelParams, build_drive, build_h0, build_h0_parts
from .spectra import gap, ground_state, solve

__all__ = [
    "BasisMap",
    "OccupationState",
    "WaveFunction",
    "enumerate_basis",
    "fock_state",
    "noon_state",
    "ModelParams",
    "build_drive",
    "build_h0",
    "build_h0_parts",
    "gap",
    "ground_state",
    "solve",
]
