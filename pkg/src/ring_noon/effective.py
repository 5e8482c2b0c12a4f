"""Three-level effective model of the driven ring and its rotating-wave limit."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisMap
from .hamiltonian import ModelParams, ParametricHamiltonian, check_small_angle
from .spectra import solve

NEAR_DEGENERATE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class EffectiveModel:
    """Lowest three levels, their drive couplings and detunings (units of J).

    Detunings follow Delta_0k = omega - (eps_k - eps_0), so resonance with the
    first excited level is Delta_01 = 0.
    """

    energies: np.ndarray
    couplings: np.ndarray = field(repr=False)  # V[k1, k2] = <k1|V|k2>
    drive_frequency: float
    near_degenerate: bool = False

    def __post_init__(self):
        e = np.asarray(self.energies, float)
        if e.shape != (3,) or np.any(np.diff(e) < -1e-12):
            raise ValueError("energies must be three ascending values")
        V = np.asarray(self.couplings, complex)
        if V.shape != (3, 3) or not np.allclose(V, V.conj().T, atol=1e-12):
            raise ValueError("couplings must form a 3x3 Hermitian matrix")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "couplings", V)

    @property
    def V01(self) -> complex:
        return self.couplings[0, 1]

    @property
    def V02(self) -> complex:
        return self.couplings[0, 2]

    @property
    def V12(self) -> complex:
        return self.couplings[1, 2]

    @property
    def delta01(self) -> float:
        return self.drive_frequency - (self.energies[1] - self.energies[0])

    @property
    def delta02(self) -> float:
        return self.drive_frequency - (self.energies[2] - self.energies[0])

    def with_frequency(self, omega: float) -> "EffectiveModel":
        return EffectiveModel(self.energies, self.couplings, omega, self.near_degenerate)


def project_effective(
    p: ModelParams,
    A: float,
    omega: float,
    basis: BasisMap | None = None,
    strict: bool = True,
) -> EffectiveModel:
    """Project H0 and the drive operator onto the three lowest eigenstates of H0(p)."""
    check_small_angle(A, strict=strict)
    ham = ParametricHamiltonian(p, basis)
    if ham.dimension < 3:
        raise ValueError("need at least three states for the effective model")
    res = solve(p, 3, ham.basis)
    U = res.eigenvectors[:, :3]
    V = ham.drive_matrix(p.omega_phase, A)
    Vk = U.conj().T @ (V @ U)
    Vk = (Vk + Vk.conj().T) / 2
    e = res.eigenvalues[:3]
    degenerate = bool(e[2] - e[1] < NEAR_DEGENERATE_TOL * p.J)
    if degenerate:
        warnings.warn(
            f"levels 1 and 2 are nearly degenerate (splitting {e[2] - e[1]:.3e})",
            RuntimeWarning,
            stacklevel=2,
        )
    return EffectiveModel(e, Vk, float(omega), degenerate)


def rwa_hamiltonian(m: EffectiveModel) -> np.ndarray:
    """Interaction-picture Hamiltonian with counter-rotating terms dropped."""
    V = m.couplings
    H = np.zeros((3, 3), complex)
    H[1, 1] = -m.delta01
    H[2, 2] = -m.delta02
    H[0, 1] = V[0, 1] / 2
    H[0, 2] = V[0, 2] / 2
    H[2, 1] = V[2, 1] / 2
    H[1, 0] = np.conj(H[0, 1])
    H[2, 0] = np.conj(H[0, 2])
    H[1, 2] = np.conj(H[2, 1])
    return H


def rwa_populations(m: EffectiveModel, times, psi0=None) -> np.ndarray:
    """Level populations (rows: times, columns: levels 0..2) under H_I."""
    psi0 = np.array([1, 0, 0], complex) if psi0 is None else np.asarray(psi0, complex)
    w, v = np.linalg.eigh(rwa_hamiltonian(m))
    c = v.conj().T @ psi0
    t = np.asarray(times, float)
    amps = (np.exp(-1j * np.outer(t, w)) * c) @ v.T
    return np.abs(amps) ** 2


def rabi_population(V01: complex, Delta01: float, t) -> np.ndarray:
    """Two-level excited-state population for coupling V01 and detuning Delta01."""
    t = np.asarray(t, float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    v2 = abs(V01) ** 2
    w2 = v2 + Delta01**2
    if w2 == 0:
        return np.zeros_like(t)
    return v2 / w2 * np.sin(np.sqrt(w2) * t / 2) ** 2


def rabi_frequency(V01: complex, Delta01: float = 0.0) -> float:
    return float(np.hypot(abs(V01), Delta01))
