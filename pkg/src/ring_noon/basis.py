"""Fixed-N Fock space of three quasi-momentum modes.

States are kets |n_-1, n_0, n_+1> ordered lexicographically on
(n_minus, n_zero, n_plus), descending, so index 0 is |N,0,0> and the last
index is |0,0,N>.  With a = N - n_minus the rank has the closed form

    index = a (a + 1) / 2 + (a - n_zero)

which is what ``BasisMap.indices`` evaluates (vectorised).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, sqrt
from typing import NamedTuple, Sequence

import numpy as np

MODES = (-1, 0, 1)
DEFAULT_MAX_DIMENSION = 200_000


class InvalidStateError(ValueError):
    """Occupation state does not belong to the basis it was used with."""


class DimensionCapError(ValueError):
    """Requested Hilbert space exceeds the configured dimension cap."""


def mode_column(k: int) -> int:
    if k not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {k!r}")
    return k + 1


class OccupationState(NamedTuple):
    """Fock ket |n_minus, n_zero, n_plus>."""

    n_minus: int
    n_zero: int
    n_plus: int

    @property
    def total(self) -> int:
        return self.n_minus + self.n_zero + self.n_plus

    def occupation(self, k: int) -> int:
        return self[mode_column(k)]

    def label(self) -> str:
        return f"|{self.n_minus},{self.n_zero},{self.n_plus}>"


def dimension(N: int) -> int:
    return (N + 1) * (N + 2) // 2


@dataclass(frozen=True, eq=False)
class BasisMap:
    """Ordered basis of one particle-number sector.

    ``occupations`` is an (D, 3) integer array whose columns are the modes
    (-1, 0, +1).  Instances are immutable and safe to share between threads.
    """

    total_atoms: int
    occupations: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.occupations.shape[0]

    def __len__(self) -> int:
        return self.dimension

    def state_of(self, i: int) -> OccupationState:
        if not 0 <= i < self.dimension:
            raise IndexError(f"basis index {i} out of range [0, {self.dimension})")
        return OccupationState(*(int(x) for x in self.occupations[i]))

    @property
    def states(self) -> list[OccupationState]:
        return [OccupationState(*map(int, row)) for row in self.occupations]

    def index_of(self, s: Sequence[int]) -> int:
        s = OccupationState(*(int(x) for x in s))
        if min(s) < 0 or s.total != self.total_atoms:
            raise InvalidStateError(
                f"{s.label()} does not belong to the N={self.total_atoms} sector"
            )
        a = self.total_atoms - s.n_minus
        return a * (a + 1) // 2 + (a - s.n_zero)

    def indices(self, occ: np.ndarray) -> np.ndarray:
        """Vectorised ``index_of`` for an (M, 3) array of valid occupations."""
        a = self.total_atoms - occ[:, 0]
        return a * (a + 1) // 2 + (a - occ[:, 1])

    def column(self, k: int) -> np.ndarray:
        """Occupation of mode k for every basis state."""
        return self.occupations[:, mode_column(k)]


def _sector(N: int) -> BasisMap:
    # unchecked constructor, also used for the vacuum sector reached by ladder maps
    rows = [
        (nm, n0, N - nm - n0)
        for nm in range(N, -1, -1)
        for n0 in range(N - nm, -1, -1)
    ]
    occ = np.array(rows, dtype=np.int64).reshape(-1, 3)
    occ.setflags(write=False)
    return BasisMap(total_atoms=N, occupations=occ)


def enumerate_basis(N: int, max_dimension: int = DEFAULT_MAX_DIMENSION) -> BasisMap:
    """All compositions of N atoms into the three modes."""
    if int(N) != N or N < 1:
        raise ValueError(f"atom number must be a positive integer, got {N!r}")
    N = int(N)
    D = dimension(N)
    if D > max_dimension:
        raise DimensionCapError(
            f"N={N} gives dimension {D}, above the cap of {max_dimension} states "
            "(raise max_dimension to allow it)"
        )
    return _sector(N)


def apply_ladder(
    b: BasisMap, mode: int, kind: str, s: Sequence[int]
) -> tuple[float, OccupationState | None]:
    """Apply a raising or lowering operator of ``mode`` to the ket ``s``.

    Returns the amplitude and the resulting ket (in the N+1 or N-1 sector).
    Lowering an empty mode annihilates the state: ``(0.0, None)``.
    """
    b.index_of(s)
    occ = list(OccupationState(*s))
    col = mode_column(mode)
    if kind == "lower":
        n = occ[col]
        if n == 0:
            return 0.0, None
        occ[col] -= 1
        return sqrt(n), OccupationState(*occ)
    if kind == "raise":
        occ[col] += 1
        return sqrt(occ[col]), OccupationState(*occ)
    raise ValueError(f"kind must be 'raise' or 'lower', got {kind!r}")


def ladder_matrix(N: int, mode: int, kind: str):
    """Sparse matrix of a ladder operator from the N sector to N +/- 1."""
    import scipy.sparse as sp

    src = _sector(N)
    dst_N = N + 1 if kind == "raise" else N - 1
    if dst_N < 0:
        raise ValueError("cannot lower the vacuum sector")
    dst = _sector(dst_N)
    col = mode_column(mode)
    n = src.occupations[:, col]
    occ = src.occupations.copy()
    if kind == "raise":
        amp = np.sqrt(n + 1.0)
        occ[:, col] += 1
        keep = np.ones(len(n), dtype=bool)
    elif kind == "lower":
        amp = np.sqrt(n.astype(float))
        occ[:, col] -= 1
        keep = n > 0
    else:
        raise ValueError(f"kind must be 'raise' or 'lower', got {kind!r}")
    rows = dst.indices(occ[keep])
    cols = np.flatnonzero(keep)
    return sp.csr_matrix((amp[keep], (rows, cols)), shape=(dst.dimension, src.dimension))


def rotation_phase_to_velocity(
    omega: float, L: float, m: float, hbar: float = 1.0
) -> float:
    """Lab-frame rotation speed v = (hbar/m) * omega / L of the lattice."""
    if L <= 0 or m <= 0:
        raise ValueError(f"circumference and mass must be positive (L={L}, m={m})")
    return hbar / m * omega / L


# -- states ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex amplitude vector over a BasisMap."""

    basis: BasisMap
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dimension,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, basis has dimension "
                f"{self.basis.dimension}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.basis, self.amplitudes / self.norm)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def probability(self, s: Sequence[int]) -> float:
        return float(abs(self.amplitudes[self.basis.index_of(s)]) ** 2)

    def overlap(self, other: "WaveFunction") -> complex:
        """<self|other>"""
        return complex(np.vdot(self.amplitudes, as_vector(other)))


def as_vector(psi) -> np.ndarray:
    if isinstance(psi, WaveFunction):
        return psi.amplitudes
    return np.asarray(psi, dtype=complex)


def fock_state(b: BasisMap, s: Sequence[int]) -> WaveFunction:
    amps = np.zeros(b.dimension, dtype=complex)
    amps[b.index_of(s)] = 1.0
    return WaveFunction(b, amps)


def noon_state(b: BasisMap, sign: int = +1) -> WaveFunction:
    """(|0,N,0> + sign |0,0,N>)/sqrt(2)."""
    N = b.total_atoms
    amps = np.zeros(b.dimension, dtype=complex)
    amps[b.index_of((0, N, 0))] = 1 / sqrt(2)
    amps[b.index_of((0, 0, N))] += sign / sqrt(2)
    return WaveFunction(b, amps)


def single_particle_superposition(b: BasisMap) -> WaveFunction:
    """Every atom in (a_0^+ + a_1^+)/sqrt(2): binomial weights over |0,m,N-m>."""
    N = b.total_atoms
    amps = np.zeros(b.dimension, dtype=complex)
    for m in range(N + 1):
        amps[b.index_of((0, m, N - m))] = sqrt(comb(N, m)) / 2 ** (N / 2)
    return WaveFunction(b, amps)
