"""Static ring Hamiltonian H0(Omega) and the rotation-modulation drive.

Energies are in units of J (hbar = 1).  H0 = H_U + H_J + H_dJ, all written in
the quasi-momentum basis; every term depends on the rotation phase Omega only
through cos/sin of (Omega - 2 pi k)/3 for the modes and of three fixed link
angles for the asymmetric-barrier hopping.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from math import pi

import numpy as np
import scipy.sparse as sp

from .basis import MODES, BasisMap, as_vector, enumerate_basis

DENSE_THRESHOLD = 2000
SMALL_ANGLE_BOUND = 0.1
SYMMETRY_TOL = 1e-12

REFERENCE_RATIOS = {"U": 0.05, "delta_J": 0.01}

# (k1, k2, offset) for the hopping term (a_k1^+ a_k2 + h.c.) cos((Omega + offset)/3)
LINKS = ((0, 1, 2 * pi), (1, -1, 0.0), (-1, 0, -2 * pi))
# (destroyed pair mode, created modes) for a_c1^+ a_c2^+ a_k^2
PAIR_CHANNELS = ((0, (1, -1)), (1, (0, -1)), (-1, (1, 0)))


class DriveAmplitudeError(ValueError):
    """Modulation amplitude outside the small-angle regime of the linear drive."""


@dataclass(frozen=True)
class ModelParams:
    N: int
    U: float = 0.0
    J: float = 1.0
    delta_J: float = 0.0
    omega_phase: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if not self.J > 0:
            raise ValueError(f"J must be positive, got {self.J}")
        if not 0 <= self.delta_J < self.J:
            raise ValueError(
                f"delta_J must satisfy 0 <= delta_J < J (got {self.delta_J}, J={self.J})"
            )
        if self.U < 0:
            raise ValueError(f"U must be non-negative, got {self.U}")

    def at(self, omega_phase: float) -> "ModelParams":
        return replace(self, omega_phase=float(omega_phase))

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    @property
    def symmetric_point(self) -> bool:
        """True at Omega = pi, where swapping modes 0 and 1 is a symmetry."""
        return abs(self.omega_phase - pi) <= SYMMETRY_TOL


@dataclass(frozen=True)
class DriveSpec:
    amplitude: float
    frequency: float
    duration: float = 0.0
    small_angle_bound: float = SMALL_ANGLE_BOUND

    def __post_init__(self):
        if self.frequency < 0 or self.duration < 0:
            raise ValueError("drive frequency and duration must be non-negative")
        check_small_angle(self.amplitude, self.small_angle_bound)


def check_small_angle(A: float, bound: float = SMALL_ANGLE_BOUND, strict: bool = True):
    if abs(A) / 3 > bound:
        msg = (
            f"|A|/3 = {abs(A) / 3:.3g} exceeds the small-angle bound {bound:g}; "
            "the linearised drive is no longer trustworthy"
        )
        if strict:
            raise DriveAmplitudeError(msg)
        warnings.warn(msg, stacklevel=3)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Hermitian matrix over a fixed-N basis, dense (ndarray) or sparse (CSR)."""

    matrix: object = field(repr=False)
    real: bool = True

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def __matmul__(self, vec):
        return self.matrix @ vec

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.matrix + other.matrix, self.real and other.real)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.matrix - other.matrix, self.real and other.real)

    def scaled(self, c: float) -> "HermitianOperator":
        return HermitianOperator(self.matrix * c, self.real)

    def diagonal(self) -> np.ndarray:
        return np.asarray(self.matrix.diagonal())

    def max_abs(self) -> float:
        if self.is_sparse:
            return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0
        return float(np.abs(self.matrix).max())

    def hermiticity_error(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        if sp.issparse(diff):
            return float(abs(diff).max()) if diff.nnz else 0.0
        return float(np.abs(diff).max())


def _mode_angle(omega: float, k: int) -> float:
    return (omega - 2 * pi * k) / 3


def _transition(b: BasisMap, destroy: dict[int, int], create: dict[int, int]):
    """Rows, cols and bosonic amplitudes of prod(a_c^+) prod(a_d) on the basis."""
    occ = b.occupations.astype(np.int64).copy()
    amp = np.ones(b.dimension)
    keep = np.ones(b.dimension, dtype=bool)
    for k, count in destroy.items():
        col = k + 1
        for _ in range(count):
            n = occ[:, col]
            keep &= n > 0
            amp *= np.sqrt(np.maximum(n, 0))
            occ[:, col] -= 1
    for k, count in create.items():
        col = k + 1
        for _ in range(count):
            occ[:, col] += 1
            amp *= np.sqrt(occ[:, col])
    cols = np.flatnonzero(keep)
    rows = b.indices(occ[keep])
    return rows, cols, amp[keep]


def _symmetric_sparse(b: BasisMap, rows, cols, vals) -> sp.csr_matrix:
    D = b.dimension
    m = sp.coo_matrix((vals, (rows, cols)), shape=(D, D))
    return (m + m.T).tocsr()


class OperatorPieces:
    """Omega-independent building blocks on one basis.

    number[:, j] holds n_k for mode MODES[j]; ``pair`` is the bracketed
    pair-scattering sum (plus h.c.) without its 2U/3 prefactor; ``hop[l]`` is
    (a_k1^+ a_k2 + h.c.) for link l of LINKS.
    """

    def __init__(self, b: BasisMap, dense: bool | None = None):
        self.basis = b
        self.dense = b.dimension <= DENSE_THRESHOLD if dense is None else dense
        self.number = b.occupations.astype(float)
        n = self.number
        self.interaction_diag = (n * (n - 1)).sum(axis=1) + 4 * (
            n[:, 0] * n[:, 1] + n[:, 0] * n[:, 2] + n[:, 1] * n[:, 2]
        )
        rows, cols, vals = [], [], []
        for k, (c1, c2) in PAIR_CHANNELS:
            r, c, v = _transition(b, {k: 2}, {c1: 1, c2: 1} if c1 != c2 else {c1: 2})
            rows.append(r), cols.append(c), vals.append(v)
        self.pair = _symmetric_sparse(
            b, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
        )
        self.hop = []
        for k1, k2, _ in LINKS:
            r, c, v = _transition(b, {k2: 1}, {k1: 1})
            self.hop.append(_symmetric_sparse(b, r, c, v))
        if self.dense:
            self.pair = self.pair.toarray()
            self.hop = [h.toarray() for h in self.hop]

    def diag(self, values: np.ndarray):
        return np.diag(values) if self.dense else sp.diags(values, format="csr")

    def wrap(self, matrix) -> HermitianOperator:
        if not self.dense:
            matrix = sp.csr_matrix(matrix)
        return HermitianOperator(matrix, real=True)


class ParametricHamiltonian:
    """H0 as an explicit function of the rotation phase for fixed N, U, J, dJ.

    Cheap to re-evaluate, which is what the ramp and exact-drive propagators
    need; ``build_h0`` and friends are thin wrappers around it.
    """

    def __init__(self, p: ModelParams, b: BasisMap | None = None, dense=None):
        b = enumerate_basis(p.N) if b is None else b
        if b.total_atoms != p.N:
            raise ValueError(
                f"basis holds N={b.total_atoms} atoms but parameters have N={p.N}"
            )
        self.params = p
        self.basis = b
        self.pieces = OperatorPieces(b, dense)

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def parts(self, omega: float):
        p, pc = self.params, self.pieces
        cos_modes = np.array([np.cos(_mode_angle(omega, k)) for k in MODES])
        n_cos = pc.number @ cos_modes
        H_U = pc.diag(p.U / 3 * pc.interaction_diag) + (2 * p.U / 3) * pc.pair
        H_J = pc.diag(-2 * p.J * n_cos)
        H_dJ = pc.diag(2 * p.delta_J / 3 * n_cos)
        for (_, _, off), hop in zip(LINKS, pc.hop):
            H_dJ = H_dJ + (2 * p.delta_J / 3 * np.cos((omega + off) / 3)) * hop
        return H_U, H_J, H_dJ

    def matrix(self, omega: float):
        H_U, H_J, H_dJ = self.parts(omega)
        return H_U + H_J + H_dJ

    def h0(self, omega: float | None = None) -> HermitianOperator:
        omega = self.params.omega_phase if omega is None else omega
        return self.pieces.wrap(self.matrix(omega))

    def drive_matrix(self, omega: float, A: float):
        """Coupling operator of the rotation modulation, coefficients as printed.

        Diagonal: (2J/3 - 2dJ/9) A n_k sin((Omega - 2 pi k)/3);
        hopping:  -(2dJ/9) A sin(link angle) for each of the three links.
        """
        p, pc = self.params, self.pieces
        sin_modes = np.array([np.sin(_mode_angle(omega, k)) for k in MODES])
        V = pc.diag((2 * p.J / 3 - 2 * p.delta_J / 9) * A * (pc.number @ sin_modes))
        for (_, _, off), hop in zip(LINKS, pc.hop):
            V = V + (-2 * p.delta_J / 9 * A * np.sin((omega + off) / 3)) * hop
        return V


def _check_basis(p: ModelParams, b: BasisMap | None) -> BasisMap:
    if b is None:
        return enumerate_basis(p.N)
    if b.total_atoms != p.N:
        raise ValueError(f"basis holds N={b.total_atoms} atoms but parameters have N={p.N}")
    return b


def build_h0_parts(p: ModelParams, b: BasisMap | None = None):
    """(H_U, H_J, H_dJ) at p.omega_phase; they sum to ``build_h0``."""
    ham = ParametricHamiltonian(p, _check_basis(p, b))
    return tuple(ham.pieces.wrap(m) for m in ham.parts(p.omega_phase))


def build_h0(p: ModelParams, b: BasisMap | None = None) -> HermitianOperator:
    return ParametricHamiltonian(p, _check_basis(p, b)).h0()


def build_drive(
    p: ModelParams,
    A: float,
    b: BasisMap | None = None,
    small_angle_bound: float = SMALL_ANGLE_BOUND,
    strict: bool = True,
) -> HermitianOperator:
    """Static operator V multiplying cos(omega t) for modulation amplitude A."""
    check_small_angle(A, small_angle_bound, strict)
    ham = ParametricHamiltonian(p, _check_basis(p, b))
    return ham.pieces.wrap(ham.drive_matrix(p.omega_phase, A))


def finite_difference_drive(
    p: ModelParams, A: float, b: BasisMap | None = None, step: float = 1e-6, builder=None
) -> np.ndarray:
    """A * dH0/dOmega by central differences of ``builder`` (default build_h0)."""
    builder = build_h0 if builder is None else builder
    b = _check_basis(p, b)
    plus = builder(p.at(p.omega_phase + step), b).toarray()
    minus = builder(p.at(p.omega_phase - step), b).toarray()
    return A * (plus - minus) / (2 * step)


def matrix_element(op: HermitianOperator, bra, ket) -> complex:
    """<bra|op|ket>"""
    u, v = as_vector(bra), as_vector(ket)
    if u.shape != (op.dimension,) or v.shape != (op.dimension,):
        raise ValueError(
            f"state dimensions {u.shape}, {v.shape} do not match operator "
            f"dimension {op.dimension}"
        )
    return complex(np.vdot(u, op @ v))


def mode_swap_permutation(b: BasisMap) -> np.ndarray:
    """Index permutation exchanging modes 0 and +1 (mode -1 fixed)."""
    occ = b.occupations[:, [0, 2, 1]]
    return b.indices(occ)
