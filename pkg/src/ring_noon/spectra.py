"""Eigenpairs of H0, gap and coupling sweeps over the rotation phase."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import BasisMap, OccupationState, WaveFunction, as_vector, enumerate_basis
from .basis import noon_state, single_particle_superposition
from .hamiltonian import (
    DENSE_THRESHOLD,
    HermitianOperator,
    ModelParams,
    ParametricHamiltonian,
    mode_swap_permutation,
)

log = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-10


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Lowest eigenpairs in ascending order; eigenvectors are columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    params: ModelParams | None = None
    basis: BasisMap | None = field(default=None, repr=False)
    method: str = "dense"

    def vector(self, i: int) -> np.ndarray:
        return self.eigenvectors[:, i]

    def state(self, i: int) -> WaveFunction:
        return WaveFunction(self.basis, self.eigenvectors[:, i])


@dataclass(frozen=True)
class GapResult:
    omega_phase: float
    delta_E: float
    half_gap: float
    degenerate: bool
    E0: float
    E1: float


def fix_gauge(vecs: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    """Make the largest-magnitude amplitude of each column real positive.

    Ties (within ``rtol``) go to the lowest basis index.
    """
    vecs = np.array(vecs, copy=True)
    for j in range(vecs.shape[1]):
        mag = np.abs(vecs[:, j])
        i = int(np.flatnonzero(mag >= mag.max() * (1 - rtol))[0])
        phase = vecs[i, j] / mag[i]
        vecs[:, j] = vecs[:, j] / phase
        if np.isrealobj(vecs):
            continue
        if np.abs(vecs[:, j].imag).max() < 1e-14:
            vecs[:, j] = vecs[:, j].real
    return vecs


def _dense_lowest(A: np.ndarray, k: int):
    w, v = la.eigh(A, subset_by_index=[0, k - 1])
    return w, v


def _iterative_lowest(A, k: int, tol: float, maxiter: int | None):
    D = A.shape[0]
    # block of at least three vectors so the near-degenerate pair at the
    # anti-crossing is resolved together
    nev = min(max(k, 3), D - 1)
    ncv = min(D, max(2 * nev + 1, 24))
    try:
        w, v = spla.eigsh(A, k=nev, which="SA", tol=tol, ncv=ncv, maxiter=maxiter)
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError(
            f"Lanczos did not converge for {nev} eigenpairs (dimension {D})"
        ) from exc
    order = np.argsort(w)[:k]
    w, v = w[order], v[:, order]
    # re-orthonormalise; eigsh vectors of a near-degenerate pair can drift
    q, _ = np.linalg.qr(v)
    h = q.conj().T @ (A @ q)
    w, c = la.eigh((h + h.conj().T) / 2)
    return w, q @ c


def lowest_eigenpairs(
    H: HermitianOperator,
    k: int,
    method: str = "auto",
    tol: float = 1e-12,
    maxiter: int | None = None,
    residual_tol: float = 1e-8,
) -> SpectrumResult:
    """k lowest eigenpairs; dense below DENSE_THRESHOLD, Lanczos above."""
    D = H.dimension
    if not 1 <= k <= D:
        raise ValueError(f"need 1 <= k <= {D}, got k={k}")
    if method == "auto":
        method = "dense" if D <= DENSE_THRESHOLD or k >= D - 1 else "iterative"
    if method == "dense":
        w, v = _dense_lowest(H.toarray(), k)
    elif method == "iterative":
        if k >= D - 1:
            raise ValueError("iterative solver needs k < dimension - 1")
        w, v = _iterative_lowest(H.matrix, k, tol, maxiter)
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")
    v = fix_gauge(v)
    scale = max(1.0, float(np.abs(w).max()))
    res = np.linalg.norm(H @ v - v * w, axis=0).max()
    if res > residual_tol * scale:
        raise ConvergenceError(
            f"eigenpair residual {res:.3e} above {residual_tol:g} x {scale:.3g}", res
        )
    return SpectrumResult(np.asarray(w, float), v, method=method)


def z2_sectors(b: BasisMap):
    """Isometries onto the even and odd subspaces of the mode 0 <-> +1 swap."""
    perm = mode_swap_permutation(b)
    idx = np.arange(b.dimension)
    fixed = idx[perm == idx]
    lo = idx[perm > idx]
    hi = perm[lo]
    D = b.dimension
    n_even = len(fixed) + len(lo)
    r = 1 / sqrt(2)
    even = sp.csr_matrix(
        (
            np.concatenate([np.ones(len(fixed)), np.full(len(lo), r), np.full(len(lo), r)]),
            (
                np.concatenate([fixed, lo, hi]),
                np.concatenate(
                    [np.arange(len(fixed)), len(fixed) + np.arange(len(lo)),
                     len(fixed) + np.arange(len(lo))]
                ),
            ),
        ),
        shape=(D, n_even),
    )
    odd = sp.csr_matrix(
        (
            np.concatenate([np.full(len(lo), r), np.full(len(lo), -r)]),
            (np.concatenate([lo, hi]), np.concatenate([np.arange(len(lo))] * 2)),
        ),
        shape=(D, len(lo)),
    )
    return even, odd


def _sector_solve(H: HermitianOperator, b: BasisMap, k: int, method: str):
    ws, vs = [], []
    for Q in z2_sectors(b):
        if Q.shape[1] == 0:
            continue
        block = Q.T @ H.matrix @ Q
        if sp.issparse(block) and block.shape[0] <= DENSE_THRESHOLD:
            block = block.toarray()
        sub = HermitianOperator(block if not sp.issparse(block) else block.tocsr())
        kk = min(k, sub.dimension)
        m = method
        if m == "iterative" and kk >= sub.dimension - 1:
            m = "dense"
        res = lowest_eigenpairs(sub, kk, method=m)
        ws.append(res.eigenvalues)
        vs.append(Q @ res.eigenvectors)
    w = np.concatenate(ws)
    v = np.concatenate(vs, axis=1)
    order = np.argsort(w, kind="stable")[:k]
    return w[order], fix_gauge(v[:, order])


def solve(
    p: ModelParams,
    k: int = 2,
    basis: BasisMap | None = None,
    method: str = "auto",
    use_symmetry: bool = True,
) -> SpectrumResult:
    """Lowest k eigenpairs of H0(p).

    At Omega = pi the two mode-swap sectors are diagonalised separately, so
    eigenvectors have definite parity even when the tunnelling splitting is
    below machine precision.
    """
    ham = ParametricHamiltonian(p, basis)
    H = ham.h0()
    k = min(k, H.dimension)
    if use_symmetry and p.symmetric_point and H.dimension > 1:
        w, v = _sector_solve(H, ham.basis, k, method)
        used = f"{method}+z2"
    else:
        res = lowest_eigenpairs(H, k, method=method)
        w, v, used = res.eigenvalues, res.eigenvectors, res.method
    return SpectrumResult(w, v, params=p, basis=ham.basis, method=used)


def gap(p: ModelParams, basis: BasisMap | None = None, method: str = "auto") -> GapResult:
    res = solve(p, 2, basis, method)
    E0, E1 = (float(x) for x in res.eigenvalues[:2])
    dE = E1 - E0
    degenerate = dE < DEGENERACY_TOL * p.J
    if degenerate:
        dE = 0.0
    return GapResult(p.omega_phase, dE, dE / 2, bool(degenerate), E0, E1)


def _pmap(fn, items, workers: int = 1):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def gap_sweep(
    p: ModelParams, omega_grid, basis: BasisMap | None = None, workers: int = 1
) -> list[GapResult]:
    """Gap E1 - E0 (and the two lowest levels) for every Omega in the grid."""
    grid = np.asarray(omega_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("omega grid is empty")
    if grid.min() < -1e-12 or grid.max() > 2 * pi + 1e-12:
        raise ValueError("omega grid values must lie in [0, 2 pi]")
    b = enumerate_basis(p.N) if basis is None else basis
    return _pmap(lambda om: gap(p.at(om), b), grid, workers)


def ground_state(p: ModelParams, basis: BasisMap | None = None) -> WaveFunction:
    return solve(p, 1, basis).state(0)


def ground_state_distribution(
    p: ModelParams, basis: BasisMap | None = None
) -> list[tuple[OccupationState, float]]:
    """Occupation probabilities of the ground state, largest first."""
    psi = ground_state(p, basis)
    probs = psi.probabilities()
    order = sorted(range(len(probs)), key=lambda i: (-round(probs[i], 13), i))
    b = psi.basis
    return [(b.state_of(i), float(probs[i])) for i in order]


def noon_fidelity(psi: WaveFunction) -> float:
    """|<+|psi>| with |+> = (|0,N,0> + |0,0,N>)/sqrt(2)."""
    return abs(noon_state(psi.basis, +1).overlap(psi))


def single_particle_superposition_score(psi: WaveFunction) -> float:
    return abs(single_particle_superposition(psi.basis).overlap(psi))


# -- coupling between the two lowest levels --------------------------------


def coupling(
    p: ModelParams, A: float, basis: BasisMap | None = None, strict: bool = True
) -> float:
    """|<1|V|0>| between the two lowest eigenstates of H0(p)."""
    from .hamiltonian import check_small_angle

    check_small_angle(A, strict=strict)
    ham = ParametricHamiltonian(p, basis)
    res = solve(p, 2, ham.basis)
    V = ham.drive_matrix(p.omega_phase, A)
    return float(abs(res.vector(1).conj() @ (V @ res.vector(0))))


@dataclass(frozen=True, eq=False)
class CouplingSweep:
    omega_grid: np.ndarray
    N_list: tuple[int, ...]
    coupling: np.ndarray  # shape (len(N_list), len(omega_grid))
    coupling_at_pi: np.ndarray
    amplitude: float

    @property
    def peak_index(self) -> np.ndarray:
        return np.argmax(self.coupling, axis=1)

    @property
    def peak_omega(self) -> np.ndarray:
        return self.omega_grid[self.peak_index]

    @property
    def peak_coupling(self) -> np.ndarray:
        return self.coupling.max(axis=1)

    def flank_coupling(self, window: float = 0.1) -> np.ndarray:
        """Largest coupling on grid points at least ``window`` away from pi."""
        mask = np.abs(self.omega_grid - pi) >= window
        if not mask.any():
            raise ValueError("no grid points outside the window around pi")
        return self.coupling[:, mask].max(axis=1)


def coupling_sweep(
    p: ModelParams, A: float, omega_grid, N_list, workers: int = 1
) -> CouplingSweep:
    grid = np.asarray(omega_grid, dtype=float)
    rows, at_pi = [], []
    for N in N_list:
        q = p.with_(N=int(N))
        b = enumerate_basis(q.N)
        rows.append(_pmap(lambda om: coupling(q.at(om), A, b), grid, workers))
        at_pi.append(coupling(q.at(pi), A, b))
    return CouplingSweep(grid, tuple(int(n) for n in N_list), np.array(rows),
                         np.array(at_pi), A)


def analytic_noon_coupling(N: int, J: float, delta_J: float, A: float) -> float:
    """<-|V|+> for ideal NOON states at Omega = pi: N (J - dJ/3) A / sqrt(3)."""
    return N * (J - delta_J / 3) * A / sqrt(3)


# -- branch energies of |0,N,0> and |0,0,N> ---------------------------------


def diagonal_branch_split(p: ModelParams, basis: BasisMap | None = None) -> float:
    """E_00N - E_0N0 from the diagonal elements of H0(p)."""
    ham = ParametricHamiltonian(p, basis)
    b = ham.basis
    N = p.N
    d = ham.h0().diagonal()
    return float(d[b.index_of((0, 0, N))] - d[b.index_of((0, N, 0))])


def branch_energies(p: ModelParams, basis: BasisMap | None = None) -> tuple[float, float]:
    """Energies of the eigenstates with the largest weight on |0,N,0> and |0,0,N>."""
    ham = ParametricHamiltonian(p, basis)
    b = ham.basis
    H = ham.h0()
    if H.dimension <= DENSE_THRESHOLD:
        w, v = la.eigh(H.toarray())
    else:
        k = min(H.dimension - 2, 4 * p.N + 8)
        w, v = spla.eigsh(H.matrix, k=k, which="SA", tol=1e-12)
    i0 = b.index_of((0, p.N, 0))
    i1 = b.index_of((0, 0, p.N))
    return float(w[np.argmax(np.abs(v[i0]))]), float(w[np.argmax(np.abs(v[i1]))])


def branch_split(p: ModelParams, basis: BasisMap | None = None) -> float:
    """Dressed E_00N - E_0N0 from exact diagonalisation."""
    e0n0, e00n = branch_energies(p, basis)
    return e00n - e0n0
