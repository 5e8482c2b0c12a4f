"""Self-check suite: algebraic, symmetry, solver, propagation and protocol invariants."""

from __future__ import annotations

import time
from dataclasses import dataclass
from math import pi

import numpy as np

from .basis import enumerate_basis, ladder_matrix
from .config import RunConfig
from .dynamics import StaticPropagator, evolve_driven
from .hamiltonian import (
    build_drive,
    build_h0,
    build_h0_parts,
    finite_difference_drive,
    mode_swap_permutation,
)
from .protocols import analytic_delta_e, rwa_agreement, two_time_protocol
from .spectra import diagonal_branch_split, gap, gap_sweep, lowest_eigenpairs, solve


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    bound: float
    seconds: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


def _samples(cfg: RunConfig, count: int, seed: int = 7):
    """Small random parameter sets around the configured model."""
    rng = np.random.default_rng(seed)
    base = cfg.model_params()
    out = [base.with_(N=min(base.N, 4))]
    for _ in range(count - 1):
        out.append(
            base.with_(
                N=int(rng.integers(1, 5)),
                U=float(rng.uniform(0, 1)),
                delta_J=float(rng.uniform(0, 0.5) * base.J),
                omega_phase=float(rng.uniform(0, 2 * pi)),
            )
        )
    return out


def _spectrum(H) -> np.ndarray:
    return np.linalg.eigvalsh(H.toarray())


def check_hermiticity(cfg, builder):
    return max(builder(p, enumerate_basis(p.N)).hermiticity_error() for p in _samples(cfg, 6)), 1e-12


def check_parts_sum(cfg, builder):
    err = 0.0
    for p in _samples(cfg, 4):
        b = enumerate_basis(p.N)
        parts = build_h0_parts(p, b)
        total = parts[0].toarray() + parts[1].toarray() + parts[2].toarray()
        err = max(err, float(np.abs(total - builder(p, b).toarray()).max()))
    return err, 1e-14


def check_periodicity(cfg, builder):
    err = 0.0
    for p in _samples(cfg, 4):
        b = enumerate_basis(p.N)
        a = _spectrum(builder(p, b))
        c = _spectrum(builder(p.at(p.omega_phase + 2 * pi), b))
        err = max(err, float(np.abs(a - c).max()))
    return err, 1e-10


def check_reflection(cfg, builder):
    err = 0.0
    for p in _samples(cfg, 4):
        b = enumerate_basis(p.N)
        a = _spectrum(builder(p, b))
        c = _spectrum(builder(p.at(-p.omega_phase), b))
        err = max(err, float(np.abs(a - c).max()))
    return err, 1e-10


def check_z2(cfg, builder):
    p = cfg.model_params().at(pi)
    p = p.with_(N=min(p.N, 6))
    b = enumerate_basis(p.N)
    H = builder(p, b).toarray()
    perm = mode_swap_permutation(b)
    return float(np.abs(H[np.ix_(perm, perm)] - H).max()), 1e-12


def check_ladder_algebra(cfg, builder):
    N = min(cfg.model.N, 5)
    err = 0.0
    for mode in (-1, 0, 1):
        up = ladder_matrix(N, mode, "raise").toarray()  # N -> N+1
        down_next = ladder_matrix(N + 1, mode, "lower").toarray()  # N+1 -> N
        down = ladder_matrix(N, mode, "lower").toarray()  # N -> N-1
        up_prev = ladder_matrix(N - 1, mode, "raise").toarray()  # N-1 -> N
        comm = down_next @ up - up_prev @ down
        err = max(err, float(np.abs(comm - np.eye(comm.shape[0])).max()))
        n = np.diag(enumerate_basis(N).column(mode).astype(float))
        err = max(err, float(np.abs(up_prev @ down - n).max()))
    return err, 1e-12


def check_drive_derivative(cfg, builder):
    worst = 0.0
    for p in _samples(cfg, 5, seed=11):
        b = enumerate_basis(p.N)
        A = cfg.drive.amplitude
        V = build_drive(p, A, b).toarray()
        fd = finite_difference_drive(p, A, b, builder=builder)
        scale = max(np.abs(V).max(), 1e-300)
        worst = max(worst, float(np.abs(V - fd).max() / scale))
    return worst, 1e-7


def check_eigenpairs(cfg, builder):
    p = cfg.model_params().with_(N=min(cfg.model.N, 8))
    b = enumerate_basis(p.N)
    H = builder(p, b)
    dense = lowest_eigenpairs(H, 4, method="dense")
    it = lowest_eigenpairs(H, 4, method="iterative")
    v = dense.eigenvectors
    ortho = float(np.abs(v.conj().T @ v - np.eye(v.shape[1])).max())
    diff = float(np.abs(dense.eigenvalues - it.eigenvalues).max())
    return max(ortho, diff), 1e-8


def check_gap_structure(cfg, builder):
    """Gap positive over the grid when both U and dJ are on; otherwise the pi point may close."""
    p = cfg.model_params().with_(N=min(cfg.model.N, 6))
    grid = np.linspace(0, 2 * pi, 41)
    gaps = gap_sweep(p, grid)
    values = np.array([g.delta_E for g in gaps])
    mirror = float(np.abs(values - values[::-1]).max())
    if p.U > 0 and p.delta_J > 0:
        ok = values.min() > 0
    else:
        at_pi = gap(p.at(pi))
        ok = at_pi.delta_E >= 0 and (not at_pi.degenerate or at_pi.delta_E == 0)
    return (mirror if ok else float("inf")), 1e-9


def check_ground_z2(cfg, builder):
    p = cfg.model_params().at(pi).with_(N=min(cfg.model.N, 10))
    b = enumerate_basis(p.N)
    psi = solve(p, 1, b).state(0)
    return abs(psi.probability((0, p.N, 0)) - psi.probability((0, 0, p.N))), 1e-10


def check_unitarity(cfg, builder):
    p = cfg.model_params().with_(N=min(cfg.model.N, 4))
    b = enumerate_basis(p.N)
    H = builder(p, b)
    V = build_drive(p, cfg.drive.amplitude, b)
    psi = solve(p, 1, b).vector(0)
    res = evolve_driven(H, V, 1.0, psi, 50.0, times=np.linspace(0, 50, 11),
                        dt_max=cfg.solver.dt_max, tolerance=cfg.solver.tolerance)
    return res.norm_drift, 1e-8


def check_energy_conservation(cfg, builder):
    p = cfg.model_params().with_(N=min(cfg.model.N, 4))
    b = enumerate_basis(p.N)
    H = builder(p, b).toarray()
    rng = np.random.default_rng(3)
    psi = rng.normal(size=b.dimension) + 1j * rng.normal(size=b.dimension)
    psi /= np.linalg.norm(psi)
    states = StaticPropagator(H).states(psi, np.linspace(0, 100, 21))
    energy = np.einsum("ti,ij,tj->t", states.conj(), H, states).real
    return float(np.abs(energy - energy[0]).max() / p.J), 1e-9


def check_time_reversal(cfg, builder):
    p = cfg.model_params().with_(N=min(cfg.model.N, 4))
    b = enumerate_basis(p.N)
    prop = StaticPropagator(builder(p, b))
    rng = np.random.default_rng(5)
    psi = rng.normal(size=b.dimension) + 1j * rng.normal(size=b.dimension)
    psi /= np.linalg.norm(psi)
    back = prop.evolve(prop.evolve(psi, 37.3), -37.3)
    return float(np.linalg.norm(back - psi)), 1e-9


def check_rwa(cfg, builder):
    """Full vs RWA level-1 population off the anti-crossing, where the RWA applies."""
    p = cfg.model_params().with_(N=3, omega_phase=3.0)
    if p.delta_J == 0 and p.U == 0:
        p = p.with_(U=0.05, delta_J=0.01)
    res = rwa_agreement(p, cfg.drive.amplitude, samples=81)
    return res.rms, 0.05


def check_branch_split(cfg, builder):
    p = cfg.model_params().with_(N=min(cfg.model.N, 8))
    err = 0.0
    for d in (-0.2, 0.05, 0.1, 0.3):
        q = p.at(pi + d)
        err = max(err, abs(-diagonal_branch_split(q) - analytic_delta_e(p.N, p.J, p.delta_J, d)))
    return err, 1e-10


def check_two_time(cfg, builder):
    """Fitted branch split and half-gap from the two-time surface against the spectrum."""
    p = cfg.model_params().with_(N=3, U=0.05, delta_J=0.001, omega_phase=pi)
    dE = abs(analytic_delta_e(3, p.J, p.delta_J, 0.3))
    g = gap(p).delta_E
    t1 = np.linspace(0, 0.9 * 2 * pi / dE, 11)
    t2 = np.linspace(0, 0.9 * 2 * pi / g, 11)
    rep = two_time_protocol(p, 0.3, t1, t2)
    d = rep.derived
    rel = max(abs(d["delta_E_fit"] / d["delta_E_exact"] - 1),
              abs(d["delta_eps_fit"] / d["delta_eps_exact"] - 1))
    return rel, 0.01


CHECKS = (
    ("hermiticity", check_hermiticity),
    ("parts_sum", check_parts_sum),
    ("periodicity", check_periodicity),
    ("reflection", check_reflection),
    ("z2_commutator", check_z2),
    ("ladder_algebra", check_ladder_algebra),
    ("drive_derivative", check_drive_derivative),
    ("eigenpairs", check_eigenpairs),
    ("gap_structure", check_gap_structure),
    ("ground_z2_balance", check_ground_z2),
    ("unitarity", check_unitarity),
    ("energy_conservation", check_energy_conservation),
    ("time_reversal", check_time_reversal),
    ("rwa_agreement", check_rwa),
    ("branch_split_constant", check_branch_split),
    ("two_time_consistency", check_two_time),
)


def validate_suite(cfg: RunConfig | None = None, builder=None, only=None) -> ValidationReport:
    """Run every check; ``builder`` replaces build_h0 (used for mutation testing)."""
    cfg = RunConfig() if cfg is None else cfg
    builder = build_h0 if builder is None else builder
    results = []
    for name, fn in CHECKS:
        if only is not None and name not in only:
            continue
        t0 = time.perf_counter()
        try:
            value, bound = fn(cfg, builder)
            passed = bool(np.isfinite(value) and value < bound)
            detail = ""
        except Exception as exc:  # a crashing check is a failing check
            value, bound, passed, detail = float("nan"), float("nan"), False, repr(exc)
        results.append(
            CheckResult(name, passed, float(value), float(bound), time.perf_counter() - t0, detail)
        )
    return ValidationReport(tuple(results))
