"""Unitary time evolution: static, periodically driven and ramped H0.

All time-dependent propagation uses the exponential midpoint rule
psi <- exp(-i H(t + dt/2) dt) psi, which is unitary by construction.  The
general integrator adapts dt by step doubling; periodic drives can instead
cache one drive period of steps and jump whole periods with the Floquet
operator, which is what the long spectroscopy scans rely on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import ceil, floor, pi
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import BasisMap, OccupationState, WaveFunction, as_vector
from .hamiltonian import HermitianOperator, ModelParams, ParametricHamiltonian

log = logging.getLogger(__name__)

DEFAULT_DT_MAX = 0.01
DEFAULT_TOLERANCE = 1e-9
_CACHE_ENTRIES = 8_000_000


class StiffnessError(RuntimeError):
    """Adaptive step size fell below the allowed minimum."""


def _raw(H):
    return H.matrix if isinstance(H, HermitianOperator) else H


def _expm_apply(H, dt: float, psi: np.ndarray) -> np.ndarray:
    """exp(-i H dt) psi for Hermitian H (dense or sparse)."""
    if sp.issparse(H):
        return spla.expm_multiply(-1j * dt * H.tocsr(), psi)
    w, v = np.linalg.eigh(H)
    phase = np.exp(-1j * w * dt)
    if psi.ndim == 2:
        phase = phase[:, None]
    return v @ (phase * (v.conj().T @ psi))


def _expm_matrix(H: np.ndarray, dt: float) -> np.ndarray:
    w, v = np.linalg.eigh(H)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


@dataclass(frozen=True, eq=False)
class PropagationResult:
    """States sampled along a trajectory (rows of ``states``)."""

    times: np.ndarray
    states: np.ndarray = field(repr=False)
    tracked: tuple[OccupationState, ...] = ()
    populations: np.ndarray = field(default=None, repr=False)
    norm_drift: float = 0.0
    steps: int = 0

    def final(self, basis: BasisMap | None = None):
        return self.states[-1] if basis is None else WaveFunction(basis, self.states[-1])

    def population(self, state) -> np.ndarray:
        return self.populations[:, self.tracked.index(OccupationState(*state))]


def _tracked(basis: BasisMap | None, tracked) -> tuple[tuple, list[int]]:
    if basis is None:
        return (), []
    if tracked is None:
        N = basis.total_atoms
        tracked = [(0, N, 0), (0, 0, N)]
    states = tuple(OccupationState(*s) for s in tracked)
    return states, [basis.index_of(s) for s in states]


def _result(times, states, basis, tracked, steps) -> PropagationResult:
    states = np.asarray(states)
    names, idx = _tracked(basis, tracked)
    pops = np.abs(states[:, idx]) ** 2 if idx else np.zeros((len(times), 0))
    drift = float(np.abs(np.linalg.norm(states, axis=1) - np.linalg.norm(states[0])).max())
    return PropagationResult(np.asarray(times, float), states, names, pops, drift, steps)


# -- static ---------------------------------------------------------------


class StaticPropagator:
    """exp(-i H t) by spectral decomposition (dense) or expm_multiply (sparse)."""

    def __init__(self, H):
        self.H = _raw(H)
        self.sparse = sp.issparse(self.H)
        if not self.sparse:
            self.w, self.v = np.linalg.eigh(np.asarray(self.H))

    def evolve(self, psi, t: float) -> np.ndarray:
        psi = as_vector(psi)
        if self.sparse:
            return spla.expm_multiply(-1j * t * self.H.tocsr(), psi)
        return self.v @ (np.exp(-1j * self.w * t) * (self.v.conj().T @ psi))

    def states(self, psi, times) -> np.ndarray:
        psi = as_vector(psi)
        times = np.asarray(times, float)
        if self.sparse:
            return np.array([self.evolve(psi, t) for t in times])
        c = self.v.conj().T @ psi
        return (np.exp(-1j * np.outer(times, self.w)) * c) @ self.v.T


def evolve_static(H, psi0, t: float):
    """psi(t) = exp(-i H t) psi0; returns the same type as ``psi0``."""
    out = StaticPropagator(H).evolve(psi0, t)
    if isinstance(psi0, WaveFunction):
        return WaveFunction(psi0.basis, out)
    return out


def propagate_static(
    H, psi0, times, basis: BasisMap | None = None, tracked=None
) -> PropagationResult:
    basis = psi0.basis if isinstance(psi0, WaveFunction) and basis is None else basis
    states = StaticPropagator(H).states(psi0, times)
    return _result(times, states, basis, tracked, 0)


# -- adaptive exponential midpoint -----------------------------------------


def integrate(
    hamiltonian_at: Callable[[float], object],
    psi0: np.ndarray,
    t_start: float,
    t_end: float,
    sample_times: Sequence[float] | None = None,
    dt_max: float = DEFAULT_DT_MAX,
    tolerance: float = DEFAULT_TOLERANCE,
    dt_min: float = 1e-12,
    fixed_step: bool = False,
):
    """Integrate i d/dt psi = H(t) psi from t_start to t_end (either direction).

    Step doubling estimates the local error; the step is accepted when the
    estimate is within ``tolerance``.  With ``fixed_step`` the step is dt_max
    (shortened to hit sample times) and no error control is applied.
    ``psi0`` may be a vector or a (D, K) block of column vectors.
    Returns (sample_times, states, steps).
    """
    direction = 1.0 if t_end >= t_start else -1.0
    span = abs(t_end - t_start)
    samples = np.array([t_end] if sample_times is None else sample_times, float)
    if np.any(direction * (samples - t_start) < -1e-12) or np.any(
        direction * (samples - t_end) > 1e-12
    ):
        raise ValueError("sample times must lie between t_start and t_end")
    order = np.argsort(direction * samples, kind="stable")
    psi = np.array(as_vector(psi0), dtype=complex)
    out = [None] * len(samples)
    t = t_start
    dt = min(dt_max, span) if span > 0 else dt_max
    steps = 0

    def step(t, h, y):
        return _expm_apply(hamiltonian_at(t + direction * h / 2), direction * h, y)

    for si in order:
        target = samples[si]
        while direction * (target - t) > 1e-13 * max(1.0, abs(target)):
            h = min(dt, abs(target - t))
            if fixed_step:
                psi = step(t, h, psi)
                t = t + direction * h
                steps += 1
                continue
            full = step(t, h, psi)
            half = step(t, h / 2, psi)
            half = step(t + direction * h / 2, h / 2, half)
            diff = full - half
            err = float(np.max(np.linalg.norm(diff, axis=0))) / 3
            if err <= tolerance or h <= dt_min:
                if err > tolerance:
                    raise StiffnessError(
                        f"step size {h:.3e} at t={t:.6g} cannot meet tolerance "
                        f"{tolerance:g} (local error estimate {err:.3e})"
                    )
                psi = half
                t = t + direction * h
                steps += 1
                grow = 2.0 if err == 0 else min(2.0, 0.9 * (tolerance / err) ** (1 / 3))
                if h == dt:
                    dt = min(dt_max, max(dt * grow, dt_min))
            else:
                dt = max(h * max(0.2, 0.9 * (tolerance / err) ** (1 / 3)), dt_min)
        t = target
        out[si] = psi.copy()
    return samples, np.array(out), steps


# -- periodic drives --------------------------------------------------------


class PeriodicPropagator:
    """Exponential-midpoint propagation of a T-periodic H(t) with cached steps.

    The steps of one period are built once (uniform dt = T/m, m chosen so the
    step-doubling local error estimate is below ``tolerance``), and whole
    periods are taken with the Floquet operator via its Schur form.
    """

    def __init__(
        self,
        hamiltonian_at: Callable[[float], np.ndarray],
        period: float,
        dt_max: float = DEFAULT_DT_MAX,
        tolerance: float = DEFAULT_TOLERANCE,
        max_refinements: int = 8,
        fixed_step: bool = False,
    ):
        if period <= 0:
            raise ValueError("drive period must be positive")
        self.h = hamiltonian_at
        self.period = float(period)
        m = max(1, ceil(self.period / dt_max - 1e-9))
        for _ in range(max_refinements + 1):
            dt = self.period / m
            if fixed_step:
                steps, err = [self._step(j, dt) for j in range(m)], 0.0
                break
            steps, err = self._build(m, dt)
            if err <= tolerance:
                break
            m *= 2
        else:
            raise StiffnessError(
                f"could not meet tolerance {tolerance:g} with {m // 2} steps per period "
                f"(error estimate {err:.3e})"
            )
        self.m, self.dt, self.local_error = m, dt, err
        D = steps[0].shape[0]
        # cumulative products, thinned to checkpoints when memory is tight
        self.stride = max(1, ceil(m * D * D / _CACHE_ENTRIES))
        self.checkpoints = [np.eye(D, dtype=complex)]
        self._steps = steps if self.stride > 1 else None
        acc = np.eye(D, dtype=complex)
        for j, S in enumerate(steps, start=1):
            acc = S @ acc
            if j % self.stride == 0 or j == m:
                self.checkpoints.append(acc.copy())
        if self.stride == 1:
            self._steps = None
        self.floquet = acc
        T, Z = la.schur(acc, output="complex")
        self._phases = np.diag(T)
        self._Z = Z

    def _step(self, j: int, dt: float, length: float | None = None) -> np.ndarray:
        length = dt if length is None else length
        return _expm_matrix(self.h(j * dt + length / 2), length)

    def _build(self, m, dt):
        steps, err = [], 0.0
        for j in range(m):
            full = self._step(j, dt)
            t0 = j * dt
            a = _expm_matrix(self.h(t0 + dt / 4), dt / 2)
            b = _expm_matrix(self.h(t0 + 3 * dt / 4), dt / 2)
            err = max(err, np.linalg.norm(full - b @ a, 2) / 3)
            steps.append(full)
        return steps, err

    def _within_period(self, j: int) -> np.ndarray:
        c, r = divmod(j, self.stride)
        if c >= len(self.checkpoints) - 1 and r == 0:
            return self.checkpoints[-1]
        P = self.checkpoints[c]
        for i in range(c * self.stride, c * self.stride + r):
            S = self._steps[i] if self._steps is not None else self._step(i, self.dt)
            P = S @ P
        return P

    def state_at(self, psi0: np.ndarray, t: float) -> np.ndarray:
        n = floor(t / self.period + 1e-12)
        tau = max(0.0, t - n * self.period)
        j = min(self.m, int(floor(tau / self.dt + 1e-9)))
        r = tau - j * self.dt
        psi = self._Z @ (self._phases**n * (self._Z.conj().T @ psi0))
        psi = self._within_period(j) @ psi
        if r > 1e-13:
            psi = _expm_apply(self.h(j * self.dt + r / 2), r, psi)
        return psi

    def states(self, psi0, times) -> np.ndarray:
        psi0 = as_vector(psi0)
        return np.array([self.state_at(psi0, float(t)) for t in times])


def _sample_grid(t_final: float, times) -> np.ndarray:
    if times is None:
        return np.array([0.0, float(t_final)])
    times = np.asarray(times, float)
    if times.size and (times.min() < 0 or times.max() > t_final + 1e-12):
        raise ValueError("sample times must lie in [0, t_final]")
    return times


def evolve_driven(
    H0,
    V,
    omega: float,
    psi0,
    t_final: float,
    dt_max: float = DEFAULT_DT_MAX,
    tolerance: float = DEFAULT_TOLERANCE,
    times=None,
    tracked=None,
    basis: BasisMap | None = None,
    method: str = "auto",
) -> PropagationResult:
    """Integrate i d/dt psi = (H0 + V cos(omega t)) psi.

    ``method`` is "adaptive" (step-doubling control), "periodic" (cached
    drive period, dense only), "fixed" (uniform dt_max, no error control) or
    "auto" (periodic for dense operators when the run spans at least one
    drive period, so the cached period is reused).
    """
    basis = psi0.basis if isinstance(psi0, WaveFunction) and basis is None else basis
    H0m, Vm = _raw(H0), _raw(V)
    if H0m.shape != Vm.shape:
        raise ValueError("H0 and V must have the same dimension")
    sample = _sample_grid(t_final, times)
    dense = not sp.issparse(H0m)
    if method == "auto":
        reuse = omega > 0 and t_final >= 2 * pi / omega
        method = "periodic" if dense and reuse else "adaptive"
    if method == "periodic":
        if not dense or omega <= 0:
            raise ValueError("periodic propagation needs dense operators and omega > 0")
        H0d, Vd = np.asarray(H0m), np.asarray(Vm)
        prop = PeriodicPropagator(
            lambda t: H0d + Vd * np.cos(omega * t), 2 * pi / omega, dt_max, tolerance
        )
        states = prop.states(psi0, sample)
        return _result(sample, states, basis, tracked, prop.m)
    if method not in ("adaptive", "fixed"):
        raise ValueError(f"unknown propagation method {method!r}")
    _, states, steps = integrate(
        lambda t: H0m + Vm * np.cos(omega * t),
        as_vector(psi0),
        0.0,
        float(t_final),
        sample,
        dt_max,
        tolerance,
        fixed_step=method == "fixed",
    )
    return _result(sample, states, basis, tracked, steps)


def evolve_exact_drive(
    p: ModelParams,
    A: float,
    omega: float,
    psi0,
    t_final: float,
    dt_max: float = DEFAULT_DT_MAX,
    tolerance: float = DEFAULT_TOLERANCE,
    times=None,
    tracked=None,
    basis: BasisMap | None = None,
    method: str = "auto",
) -> PropagationResult:
    """Same as ``evolve_driven`` but with H0(Omega + A cos(omega t)) rebuilt each step."""
    ham = ParametricHamiltonian(p, basis)
    basis = ham.basis
    sample = _sample_grid(t_final, times)
    h_at = lambda t: ham.matrix(p.omega_phase + A * np.cos(omega * t))
    if method == "auto":
        reuse = omega > 0 and t_final >= 2 * pi / omega
        method = "periodic" if ham.pieces.dense and reuse else "adaptive"
    if method == "periodic":
        prop = PeriodicPropagator(h_at, 2 * pi / omega, dt_max, tolerance)
        return _result(sample, prop.states(psi0, sample), basis, tracked, prop.m)
    _, states, steps = integrate(
        h_at, as_vector(psi0), 0.0, float(t_final), sample, dt_max, tolerance,
        fixed_step=method == "fixed",
    )
    return _result(sample, states, basis, tracked, steps)


# -- ramps ------------------------------------------------------------------


@dataclass(frozen=True)
class RampSchedule:
    omega_start: float
    omega_end: float
    duration: float
    shape: str = "linear"

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("ramp duration must be non-negative")
        if self.shape not in ("linear", "smoothstep"):
            raise ValueError(f"unknown ramp shape {self.shape!r}")

    def omega_at(self, t: float) -> float:
        if self.duration == 0:
            return self.omega_end
        s = min(max(t / self.duration, 0.0), 1.0)
        if self.shape == "smoothstep":
            s = s * s * (3 - 2 * s)
        return self.omega_start + (self.omega_end - self.omega_start) * s


@dataclass(frozen=True, eq=False)
class RampResult:
    propagation: PropagationResult
    final_ground_overlap: float
    adiabatic: bool


def _ramp_dt_max(schedule: RampSchedule, dt_max: float | None) -> float:
    if dt_max is not None:
        return dt_max
    return max(schedule.duration / 8, DEFAULT_DT_MAX)


def adiabatic_ramp(
    p_start: ModelParams,
    schedule: RampSchedule,
    psi0,
    dt_max: float | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    times=None,
    tracked=None,
    basis: BasisMap | None = None,
    threshold: float = 0.99,
) -> RampResult:
    """Evolve under H0(Omega(t)) along the schedule.

    ``final_ground_overlap`` is |<g|psi(T)>|^2 with g the ground state of
    H0(omega_end); the ramp counts as adiabatic above ``threshold``.
    """
    from .spectra import solve

    ham = ParametricHamiltonian(p_start, basis)
    basis = ham.basis
    T = schedule.duration
    sample = _sample_grid(T, times)
    if T == 0:
        states = np.repeat(as_vector(psi0)[None, :], len(sample), axis=0)
        steps = 0
    else:
        _, states, steps = integrate(
            lambda t: ham.matrix(schedule.omega_at(t)),
            as_vector(psi0),
            0.0,
            T,
            sample,
            _ramp_dt_max(schedule, dt_max),
            tolerance,
        )
    prop = _result(sample, states, basis, tracked, steps)
    g = solve(p_start.at(schedule.omega_end), 1, basis).vector(0)
    overlap = float(abs(np.vdot(g, states[-1])) ** 2)
    return RampResult(prop, overlap, overlap > threshold)


def ramp_adjoint(
    p: ModelParams,
    schedule: RampSchedule,
    vectors: np.ndarray,
    dt_max: float | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    basis: BasisMap | None = None,
) -> np.ndarray:
    """R^dagger applied to the columns of ``vectors``, R the ramp propagator.

    Running the ramp backwards turns a readout projector |f><f| at the end of
    the ramp into |R^dag f><R^dag f| at its start, so many pre-ramp states can
    be read out without re-running the ramp for each one.
    """
    ham = ParametricHamiltonian(p, basis)
    if schedule.duration == 0:
        return np.array(vectors, dtype=complex)
    _, states, _ = integrate(
        lambda t: ham.matrix(schedule.omega_at(t)),
        np.asarray(vectors, complex),
        schedule.duration,
        0.0,
        [0.0],
        _ramp_dt_max(schedule, dt_max),
        tolerance,
    )
    return states[0]


def suggest_ramp_duration(
    p: ModelParams,
    omega_start: float,
    omega_end: float,
    factor: float = 10.0,
    samples: int = 101,
    basis: BasisMap | None = None,
) -> float:
    """Duration from the local adiabatic condition |<1|dH/dOmega|0>| |dOmega/dt| << gap^2."""
    from .spectra import solve

    ham = ParametricHamiltonian(p, basis)
    worst = 0.0
    for om in np.linspace(omega_start, omega_end, samples):
        res = solve(p.at(om), 2, ham.basis)
        g = res.eigenvalues[1] - res.eigenvalues[0]
        dH = ham.drive_matrix(om, 1.0)
        m = abs(res.vector(1).conj() @ (dH @ res.vector(0)))
        if g <= 0:
            return float("inf")
        worst = max(worst, m / g**2)
    return float(factor * abs(omega_end - omega_start) * worst)


def ramp_convergence(
    p_start: ModelParams,
    omega_start: float,
    omega_end: float,
    psi0,
    durations: Sequence[float],
    shape: str = "linear",
    **kwargs,
) -> list[float]:
    """Final ground-state overlap for each ramp duration."""
    return [
        adiabatic_ramp(
            p_start, RampSchedule(omega_start, omega_end, T, shape), psi0, **kwargs
        ).final_ground_overlap
        for T in durations
    ]
