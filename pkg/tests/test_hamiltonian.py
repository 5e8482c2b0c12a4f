from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from ring_noon.basis import enumerate_basis, fock_state, noon_state
from ring_noon.hamiltonian import (
    DriveAmplitudeError,
    ModelParams,
    ParametricHamiltonian,
    build_drive,
    build_h0,
    build_h0_parts,
    check_small_angle,
    finite_difference_drive,
    matrix_element,
    mode_swap_permutation,
)

params = st.builds(
    ModelParams,
    N=st.integers(1, 5),
    U=st.floats(0, 2),
    J=st.floats(0.5, 2),
    delta_J=st.floats(0, 0.45),
    omega_phase=st.floats(-2 * pi, 4 * pi),
)


@given(params)
@settings(max_examples=40, deadline=None)
def test_matches_bruteforce_oracle(p):
    M, states, _ = oracle.hamiltonian(p.N, p.U, p.J, p.delta_J, p.omega_phase)
    b = enumerate_basis(p.N)
    assert [tuple(s) for s in b.states] == states
    assert np.abs(build_h0(p, b).toarray() - M).max() < 1e-12


@given(params)
@settings(max_examples=40, deadline=None)
def test_hermitian_and_parts(p):
    b = enumerate_basis(p.N)
    H = build_h0(p, b)
    assert H.hermiticity_error() < 1e-12
    parts = build_h0_parts(p, b)
    total = sum(x.toarray() for x in parts)
    assert np.abs(total - H.toarray()).max() < 1e-14


@given(params)
@settings(max_examples=30, deadline=None)
def test_periodicity_and_reflection(p):
    b = enumerate_basis(p.N)
    e = np.linalg.eigvalsh(build_h0(p, b).toarray())
    e_shift = np.linalg.eigvalsh(build_h0(p.at(p.omega_phase + 2 * pi), b).toarray())
    e_refl = np.linalg.eigvalsh(build_h0(p.at(-p.omega_phase), b).toarray())
    scale = max(1.0, np.abs(e).max())
    assert np.abs(e - e_shift).max() < 1e-10 * scale
    assert np.abs(e - e_refl).max() < 1e-10 * scale


@pytest.mark.parametrize("N", [1, 2, 4, 6])
def test_z2_symmetry_at_pi(N):
    p = ModelParams(N, U=0.3, delta_J=0.2, omega_phase=pi)
    b = enumerate_basis(N)
    H = build_h0(p, b).toarray()
    perm = mode_swap_permutation(b)
    assert np.abs(H[np.ix_(perm, perm)] - H).max() < 1e-12
    off = build_h0(p.at(pi + 0.1), b).toarray()
    assert np.abs(off[np.ix_(perm, perm)] - off).max() > 1e-3


def test_single_particle_examples():
    b = enumerate_basis(1)
    H = build_h0(ModelParams(1), b).toarray()
    assert np.allclose(H, np.diag(np.diag(H)))
    assert np.allclose(np.sort(np.diag(H)), [-2, 1, 1])
    e = np.linalg.eigvalsh(build_h0(ModelParams(1, omega_phase=pi), b).toarray())
    assert np.allclose(e, [-1, -1, 2])


@pytest.mark.parametrize("omega", [0.0, 1.3, pi])
def test_pure_interaction_diagonal(omega):
    # J must be positive, so remove the hopping by evaluating H_U alone
    p = ModelParams(2, U=0.7, omega_phase=omega)
    b = enumerate_basis(2)
    HU = build_h0_parts(p, b)[0].toarray()
    i = b.index_of((0, 2, 0))
    assert HU[i, i] == pytest.approx(0.7 / 3 * 2)


def test_zero_parts():
    b = enumerate_basis(3)
    HU, _, HdJ = build_h0_parts(ModelParams(3, U=0.0, delta_J=0.0, omega_phase=0.4), b)
    assert HU.max_abs() == 0 and HdJ.max_abs() == 0


def test_drive_single_particle():
    A = 0.05
    b = enumerate_basis(1)
    V = build_drive(ModelParams(1, omega_phase=pi), A, b).toarray()
    assert np.allclose(V, np.diag(np.diag(V)), atol=1e-15)
    assert V[b.index_of((0, 1, 0)), b.index_of((0, 1, 0))] == pytest.approx(A / sqrt(3))
    assert V[b.index_of((0, 0, 1)), b.index_of((0, 0, 1))] == pytest.approx(-A / sqrt(3))
    assert abs(V[b.index_of((1, 0, 0)), b.index_of((1, 0, 0))]) < 1e-15
    V0 = build_drive(ModelParams(1, omega_phase=0.0), A, b).toarray()
    assert abs(V0[b.index_of((0, 1, 0)), b.index_of((0, 1, 0))]) < 1e-15


@given(params, st.floats(-0.3, 0.3).filter(lambda a: abs(a) > 1e-3))
@settings(max_examples=30, deadline=None)
def test_drive_is_phase_derivative(p, A):
    b = enumerate_basis(p.N)
    V = build_drive(p, A, b).toarray()
    fd = finite_difference_drive(p, A, b)
    assert np.abs(V - fd).max() / np.abs(V).max() < 1e-7
    D, _, _ = oracle.hamiltonian(p.N, p.U, p.J, p.delta_J, p.omega_phase, derivative=True)
    assert np.abs(V - A * D).max() < 1e-12


@pytest.mark.parametrize("N", [2, 3, 6])
def test_noon_coupling_is_half_the_quoted_value(N):
    A = 0.05
    b = enumerate_basis(N)
    V = build_drive(ModelParams(N, omega_phase=pi), A, b)
    v = matrix_element(V, noon_state(b, +1), noon_state(b, -1))
    assert abs(v) == pytest.approx(N * A / sqrt(3), rel=1e-12)
    assert abs(v) == pytest.approx(0.5 * 2 * N * A / sqrt(3), rel=1e-12)
    a, c = fock_state(b, (0, N, 0)), fock_state(b, (0, 0, N))
    assert matrix_element(V, a, c) == 0
    assert matrix_element(build_h0(ModelParams(N), b), a, a).imag == 0


def test_matrix_element_checks():
    b3, b4 = enumerate_basis(3), enumerate_basis(4)
    H = build_h0(ModelParams(3), b3)
    psi = noon_state(b3)
    eye = H.scaled(0.0)
    assert matrix_element(eye, psi, psi) == 0
    with pytest.raises(ValueError):
        matrix_element(H, psi, noon_state(b4))


def test_small_angle_bound():
    check_small_angle(0.3)
    with pytest.raises(DriveAmplitudeError):
        build_drive(ModelParams(2), 0.31)
    with pytest.warns(UserWarning):
        build_drive(ModelParams(2), 0.5, strict=False)


def test_parameter_validation():
    with pytest.raises(ValueError):
        ModelParams(3, delta_J=1.0)
    with pytest.raises(ValueError):
        ModelParams(3, U=-0.1)
    with pytest.raises(ValueError):
        ModelParams(3, J=0.0)
    with pytest.raises(ValueError):
        build_h0(ModelParams(3), enumerate_basis(4))


def test_sparse_path_matches_dense():
    p = ModelParams(70, U=0.05, delta_J=0.01, omega_phase=pi)
    ham = ParametricHamiltonian(p, enumerate_basis(70))
    H = ham.h0()
    assert H.is_sparse
    M, _, _ = oracle.hamiltonian(70, 0.05, 1.0, 0.01, pi)
    assert np.abs(H.toarray() - M).max() < 1e-11
