from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ring_noon.basis import enumerate_basis
from ring_noon.dynamics import adiabatic_ramp
from ring_noon.hamiltonian import REFERENCE_RATIOS, ModelParams
from ring_noon.protocols import (
    DELTA_E_CONSTANT,
    QUOTED_DELTA_E_CONSTANT,
    FidelityError,
    ProtocolReport,
    ReadoutError,
    ShotSampler,
    analytic_delta_e,
    default_readout_ramp,
    detect_noon,
    find_readout_offset,
    invert_delta_e,
    precision_measurement,
    prepare_readout,
    two_time_closed_form,
    two_time_protocol,
)
from ring_noon.spectra import gap, solve

# weak interaction and small asymmetry: NOON preparation and Fock readout both above 0.99
NOON = dict(U=0.05, delta_J=0.003, omega_phase=pi)


@pytest.fixture(scope="module")
def readout3():
    p = ModelParams(3, **NOON)
    return p, prepare_readout(p, default_readout_ramp(p))


def test_constants():
    assert DELTA_E_CONSTANT == pytest.approx(2 * sqrt(3))
    assert QUOTED_DELTA_E_CONSTANT == pytest.approx(sqrt(3))


@given(st.integers(1, 40), st.floats(0, 0.9), st.floats(-1.0, 1.0))
@settings(max_examples=50)
def test_delta_e_inversion(N, dJ, d):
    dE = analytic_delta_e(N, 1.0, dJ, d)
    assert invert_delta_e(dE, N, 1.0, dJ) == pytest.approx(d, abs=1e-12)
    assert np.sign(dE) == np.sign(d) or d == 0
    assert invert_delta_e(1e9, N, 1.0, dJ) is None


def test_shot_sampler_is_seeded():
    P = np.linspace(0, 1, 11)
    a = ShotSampler(1000, 5).sample(P, 0)
    assert np.array_equal(a, ShotSampler(1000, 5).sample(P, 0))
    assert not np.array_equal(a, ShotSampler(1000, 5).sample(P, 1))
    assert a[0] == 0 and a[-1] == 1
    assert np.abs(a - P).max() < 0.06
    with pytest.raises(ValueError):
        ShotSampler(0)


def test_pair_sampling_respects_exclusivity():
    P0 = np.full(200, 0.6)
    P1 = np.full(200, 0.4)
    a, b = ShotSampler(50, 2).sample_pair(P0, P1, 0)
    assert np.allclose(a + b, 1.0)
    a, b = ShotSampler(2000, 2).sample_pair(np.full((3, 4), 0.3), np.full((3, 4), 0.5))
    assert a.shape == (3, 4) and np.all(a + b <= 1)
    assert abs(a.mean() - 0.3) < 0.03 and abs(b.mean() - 0.5) < 0.03


def test_report_rejects_bad_probabilities():
    with pytest.raises(ValueError):
        ProtocolReport("x", {}, observables={"P_0N0": np.array([1.2])})
    with pytest.raises(ValueError):
        ProtocolReport("x", {}, observables={"P_0N0": np.array([0.7]), "P_00N": np.array([0.6])})
    ProtocolReport("x", {}, observables={"P_0N0": np.array([0.5]), "P_00N": np.array([0.5])})


def test_readout_point():
    p = ModelParams(3, **NOON)
    pt = find_readout_offset(p, -1, 0.99)
    assert pt.omega < pi
    assert min(pt.ground_fidelity, pt.excited_fidelity) > 0.99
    closer = find_readout_offset(p, -1, 0.9)
    assert closer.offset < pt.offset
    # at the larger asymmetry the Fock-like window never opens this far
    with pytest.raises(ReadoutError) as exc:
        find_readout_offset(ModelParams(3, omega_phase=pi, **REFERENCE_RATIOS), -1, 0.99)
    assert exc.value.ground_fidelity < 0.99 or exc.value.excited_fidelity < 0.99


def test_adjoint_readout_matches_forward_ramp(readout3):
    p, ro = readout3
    rng = np.random.default_rng(1)
    psi = rng.normal(size=10) + 1j * rng.normal(size=10)
    psi /= np.linalg.norm(psi)
    fwd = adiabatic_ramp(p, ro.schedule, psi).propagation.final()
    b = enumerate_basis(3)
    P0, P1 = ro.probabilities(psi[None, :])
    assert P0[0] == pytest.approx(abs(fwd[b.index_of((0, 3, 0))]) ** 2, abs=1e-6)
    assert P1[0] == pytest.approx(abs(fwd[b.index_of((0, 0, 3))]) ** 2, abs=1e-6)
    assert ro.ramp_ground_overlap > 0.99


def test_precision_measurement_recovers_split(readout3):
    p, ro = readout3
    d = 0.1
    dE = analytic_delta_e(3, 1.0, 0.003, d)
    t = np.linspace(0, 3 * 2 * pi / dE, 91)
    rep = precision_measurement(p, d, t, readout=ro)
    dr = rep.derived
    assert dr["preparation_fidelity"] > 0.99
    assert dr["delta_E_fit"] == pytest.approx(dr["delta_E_analytic"], rel=0.01)
    assert dr["delta_E_fit"] == pytest.approx(dr["delta_E_exact"], rel=0.01)
    assert dr["delta_E_quoted_constant"] == pytest.approx(dr["delta_E_analytic"] / 2)
    assert dr["delta_omega_estimate"] == pytest.approx(d, rel=0.01)
    assert dr["norm_drift"] < 1e-8
    assert dr["contrast"] > 0.9
    P0 = rep.observables["P_0N0"]
    # P_0N0 = cos^2(dE t / 2) up to readout contrast: starts high, first minimum half a beat later
    assert P0[0] > 0.95
    assert P0[np.argmin(np.abs(t - pi / dE))] < 0.1


def test_precision_zero_shift_is_flat(readout3):
    p, ro = readout3
    t = np.linspace(0, 200, 21)
    rep = precision_measurement(p, 0.0, t, readout=ro)
    P0 = rep.observables["P_0N0"]
    assert np.ptp(P0) < 1e-9
    assert rep.derived["delta_E_fit"] == 0.0


def test_precision_sampled_is_reproducible(readout3):
    p, ro = readout3
    t = np.linspace(0, 100, 31)
    a = precision_measurement(p, 0.2, t, readout=ro, sampler=ShotSampler(500, 3))
    b = precision_measurement(p, 0.2, t, readout=ro, sampler=ShotSampler(500, 3))
    assert np.array_equal(a.observables["P_0N0"], b.observables["P_0N0"])
    assert a.derived["delta_E_fit"] == pytest.approx(a.derived["delta_E_analytic"], rel=0.03)


def test_fitted_split_depends_weakly_on_interaction():
    # the diagonal split has no U in it; the dressed split picks up a
    # second-order shift from the couplings to the other states
    fits = []
    for U in (0.05, 0.1):
        p = ModelParams(3, U=U, delta_J=0.003, omega_phase=pi)
        dE = analytic_delta_e(3, 1.0, 0.003, 0.1)
        rep = precision_measurement(p, 0.1, np.linspace(0, 3 * 2 * pi / dE, 91))
        fits.append(rep.derived["delta_E_fit"])
    assert fits[0] == pytest.approx(fits[1], rel=0.01)


def test_preparation_fidelity_guard():
    with pytest.raises(FidelityError) as exc:
        precision_measurement(ModelParams(3, U=2.0, delta_J=0.3, omega_phase=pi), 0.1, [0, 1, 2, 3])
    assert exc.value.fidelity <= 0.99
    with pytest.raises(ValueError):
        precision_measurement(ModelParams(3, U=0.05, delta_J=0.003, omega_phase=3.0), 0.1, [0, 1])


def test_two_time_closed_form_limits():
    t = np.linspace(0, 10, 5)
    P = two_time_closed_form(t, t, 0.4, 0.2)
    assert np.allclose(P[0], 0.5) and np.allclose(P[:, 0], 0.5)
    assert P[0, 0] == 0.5
    assert np.all((P >= 0) & (P <= 1))


def test_two_time_protocol():
    p = ModelParams(3, U=0.05, delta_J=0.001, omega_phase=pi)
    dE = abs(analytic_delta_e(3, 1.0, 0.001, 0.3))
    g = gap(p).delta_E
    t1 = np.linspace(0, 0.9 * 2 * pi / dE, 11)
    t2 = np.linspace(0, 0.9 * 2 * pi / g, 11)
    rep = two_time_protocol(p, 0.3, t1, t2)
    d = rep.derived
    assert d["preparation_fidelity"] > 0.99
    assert d["closed_form_rms"] < 0.02
    assert d["delta_E_fit"] == pytest.approx(d["delta_E_exact"], rel=0.01)
    assert d["delta_eps_fit"] == pytest.approx(g / 2, rel=0.01)
    assert d["norm_drift"] < 1e-8
    # the opposite shift flips the sign of the branch split
    neg = two_time_protocol(p, -0.3, t1, t2).derived
    assert neg["delta_E_fit"] == pytest.approx(-d["delta_E_fit"], rel=0.01)


def test_detect_noon_small_scan():
    p = ModelParams(3, U=1.0, delta_J=0.01, omega_phase=pi)
    s = solve(p, 2)
    g = s.eigenvalues[1] - s.eigenvalues[0]
    omegas = np.linspace(0.9 * g, 1.1 * g, 9)
    t = np.linspace(0, 400, 41)
    rep = detect_noon(p, 0.05, omegas, t, readout_ramp=None)
    d = rep.derived
    assert d["resonance_detected"]
    assert abs(d["omega_peak_grid"] - g) <= omegas[1] - omegas[0]
    assert d["norm_drift"] < 1e-8
    assert "P_0N0" not in rep.observables
    assert rep.observables["transfer"].shape == (9, 41)
    with pytest.raises(ValueError):
        detect_noon(p, 0.05, [-1.0], t, readout_ramp=None)


def test_detect_noon_off_resonance_not_detected():
    p = ModelParams(3, U=1.0, delta_J=0.01, omega_phase=pi)
    g = gap(p).delta_E
    rep = detect_noon(p, 0.05, [0.5 * g, 0.6 * g], np.linspace(0, 100, 11), readout_ramp=None)
    assert not rep.derived["resonance_detected"]
