import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ring_noon.fitting import (
    FitError,
    fit_line,
    fit_line_through_origin,
    fit_lorentzian,
    fit_sinusoid,
    fit_two_time,
)


@given(st.floats(0.2, 3.0), st.floats(0.05, 0.5), st.floats(-np.pi, np.pi))
@settings(max_examples=40)
def test_sinusoid_recovers_frequency(w, amp, phase):
    t = np.linspace(0, 40, 201)
    y = 0.5 + amp * np.cos(w * t + phase)
    fit = fit_sinusoid(t, y)
    assert fit.frequency == pytest.approx(w, rel=1e-6)
    assert fit.amplitude == pytest.approx(amp, rel=1e-6)
    # the polished frequency is limited by the flat cost minimum (~1e-8)
    assert fit.rms < 1e-6
    assert np.allclose(fit(t), y, atol=1e-6)


def test_sinusoid_with_noise_and_errors():
    rng = np.random.default_rng(0)
    t = np.linspace(0, 60, 121)
    y = 0.5 + 0.5 * np.cos(0.7 * t) + rng.normal(scale=0.02, size=t.size)
    assert fit_sinusoid(t, y).frequency == pytest.approx(0.7, rel=5e-3)
    with pytest.raises(FitError):
        fit_sinusoid([0, 1, 2], [0, 1, 0])
    with pytest.raises(FitError):
        fit_sinusoid([1, 1, 1, 1], [0, 1, 0, 1])


def test_lorentzian():
    x = np.linspace(0.8, 1.2, 41)
    y = 0.02 + 0.9 / (1 + ((x - 1.013) / 0.03) ** 2)
    fit = fit_lorentzian(x, y)
    assert fit.center == pytest.approx(1.013, abs=1e-8)
    assert fit.width == pytest.approx(0.03, rel=1e-6)
    assert fit.rms < 1e-9
    with pytest.raises(FitError):
        fit_lorentzian([1, 2, 3], [0, 1, 0])


@given(st.floats(0.3, 2.0), st.floats(0.3, 2.0), st.sampled_from([-1.0, -0.8, 0.9]))
@settings(max_examples=25)
def test_two_time_surface(f1, f2, C):
    t1 = np.linspace(0, 0.9 * 2 * np.pi / f1, 11)
    t2 = np.linspace(0, 0.9 * 2 * np.pi / f2, 11)
    P = 0.5 * (1 + C * np.outer(np.sin(f1 * t1), np.sin(f2 * t2)))
    fit = fit_two_time(t1, t2, P)
    assert fit.f1 == pytest.approx(f1, rel=1e-6)
    assert fit.f2 == pytest.approx(f2, rel=1e-6)
    assert fit.contrast == pytest.approx(C, rel=1e-6)
    assert np.allclose(fit(t1, t2), P, atol=1e-8)


def test_two_time_shape_check():
    with pytest.raises(FitError):
        fit_two_time(np.arange(4.0), np.arange(5.0), np.zeros((5, 4)))


def test_lines():
    x = np.arange(3, 13, dtype=float)
    fit = fit_line_through_origin(x, 0.25 * x)
    assert fit.slope == pytest.approx(0.25) and fit.r2 == pytest.approx(1.0)
    bent = fit_line_through_origin(x, 0.25 * x + 1.0)
    assert bent.r2 < 0.999
    gen = fit_line(x, 2 * x - 1)
    assert gen.slope == pytest.approx(2) and gen.intercept == pytest.approx(-1)
