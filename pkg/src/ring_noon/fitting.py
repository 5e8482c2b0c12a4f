"""Small curve fits used by the protocols: sinusoids, Lorentzians, lines."""

from __future__ import annotations

from dataclasses import dataclass
from math import pi

import numpy as np
from scipy.optimize import least_squares, minimize_scalar


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class SinusoidFit:
    """y = offset + amplitude * cos(frequency * t + phase)."""

    frequency: float
    amplitude: float
    offset: float
    phase: float
    rms: float

    def __call__(self, t):
        return self.offset + self.amplitude * np.cos(self.frequency * np.asarray(t) + self.phase)


def _linear_sinusoid(t, y, w):
    X = np.column_stack([np.ones_like(t), np.cos(w * t), np.sin(w * t)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ coef
    return coef, float(r @ r)


def fit_sinusoid(t, y, freq_bounds: tuple[float, float] | None = None, oversample: int = 10) -> SinusoidFit:
    """Least-squares sinusoid with free offset, amplitude and phase.

    The frequency is scanned on a grid finer than the Fourier resolution of the
    sample window and then polished; the remaining parameters are linear.
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    if t.size < 4:
        raise FitError("need at least four samples for a sinusoid fit")
    span = t.max() - t.min()
    if span <= 0:
        raise FitError("sample times must span a non-zero interval")
    if freq_bounds is None:
        dt = np.min(np.diff(np.unique(t)))
        freq_bounds = (pi / span / 2, pi / dt)
    lo, hi = freq_bounds
    step = 2 * pi / span / oversample
    grid = np.arange(lo, hi + step, step)
    cost = np.array([_linear_sinusoid(t, y, w)[1] for w in grid])
    i = int(np.argmin(cost))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if b > a:
        res = minimize_scalar(
            lambda w: _linear_sinusoid(t, y, w)[1],
            bounds=(a, b),
            method="bounded",
            options={"xatol": 1e-14 * max(1.0, b)},
        )
        w = float(res.x)
    else:
        w = float(grid[i])
    coef, ss = _linear_sinusoid(t, y, w)
    amp = float(np.hypot(coef[1], coef[2]))
    phase = float(np.arctan2(-coef[2], coef[1]))
    return SinusoidFit(w, amp, float(coef[0]), phase, float(np.sqrt(ss / t.size)))


@dataclass(frozen=True)
class LorentzianFit:
    """y = baseline + height / (1 + ((x - center) / width)^2)."""

    center: float
    width: float
    height: float
    baseline: float
    rms: float

    def __call__(self, x):
        x = np.asarray(x, float)
        return self.baseline + self.height / (1 + ((x - self.center) / self.width) ** 2)


def fit_lorentzian(x, y) -> LorentzianFit:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 4:
        raise FitError("need at least four points for a Lorentzian fit")
    i = int(np.argmax(y))
    base = float(np.min(y))
    half = base + (y[i] - base) / 2
    above = x[y >= half]
    width0 = max((above.max() - above.min()) / 2, np.min(np.diff(np.sort(x))))

    def resid(q):
        c, w, h, b0 = q
        return b0 + h / (1 + ((x - c) / w) ** 2) - y

    res = least_squares(
        resid,
        [x[i], width0, y[i] - base, base],
        bounds=([x.min(), 1e-15, 0, -np.inf], [x.max(), np.inf, np.inf, np.inf]),
        x_scale="jac",
        xtol=1e-14,
        ftol=1e-14,
    )
    if not res.success:
        raise FitError(f"Lorentzian fit failed: {res.message}")
    c, w, h, b0 = res.x
    return LorentzianFit(float(c), float(w), float(h), float(b0),
                         float(np.sqrt(np.mean(res.fun**2))))


@dataclass(frozen=True)
class TwoTimeFit:
    """P(t1, t2) = 1/2 (1 + contrast * sin(f1 t1) * sin(f2 t2)), f1, f2 > 0."""

    f1: float
    f2: float
    contrast: float
    rms: float

    def __call__(self, t1, t2):
        t1, t2 = np.meshgrid(np.asarray(t1, float), np.asarray(t2, float), indexing="ij")
        return 0.5 * (1 + self.contrast * np.sin(self.f1 * t1) * np.sin(self.f2 * t2))


def _axis_grid(t, oversample):
    t = np.asarray(t, float)
    span = t.max() - t.min()
    dt = np.min(np.diff(np.unique(t)))
    step = 2 * pi / span / oversample
    return np.arange(pi / span / 2, pi / dt + step, step)


def fit_two_time(t1, t2, P, oversample: int = 8) -> TwoTimeFit:
    """Fit the product-of-sines surface; P has shape (len(t1), len(t2))."""
    t1 = np.asarray(t1, float)
    t2 = np.asarray(t2, float)
    Y = 2 * np.asarray(P, float) - 1
    if Y.shape != (t1.size, t2.size):
        raise FitError("surface shape does not match the time grids")
    if t1.size < 3 or t2.size < 3:
        raise FitError("need at least three samples along each time axis")
    g1, g2 = _axis_grid(t1, oversample), _axis_grid(t2, oversample)
    S1 = np.sin(np.outer(g1, t1))  # (n1, len t1)
    S2 = np.sin(np.outer(g2, t2))
    # best contrast for each frequency pair is linear: C = <Y, s1 s2> / |s1 s2|^2
    num = np.einsum("ai,ij,bj->ab", S1, Y, S2)
    den = np.outer((S1**2).sum(1), (S2**2).sum(1))
    gain = np.where(den > 0, num**2 / np.where(den > 0, den, 1), 0)
    i, j = np.unravel_index(np.argmax(gain), gain.shape)

    def resid(q):
        f1, f2, C = q
        return (C * np.outer(np.sin(f1 * t1), np.sin(f2 * t2)) - Y).ravel() / 2

    res = least_squares(
        resid,
        [g1[i], g2[j], num[i, j] / den[i, j]],
        bounds=([0, 0, -np.inf], [np.inf, np.inf, np.inf]),
        x_scale="jac",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    f1, f2, C = res.x
    return TwoTimeFit(float(f1), float(f2), float(C), float(np.sqrt(np.mean(res.fun**2))))


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r2: float


def fit_line_through_origin(x, y) -> LineFit:
    """y = slope * x; r2 uses the centred total sum of squares."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    slope = float(x @ y / (x @ x))
    ss_res = float(np.sum((y - slope * x) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return LineFit(slope, 0.0, 1 - ss_res / ss_tot if ss_tot > 0 else 1.0)


def fit_line(x, y) -> LineFit:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return LineFit(float(slope), float(intercept), 1 - ss_res / ss_tot if ss_tot > 0 else 1.0)
