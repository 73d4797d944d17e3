"""Spectra, peak matching, polarization inference and minimum detection."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .errors import DetectionError, InferenceError, InvalidInputError
from .model import TWO_PI, Detuning

DEFAULT_PROMINENCE = 0.05


@dataclass
class Spectrum:
    """One-sided amplitude spectrum.

    ``freqs`` in MHz from 0 to Nyquist; ``amplitudes`` scaled so that
    ``a*sin(2*pi*f*t)`` shows a peak of height ``a``.
    """

    freqs: np.ndarray
    amplitudes: np.ndarray
    peaks: list = field(default_factory=list)

    @property
    def resolution(self) -> float:
        return float(self.freqs[1] - self.freqs[0])


@dataclass
class PolarizationEstimate:
    eps_minus_sq: float
    uncertainty: float
    residual: float


@dataclass
class FirstMinimum:
    t: float
    value: float
    count: int

    def __iter__(self):
        # unpacks as (t_m, value)
        return iter((self.t, self.value))


def _uniform_step(times):
    times = np.asarray(times, dtype=float)
    steps = np.diff(times)
    if steps.size == 0 or np.any(steps <= 0):
        raise InvalidInputError("time grid must be strictly increasing")
    dt = steps.mean()
    if np.max(np.abs(steps - dt)) > 1e-6 * dt:
        raise InvalidInputError("time grid must be uniform")
    return dt


def spectrum(times, values, window="none", pad=1, min_peak_fraction=0.05) -> Spectrum:
    """Amplitude spectrum of a uniformly sampled real trace.

    Parameters
    ----------
    times : array_like
        Uniform sample times, us.
    values : array_like
        Trace; its mean is removed before the transform.
    window : {"none", "hann"}
        The window's coherent gain is divided out.
    pad : int
        Zero-padding factor; interpolates the spectrum without changing
        peak heights.
    min_peak_fraction : float
        Local maxima lower than this fraction of the largest amplitude are
        not listed in ``peaks``.
    """
    values = np.asarray(values, dtype=float)
    if values.size < 16:
        raise InvalidInputError("spectrum needs at least 16 samples")
    if len(times) != values.size:
        raise InvalidInputError("times and values differ in length")
    dt = _uniform_step(times)
    n = values.size
    if window == "hann":
        w = np.hanning(n)
    elif window == "none":
        w = np.ones(n)
    else:
        raise InvalidInputError(f"unknown window {window!r}")
    x = (values - values.mean()) * w
    nfft = int(pad) * n
    amps = np.abs(np.fft.rfft(x, nfft)) / w.sum()
    amps[1:] *= 2
    if nfft % 2 == 0:
        amps[-1] /= 2  # Nyquist bin is not mirrored
    freqs = np.fft.rfftfreq(nfft, dt)
    peaks = []
    top = amps.max()
    if top > 0:
        idx, _ = find_peaks(amps, height=min_peak_fraction * top)
        peaks = [(float(freqs[i]), float(amps[i])) for i in idx]
    return Spectrum(freqs, amps, peaks)


def _window_peak(s: Spectrum, f0, half_width):
    sel = np.abs(s.freqs - f0) <= half_width
    if not np.any(sel):
        return None
    return float(s.amplitudes[sel].max())


def infer_polarization(s: Spectrum, det: Detuning) -> PolarizationEstimate:
    """Estimate |eps_minus|^2 from the Ramsey spectral lines.

    The line height next to each expected frequency ``|Delta|/2pi`` is the
    largest amplitude within ``|Delta_+ - Delta_-|/(4*2pi)`` of it, and
    ``eps_minus_sq = a_minus / (a_minus + a_plus)``. The residual compares
    the line at the ``|+-1>`` splitting with the ``a_minus*a_plus/(a_minus+a_plus)``
    expected from the Ramsey signal; the uncertainty propagates the median
    bin amplitude (noise floor) through the ratio.
    """
    split = abs(det.delta_plus - det.delta_minus) / TWO_PI
    half = split / 4
    if not s.resolution < half:
        raise InvalidInputError(
            f"spectral resolution {s.resolution:.4g} MHz does not resolve "
            f"the lines (need < {half:.4g} MHz)")
    lines = {
        "delta_minus": abs(det.delta_minus) / TWO_PI,
        "delta_plus": abs(det.delta_plus) / TWO_PI,
        "splitting": split,
    }
    heights = {}
    for name, f0 in lines.items():
        a = _window_peak(s, f0, half)
        if a is None:
            raise InferenceError(f"{name} line at {f0:.4g} MHz lies outside the spectrum")
        heights[name] = a
    a_m, a_p, a_prod = heights["delta_minus"], heights["delta_plus"], heights["splitting"]
    total = a_m + a_p
    noise = float(np.median(s.amplitudes))
    if total <= 0 or total <= 3 * noise:
        raise InferenceError("neither the delta_minus nor the delta_plus line rises above the noise floor")
    estimate = a_m / total
    uncertainty = noise * float(np.hypot(a_m, a_p)) / total ** 2
    residual = abs(a_prod - a_m * a_p / total)
    return PolarizationEstimate(float(np.clip(estimate, 0, 1)), uncertainty, residual)


def first_minimum(times, values, prominence=DEFAULT_PROMINENCE) -> FirstMinimum:
    """Earliest local minimum whose prominence is at least ``prominence``.

    Prominence is the rise from the minimum to the lower of the two flanking
    maxima. The position and depth are refined with a parabola through the
    three samples around the discrete minimum. ``count`` is the number of
    qualifying minima in the whole trace.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size < 5:
        raise InvalidInputError("first_minimum needs at least 5 samples")
    idx, _ = find_peaks(-values, prominence=prominence)
    if idx.size == 0:
        raise DetectionError(f"no local minimum with prominence >= {prominence}")
    i = int(idx[0])
    y0, y1, y2 = values[i - 1], values[i], values[i + 1]
    t0, t1, t2 = times[i - 1], times[i], times[i + 1]
    # parabola through three (possibly unevenly spaced) points
    denom = (t0 - t1) * (t0 - t2) * (t1 - t2)
    a = (t2 * (y1 - y0) + t1 * (y0 - y2) + t0 * (y2 - y1)) / denom
    b = (t2 ** 2 * (y0 - y1) + t1 ** 2 * (y2 - y0) + t0 ** 2 * (y1 - y2)) / denom
    if a > 0:
        t_m = -b / (2 * a)
        t_m = min(max(t_m, t0), t2)
        c = y1 - a * t1 ** 2 - b * t1
        value = a * t_m ** 2 + b * t_m + c
    else:
        t_m, value = t1, y1
    return FirstMinimum(float(t_m), float(value), int(idx.size))


def dominant_frequency(times, values, pad=8) -> float:
    """Frequency (MHz) of the largest line in the Hann-windowed spectrum."""
    s = spectrum(times, values, window="hann", pad=pad)
    return float(s.freqs[np.argmax(s.amplitudes)])


def sweep_curves(sr):
    """Tables behind the fidelity and effective-Rabi plots of a pi-pulse sweep.

    Returns
    -------
    fidelity_table, rate_table : dict of str -> ndarray
        ``fidelity_table`` has ``omega_eff_MHz`` and ``fidelity``;
        ``rate_table`` has ``omega_MHz`` (the applied drive strength as a
        Rabi frequency), ``omega_eff_MHz`` and ``ideal_MHz`` (the harmonic
        reference ``omega_eff = omega``). Failed records are dropped.
    """
    ok = [r for r in sr.records if r.ok]
    omega_eff = np.array([r.omega_eff for r in ok], dtype=float)
    fidelity_table = {
        "omega_eff_MHz": omega_eff,
        "fidelity": np.array([r.fidelity for r in ok], dtype=float),
    }
    applied = np.array([r.omega_rabi for r in ok], dtype=float)
    rate_table = {
        "omega_MHz": applied,
        "omega_eff_MHz": omega_eff,
        "ideal_MHz": applied.copy(),
    }
    return fidelity_table, rate_table
