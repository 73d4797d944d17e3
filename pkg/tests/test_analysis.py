import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvpolar import (
    TWO_PI, DetectionError, Detuning, DriveConfig, InferenceError, InvalidInputError,
    PhaseAverageSpec, RamseySpec, detunings, dominant_frequency, epsilon_components,
    first_minimum, infer_polarization, mhz, pi_pulse_sweep, rabi_trace, ramsey_closed_form,
    ramsey_scan, spectrum, sweep_curves, drive_for_lambda,
)
from nvpolar.experiments import SweepRecord

DET = Detuning(mhz(10.0), mhz(35.76))  # carrier 10 MHz below both transitions
TAU = np.arange(2000) * 0.005


# ---- spectrum ----

@pytest.mark.parametrize("window", ["none", "hann"])
def test_single_sine_amplitude(window):
    t = np.arange(1000) * 0.002
    s = spectrum(t, 0.3 * np.sin(TWO_PI * 13 * t), window=window, pad=4)
    k = np.argmax(s.amplitudes)
    assert s.freqs[k] == pytest.approx(13.0, abs=s.resolution)
    assert s.amplitudes[k] == pytest.approx(0.3, abs=0.01)
    if window == "hann":
        assert len(s.peaks) == 1


def test_constant_trace_is_flat():
    s = spectrum(np.arange(64) * 0.1, np.full(64, 0.7))
    assert np.all(s.amplitudes <= 1e-12)
    assert s.peaks == []


def test_frequency_axis():
    t = np.arange(100) * 0.01
    s = spectrum(t, np.sin(t), pad=2)
    assert s.freqs[0] == 0 and s.freqs[-1] == pytest.approx(50.0)
    assert np.all(s.amplitudes >= 0)


def test_closed_form_line_heights():
    s = spectrum(TAU, ramsey_closed_form(TAU, DET, epsilon_components(0.0)), window="hann", pad=8)
    heights = {round(f, 1): a for f, a in s.peaks}
    got = [max(a for f, a in s.peaks if abs(f - f0) < 0.3) for f0 in (10.0, 35.76, 25.76)]
    np.testing.assert_allclose(got, [0.25, 0.25, 0.125], rtol=0.02)
    assert len(heights) == 3


@given(st.lists(st.tuples(st.integers(1, 400), st.floats(0.01, 1.0)), min_size=1, max_size=5))
@settings(max_examples=100)
def test_parseval(components):
    # one-sided amplitudes: variance = sum(A^2)/2 over interior bins + A_nyq^2
    n = 1024
    t = np.arange(n) * 0.001
    x = sum(a * np.cos(TWO_PI * k / (n * 0.001) * t + k) for k, a in components)
    s = spectrum(t, x)
    parseval = 0.5 * np.sum(s.amplitudes[1:-1] ** 2) + s.amplitudes[-1] ** 2
    assert parseval == pytest.approx(np.var(x), rel=0.01)


def test_spectrum_input_checks():
    with pytest.raises(InvalidInputError):
        spectrum(np.arange(10.0), np.zeros(10))
    t = np.r_[np.arange(20) * 0.1, 2.5]
    with pytest.raises(InvalidInputError):
        spectrum(t, np.zeros(t.size))
    with pytest.raises(InvalidInputError):
        spectrum(np.arange(20.0), np.zeros(20), window="kaiser")
    with pytest.raises(InvalidInputError):
        spectrum(np.arange(20.0), np.zeros(19))


# ---- polarization inference ----

def _ramsey(ramsey_params, phi):
    d = DriveConfig(omega_w=mhz(114.0), carrier=ramsey_params.omega_minus - mhz(10.0), phi=phi)
    r = ramsey_scan(ramsey_params, d, RamseySpec(np.arange(200) * 0.01))
    return infer_polarization(spectrum(r.tau, r.simulated, window="hann", pad=8), r.detuning)


def test_infer_sigma_minus(ramsey_params):
    est = _ramsey(ramsey_params, math.pi / 2)
    assert est.eps_minus_sq >= 0.95
    assert est.uncertainty >= 0


def test_infer_linear(ramsey_params):
    est = _ramsey(ramsey_params, 0.0)
    assert est.eps_minus_sq == pytest.approx(0.5, abs=0.05)
    assert est.residual < 0.02


def test_infer_without_plus_line():
    s = spectrum(TAU, ramsey_closed_form(TAU, DET, epsilon_components(math.pi / 2)))
    s.amplitudes[np.abs(s.freqs - 35.76) < 7] = 0.0
    assert infer_polarization(s, DET).eps_minus_sq == 1.0


def test_infer_recovers_random_polarizations():
    rng = np.random.default_rng(11)
    for phi in rng.uniform(0, TWO_PI, 100):
        pol = epsilon_components(phi)
        s = spectrum(TAU, ramsey_closed_form(TAU, DET, pol), window="hann", pad=4)
        assert infer_polarization(s, DET).eps_minus_sq == pytest.approx(pol.weights[0], abs=0.02)


def test_infer_missing_component():
    t = np.arange(200) * 0.01
    s = spectrum(t, np.zeros(200) + 0.5)
    with pytest.raises(InferenceError, match="delta"):
        infer_polarization(s, DET)
    far = Detuning(mhz(10.0), mhz(80.0))
    s = spectrum(t, ramsey_closed_form(t, far, epsilon_components(0.0)))
    with pytest.raises(InferenceError, match="delta_plus"):
        infer_polarization(s, far)


def test_infer_requires_resolution():
    t = np.arange(20) * 0.005
    s = spectrum(t, ramsey_closed_form(t, DET, epsilon_components(0.0)))
    with pytest.raises(InvalidInputError):
        infer_polarization(s, DET)


# ---- first minimum ----

def test_first_minimum_of_cos_squared():
    om = TWO_PI * 20
    t = np.linspace(0, 0.2, 601)
    fm = first_minimum(t, np.cos(om * t / math.sqrt(2)) ** 2)
    assert fm.t == pytest.approx(math.pi * math.sqrt(2) / (2 * om), rel=1e-4)
    assert fm.value <= 1e-6
    t_m, value = fm
    assert t_m == fm.t and value == fm.value


def test_monotone_trace_has_no_minimum():
    t = np.linspace(0, 1, 50)
    with pytest.raises(DetectionError):
        first_minimum(t, 1 - t)
    with pytest.raises(InvalidInputError):
        first_minimum(t[:4], t[:4])


def test_shallow_ripple_is_ignored():
    t = np.linspace(0, 1, 400)
    x = 1 - 0.8 * np.sin(np.pi * t) ** 2 + 0.01 * np.sin(TWO_PI * 40 * t)
    fm = first_minimum(t, x)
    assert fm.t == pytest.approx(0.5, abs=0.02)


def test_strong_linear_trace_has_several_minima(tls_params):
    d = drive_for_lambda(tls_params, 1.4, 0.0)
    t = np.linspace(0, 3 * math.pi / (1.4 * tls_params.omega_minus), 601)
    tr = rabi_trace(tls_params, d, t, PhaseAverageSpec(100))
    fm = first_minimum(t, tr.p0)
    assert fm.count >= 2
    assert fm.t < 0.75 * math.pi / (1.4 * tls_params.omega_minus)


@given(st.floats(-5, 5), st.floats(0.3, 3.0))
@settings(max_examples=100)
def test_first_minimum_invariances(offset, rate):
    f = lambda t: np.cos(rate * t) ** 2 + 0.3 * np.cos(3.1 * rate * t)
    coarse = np.linspace(0, 10, 201)
    fine = np.linspace(0, 10, 801)
    a = first_minimum(coarse, f(coarse))
    b = first_minimum(coarse, f(coarse) + offset)
    c = first_minimum(fine, f(fine))
    assert b.t == pytest.approx(a.t, abs=1e-9)
    assert abs(c.t - a.t) <= coarse[1] - coarse[0]


def test_dominant_frequency():
    t = np.arange(500) * 0.004
    x = 0.2 * np.cos(TWO_PI * 30 * t) + 0.5 * np.cos(TWO_PI * 12 * t)
    assert dominant_frequency(t, x) == pytest.approx(12.0, abs=0.1)


# ---- sweep curves ----

def test_sweep_curves_circular(tls_params):
    sr = pi_pulse_sweep(tls_params, "circular", [0.5, 1.0, 2.0], PhaseAverageSpec(2))
    fid, rate = sweep_curves(sr)
    assert np.all(fid["fidelity"] >= 0.999)
    np.testing.assert_allclose(rate["omega_eff_MHz"], rate["ideal_MHz"], rtol=1e-3)
    np.testing.assert_array_equal(fid["omega_eff_MHz"], rate["omega_eff_MHz"])


def test_sweep_curves_linear_fidelity_drops(tls_params):
    sr = pi_pulse_sweep(tls_params, "linear", [0.3, 1.0], PhaseAverageSpec(100))
    fid, _ = sweep_curves(sr)
    assert fid["fidelity"][1] < fid["fidelity"][0]


def test_sweep_curves_empty_and_failed():
    fid, rate = sweep_curves(SimpleNamespace(records=[]))
    assert all(v.size == 0 for v in (*fid.values(), *rate.values()))
    bad = SweepRecord(1.0, 1.0, 1.0, math.nan, math.nan, math.nan, 0, ok=False)
    fid, rate = sweep_curves(SimpleNamespace(records=[bad]))
    assert fid["fidelity"].size == 0
