"""Polarized microwave control of a single NV spin beyond the rotating-wave approximation."""
__version__ = "0.1.0"

from .errors import (
    CalibrationError, ConfigurationError, DetectionError, InferenceError,
    InvalidInputError, NVPolarError,
)
from .model import (
    D_ZERO_FIELD, GAMMA_NV, POLARIZATION_PHASES, SX, SY, SZ, TWO_PI,
    Detuning, DriveConfig, Polarization, SystemParams, detunings, drive_for_lambda,
    epsilon_components, fastest_frequency, lab_hamiltonian, mhz,
    rotating_frame_hamiltonian, rwa_hamiltonian, rwa_rabi_frequency,
    tls_hamiltonian, to_mhz,
)
from .propagator import PropagationSettings, Trajectory, propagate, step_unitary
from .experiments import (
    AveragedTrace, AxialMap, PhaseAverageSpec, PhaseMap, RamseyResult, RamseySpec,
    SweepRecord, SweepResult, axial_scenario, phase_scan, pi2_calibrate,
    pi_pulse_sweep, rabi_trace, ramsey_closed_form, ramsey_scan,
)
from .analysis import (
    FirstMinimum, PolarizationEstimate, Spectrum, dominant_frequency,
    first_minimum, infer_polarization, spectrum, sweep_curves,
)
