"""Pulse sequences: phase-averaged Rabi traces, phase scans, Ramsey, pi-pulse sweeps.

Every strong-driving experiment averages populations over the global phase
``phi_g``. The ensemble is propagated as one batched trajectory (``phi_g`` is
an array on the drive), so a single pass through the integrator produces all
realizations. Independent cells of a scan (one per ``phi`` or ``lambda``) may be
dispatched to a thread pool; results are always gathered in input order, so
the output does not depend on the number of workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import analysis
from .errors import CalibrationError, DetectionError, InvalidInputError
from .model import (
    IDX_MINUS, IDX_PLUS, IDX_ZERO, POLARIZATION_PHASES, SQRT2, TWO_PI,
    Detuning, DriveConfig, Polarization, SystemParams, detunings,
    drive_for_lambda, epsilon_components, fastest_frequency,
    rotating_frame_hamiltonian, rwa_hamiltonian, tls_hamiltonian,
)
from .propagator import PropagationSettings, propagate

HYPERFINE_A = TWO_PI * 2.16  # rad/us, 14N splitting


@dataclass(frozen=True)
class PhaseAverageSpec:
    """Global-phase ensemble.

    ``sampling="uniform-grid"`` uses ``phi_g = 2*pi*k/n``;
    ``"seeded-uniform-random"`` draws ``n`` phases from a seeded generator.
    """

    n_phases: int = 300
    sampling: str = "uniform-grid"
    seed: int = 0

    def __post_init__(self):
        if int(self.n_phases) != self.n_phases or self.n_phases < 1:
            raise InvalidInputError(f"n_phases must be a positive integer, got {self.n_phases}")
        if self.sampling not in ("uniform-grid", "seeded-uniform-random"):
            raise InvalidInputError(f"unknown sampling {self.sampling!r}")

    def phases(self) -> np.ndarray:
        n = int(self.n_phases)
        if self.sampling == "uniform-grid":
            return TWO_PI * np.arange(n) / n
        return np.random.default_rng(self.seed).uniform(0.0, TWO_PI, n)


@dataclass
class AveragedTrace:
    """Populations averaged over the global phase; ``realizations`` holds P0 per phase."""

    times: np.ndarray
    p0: np.ndarray
    p_minus1: np.ndarray
    p_plus1: np.ndarray
    realizations: np.ndarray | None = None


@dataclass
class PhaseMap:
    """``p0[i, k]`` is the averaged P0 at ``phis[i]``, ``times[k]``."""

    phis: np.ndarray
    times: np.ndarray
    p0: np.ndarray


@dataclass
class AxialMap(PhaseMap):
    dominant_MHz: np.ndarray = field(default_factory=lambda: np.empty(0))


@dataclass(frozen=True)
class RamseySpec:
    """Ramsey scan settings.

    Parameters
    ----------
    tau : array_like
        Uniform free-evolution grid, us.
    hyperfine : {"off", "three-line"}
        ``"three-line"`` averages over nuclear projections ``m_I = -1, 0, 1``
        that shift ``Delta_-`` by ``-A*m_I`` and ``Delta_+`` by ``+A*m_I``.
    A : float
        Hyperfine splitting, rad/us.
    calibration : {"numeric", "analytic"}
        How the pi/2 duration is found, see :func:`pi2_calibrate`.
    """

    tau: np.ndarray
    hyperfine: str = "three-line"
    A: float = HYPERFINE_A
    calibration: str = "numeric"

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        object.__setattr__(self, "tau", tau)
        if tau.ndim != 1 or tau.size < 16:
            raise InvalidInputError("tau grid needs at least 16 points")
        steps = np.diff(tau)
        if np.any(steps <= 0) or np.max(np.abs(steps - steps.mean())) > 1e-6 * steps.mean():
            raise InvalidInputError("tau grid must be uniform and increasing")
        if tau[0] < 0:
            raise InvalidInputError("tau must be non-negative")
        if self.hyperfine not in ("off", "three-line"):
            raise InvalidInputError(f"unknown hyperfine model {self.hyperfine!r}")
        if not self.A >= 0:
            raise InvalidInputError("hyperfine splitting must be non-negative")
        if self.calibration not in ("numeric", "analytic"):
            raise InvalidInputError(f"unknown calibration {self.calibration!r}")

    @property
    def step(self) -> float:
        return float(self.tau[1] - self.tau[0])

    def lines(self):
        """(m_I offsets in rad/us, weights)."""
        if self.hyperfine == "off":
            return np.array([0.0]), np.array([1.0])
        return self.A * np.array([-1.0, 0.0, 1.0]), np.full(3, 1 / 3)


@dataclass
class RamseyResult:
    tau: np.ndarray
    simulated: np.ndarray
    closed_form: np.ndarray
    t_pulse: float
    detuning: Detuning
    polarization: Polarization


@dataclass
class SweepRecord:
    """One lambda of a pi-pulse sweep; frequencies in MHz, times in us."""

    lam: float
    omega_w: float
    omega_rabi: float
    t_m: float
    fidelity: float
    omega_eff: float
    n_minima: int
    ok: bool = True
    message: str = ""


@dataclass
class SweepResult:
    phi: float
    omega_z_ratio: float
    records: list

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)


def _map_ordered(fn, items, workers):
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _check_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise InvalidInputError("time grid needs at least two points")
    if t[0] != 0:
        raise InvalidInputError("time grid must start at 0")
    if np.any(np.diff(t) <= 0):
        raise InvalidInputError("time grid must be strictly increasing")
    return t


def rabi_trace(p: SystemParams, d: DriveConfig, t_grid, avg: PhaseAverageSpec | None = None,
               model="tls", settings: PropagationSettings | None = None,
               return_realizations=False) -> AveragedTrace:
    """Phase-averaged populations of a resonant drive starting from ``|0>``.

    Parameters
    ----------
    p, d : SystemParams, DriveConfig
        ``d.carrier`` must equal ``p.omega_minus``. The ensemble phases are
        added to ``d.phi_g``.
    t_grid : array_like
        Sample times in us, starting at 0.
    avg : PhaseAverageSpec, optional
        Defaults to 300 uniformly spaced phases.
    model : {"tls", "three-level"}
        Two-level strong-driving Hamiltonian or the full rotating-frame
        spin-1 Hamiltonian.
    """
    avg = avg or PhaseAverageSpec()
    t = _check_grid(t_grid)
    batch = d.replace(phi_g=d.phi_g + avg.phases())
    if model == "tls":
        if abs(d.carrier - p.omega_minus) > 1e-9 * p.omega_minus:
            raise InvalidInputError("rabi_trace requires carrier == omega_minus")
        traj = propagate(lambda s: tls_hamiltonian(s, p, batch), np.array([1, 0]), t,
                         settings, omega_max=fastest_frequency(p, d, "tls"))
        pops = traj.populations  # (n_t, n_phases, 2)
        real0 = pops[..., 0]
        pm, pp = pops[..., 1].mean(axis=1), np.zeros(t.size)
    elif model == "three-level":
        traj = propagate(lambda s: rotating_frame_hamiltonian(s, p, batch), np.array([0, 1, 0]), t,
                         settings, omega_max=fastest_frequency(p, d, "rotating"))
        pops = traj.populations
        real0 = pops[..., IDX_ZERO]
        pm = pops[..., IDX_MINUS].mean(axis=1)
        pp = pops[..., IDX_PLUS].mean(axis=1)
    else:
        raise InvalidInputError(f"unknown model {model!r}")
    return AveragedTrace(times=t, p0=real0.mean(axis=1), p_minus1=pm, p_plus1=pp,
                         realizations=real0.T.copy() if return_realizations else None)


def phase_scan(p: SystemParams, d_base: DriveConfig, phi_grid, t_grid,
               avg: PhaseAverageSpec | None = None, settings=None, workers=None) -> PhaseMap:
    """Averaged P0 for each relative phase in ``phi_grid`` (one row per phase)."""
    phis = np.asarray(phi_grid, dtype=float)
    if phis.ndim != 1 or phis.size == 0:
        raise InvalidInputError("phi grid must be a non-empty 1-D sequence")
    t = _check_grid(t_grid)

    def row(phi):
        return rabi_trace(p, d_base.replace(phi=phi), t, avg, settings=settings).p0

    return PhaseMap(phis=phis, times=t, p0=np.array(_map_ordered(row, phis, workers)))


def axial_scenario(p: SystemParams, d: DriveConfig, phi_grid, t_grid,
                   avg: PhaseAverageSpec | None = None, settings=None, workers=None) -> AxialMap:
    """Phase scan with the axial component of ``d`` switched on.

    Each row also carries its dominant oscillation frequency in MHz.
    """
    m = phase_scan(p, d, phi_grid, t_grid, avg, settings, workers)
    dom = np.array([analysis.dominant_frequency(m.times, row) for row in m.p0])
    return AxialMap(phis=m.phis, times=m.times, p0=m.p0, dominant_MHz=dom)


def _rwa_p0(p, d, det_shift=0.0):
    h = rwa_hamiltonian(p, d)
    h[IDX_MINUS, IDX_MINUS] -= det_shift
    h[IDX_PLUS, IDX_PLUS] += det_shift
    w, v = np.linalg.eigh(h)
    c = np.conj(v[IDX_ZERO]) * v[IDX_ZERO]  # |<k|0>|^2 weights along eigvecs

    def p0(t):
        amp = np.exp(-1j * np.multiply.outer(np.asarray(t, dtype=float), w)) @ c
        return np.abs(amp) ** 2

    return p0


def pi2_calibrate(p: SystemParams, d: DriveConfig, mode="numeric") -> float:
    """Duration of a pi/2 pulse for drive ``d`` in the rotating-wave model.

    ``mode="numeric"`` returns the earliest time at which P0 crosses 1/2 when
    starting in ``|0>``, searched over ten nominal periods ``pi*sqrt2/omega_w``.
    ``mode="analytic"`` returns the resonant hard-pulse value
    ``pi*sqrt2/(4*omega_w)``, where ``cos^2(omega_w*t/sqrt2) = 1/2``.

    Raises
    ------
    CalibrationError
        No crossing in the search range (e.g. zero drive).
    """
    if mode == "analytic":
        if d.omega_w <= 0:
            raise CalibrationError("zero drive has no pi/2 pulse")
        return math.pi * SQRT2 / (4 * d.omega_w)
    if mode != "numeric":
        raise InvalidInputError(f"unknown calibration mode {mode!r}")
    if d.omega_w <= 0:
        raise CalibrationError("zero drive never crosses P0 = 1/2")
    period = math.pi * SQRT2 / d.omega_w
    p0 = _rwa_p0(p, d)
    t = np.linspace(0.0, 10 * period, 2001)
    f = p0(t) - 0.5
    idx = np.flatnonzero(f <= 0)
    if idx.size == 0:
        raise CalibrationError("P0 does not cross 1/2 within ten nominal periods")
    k = int(idx[0])
    if f[k] == 0:
        return float(t[k])
    return float(brentq(lambda s: float(p0(s)) - 0.5, t[k - 1], t[k], xtol=1e-14, rtol=1e-14))


def ramsey_closed_form(tau, det: Detuning, pol: Polarization) -> np.ndarray:
    """Broadband Ramsey signal of ideal hard pi/2 pulses.

    ``P0 = 1/2 [1 - p sin(D- tau) - q sin(D+ tau) - p q (cos((D+ - D-) tau) - 1)]``
    with ``p = |eps_minus|^2`` and ``q = |eps_plus|^2``.
    """
    tau = np.asarray(tau, dtype=float)
    pw, qw = pol.weights
    dm, dp = det.delta_minus, det.delta_plus
    return 0.5 * (1 - pw * np.sin(dm * tau) - qw * np.sin(dp * tau)
                  - pw * qw * (np.cos((dp - dm) * tau) - 1))


def check_ramsey_sampling(p: SystemParams, d: DriveConfig, spec: RamseySpec):
    """Raise InvalidInputError unless the tau step resolves every Ramsey line."""
    det = detunings(p, d)
    offsets, _ = spec.lines()
    f_max = max(abs(det.delta_minus), abs(det.delta_plus),
                abs(det.delta_plus - det.delta_minus)) + 2 * float(np.max(np.abs(offsets)))
    nyquist = math.pi / spec.step  # rad/us
    if not f_max < nyquist:
        raise InvalidInputError(
            f"tau step {spec.step:g} us undersamples the {f_max / TWO_PI:.4g} MHz line "
            f"(Nyquist {nyquist / TWO_PI:.4g} MHz)")


def ramsey_scan(p: SystemParams, d: DriveConfig, spec: RamseySpec) -> RamseyResult:
    """Pulse, free evolution, identical pulse; P0 versus the delay.

    Simulated with rectangular rotating-wave pulses and exact exponentials in
    the spin-1 space. The pulse length is calibrated once on the nominal
    detunings; hyperfine lines shift the detunings of both pulses and of the
    free evolution. The closed form is averaged over the same lines.
    """
    check_ramsey_sampling(p, d, spec)
    det = detunings(p, d)
    offsets, weights = spec.lines()
    t_pulse = pi2_calibrate(p, d, mode=spec.calibration)
    pol = epsilon_components(d.phi, d.phi_g)
    psi0 = np.array([0, 1, 0], dtype=complex)
    sim = np.zeros(spec.tau.size)
    closed = np.zeros(spec.tau.size)
    for a, w in zip(offsets, weights):
        h = rwa_hamiltonian(p, d)
        h[IDX_MINUS, IDX_MINUS] -= a
        h[IDX_PLUS, IDX_PLUS] += a
        ev, vec = np.linalg.eigh(h)
        u = (vec * np.exp(-1j * ev * t_pulse)) @ np.conj(vec.T)
        psi1 = u @ psi0
        free = np.exp(-1j * np.outer(spec.tau, np.real(np.diag(h))))  # drive off
        psi2 = (free * psi1) @ u.T
        sim += w * np.abs(psi2[:, IDX_ZERO]) ** 2
        shifted = Detuning(det.delta_minus - a, det.delta_plus + a)
        closed += w * ramsey_closed_form(spec.tau, shifted, pol)
    return RamseyResult(tau=spec.tau, simulated=sim, closed_form=closed, t_pulse=t_pulse,
                        detuning=det, polarization=pol)


def _resolve_phi(polarization):
    if isinstance(polarization, str):
        try:
            return POLARIZATION_PHASES[polarization]
        except KeyError:
            raise InvalidInputError(
                f"unknown polarization {polarization!r}; expected one of "
                f"{sorted(POLARIZATION_PHASES)} or a phase in radians") from None
    return float(polarization)


def pi_pulse_sweep(p: SystemParams, polarization, lambdas, avg: PhaseAverageSpec | None = None,
                   omega_z_ratio=0.0, window=3.0, n_points=601,
                   prominence=analysis.DEFAULT_PROMINENCE, reference="drive",
                   settings=None, workers=None) -> SweepResult:
    """First-minimum time, fidelity and effective Rabi frequency versus ``lambda``.

    For each ``lambda`` the resonant drive of :func:`drive_for_lambda` is
    averaged over the global phase on ``n_points`` samples spanning
    ``window`` nominal pi times ``pi/(lambda*omega_minus)``. Fidelity is
    ``1 - P0(t_m)`` of the averaged trace and ``omega_eff = 1/(2 t_m)`` in MHz.
    A trace without a qualifying minimum yields a record with ``ok=False``
    and NaN results instead of stopping the sweep.

    Parameters
    ----------
    polarization : str or float
        ``"circular"``, ``"sigma-plus"``, ``"linear"`` or a relative phase.
    omega_z_ratio : float
        Axial amplitude as a fraction of the per-wire amplitude.
    reference : {"drive", "circular"}
        Meaning of ``lambda``, see :func:`drive_for_lambda`.
    """
    phi = _resolve_phi(polarization)
    lams = np.asarray(lambdas, dtype=float).ravel()
    if np.any(lams <= 0):
        raise InvalidInputError("lambda values must be positive")
    if window <= 0 or n_points < 5:
        raise InvalidInputError("window must be positive and n_points >= 5")

    def cell(lam):
        d = drive_for_lambda(p, lam, phi, omega_z_ratio=omega_z_ratio, reference=reference)
        omega_rabi = lam * p.omega_minus
        t = np.linspace(0.0, window * math.pi / omega_rabi, int(n_points))
        base = dict(lam=float(lam), omega_w=d.omega_w / TWO_PI, omega_rabi=omega_rabi / TWO_PI)
        trace = rabi_trace(p, d, t, avg, settings=settings)
        try:
            fm = analysis.first_minimum(t, trace.p0, prominence)
        except DetectionError as exc:
            return SweepRecord(**base, t_m=math.nan, fidelity=math.nan, omega_eff=math.nan,
                               n_minima=0, ok=False, message=str(exc))
        fid = float(np.clip(1.0 - fm.value, 0.0, 1.0))
        return SweepRecord(**base, t_m=fm.t, fidelity=fid, omega_eff=1.0 / (2.0 * fm.t),
                           n_minima=fm.count)

    return SweepResult(phi=phi, omega_z_ratio=float(omega_z_ratio),
                       records=_map_ordered(cell, lams, workers))
