"""Unitary time evolution for small time-dependent Hamiltonians.

Every substep is an exact matrix exponential of a Hermitian matrix, so the
propagation is unitary to rounding error whatever the step size. Two
exponential integrators are available:

``"midpoint"``
    Second-order Magnus, ``U = exp(-i H(t + dt/2) dt)``.
``"cf4"``
    Fourth-order commutator-free Magnus with two Gauss-Legendre nodes,
    ``U = exp(-i dt (a1 H1 + a2 H2)) exp(-i dt (a2 H1 + a1 H2))``.

Hamiltonian callables may return a stack of matrices ``(..., d, d)``; the
leading axes are propagated independently (one state per matrix).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, InvalidInputError

MIN_STEP = 1e-9  # us

_C1 = 0.5 - math.sqrt(3) / 6
_C2 = 0.5 + math.sqrt(3) / 6
_A1 = (3 - 2 * math.sqrt(3)) / 12
_A2 = (3 + 2 * math.sqrt(3)) / 12

METHODS = ("midpoint", "cf4")


@dataclass(frozen=True)
class PropagationSettings:
    """Step-size rule: ``dt = min(dt_max, 2*pi/omega_max / substeps_per_period)``."""

    dt_max: float = 1e-3
    substeps_per_period: int = 100
    method: str = "cf4"

    def __post_init__(self):
        if not self.dt_max > 0:
            raise ConfigurationError(f"dt_max must be positive, got {self.dt_max}")
        if int(self.substeps_per_period) != self.substeps_per_period or self.substeps_per_period < 50:
            raise ConfigurationError(
                f"substeps_per_period must be an integer >= 50, got {self.substeps_per_period}")
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}; expected one of {METHODS}")

    def step(self, omega_max=None) -> float:
        dt = self.dt_max
        if omega_max:
            dt = min(dt, 2 * math.pi / omega_max / self.substeps_per_period)
        if dt < MIN_STEP:
            raise ConfigurationError(
                f"required step {dt:.3e} us is below the {MIN_STEP:g} us floor")
        return dt


@dataclass
class Trajectory:
    """States sampled on a time grid.

    ``states`` has shape ``(n_times, *batch, dim)``.
    """

    times: np.ndarray
    states: np.ndarray

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.states) ** 2

    @property
    def dim(self) -> int:
        return self.states.shape[-1]


def _is_hermitian(h, rtol=1e-12):
    scale = max(1.0, float(np.max(np.abs(h))))
    return float(np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2))))) <= rtol * scale


def _expm2(h, dt):
    # exp(-i h dt) for a stack of 2x2 Hermitian h, via h = a0*I + a.sigma
    h00 = h[..., 0, 0].real
    h11 = h[..., 1, 1].real
    h01 = h[..., 0, 1]
    a0 = 0.5 * (h00 + h11)
    az = 0.5 * (h00 - h11)
    n = np.sqrt(az * az + h01.real ** 2 + h01.imag ** 2)
    c = np.cos(n * dt)
    s = dt * np.sinc(n * dt / math.pi)  # sin(n dt)/n, finite at n = 0
    ph = np.exp(-1j * a0 * dt)
    u = np.empty(h.shape, dtype=complex)
    u[..., 0, 0] = ph * (c - 1j * s * az)
    u[..., 1, 1] = ph * (c + 1j * s * az)
    u[..., 0, 1] = ph * (-1j * s * h01)
    u[..., 1, 0] = ph * (-1j * s * np.conj(h01))
    return u


def _expmh(h, dt):
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def _expm(h, dt):
    return _expm2(h, dt) if h.shape[-1] == 2 else _expmh(h, dt)


def step_unitary(h, dt) -> np.ndarray:
    """Exact ``exp(-i h dt)`` for a Hermitian matrix (or a stack of them).

    Uses the closed Pauli-vector formula for 2x2 and a Hermitian
    eigendecomposition otherwise.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise InvalidInputError(f"expected square matrices, got shape {h.shape}")
    if not _is_hermitian(h):
        raise InvalidInputError("Hamiltonian is not Hermitian")
    return _expm(h, float(dt))


def _apply(u, psi):
    return (u @ psi[..., None])[..., 0]


def _advance(h_fn, psi, t, dt, method):
    if method == "midpoint":
        return _apply(_expm(h_fn(t + 0.5 * dt), dt), psi)
    h1 = h_fn(t + _C1 * dt)
    h2 = h_fn(t + _C2 * dt)
    psi = _apply(_expm(_A2 * h1 + _A1 * h2, dt), psi)
    return _apply(_expm(_A1 * h1 + _A2 * h2, dt), psi)


def propagate(h_fn: Callable[[float], np.ndarray], psi0, t_grid,
              settings: PropagationSettings | None = None, omega_max=None) -> Trajectory:
    """Propagate ``psi0`` under ``h_fn`` and sample the state on ``t_grid``.

    Parameters
    ----------
    h_fn : callable
        ``t -> H(t)``, Hermitian, shape ``(..., d, d)``, rad/us.
    psi0 : array_like
        Normalized initial state at ``t_grid[0]``, shape ``(d,)`` or
        broadcastable to the batch shape of ``h_fn``.
    t_grid : array_like
        Strictly increasing sample times in us.
    settings : PropagationSettings, optional
    omega_max : float, optional
        Fastest angular frequency in the problem; sets the substep through
        ``settings.substeps_per_period``. Without it only ``dt_max`` applies.

    Returns
    -------
    Trajectory
    """
    settings = settings or PropagationSettings()
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1:
        raise InvalidInputError("t_grid must be a non-empty 1-D sequence")
    if t_grid.size > 1 and np.any(np.diff(t_grid) <= 0):
        raise InvalidInputError("t_grid must be strictly increasing")
    psi0 = np.asarray(psi0, dtype=complex)
    norm = np.linalg.norm(psi0, axis=-1)
    if np.any(np.abs(norm - 1) > 1e-10):
        raise InvalidInputError("psi0 must be normalized")
    h_step = settings.step(omega_max)

    batch = np.shape(h_fn(t_grid[0]))[:-2]
    psi = np.broadcast_to(psi0, batch + psi0.shape[-1:]).copy()
    states = np.empty((t_grid.size,) + psi.shape, dtype=complex)
    states[0] = psi
    for k in range(1, t_grid.size):
        t0, t1 = t_grid[k - 1], t_grid[k]
        n = max(1, math.ceil((t1 - t0) / h_step - 1e-9))
        dt = (t1 - t0) / n
        for j in range(n):
            psi = _advance(h_fn, psi, t0 + j * dt, dt, settings.method)
        states[k] = psi
    return Trajectory(times=t_grid, states=states)
