"""Domain types and Hamiltonian builders for a single NV spin under polarized MW drive.

Units
-----
Internally every frequency is an angular frequency in rad/us and every time
is in microseconds, so ``omega * t`` is a phase in radians. Ordinary
frequencies in MHz and fields in gauss are converted once, with
:func:`mhz` / :func:`to_mhz`, at the configuration boundary.

Basis conventions
-----------------
Three-level matrices use the basis order ``(|-1>, |0>, |+1>)``; the
``|0> <-> |-1>`` transition is the one at ``omega_minus = D - gamma*B_ext``.
Two-level matrices use ``(|0>, |-1>)``.

Phase conventions
-----------------
The two orthogonal wire fields are ``Omega*cos(w*t - phi_g)`` along x and
``Omega*cos(w*t - phi_g - phi)`` along y; an axial component
``Omega_z*cos(w*t - phi_g)`` shares the phase of the x wire. With this
convention the exact transformation into the frame rotating at the carrier
gives co-rotating couplings ``(Omega/sqrt2)*eps_minus`` on the
``|-1>,|0>`` block and ``(Omega/sqrt2)*eps_plus`` on the ``|0>,|+1>``
block, with::

    eps_minus = exp(+i*phi_g) * (1 - i*exp(+i*phi)) / 2
    eps_plus  = exp(-i*phi_g) * (1 - i*exp(-i*phi)) / 2

so ``phi = pi/2`` is circular polarization that only drives ``|0> <-> |-1>``
and ``phi = 3*pi/2`` only drives ``|0> <-> |+1>``.

Every builder accepts a :class:`DriveConfig` whose ``phi_g`` may be a numpy
array; the returned matrices then carry the ensemble as leading axes, which
is how the experiments module averages over the global phase in one pass.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

TWO_PI = 2.0 * math.pi
SQRT2 = math.sqrt(2.0)

D_ZERO_FIELD = TWO_PI * 2870.0  # rad/us
GAMMA_NV = TWO_PI * 2.8  # rad/us per gauss

# spin-1 operators in the (|-1>, |0>, |+1>) storage order
SX = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / SQRT2
SY = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / SQRT2
SZ = np.diag([-1.0, 0.0, 1.0]).astype(complex)

IDX_MINUS, IDX_ZERO, IDX_PLUS = 0, 1, 2

POLARIZATION_PHASES = {
    "circular": math.pi / 2,  # sigma-minus, drives |0> <-> |-1>
    "sigma-minus": math.pi / 2,
    "sigma-plus": 3 * math.pi / 2,
    "linear": 0.0,
}


def mhz(f):
    """Ordinary frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * np.asarray(f, dtype=float) if np.ndim(f) else TWO_PI * float(f)


def to_mhz(w):
    """Angular frequency in rad/us -> ordinary frequency in MHz."""
    return np.asarray(w, dtype=float) / TWO_PI if np.ndim(w) else float(w) / TWO_PI


def _wrap(angle):
    out = np.mod(angle, TWO_PI)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SystemParams:
    """Static NV parameters.

    Parameters
    ----------
    D : float
        Zero-field splitting, rad/us.
    gamma : float
        Gyromagnetic ratio, rad/us per gauss.
    B_ext : float
        Axial bias field, gauss.
    """

    D: float = D_ZERO_FIELD
    gamma: float = GAMMA_NV
    B_ext: float = 0.0

    def __post_init__(self):
        if not self.D > 0:
            raise InvalidInputError(f"D must be positive, got {self.D}")
        if not self.gamma > 0:
            raise InvalidInputError(f"gamma must be positive, got {self.gamma}")
        if not self.B_ext >= 0:
            raise InvalidInputError(f"B_ext must be non-negative, got {self.B_ext}")

    @property
    def omega_minus(self) -> float:
        """Angular frequency of the |0> <-> |-1> transition."""
        return self.D - self.gamma * self.B_ext

    @property
    def omega_plus(self) -> float:
        """Angular frequency of the |0> <-> |+1> transition."""
        return self.D + self.gamma * self.B_ext

    @classmethod
    def from_mhz(cls, D_MHz=2870.0, gamma_MHz_per_G=2.8, B_ext_G=0.0) -> "SystemParams":
        return cls(D=mhz(D_MHz), gamma=mhz(gamma_MHz_per_G), B_ext=float(B_ext_G))

    @classmethod
    def from_transitions(cls, omega_minus_MHz, omega_plus_MHz, gamma_MHz_per_G=2.8) -> "SystemParams":
        """Derive D and B_ext from the two quoted transition frequencies."""
        if omega_plus_MHz < omega_minus_MHz:
            raise InvalidInputError("omega_plus must not be below omega_minus")
        D_MHz = 0.5 * (omega_plus_MHz + omega_minus_MHz)
        B = 0.5 * (omega_plus_MHz - omega_minus_MHz) / gamma_MHz_per_G
        return cls.from_mhz(D_MHz, gamma_MHz_per_G, B)


@dataclass(frozen=True)
class DriveConfig:
    """Microwave drive.

    ``omega_w`` is the per-wire amplitude (gamma times the field of one wire)
    in rad/us, ``carrier`` the MW angular frequency, ``phi`` the relative
    phase of the y wire, ``phi_g`` the global phase shared by all field
    components, and ``omega_z`` the axial amplitude. Angles are stored
    reduced to [0, 2*pi); ``phi_g`` may be an array (see module docstring).
    """

    omega_w: float
    carrier: float
    phi: float = 0.0
    phi_g: float | np.ndarray = 0.0
    omega_z: float = 0.0

    def __post_init__(self):
        if not self.omega_w >= 0:
            raise InvalidInputError(f"omega_w must be non-negative, got {self.omega_w}")
        if not self.omega_z >= 0:
            raise InvalidInputError(f"omega_z must be non-negative, got {self.omega_z}")
        if not self.carrier > 0:
            raise InvalidInputError(f"carrier must be positive, got {self.carrier}")
        object.__setattr__(self, "phi", _wrap(self.phi))
        object.__setattr__(self, "phi_g", _wrap(self.phi_g))

    def replace(self, **changes) -> "DriveConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Polarization:
    """Co-/counter-rotating decomposition of the transverse drive."""

    eps_minus: complex | np.ndarray
    eps_plus: complex | np.ndarray

    @property
    def weights(self):
        """(|eps_minus|^2, |eps_plus|^2)."""
        return np.abs(self.eps_minus) ** 2, np.abs(self.eps_plus) ** 2


@dataclass(frozen=True)
class Detuning:
    """Carrier detunings from the two transitions, rad/us."""

    delta_minus: float
    delta_plus: float


def epsilon_components(phi, phi_g=0.0) -> Polarization:
    """Polarization amplitudes for relative phase ``phi`` and global phase ``phi_g``.

    Broadcasts over array arguments.
    """
    phi = np.mod(phi, TWO_PI)
    phi_g = np.mod(phi_g, TWO_PI)
    eps_minus = np.exp(1j * phi_g) * (1 - 1j * np.exp(1j * phi)) / 2
    eps_plus = np.exp(-1j * phi_g) * (1 - 1j * np.exp(-1j * phi)) / 2
    if np.ndim(eps_minus) == 0:
        eps_minus, eps_plus = complex(eps_minus), complex(eps_plus)
    return Polarization(eps_minus, eps_plus)


def detunings(p: SystemParams, d: DriveConfig) -> Detuning:
    return Detuning(p.omega_minus - d.carrier, p.omega_plus - d.carrier)


def rwa_rabi_frequency(omega_w, phi) -> float:
    """Population-oscillation angular frequency of |0> <-> |-1> under the RWA.

    The co-rotating coupling is ``omega_w/sqrt2 * |eps_minus|`` so P0
    oscillates at twice that. For circular drive this is ``sqrt2*omega_w``.
    """
    return SQRT2 * omega_w * abs(epsilon_components(phi).eps_minus)


def drive_for_lambda(p: SystemParams, lam, phi, *, phi_g=0.0, omega_z_ratio=0.0,
                     reference="drive") -> DriveConfig:
    """Resonant drive whose strength is ``lam`` in units of ``omega_minus``.

    ``reference="drive"`` sets the RWA Rabi frequency of *this* polarization
    to ``lam*omega_minus`` (:func:`rwa_rabi_frequency`). ``reference="circular"``
    sets the per-wire amplitude that would give that Rabi frequency under
    circular drive, ``omega_w = lam*omega_minus/sqrt2``, regardless of
    ``phi``; use it when ``phi`` is scanned at fixed wire amplitude.
    ``omega_z_ratio`` is the axial amplitude relative to ``omega_w``.
    """
    if lam < 0:
        raise InvalidInputError(f"lambda must be non-negative, got {lam}")
    if reference == "circular":
        omega_w = lam * p.omega_minus / SQRT2
    elif reference == "drive":
        weight = abs(epsilon_components(phi).eps_minus)
        if weight < 1e-12:
            raise InvalidInputError(
                "polarization has no co-rotating component; use reference='circular'")
        omega_w = lam * p.omega_minus / (SQRT2 * weight)
    else:
        raise InvalidInputError(f"unknown lambda reference {reference!r}")
    return DriveConfig(omega_w=omega_w, carrier=p.omega_minus, phi=phi, phi_g=phi_g,
                       omega_z=omega_z_ratio * omega_w)


def _empty(shape, dim):
    return np.zeros(tuple(shape) + (dim, dim), dtype=complex)


def lab_hamiltonian(t, p: SystemParams, d: DriveConfig) -> np.ndarray:
    """Lab-frame spin-1 Hamiltonian (rad/us), basis (|-1>, |0>, |+1>)."""
    phi_g = np.asarray(d.phi_g)
    theta = d.carrier * t - phi_g
    h = _empty(phi_g.shape, 3)
    h[..., IDX_MINUS, IDX_MINUS] = p.omega_minus
    h[..., IDX_PLUS, IDX_PLUS] = p.omega_plus
    cx = (d.omega_w * np.cos(theta))[..., None, None]
    cy = (d.omega_w * np.cos(theta - d.phi))[..., None, None]
    cz = (d.omega_z * np.cos(theta))[..., None, None]
    return h + cx * SX + cy * SY + cz * SZ


def rotating_frame_hamiltonian(t, p: SystemParams, d: DriveConfig,
                               counter_rotating=True, axial=True) -> np.ndarray:
    """Hamiltonian in the frame rotating at the carrier, basis (|-1>, |0>, |+1>).

    Obtained from :func:`lab_hamiltonian` by ``psi_rot = V psi_lab`` with
    ``V = diag(exp(i w t), 1, exp(i w t))``. The frame is diagonal, so
    populations agree with the lab frame at all times.
    """
    pol = epsilon_components(d.phi, d.phi_g)
    det = detunings(p, d)
    g = d.omega_w / SQRT2
    shape = np.shape(pol.eps_minus)
    h = _empty(shape, 3)
    h[..., IDX_MINUS, IDX_MINUS] = det.delta_minus
    h[..., IDX_PLUS, IDX_PLUS] = det.delta_plus
    lower = g * pol.eps_minus  # <-1|H|0>
    upper = g * pol.eps_plus  # <0|H|+1>
    if counter_rotating:
        rot = np.exp(2j * d.carrier * t)
        lower = lower + g * pol.eps_plus * rot
        upper = upper + g * pol.eps_minus * np.conj(rot)
    h[..., IDX_MINUS, IDX_ZERO] = lower
    h[..., IDX_ZERO, IDX_MINUS] = np.conj(lower)
    h[..., IDX_ZERO, IDX_PLUS] = upper
    h[..., IDX_PLUS, IDX_ZERO] = np.conj(upper)
    if axial and d.omega_z:
        cz = d.omega_z * np.cos(d.carrier * t - np.asarray(d.phi_g))
        h[..., IDX_MINUS, IDX_MINUS] -= cz
        h[..., IDX_PLUS, IDX_PLUS] += cz
    return h


def rwa_hamiltonian(p: SystemParams, d: DriveConfig) -> np.ndarray:
    """Time-independent rotating-wave Hamiltonian, basis (|-1>, |0>, |+1>).

    Valid for ``omega_w << carrier``; this is not checked.
    """
    return rotating_frame_hamiltonian(0.0, p, d, counter_rotating=False, axial=False)


def _require_resonant(p: SystemParams, d: DriveConfig):
    if abs(d.carrier - p.omega_minus) > 1e-9 * max(1.0, p.omega_minus):
        raise InvalidInputError(
            "two-level model requires carrier == omega_minus "
            f"(carrier={d.carrier!r}, omega_minus={p.omega_minus!r})")


def tls_hamiltonian(t, p: SystemParams, d: DriveConfig) -> np.ndarray:
    """Two-level strong-driving Hamiltonian in the basis (|0>, |-1>).

    ``<-1|H|0> = (Omega/sqrt2)(eps_minus + eps_plus*exp(2i*wL*t))`` with the
    axial term restricted to the subspace, ``-Omega_z*cos(wL*t - phi_g)`` on
    the ``|-1>`` diagonal. The carrier must equal ``omega_minus``.
    """
    _require_resonant(p, d)
    pol = epsilon_components(d.phi, d.phi_g)
    w = p.omega_minus
    g = d.omega_w / SQRT2
    h = _empty(np.shape(pol.eps_minus), 2)
    lower = g * (pol.eps_minus + pol.eps_plus * np.exp(2j * w * t))
    h[..., 1, 0] = lower
    h[..., 0, 1] = np.conj(lower)
    if d.omega_z:
        h[..., 1, 1] = -d.omega_z * np.cos(w * t - np.asarray(d.phi_g))
    return h


def fastest_frequency(p: SystemParams, d: DriveConfig, model="tls") -> float:
    """Largest angular frequency the integrator has to resolve for ``model``.

    ``model`` is one of ``"tls"``, ``"rotating"``, ``"lab"``.
    """
    rates = [d.carrier, d.omega_w, d.omega_z]
    if model == "tls":
        rates += [2 * p.omega_minus]
    elif model == "rotating":
        det = detunings(p, d)
        rates += [2 * d.carrier, abs(det.delta_minus), abs(det.delta_plus),
                  abs(det.delta_plus) + 2 * d.carrier]
    elif model == "lab":
        rates += [2 * d.carrier, p.omega_plus, p.omega_minus]
    else:
        raise InvalidInputError(f"unknown model {model!r}")
    return float(max(rates))
