"""A large axial microwave component.

With Omega_z = 1.67 Omega_x the longitudinal modulation competes with the
transverse drive. The phase scan loses the clean polarization contrast and
the cancellation phase is driven too, through a mixture of frequencies.
"""
import math

import numpy as np

from nvpolar import DriveConfig, PhaseAverageSpec, SystemParams, axial_scenario

p = SystemParams.from_transitions(37.8, 5702.2)
w = 1.408 * p.omega_minus
phis = np.deg2rad([90, 135, 180, 225, 270])  # 90 deg is sigma-, 270 deg the cancellation phase
t = np.linspace(0, 0.4, 1601)
omega_r = math.sqrt(2) * w / (2 * math.pi)

for ratio in (0.0, 1.67):
    d = DriveConfig(omega_w=w, carrier=p.omega_minus, omega_z=ratio * w)
    m = axial_scenario(p, d, phis, t, PhaseAverageSpec(100))
    print(f"Omega_z/Omega_x = {ratio}")
    for phi, row, f in zip(np.rad2deg(phis), m.p0, m.dominant_MHz):
        print(f"  phi = {phi:5.0f} deg   min P0 = {row.min():.3f}   "
              f"dominant = {f:6.2f} MHz ({f / omega_r:.2f} Omega_R)")
    print()
