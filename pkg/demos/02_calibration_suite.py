"""Simulated tune-up: spectroscopy, power Rabi, pulse width and ramp length.

Each experiment mirrors what the instrument would run: drive a sideband
probe, read out the joint photon+transmon parity, fit the response.  The
recovered numbers land back in the calibration table.
"""

import numpy as np

from fluxjc.calibration import CalibrationTable, transition
from fluxjc.hilbert import DressedLabel, SpaceDims, SystemModel
from fluxjc.protocols import (calibrate_power_rabi, calibrate_ramp,
                              calibrate_sigma, calibrate_spectroscopy)

model = SystemModel()
table = CalibrationTable.device_default()
dims = SpaceDims(7)

print("== sideband spectroscopy from |3-> ==")
freqs = np.linspace(6.82, 6.93, 111)
res = calibrate_spectroscopy(DressedLabel(3, -1), freqs, model, table, dims,
                             probe_duration_ns=1500.0, dt_ns=2.0)
print(f"peaks found: {['%.4f' % p for p in res.peaks_ghz]} GHz")
if res.ambiguous_pairs:
    for a, b in res.ambiguous_pairs:
        print(f"  unresolved pair: {a:.4f} / {b:.4f} GHz "
              f"(linewidth {1e3 * res.linewidth_ghz:.2f} MHz)")
else:
    print("  all peaks resolved at this probe length")

print("\n== power Rabi on 0:1+ ==")
pr = calibrate_power_rabi(transition("0", "1+"), model, table, dims)
print(f"pi amplitude {pr.pi_amplitude_mhz:.3f} MHz, "
      f"Rabi rate {pr.rabi_rate_mhz:.2f} MHz (device row: 29.0), "
      f"R^2 = {pr.r_squared:.5f}")

print("\n== pulse-width scan on 0:1+ ==")
sg = calibrate_sigma(
    transition("0", "1+"), model, table, SpaceDims(5),
    sigmas_ns=np.array([8.0, 20.0, 44.0, 68.0, 100.0]), dt_ns=2.0)
for s, p in zip(sg.sigmas_ns, sg.parity_return):
    print(f"  sigma = {s:5.1f} ns   parity return {p:+.4f}")
print(f"optimum sigma = {sg.sigma_opt_ns:.0f} ns"
      + ("  (at scan boundary!)" if sg.at_boundary else ""))

print("\n== adiabatic ramp length ==")
rp = calibrate_ramp(model, SpaceDims(4), dt_ns=2.0)
print(f"minimal duration {rp.minimal_duration_ns:.0f} ns "
      f"(plateau population {rp.plateau:.4f})")
