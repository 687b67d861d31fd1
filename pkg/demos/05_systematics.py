"""Two systematics of the scan width: residual neighbours and axis tilt."""

import warnings

import numpy as np

from dressedscope import experiment as ex
from dressedscope import lattice

warnings.simplefilter("ignore", RuntimeWarning)
print(f"sites +-3 resonate {lattice.site_resonance_offset(3) * 1e9:.1f} nm from site 0")
print("residual population on site +3 after emptying -3:")
for p in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
    print(f"  {p:.1f}  center shift {ex.central_shift_vs_population(p) * 1e9:6.2f} nm")
print("tilt of the imaging axis (sigma_x 27 nm, transverse 6 um):")
for eta in (0.0, 0.1, 0.3, 0.5, 1.0):
    a = ex.misaligned_width(27e-9, 6e-6, np.deg2rad(eta))
    b = ex.misaligned_width_numeric(27e-9, 6e-6, np.deg2rad(eta))
    print(f"  {eta:.1f} deg  closed {a * 1e9:6.2f} nm  numeric {b * 1e9:6.2f} nm")
