"""Excited-state tomography: transferred atoms against repumper detuning.

Generates the noiseless curve for each light shift, then refits the light
shift and atom number from the curve alone.
"""

import numpy as np

from dressedscope import imaging as im
from dressedscope.psf import DressingLattice

cloud = im.CloudProfile(1.03e5, 2.4e-6, 64e-6, 20e-6)
mw = im.MwPulse(duration=8e-6)
det = np.linspace(-5, 30, 141)
print(f"{'U/Gamma':>8} {'fit U':>8} {'fit N0':>10} {'edge width':>11}")
for u in (2.5, 7.2, 11.6, 15.8, 21.0):
    y = im.tomography_curve(det, cloud, mw, 0.022, 8e-6, DressingLattice(u, 8.3e-6))
    fit = im.fit_tomography(det, y, cloud, mw, 0.022, 8e-6, 8.3e-6)
    print(f"{u:8.1f} {fit.params[0]:8.3f} {fit.params[1]:10.0f} {im.tomography_edge_width(det, y):11.2f}")
