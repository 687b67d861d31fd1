"""Width of the repumped fraction: closed forms against the numerical profile.

Mid-fringe (detuning U/2) and bottom-of-modulation (detuning 0) pulses with
s0 = 0.022, t = 8 us on an 8.3 um dressing lattice.
"""

import warnings

from dressedscope import psf
from dressedscope.numerics import NumericalError
from dressedscope.psf import DressingLattice, RepumpPulse

warnings.simplefilter("ignore", RuntimeWarning)
print(f"{'U/Gamma':>8} {'mid formula':>12} {'mid numeric':>12} {'bot formula':>12} {'bot numeric':>12}  (nm)")
for u in (2.5, 7.2, 11.6, 15.8, 21.0, 40.0):
    lat = DressingLattice(u, 8.3e-6)
    row = [u]
    for delta, closed in ((u / 2, psf.fwhm_middle), (0.0, psf.fwhm_bottom)):
        p = RepumpPulse(0.022, delta, 8e-6)
        try:
            num = psf.numeric_fwhm_at(p, lat) * 1e9
        except NumericalError:
            num = float("nan")  # peaks merge at small U
        row += [closed(p, lat) * 1e9, num]
    print("{:8.1f} {:12.1f} {:12.1f} {:12.1f} {:12.1f}".format(*row))
